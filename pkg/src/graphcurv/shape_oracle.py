"""Independent curvature oracle through model-space embeddings.

The oracle never touches the warped-profile closed forms or the connection
difference: it embeds graph points into the flat model (Euclidean chart) or
the Minkowski hyperboloid (hyperbolic and normalized epsilon charts), where
the ambient covariant derivative is plain componentwise differentiation, so

    g_ab = <X_a, X_b>,      A_ab = <X_ab, nu>,

with X_a, X_ab coordinate partials of the position map taken by the same
sparse stencils the rest of the library uses, and nu the unit normal fixed by
<nu, V_t> > 0 against the chart vertical V_t.  (On the hyperboloid the
curvature correction of the Gauss formula is proportional to the position
vector and dies against nu.)  Principal curvatures solve det(A - lambda g) = 0
and K is the signed n-th root of their product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetric

__all__ = ["ShapeData", "curvature_oracle"]


def _inner(x, y, minkowski):
    prod = x * y
    if minkowski:
        return np.sum(prod[..., 1:], axis=-1) - prod[..., 0]
    return np.sum(prod, axis=-1)


def _euclid_cross(rows):
    """Vector orthogonal (Euclidean) to m-1 row vectors, shape (..., m)."""
    m = rows.shape[-1]
    if m == 2:
        r = rows[..., 0, :]
        return np.stack([-r[..., 1], r[..., 0]], axis=-1)
    if m == 3:
        return np.cross(rows[..., 0, :], rows[..., 1, :])
    if m == 4:
        cols = np.arange(4)
        out = []
        for l in range(4):
            minor = rows[..., :, cols != l]
            out.append((-1.0) ** l * np.linalg.det(minor))
        return np.stack(out, axis=-1)
    raise ValueError(f"unsupported ambient dimension {m}")


@dataclass
class ShapeData:
    """First/second fundamental forms and principal curvatures of a graph."""

    g: np.ndarray  # (N, n, n) induced metric
    A: np.ndarray  # (N, n, n) second fundamental form
    lambdas: np.ndarray  # (N, n) principal curvatures, ascending
    K: np.ndarray  # (N,) signed n-th root of det(shape operator)
    norm_A: np.ndarray  # (N,) largest |principal curvature|
    vert_align: np.ndarray  # (N,) <nu, V_t> after orientation
    normal: np.ndarray  # (N, m) oriented unit normal


def curvature_oracle(chart, domain, f):
    """Evaluate ShapeData for the graph of f; interior rows only (rest zero)."""
    f = domain.check_values(f)
    coords = domain.coords
    layout = domain.layout
    mink = chart.minkowski
    X = chart.embed(coords, f, layout)
    ops = domain.derivative_ops()
    n = domain.n
    num, m = X.shape
    Xa = np.stack([ops.d1[a] @ X for a in range(n)], axis=1)  # (N, n, m)
    Xab = np.zeros((num, n, n, m))
    for (a, b), op in ops.d2.items():
        Xab[:, a, b] = op @ X
        if a != b:
            Xab[:, b, a] = Xab[:, a, b]

    g = np.einsum("xam,xbm->xab", Xa, Xa)
    if mink:
        g -= 2.0 * Xa[:, :, None, 0] * Xa[:, None, :, 0]

    rows = np.concatenate([X[:, None, :], Xa], axis=1) if mink else Xa
    nu = _euclid_cross(rows)
    if mink:
        nu = nu.copy()
        nu[..., 0] = -nu[..., 0]

    interior = domain.interior
    nn = _inner(nu, nu, mink)
    if np.any(nn[interior] <= 0.0):
        raise DegenerateMetric("embedded graph normal is not spacelike")
    safe = np.where(nn > 0, nn, 1.0)
    nu = nu / np.sqrt(safe)[:, None]
    vt = chart.vertical(coords, f, layout)
    align = _inner(nu, vt, mink)
    flip = np.where(align < 0.0, -1.0, 1.0)
    nu = nu * flip[:, None]
    align = align * flip

    A = np.einsum("xabm,xm->xab", Xab, nu)
    if mink:
        A -= 2.0 * Xab[..., 0] * nu[:, None, None, 0]

    if n == 1:
        gg = g[:, 0, 0]
        if np.any(gg[interior] <= 0.0):
            raise DegenerateMetric("induced metric is degenerate")
        lam = np.where(gg > 0, A[:, 0, 0] / np.where(gg > 0, gg, 1.0), 0.0)
        lambdas = lam[:, None]
        K = lam
        norm_A = np.abs(lam)
    else:
        a = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] ** 2
        if np.any(a[interior] <= 0.0):
            raise DegenerateMetric("induced metric is degenerate")
        asafe = np.where(a > 0, a, 1.0)
        b = (
            A[:, 0, 0] * g[:, 1, 1]
            + A[:, 1, 1] * g[:, 0, 0]
            - 2.0 * A[:, 0, 1] * g[:, 0, 1]
        )
        c = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] ** 2
        disc = np.maximum(b * b - 4.0 * a * c, 0.0)
        root = np.sqrt(disc)
        lam_lo = (b - root) / (2.0 * asafe)
        lam_hi = (b + root) / (2.0 * asafe)
        lambdas = np.stack([lam_lo, lam_hi], axis=-1)
        ratio = c / asafe
        K = np.sign(ratio) * np.sqrt(np.abs(ratio))
        norm_A = np.maximum(np.abs(lam_lo), np.abs(lam_hi))

    out = ~interior
    for arr in (g, A, lambdas, nu):
        arr[out] = 0.0
    K = np.where(out, 0.0, K)
    norm_A = np.where(out, 0.0, norm_A)
    align = np.where(out, 0.0, align)
    return ShapeData(
        g=g, A=A, lambdas=lambdas, K=K, norm_A=norm_A, vert_align=align, normal=nu
    )
