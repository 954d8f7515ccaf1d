"""Finite-difference curvature of coordinate metrics.

Everything here works on a plain callable ``metric_fn(points) -> (..., m, m)``
so it can cross-examine the charts without sharing any code with them: the
Christoffel symbols come from fourth-order centered differences of the metric,
their derivatives from a second differencing level, and the Riemann tensor,
sectional curvatures and the normal-direction curvature endomorphism are
algebra on top.

Index convention: ``R[l, k, i, j]`` is the l-component of R(d_i, d_j) d_k,

    R^l_kij = d_i Gamma^l_jk - d_j Gamma^l_ik
              + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik,

which makes sectional curvature of the round sphere +1 and of hyperbolic
space -1.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "christoffel_fd",
    "christoffel_derivative_fd",
    "riemann_fd",
    "sectional_curvature",
    "sectional_spread",
    "normal_curvature_endomorphism",
]

# fourth-order central first-derivative weights at offsets -2h..+2h
_W4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_OFFS = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])


def _partials(fn, point, h):
    """d(fn)/d(coordinate) for a tensor-valued fn, shape (m,) + fn-shape."""
    point = np.asarray(point, dtype=float)
    m = point.shape[-1]
    rows = []
    for i in range(m):
        acc = None
        for w, o in zip(_W4, _OFFS):
            if w == 0.0:
                continue
            p = point.copy()
            p[i] += o * h
            val = w * np.asarray(fn(p))
            acc = val if acc is None else acc + val
        rows.append(acc / h)
    return np.stack(rows, axis=0)


def christoffel_fd(metric_fn, point, h=1e-2):
    """Christoffel symbols Gamma[k, i, j] of metric_fn at point, by FD."""
    g = np.asarray(metric_fn(np.asarray(point, dtype=float)))
    dg = _partials(metric_fn, point, h)  # dg[a, b, c] = d_a g_bc
    ginv = np.linalg.inv(g)
    # bracket[i, l, j] = d_i g_lj + d_j g_li - d_l g_ij
    bracket = dg + dg.transpose(2, 1, 0) - dg.transpose(1, 0, 2)
    return 0.5 * np.einsum("kl,ilj->kij", ginv, bracket)


def christoffel_derivative_fd(metric_fn, point, h=1e-2, big_h=2e-2):
    """dGamma[m, k, i, j] = d_m Gamma^k_ij via a second FD level."""
    return _partials(lambda p: christoffel_fd(metric_fn, p, h), point, big_h)


def riemann_fd(metric_fn, point, h=1e-2, big_h=2e-2):
    """Riemann tensor R[l, k, i, j] of metric_fn at point."""
    gam = christoffel_fd(metric_fn, point, h)
    dgam = christoffel_derivative_fd(metric_fn, point, h, big_h)
    # d_i Gamma^l_jk - d_j Gamma^l_ik
    r = np.einsum("iljk->lkij", dgam) - np.einsum("jlik->lkij", dgam)
    # + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik
    r += np.einsum("lim,mjk->lkij", gam, gam) - np.einsum("ljm,mik->lkij", gam, gam)
    return r


def sectional_curvature(metric_fn, point, u, v, h=1e-2, big_h=2e-2, riemann=None):
    """Sectional curvature of the plane span(u, v) at point."""
    g = np.asarray(metric_fn(np.asarray(point, dtype=float)))
    r = riemann_fd(metric_fn, point, h, big_h) if riemann is None else riemann
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    ruvv = np.einsum("lkij,i,j,k->l", r, u, v, v)
    num = np.einsum("l,lm,m->", ruvv, g, u)
    uu = u @ g @ u
    vv = v @ g @ v
    uv = u @ g @ v
    return num / (uu * vv - uv * uv)


def sectional_spread(metric_fn, bounds, n_samples=20, seed=0, h=1e-2, big_h=2e-2):
    """Sample sectional curvatures of random planes at random points.

    Returns the array of sampled values; a constant-curvature metric yields a
    (numerically) constant array.
    """
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    m = len(bounds)
    vals = []
    for _ in range(n_samples):
        point = lo + (hi - lo) * rng.random(m)
        r = riemann_fd(metric_fn, point, h, big_h)
        u = rng.standard_normal(m)
        v = rng.standard_normal(m)
        vals.append(sectional_curvature(metric_fn, point, u, v, riemann=r))
    return np.array(vals)


def normal_curvature_endomorphism(metric_fn, point, tangent_frame, normal,
                                  h=1e-2, big_h=2e-2):
    """Frame matrix W_ab = <R(E_a, N) E_b, N> at point.

    ``tangent_frame`` is an (n, m) array of coordinate components of the
    orthonormal slice frame, ``normal`` the unit normal's components.
    """
    point = np.asarray(point, dtype=float)
    g = np.asarray(metric_fn(point))
    r = riemann_fd(metric_fn, point, h, big_h)
    frame = np.asarray(tangent_frame, dtype=float)
    nvec = np.asarray(normal, dtype=float)
    # R(E_a, N) E_b = E_a^i N^j E_b^k R^l_kij
    rvec = np.einsum("lkij,ai,j,bk->abl", r, frame, nvec, frame)
    return np.einsum("abl,lm,m->ab", rvec, g, nvec)
