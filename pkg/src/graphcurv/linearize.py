"""Linearized curvature operators over grid domains.

For K(f) = det(M)^(1/n) / psi with M = Hess f + Psi(x, f, grad f), the
derivative at an admissible f in a direction v vanishing on the boundary is

    DK(f) v = c2 : Hess v + drift . grad v + c0 * v,

        c2      = (K/n) M^(-1)
        drift_k = (K/n) tr(M^(-1) d_pk Psi) - K (d_pk psi) / psi
        c0      = (K/n) tr(M^(-1) d_t  Psi) - K (d_t  psi) / psi,

everything in h-orthonormal frames.  ``build_L`` exposes the determinant-side
piece alone (the derivative of f -> det(M)^(1/n)); its second-order
coefficient is K * B with the weight matrix B = (psi/n) M^(-1) of ``build_B``,
while DK's is B * K/psi — one scalar-field normalization apart.

``build_JK`` assembles the comparison (Jacobi) operator of the totally
umbilic zero-height slice,

    JK phi = h * phi - (1/a0) Lap phi,   h = tr(A0^(-1) W) - tr(A0),

with shape operator A0 = a0 * Id and the ambient normal-curvature
endomorphism W measured by the finite-difference Riemann oracle rather than
assumed from a constant-curvature identity (sign conventions are the dominant
bug class, so W is always measured).  At f = 0 over an offset-D slice the two
operators obey DK = -(a0/n) JK, which the tests check matrix-to-matrix.

All operators carry identity rows at boundary nodes, so ``solve`` enforces
zero Dirichlet values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import assemble_curvature, require_admissible
from .errors import SingularLinearSystem, SingularShapeOperator
from .riemann import normal_curvature_endomorphism

__all__ = [
    "EllipticOperator",
    "frame_operators",
    "build_B",
    "build_L",
    "build_DK",
    "build_JK",
    "measured_normal_curvature",
    "stability_check",
]


def frame_operators(chart, domain):
    """Sparse maps v -> frame gradient / Hessian components of v.

    Returns (P, H) with P[a] and H[(a, b)] (a <= b) CSR matrices of shape
    (N, N); interior rows reproduce ``assembly.frame_quantities`` exactly,
    boundary rows are zero.  Cached on the domain per chart.
    """
    key = ("frame_ops", chart.chart_id())
    hit = domain._frame_cache.get(key)
    if hit is not None:
        return hit
    ops = domain.derivative_ops()
    if domain.n == 1:
        out = ((ops.d1[0],), {(0, 0): ops.d2[(0, 0)]})
    elif domain.layout == "cartesian":
        out = (tuple(ops.d1), dict(ops.d2))
    else:
        s = domain.coords[:, 0]
        w, wp = chart.base_warp(s)
        radial = s > 0
        wf = np.where(radial, w, 1.0)
        wpf = np.where(radial, wp, 0.0)
        p0 = ops.d1[0]
        p1 = sp.diags(1.0 / wf) @ ops.d1[1]
        h00 = ops.d2[(0, 0)]
        h01 = sp.diags(1.0 / wf) @ (ops.d2[(0, 1)] - sp.diags(wpf / wf) @ ops.d1[1])
        h11 = sp.diags(1.0 / wf**2) @ ops.d2[(1, 1)] + sp.diags(wpf / wf) @ ops.d1[0]
        out = (
            (p0.tocsr(), p1.tocsr()),
            {(0, 0): h00.tocsr(), (0, 1): h01.tocsr(), (1, 1): h11.tocsr()},
        )
    domain._frame_cache[key] = out
    return out


@dataclass
class EllipticOperator:
    """Discrete second-order operator with identity rows on the boundary.

    ``second_order`` / ``drift`` / ``zeroth`` hold the per-node coefficients
    that were contracted with the frame derivative operators to form
    ``matrix`` (boundary rows zero); ``kind`` names the construction and
    ``normal_curvature`` stores the measured ambient W for the comparison
    operator.
    """

    domain: object
    matrix: sp.csr_matrix
    second_order: np.ndarray  # (N, n, n)
    drift: np.ndarray  # (N, n)
    zeroth: np.ndarray  # (N,)
    kind: str = "DK"
    normal_curvature: np.ndarray | None = None
    _lu: object = field(default=None, repr=False, compare=False)

    def apply(self, v):
        v = self.domain.check_values(v)
        return self.matrix @ v

    def solve(self, rhs):
        """Solve (this operator) w = rhs with zero Dirichlet values.

        Boundary entries of ``rhs`` are ignored (forced to the zero Dirichlet
        data); the sparse LU factorization is cached for repeated solves.
        """
        rhs = self.domain.check_values(rhs).copy()
        rhs[self.domain.boundary] = 0.0
        if self._lu is None:
            try:
                self._lu = spla.splu(self.matrix.tocsc())
            except RuntimeError as exc:
                raise SingularLinearSystem(f"sparse factorization failed: {exc}") from exc
        w = self._lu.solve(rhs)
        if not np.all(np.isfinite(w)):
            raise SingularLinearSystem("linear solve produced non-finite values")
        w[self.domain.boundary] = 0.0  # exact Dirichlet data, no rounding dust
        return w

    def export_triplets(self, path):
        """Write the matrix as 'row col value' lines (tab-separated, 17 digits)."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w") as fh:
            for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{r}\t{c}\t{v:.17g}\n")


def _operator_matrix(chart, domain, c2, drift, zeroth):
    """Contract per-node coefficients with frame operators; identity boundary."""
    P, H = frame_operators(chart, domain)
    n = domain.n
    N = domain.num_nodes
    mat = sp.csr_matrix((N, N))
    for a in range(n):
        for b in range(n):
            coef = c2[:, a, b]
            if np.any(coef):
                mat = mat + sp.diags(coef) @ H[(min(a, b), max(a, b))]
        if np.any(drift[:, a]):
            mat = mat + sp.diags(drift[:, a]) @ P[a]
    mat = mat + sp.diags(zeroth)
    keep = sp.diags(domain.interior.astype(float))
    bnd = sp.diags(domain.boundary.astype(float))
    return (keep @ mat + bnd).tocsr()


def _warp_derivative_fields(chart, f, p, psi, n):
    """(d_t Psi, tau, d_t psi, d_p psi) of the closed (psi, Psi) forms."""
    c, cp, cpp = chart.warp(f)
    c0 = chart.c0
    rho = c / c0
    rho_t = cp / c0
    q = np.sum(p * p, axis=-1)
    sig_t = -(cp * cp + c * cpp) / c0**2
    tau = -2.0 * cp / c
    tau_t = -2.0 * (cpp / c - (cp / c) ** 2)
    dtPsi = sig_t[..., None, None] * np.eye(n) + tau_t[..., None, None] * (
        p[..., :, None] * p[..., None, :]
    )
    denom = rho * rho + q
    dtpsi = psi * ((n - 2.0) * rho_t / (n * rho) + (n + 2.0) * rho * rho_t / (n * denom))
    dppsi = psi[..., None] * (n + 2.0) * p / (n * denom[..., None])
    return dtPsi, tau, dtpsi, dppsi


def build_B(assembly):
    """Per-node weight matrices B = (psi/n) M^(-1); boundary rows zero."""
    require_admissible(assembly, "weight matrix")
    n = assembly.M.shape[-1]
    idx = np.flatnonzero(assembly.domain.interior)
    out = np.zeros_like(assembly.M)
    out[idx] = (assembly.psi[idx] / n)[:, None, None] * np.linalg.inv(assembly.M[idx])
    return out


def _derivative_coefficients(chart, domain, assembly, det_side_only):
    n = domain.n
    idx = np.flatnonzero(domain.interior)
    K = assembly.K[idx]
    psi = assembly.psi[idx]
    p = assembly.grad[idx]
    Minv = np.linalg.inv(assembly.M[idx])
    dtPsi, tau, dtpsi, dppsi = _warp_derivative_fields(
        chart, assembly.f[idx], p, psi, n
    )
    scale = K * psi if det_side_only else K  # det-side derivative vs full K
    Minv_p = np.einsum("xab,xb->xa", Minv, p)
    c2_i = (scale / n)[:, None, None] * Minv
    drift_i = (2.0 * scale * tau / n)[:, None] * Minv_p
    c0_i = (scale / n) * np.einsum("xab,xba->x", Minv, dtPsi)
    if not det_side_only:
        drift_i = drift_i - (K / psi)[:, None] * dppsi
        c0_i = c0_i - K * dtpsi / psi
    N = domain.num_nodes
    c2 = np.zeros((N, n, n))
    drift = np.zeros((N, n))
    zeroth = np.zeros(N)
    c2[idx] = c2_i
    drift[idx] = drift_i
    zeroth[idx] = c0_i
    return c2, drift, zeroth


def build_DK(chart, domain, f, assembly=None):
    """Sparse derivative of the curvature map f -> K(f) at an admissible f."""
    if assembly is None:
        assembly = assemble_curvature(chart, domain, f)
    require_admissible(assembly, "linearization point")
    c2, drift, zeroth = _derivative_coefficients(chart, domain, assembly, False)
    matrix = _operator_matrix(chart, domain, c2, drift, zeroth)
    return EllipticOperator(domain, matrix, c2, drift, zeroth, kind="DK")


def build_L(chart, domain, f, assembly=None):
    """Determinant-side derivative f -> det(M)^(1/n) (diagnostic companion)."""
    if assembly is None:
        assembly = assemble_curvature(chart, domain, f)
    require_admissible(assembly, "linearization point")
    c2, drift, zeroth = _derivative_coefficients(chart, domain, assembly, True)
    matrix = _operator_matrix(chart, domain, c2, drift, zeroth)
    return EllipticOperator(domain, matrix, c2, drift, zeroth, kind="L")


def measured_normal_curvature(chart, domain):
    """Ambient normal-curvature endomorphism W at a representative base point.

    <W X, Y> = <R(X, N0) Y, N0> for the unit normal N0 of the zero-height
    slice, evaluated with the finite-difference Riemann oracle on the
    graph-coordinate metric (grid axes plus height).  Graph coordinates keep
    the metric entries O(1) at every slice offset, so the oracle's fixed
    steps stay inside the chart; the conformal representation, by contrast,
    compresses the whole domain below the stencil width once the offset is
    large.  For a constant-curvature ambient of curvature kappa the result
    is -kappa * Id, but the value is measured, never assumed.
    """
    ii = np.flatnonzero(domain.interior)
    coords = domain.coords[ii]
    if domain.layout == "polar":
        smid = 0.5 * (domain.extent[0][0] + domain.extent[0][1])
        pick = ii[int(np.argmin(np.abs(coords[:, 0] - smid)))]
    else:
        pick = ii[len(ii) // 2]
    layout = domain.layout

    def metric_fn(q):
        q = np.asarray(q, dtype=float)
        return chart.graph_metric_at(q[..., :-1], q[..., -1], layout)

    pt = np.concatenate([domain.coords[pick], [0.0]])
    g = metric_fn(pt)
    m = g.shape[-1]
    frame = []
    for k in range(m):
        v = np.eye(m)[k]
        for u in frame:
            v = v - (u @ g @ v) * u
        frame.append(v / np.sqrt(v @ g @ v))
    tangent = np.array(frame[:-1])
    normal = frame[-1]
    return normal_curvature_endomorphism(metric_fn, pt, tangent, normal)


def build_JK(base, domain):
    """Comparison (Jacobi) operator of the zero-height slice of ``base``.

    JK phi = h * phi - (1/a0) Lap phi with h = tr(A0^(-1) W) - tr(A0); raises
    SingularShapeOperator when the slice is totally geodesic (a0 = 0).
    """
    chart = base.chart
    a0 = float(base.a0)
    n = domain.n
    if abs(a0) < 1e-12:
        raise SingularShapeOperator(
            "base shape operator is zero (totally geodesic slice)"
        )
    W = measured_normal_curvature(chart, domain)
    h = float(np.trace(W)) / a0 - n * a0
    N = domain.num_nodes
    interior = domain.interior
    c2 = np.zeros((N, n, n))
    c2[interior] = -(1.0 / a0) * np.eye(n)
    drift = np.zeros((N, n))
    zeroth = np.where(interior, h, 0.0)
    matrix = _operator_matrix(chart, domain, c2, drift, zeroth)
    return EllipticOperator(
        domain, matrix, c2, drift, zeroth, kind="JK", normal_curvature=W
    )


def stability_check(chart, domain, f):
    """Inverse-negativity probe of the linearized operator at f.

    Solves DK(f) w = 1 (interior source) with zero Dirichlet data; ``stable``
    is true iff w < 0 at every interior node, and w is returned as the
    witness.
    """
    op = build_DK(chart, domain, f)
    rhs = np.where(domain.interior, 1.0, 0.0)
    w = op.solve(rhs)
    stable = bool(np.all(w[domain.interior] < 0.0))
    return {"stable": stable, "witness": w}
