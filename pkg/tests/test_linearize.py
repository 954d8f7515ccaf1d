"""Linearized curvature operators: coefficients, Gateaux check, comparison op."""

import numpy as np
import pytest

from graphcurv.assembly import assemble_curvature, frame_quantities
from graphcurv.charts import EpsilonChart, EuclideanChart, HyperbolicChart
from graphcurv.errors import (
    NonAdmissible,
    SingularLinearSystem,
    SingularShapeOperator,
)
from graphcurv.grids import GridDomain
from graphcurv.linearize import (
    build_B,
    build_DK,
    build_JK,
    build_L,
    frame_operators,
    measured_normal_curvature,
    stability_check,
)

D = 0.5


def ball(nr=8, nphi=32):
    return GridDomain.ball(1.0, nr, nphi)


def safe_field(dom):
    s, phi = dom.coords[:, 0], dom.coords[:, 1]
    return -0.05 * (1 - s**2) - 0.008 * s**3 * np.cos(3 * phi) * (1 - s**2)


def smooth_direction(dom):
    s, phi = dom.coords[:, 0], dom.coords[:, 1]
    return np.sin(2 * s) * (1 - s**2) * (0.5 + s**2 * np.cos(2 * phi))


# ---- coefficient identities ---------------------------------------------------


def test_weight_matrix_inverts_frame_matrix():
    chart = HyperbolicChart(n=2, offset=D)
    dom = ball()
    asm = assemble_curvature(chart, dom, safe_field(dom))
    B = build_B(asm)
    idx = np.flatnonzero(dom.interior)
    prod = np.einsum("xab,xbc->xac", B[idx], asm.M[idx])
    want = (asm.psi[idx] / dom.n)[:, None, None] * np.eye(dom.n)
    assert np.max(np.abs(prod - want)) < 1e-14
    assert np.all(B[dom.boundary] == 0.0)


def test_second_order_coefficients_share_one_normalization():
    chart = HyperbolicChart(n=2, offset=D)
    dom = ball()
    f = safe_field(dom)
    asm = assemble_curvature(chart, dom, f)
    B = build_B(asm)
    dk = build_DK(chart, dom, f, assembly=asm)
    L = build_L(chart, dom, f, assembly=asm)
    idx = np.flatnonzero(dom.interior)
    scale_dk = (asm.K / asm.psi)[idx, None, None]
    scale_l = asm.K[idx, None, None]
    assert np.max(np.abs(dk.second_order[idx] - scale_dk * B[idx])) < 1e-14
    assert np.max(np.abs(L.second_order[idx] - scale_l * B[idx])) < 1e-14
    assert dk.kind == "DK" and L.kind == "L"


def test_weight_matrix_requires_admissible_point():
    chart = EuclideanChart(n=2)
    dom = ball(4, 16)
    asm = assemble_curvature(chart, dom, np.zeros(dom.num_nodes))
    with pytest.raises(NonAdmissible):
        build_B(asm)
    with pytest.raises(NonAdmissible):
        build_DK(chart, dom, np.zeros(dom.num_nodes))


def test_frame_operators_reproduce_frame_quantities():
    chart = HyperbolicChart(n=2, offset=D)
    dom = ball()
    f = safe_field(dom)
    P, H = frame_operators(chart, dom)
    p, hess = frame_quantities(chart, dom, f)
    idx = np.flatnonzero(dom.interior)
    for a in range(2):
        assert np.max(np.abs((P[a] @ f - p[:, a])[idx])) < 1e-13
        for b in range(a, 2):
            assert np.max(np.abs((H[(a, b)] @ f - hess[:, a, b])[idx])) < 1e-13
    # the cache hands back the same object on a second request
    assert frame_operators(chart, dom) is (P, H) or frame_operators(chart, dom)[0] is P


# ---- Gateaux derivative cross-check ---------------------------------------------


@pytest.mark.parametrize(
    "chart",
    [HyperbolicChart(n=2, offset=D), EuclideanChart(n=2), EpsilonChart(n=2, eps=0.1)],
    ids=["hyperbolic", "euclidean", "epsilon"],
)
def test_gateaux_derivative_matches_central_difference(chart):
    dom = ball(8, 32)
    s = dom.coords[:, 0]
    if isinstance(chart, HyperbolicChart):
        f = safe_field(dom)
    else:
        f = 0.3 * (s**2 - 1.0)
    v = smooth_direction(dom)
    op = build_DK(chart, dom, f)
    got = op.apply(v)
    eps = 1e-5
    kp = assemble_curvature(chart, dom, f + eps * v).K
    km = assemble_curvature(chart, dom, f - eps * v).K
    fd = (kp - km) / (2 * eps)
    idx = dom.interior
    scale = np.max(np.abs(fd[idx]))
    assert np.max(np.abs(got[idx] - fd[idx])) / scale < 1e-6


def test_operator_rows_vanish_on_boundary():
    chart = HyperbolicChart(n=2, offset=D)
    dom = ball()
    op = build_DK(chart, dom, safe_field(dom))
    v = np.ones(dom.num_nodes)
    # identity rows at the boundary: (A v)|_bdy = v|_bdy
    assert np.allclose(op.apply(v)[dom.boundary], 1.0)


# ---- comparison operator ---------------------------------------------------------


def test_measured_normal_curvature_is_minus_ambient_kappa():
    dom = ball()
    W_h = measured_normal_curvature(HyperbolicChart(n=2, offset=D), dom)
    assert np.max(np.abs(W_h - np.eye(2))) < 5e-6  # kappa = -1
    W_e = measured_normal_curvature(EuclideanChart(n=2), dom)
    assert np.max(np.abs(W_e)) < 5e-6  # kappa = 0
    W_eps = measured_normal_curvature(EpsilonChart(n=2, eps=0.1), dom)
    assert np.max(np.abs(W_eps - 0.01 * np.eye(2))) < 5e-6  # kappa = -eps^2


def test_comparison_operator_zeroth_coefficient():
    chart = HyperbolicChart(n=2, offset=D)
    dom = ball()
    jk = build_JK(chart.base_hypersurface(), dom)
    # h = tr(A0^-1 W) - tr(A0) = n (coth D - tanh D) for the offset slice
    want = 2 * (1.0 / np.tanh(D) - np.tanh(D))
    h = jk.zeroth[dom.interior]
    assert np.allclose(h, h[0])
    assert h[0] == pytest.approx(want, abs=1e-4)
    assert h[0] >= 0.0
    assert jk.normal_curvature is not None


def test_comparison_coefficient_positive_and_decreasing_in_offset():
    dom = ball(4, 16)
    vals = []
    for off in (0.3, 0.8, 1.5, 3.0):
        jk = build_JK(HyperbolicChart(n=2, offset=off).base_hypersurface(), dom)
        vals.append(jk.zeroth[dom.interior][0])
    assert all(v >= 0.0 for v in vals)
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_comparison_operator_rejects_geodesic_slice():
    dom = ball(4, 16)
    with pytest.raises(SingularShapeOperator):
        build_JK(EuclideanChart(n=2).base_hypersurface(), dom)


def test_linearization_at_zero_is_scaled_comparison_operator():
    chart = HyperbolicChart(n=2, offset=D)
    dom = ball()
    dk = build_DK(chart, dom, np.zeros(dom.num_nodes))
    jk = build_JK(chart.base_hypersurface(), dom)
    a0 = np.tanh(D)
    gap = dk.matrix + (a0 / 2.0) * jk.matrix
    inner = np.flatnonzero(dom.interior)
    # boundary rows are identity in both, so compare interior rows only
    dense = np.abs(gap.toarray()[inner])
    assert dense.max() < 1e-5


# ---- inverse-negativity and linear algebra ----------------------------------------


def test_stability_witness_is_negative():
    chart = HyperbolicChart(n=2, offset=D)
    dom = ball()
    res = stability_check(chart, dom, np.zeros(dom.num_nodes))
    assert res["stable"]
    w = res["witness"]
    assert np.all(w[dom.interior] < 0.0)
    assert np.all(w[dom.boundary] == 0.0)


def test_solve_enforces_exact_dirichlet_zero():
    chart = HyperbolicChart(n=2, offset=D)
    dom = ball()
    op = build_DK(chart, dom, safe_field(dom))
    rhs = np.sin(3 * dom.coords[:, 0]) + 0.2
    w = op.solve(rhs)
    assert np.all(w[dom.boundary] == 0.0)
    # residual of the solve on the interior
    r = op.apply(w) - np.where(dom.interior, rhs, 0.0)
    assert np.max(np.abs(r[dom.interior])) < 1e-10


def test_singular_system_is_reported():
    chart = HyperbolicChart(n=2, offset=D)
    dom = ball(4, 16)
    op = build_DK(chart, dom, np.zeros(dom.num_nodes))
    k = dom.node_index(2, 3)
    mat = op.matrix.tolil()
    mat[k, :] = 0.0  # knock out one row entirely
    op.matrix = mat.tocsr()
    with pytest.raises(SingularLinearSystem):
        op.solve(np.ones(dom.num_nodes))


def test_export_triplets_is_deterministic(tmp_path):
    chart = HyperbolicChart(n=2, offset=D)
    dom = ball(4, 16)
    f = safe_field(dom)
    p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
    build_DK(chart, dom, f).export_triplets(p1)
    build_DK(chart, dom, f).export_triplets(p2)
    t1 = p1.read_text()
    assert t1 == p2.read_text()
    row0 = t1.splitlines()[0].split("\t")
    assert len(row0) == 3
    int(row0[0]), int(row0[1]), float(row0[2])
