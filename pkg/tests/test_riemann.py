"""The finite-difference curvature oracle, checked on metrics with known
curvature before it is trusted to check anything else."""

import numpy as np
import pytest

from graphcurv.charts import EpsilonChart, EuclideanChart, HyperbolicChart
from graphcurv.riemann import (
    christoffel_fd,
    normal_curvature_endomorphism,
    riemann_fd,
    sectional_curvature,
    sectional_spread,
)


def polar_flat(points):
    points = np.asarray(points, dtype=float)
    r = points[..., 0]
    g = np.zeros(points.shape[:-1] + (2, 2))
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = r**2
    return g


def round_sphere(points):
    points = np.asarray(points, dtype=float)
    th = points[..., 0]
    g = np.zeros(points.shape[:-1] + (2, 2))
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = np.sin(th) ** 2
    return g


def test_christoffel_polar():
    gam = christoffel_fd(polar_flat, np.array([1.3, 0.4]))
    assert gam[0, 1, 1] == pytest.approx(-1.3, rel=1e-8)
    assert gam[1, 0, 1] == pytest.approx(1.0 / 1.3, rel=1e-8)
    assert gam[1, 1, 0] == pytest.approx(1.0 / 1.3, rel=1e-8)
    assert abs(gam[0, 0, 0]) < 1e-10


def test_flat_riemann_vanishes():
    # truncation of the two-level differencing leaves O(h^4)-scale residue
    r = riemann_fd(polar_flat, np.array([0.9, 1.1]))
    assert np.max(np.abs(r)) < 5e-6


def test_sphere_sectional_plus_one():
    k = sectional_curvature(
        round_sphere, np.array([1.1, 0.3]), np.array([1.0, 0.0]), np.array([0.3, 1.0])
    )
    assert k == pytest.approx(1.0, abs=1e-6)


def test_hyperbolic_ambient_sectional_minus_one():
    hy = HyperbolicChart(n=2, offset=0.5)
    rng = np.random.default_rng(11)
    for _ in range(5):
        pt = np.array([0.2 + 0.6 * rng.random(), 6.0 * rng.random(), 0.4 * rng.random() - 0.2])
        u = rng.standard_normal(3)
        v = rng.standard_normal(3)
        k = sectional_curvature(hy.metric_at, pt, u, v, h=5e-3, big_h=1e-2)
        assert k == pytest.approx(-1.0, abs=2e-5)


def test_epsilon_family_constant_sectional():
    """Normalized eps-family: constant curvature -eps^2 (recorded: -0.01)."""
    ep = EpsilonChart(n=2, eps=0.1, normalized=True)
    vals = sectional_spread(
        ep.metric_at, [(0.3, 1.2), (0.0, 6.0), (-0.3, 0.3)], n_samples=12, seed=4
    )
    assert np.max(np.abs(vals - (-0.01))) < 1e-6


def test_euclidean_ambient_flat():
    eu = EuclideanChart(n=2)
    vals = sectional_spread(
        eu.metric_at, [(0.3, 1.2), (0.0, 6.0), (-0.3, 0.3)], n_samples=6, seed=5
    )
    assert np.max(np.abs(vals)) < 1e-8


def test_normal_curvature_endomorphism_identity_on_model_base():
    """W_ab = <R(E_a,N)E_b,N> = delta_ab for hyperbolic ambient at any slice."""
    hy = HyperbolicChart(n=2, offset=0.5)
    pt = np.array([0.45, 1.2, 0.0])
    g = hy.metric_at(pt)
    # g-orthonormalize the coordinate axes, vertical last as the normal
    vecs = np.eye(3)
    ortho = []
    for v in vecs:
        w = v.astype(float)
        for u in ortho:
            w = w - (u @ g @ w) * u
        ortho.append(w / np.sqrt(w @ g @ w))
    frame = np.stack(ortho[:2])
    normal = ortho[2]
    w_mat = normal_curvature_endomorphism(hy.metric_at, pt, frame, normal)
    assert np.max(np.abs(w_mat - np.eye(2))) < 5e-6
