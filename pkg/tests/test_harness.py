import math

import numpy as np
import pytest

from fracpar.bases import build_eigensystem, operator_spec
from fracpar.errors import DomainError, ResourceError
from fracpar.fracop import TimeGrid, analyze, apply_fractional, random_field, synthesize
from fracpar.harness import (
    BoundaryGeometry,
    CylinderGeometry,
    DirichletSolver,
    HarnackConfig,
    _ratio,
    assemble_hs_matrix,
    exterior_data,
    harnack_experiment,
    holder_estimate,
    solve_dirichlet,
)


@pytest.fixture(scope="module")
def small():
    es = build_eigensystem(operator_spec("interval_dirichlet"), modes=31, grid_size=31, allow_full=True)
    tg = TimeGrid(64, 4.0)
    return es, tg


@pytest.fixture(scope="module")
def solver(small):
    es, tg = small
    geo = CylinderGeometry.build(tg, es, math.pi / 2, math.pi / 8)
    rows = assemble_hs_matrix(es, tg, 0.5, rows=geo.R.ravel())
    return geo, DirichletSolver(rows, geo.R)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_matrix_matches_spectral(small, s):
    es, tg = small
    u = random_field(tg, es, np.random.default_rng(3))
    H = assemble_hs_matrix(es, tg, s)
    ref = synthesize(apply_fractional(analyze(u), s)).values.ravel()
    assert np.max(np.abs(H @ u.values.ravel() - ref)) < 1e-10 * np.max(np.abs(ref))


def test_matrix_composition(small):
    # exact on fields without Nyquist content; the Nyquist row keeps only Re z^s
    es, tg = small
    A, B, C = (assemble_hs_matrix(es, tg, s) for s in (0.3, 0.4, 0.7))
    for seed in range(3):
        u = random_field(tg, es, np.random.default_rng(seed)).values.ravel()
        assert np.max(np.abs(A @ (B @ u) - C @ u)) < 1e-8 * np.max(np.abs(C @ u))


def test_matrix_rows_subset(small):
    es, tg = small
    H = assemble_hs_matrix(es, tg, 0.4)
    idx = np.array([0, 5, 100, 1983])
    np.testing.assert_array_equal(assemble_hs_matrix(es, tg, 0.4, rows=idx), H[idx])


def test_single_mode_rotation_block():
    # one spatial mode and one frequency pair: the 2x2 block is a rotation-scaling
    es = build_eigensystem(operator_spec("interval_dirichlet"), modes=1, grid_size=8, allow_full=True)
    tg = TimeGrid(16, 4.0)
    H = assemble_hs_matrix(es, tg, 0.5)
    phi = es.phi[:, 0]
    c, s_ = np.cos(tg.rho[1] * tg.t), np.sin(tg.rho[1] * tg.t)
    z = (1j * tg.rho[1] + es.eigenvalues[0]) ** 0.5
    np.testing.assert_allclose(H @ np.outer(c, phi).ravel(), np.outer(z.real * c - z.imag * s_, phi).ravel(), atol=1e-12)
    np.testing.assert_allclose(H @ np.outer(s_, phi).ravel(), np.outer(z.imag * c + z.real * s_, phi).ravel(), atol=1e-12)


def test_budget(small):
    es, _ = small
    with pytest.raises(ResourceError):
        assemble_hs_matrix(es, TimeGrid(512, 4.0), 0.5)


def test_zero_data(solver):
    geo, sol = solver
    u, res = sol.solve(np.zeros(geo.R.size))
    assert np.all(u == 0) and res == 0


def test_linearity(solver):
    geo, sol = solver
    rng = np.random.default_rng(5)
    kw = dict(center=geo.center, r=geo.r, period=4.0)
    g1 = exterior_data("bump", rng, geo.TT, geo.XX, **kw).ravel()
    g2 = exterior_data("lateral", rng, geo.TT, geo.XX, **kw).ravel()
    g1[geo.R.ravel()] = 0
    g2[geo.R.ravel()] = 0
    u1, _ = sol.solve(g1)
    u2, _ = sol.solve(g2)
    u12, res = sol.solve(g1 + g2)
    assert np.max(np.abs(u12 - u1 - u2)) < 1e-10 * max(np.max(np.abs(u12)), 1.0)
    assert res < 1e-9 * np.max(np.abs(g1 + g2))


def test_solution_equation(small, solver):
    es, tg = small
    geo, sol = solver
    g = exterior_data("bump", np.random.default_rng(9), geo.TT, geo.XX, center=geo.center, r=geo.r, period=4.0)
    u, _ = sol.solve(g)
    Hu = assemble_hs_matrix(es, tg, 0.5) @ u
    assert np.max(np.abs(Hu[geo.R.ravel()])) < 1e-9 * np.max(np.abs(g))
    np.testing.assert_array_equal(u[~geo.R.ravel()], g.ravel()[~geo.R.ravel()])


def test_solve_dirichlet_full_matrix_and_sign(small, solver):
    es, tg = small
    geo, sol = solver
    H = assemble_hs_matrix(es, tg, 0.5)
    g = np.where(geo.R, 0.0, 1.0).ravel()
    u, _ = solve_dirichlet(H, geo.R, g)
    u2, _ = sol.solve(g)
    np.testing.assert_allclose(u, u2, atol=1e-12)
    with pytest.raises(DomainError):
        solve_dirichlet(H, geo.R, -g)


def test_ratio_sentinels():
    assert math.isnan(_ratio(0.0, 0.0))
    assert _ratio(1.0, 0.0) == math.inf
    assert _ratio(2.0, 4.0) == 0.5


def test_geometry_validation(small):
    es, tg = small
    with pytest.raises(DomainError):
        CylinderGeometry.build(tg, es, 0.3, math.pi / 8)
    with pytest.raises(DomainError):
        BoundaryGeometry.build(tg, es, math.pi / 2, math.pi / 8, 1.5)  # T = 4 < 6
    with pytest.raises(DomainError):
        BoundaryGeometry.build(TimeGrid(32, 8.0), es, math.pi / 2, math.pi / 8, 2.5)


def test_holder_constant_field(solver):
    geo, _ = solver
    alpha, semi, _ = holder_estimate(np.ones(geo.R.shape), geo.TT, geo.XX, geo.K, geo.R)
    assert math.isnan(alpha) and semi == 0.0


def test_holder_lipschitz_field():
    tg = TimeGrid(128, 4.0)
    x = np.linspace(0, math.pi, 130)[1:-1]
    TT, XX = np.meshgrid(tg.t, x, indexing="ij")
    # smooth field: parabolically Lipschitz in x, C^1 in t
    u = np.sin(2 * XX) + 0.5 * np.cos(3 * TT)
    K = (TT > 0.5) & (TT < 2.0) & (XX > 1.0) & (XX < 2.0)
    alpha, semi, _ = holder_estimate(u, TT, XX, K)
    assert alpha >= 0.9
    assert semi > 0


def test_holder_rejects_boundary_touch(solver):
    geo, _ = solver
    with pytest.raises(DomainError):
        holder_estimate(np.ones(geo.R.shape), geo.TT, geo.XX, geo.R, geo.R)
    with pytest.raises(DomainError):
        holder_estimate(np.ones(geo.R.shape), geo.TT, geo.XX, ~geo.R, geo.R)


def test_exterior_data_nonnegative(solver):
    geo, _ = solver
    rng = np.random.default_rng(0)
    for kind in ("bump", "lateral", "clipped"):
        g = exterior_data(kind, rng, geo.TT, geo.XX, center=geo.center, r=geo.r, period=4.0)
        assert np.all(g >= 0) and np.max(g) > 0
    with pytest.raises(DomainError):
        exterior_data("noise", rng, geo.TT, geo.XX, center=geo.center, r=geo.r, period=4.0)


def test_small_ensemble():
    cfg = HarnackConfig(s=0.5, resolutions=((64, 15), (128, 31)), trials=4, seed=1)
    report, rows = harnack_experiment(cfg)
    meta = report.trial_metadata
    assert len(rows) == 8
    assert math.isfinite(report.ratio) and report.ratio >= 1
    assert meta["violations"] == {"64x15": 0, "128x31": 0}
    assert meta["max_residual"] < 1e-9
    again, rows2 = harnack_experiment(cfg)
    assert [r.ratio for r in rows] == [r.ratio for r in rows2]
