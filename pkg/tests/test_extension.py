import math

import numpy as np
import pytest

from fracpar.errors import DomainError
from fracpar.extension import (
    YGrid,
    energy_norm,
    extend,
    extend_quadrature,
    mode_energy,
    neumann_trace,
    pde_residual,
    quotient_trace,
    reflect,
)
from fracpar.fracop import SpaceTimeField, SpectralField, TimeGrid, analyze, hs_norm, random_field, synthesize
from fracpar.specfun import gamma_fn, i_s, neumann_constant, quotient_constant


@pytest.fixture(scope="module")
def time16():
    return TimeGrid(16, 4.0)


def _mode(time, es, m, k):
    c = np.zeros((time.M, es.K), dtype=complex)
    c[m, k] = 0.5
    c[-m, k] = 0.5
    return synthesize(SpectralField(time, es, c), real=True)


def test_ygrid_validation():
    with pytest.raises(DomainError):
        YGrid(1e-3, 1.0, 50)
    with pytest.raises(DomainError):
        YGrid(1e-3, 1.25, 10)  # y_max far below 10
    assert YGrid.covering().y_max >= 50


def test_single_mode_extension(time16, dirichlet16):
    u = _mode(time16, dirichlet16, 1, 1)
    ef = extend(analyze(u), 0.3)
    z = 1j * time16.rho[1] + 4.0
    for l in (0, 10, 30):
        assert ef.coeffs[l, 1, 1] == pytest.approx(0.5 * i_s(ef.ygrid.nodes[l], z, 0.3), rel=1e-14)


def test_half_closed_form_quadrature(time16, dirichlet16):
    u = _mode(time16, dirichlet16, 2, 0)
    y = 0.7
    row, _ = extend_quadrature(u, 0.5, y)
    z = 1j * time16.rho[2] + 1.0
    assert analyze(row).coeffs[2, 0] == pytest.approx(0.5 * np.exp(-y * np.sqrt(z)), abs=1e-8)


def test_extend_vs_quadrature(time16, dirichlet16, rng):
    u = random_field(time16, dirichlet16, rng)
    ef = extend(analyze(u), 0.4)
    for l in (5, 25, 40):
        row, _ = extend_quadrature(u, 0.4, ef.ygrid.nodes[l])
        ref = ef.row(l).values
        assert np.linalg.norm(row.values - ref) / np.linalg.norm(ref) < 1e-6


def test_zero_field(time16, dirichlet16):
    u = SpaceTimeField(time16, dirichlet16, np.zeros((time16.M, dirichlet16.N)))
    row, _ = extend_quadrature(u, 0.5, 1.0)
    assert np.all(row.values == 0)
    ef = extend(analyze(u), 0.5)
    assert np.all(neumann_trace(ef).field.values == 0)
    assert np.all(quotient_trace(ef).field.values == 0)
    assert pde_residual(ef, fd_check=False)["max_residual"] == 0
    assert energy_norm(ef).energy == 0


def test_first_row_near_datum(time16, dirichlet16, rng):
    u = random_field(time16, dirichlet16, rng)
    sf = analyze(u)
    ef = extend(sf, 0.5)
    z = 1j * time16.rho[:, None] + dirichlet16.eigenvalues[None, :]
    bound = float(np.max(np.abs(i_s(ef.ygrid.y_min, z, 0.5) - 1))) * hs_norm(sf, 0.0)
    diff = hs_norm(analyze(SpaceTimeField(time16, dirichlet16, ef.row(0).values - u.values)), 0.0)
    assert diff <= bound * (1 + 1e-10)


def test_traces_at_half(time16, dirichlet16, rng):
    ef = extend(analyze(random_field(time16, dirichlet16, rng)), 0.5)
    n, q = neumann_trace(ef), quotient_trace(ef)
    assert n.constant == pytest.approx(1.0, abs=1e-15)
    assert q.constant == pytest.approx(-1.0, abs=1e-14)
    assert n.max_deviation < 1e-8
    assert q.max_deviation < 1e-8


def test_traces_quarter(time16, dirichlet16, rng):
    ef = extend(analyze(random_field(time16, dirichlet16, rng)), 0.25)
    expected = gamma_fn(0.75) / (4 ** (-0.25) * gamma_fn(0.25))
    tr = neumann_trace(ef)
    assert tr.constant == pytest.approx(expected, rel=1e-15)
    np.testing.assert_allclose(tr.ratio, expected, rtol=1e-6)
    np.testing.assert_allclose(quotient_trace(ef).ratio, quotient_constant(0.25), rtol=1e-6)


def test_quotient_half_single_mode():
    y = np.array([1e-6, 1e-7])
    np.testing.assert_allclose((i_s(y, 1.0, 0.5) - 1) / y, -1.0, atol=1e-5)
    assert quotient_constant(0.5) == pytest.approx(-1.0)
    assert neumann_constant(0.5) == pytest.approx(1.0)


def test_pde_residual_exact_route(time16, dirichlet16, rng):
    ef = extend(analyze(random_field(time16, dirichlet16, rng)), 0.35)
    res = pde_residual(ef)
    assert res["max_scaled_residual"] < 1e-8


def test_reflect_even(time16, dirichlet16, rng):
    ef = extend(analyze(random_field(time16, dirichlet16, rng)), 0.3)
    rf = reflect(ef, 5.0)
    n = rf.y.size // 2
    np.testing.assert_array_equal(rf.y[:n], -rf.y[n:][::-1])
    np.testing.assert_array_equal(rf.values[:n], rf.values[n:][::-1])
    np.testing.assert_allclose(rf.weight, np.abs(rf.y) ** 0.4)
    with pytest.raises(DomainError):
        reflect(ef, 2 * ef.ygrid.y_max)


def test_contraction_and_decay(time16, dirichlet16, rng):
    sf = analyze(random_field(time16, dirichlet16, rng))
    ef = extend(sf, 0.6)
    norms = ef.row_norms()
    u0 = hs_norm(sf, 0.0)
    assert np.all(norms <= u0 * (1 + 1e-12))
    lam_min = float(np.min(np.abs(1j * time16.rho[:, None] + dirichlet16.eigenvalues[None, :])))
    assert norms[-1] <= u0 * abs(i_s(ef.ygrid.y_max, lam_min, 0.6)) * (1 + 1e-10)


def test_energy_homogeneity(time16, dirichlet16, rng):
    sf = analyze(random_field(time16, dirichlet16, rng))
    e1 = energy_norm(extend(sf, 0.4))
    e2 = energy_norm(extend(SpectralField(time16, dirichlet16, 2 * sf.coeffs), 0.4))
    assert e2.energy == pytest.approx(4 * e1.energy, rel=1e-13)
    assert e2.ratio == pytest.approx(e1.ratio, rel=1e-13)


def test_mode_energy_vs_direct_quadrature():
    from scipy import integrate

    s, z = 0.5, 2.0 + 1.0j
    # I_{1/2}(y, z) = exp(-y sqrt z); the integrand decays like exp(-2 y Re sqrt z)
    f = lambda y: y ** (1 - 2 * s) * abs(z) * abs(np.exp(-y * np.sqrt(z))) ** 2
    ref, _ = integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-12)
    val = mode_energy(z, s, growth=1.01)[0]
    assert val == pytest.approx(ref, rel=1e-4)
    assert ref == pytest.approx(abs(z) / (2 * np.sqrt(z).real), rel=1e-10)
    assert math.isfinite(val)
