import math
from dataclasses import replace

import numpy as np
import pytest

from fracpar.errors import DomainError
from fracpar.fracop import (
    SpaceTimeField,
    SpectralField,
    TimeGrid,
    analyze,
    apply_fractional,
    apply_semigroup,
    fractional_via_semigroup,
    hs_norm,
    inner,
    marchaud_derivative,
    master_form,
    multiplier,
    random_field,
    synthesize,
)
from fracpar.specfun import complex_power


def _single_mode(time, es, m=1, k=0, amp=1.0):
    c = np.zeros((time.M, es.K), dtype=complex)
    c[m, k] = amp / 2
    c[-m, k] = amp / 2
    return synthesize(SpectralField(time, es, c), real=True)


def test_time_grid_validation():
    with pytest.raises(DomainError):
        TimeGrid(15)
    with pytest.raises(DomainError):
        TimeGrid(32, -1.0)


def test_single_mode_analysis(time32, dirichlet16):
    rho1 = time32.rho[1]
    vals = np.cos(rho1 * time32.t)[:, None] * dirichlet16.phi[:, 1][None, :]
    sf = analyze(SpaceTimeField(time32, dirichlet16, vals))
    nz = np.argwhere(np.abs(sf.coeffs) > 1e-12)
    assert sorted(map(tuple, nz)) == [(1, 1), (time32.M - 1, 1)]


def test_round_trip_and_symmetry(time32, dirichlet16, rng):
    u = random_field(time32, dirichlet16, rng)
    sf = analyze(u)
    np.testing.assert_allclose(synthesize(sf).values, u.values, atol=1e-12)
    c = sf.coeffs
    np.testing.assert_allclose(c[1:], np.conj(c[1:][::-1]), atol=1e-12)


def test_half_applied_twice(time32, dirichlet16, rng):
    sf = analyze(random_field(time32, dirichlet16, rng))
    twice = apply_fractional(apply_fractional(sf, 0.5), 0.5)
    z = 1j * time32.rho[:, None] + dirichlet16.eigenvalues[None, :]
    ny = time32.nyquist
    z[ny] = z[ny].real  # the Nyquist row carries the real part only
    np.testing.assert_allclose(twice.coeffs, sf.coeffs * z, atol=1e-10 * np.max(np.abs(sf.coeffs * z)))


def test_single_mode_multiplier(time32, dirichlet16):
    u = _single_mode(time32, dirichlet16, m=2, k=0)
    out = apply_fractional(analyze(u), 0.5)
    expected = complex_power(time32.rho[2], 1.0, 0.5) * 0.5
    assert out.coeffs[2, 0] == pytest.approx(expected, abs=1e-14)


def test_realness_preserved(time32, neumann16, rng):
    u = random_field(time32, neumann16, rng)
    out = synthesize(apply_fractional(analyze(u), 0.3))
    assert np.isrealobj(out.values)


def test_multiplier_conjugate_symmetric(time32, dirichlet16):
    mult = multiplier(time32, dirichlet16, 0.4)
    np.testing.assert_allclose(mult[1:], np.conj(mult[1:][::-1]), rtol=1e-14)


def test_hs_norm_s0_is_l2(time32, dirichlet16, rng):
    u = random_field(time32, dirichlet16, rng)
    l2 = math.sqrt(time32.dt * float(np.sum(u.values**2 * dirichlet16.w)))
    assert hs_norm(analyze(u), 0.0) == pytest.approx(l2, rel=1e-12)


def test_hs_norm_monotone(time32, dirichlet16, rng):
    sf = analyze(random_field(time32, dirichlet16, rng))
    norms = [hs_norm(sf, s) for s in (0.1, 0.4, 0.8)]
    assert norms[0] <= norms[1] <= norms[2]


def test_semigroup_single_mode(time32, dirichlet16):
    u = _single_mode(time32, dirichlet16, m=1, k=1)
    tau = 0.3
    out = analyze(apply_semigroup(u, tau))
    z = 1j * time32.rho[1] + 4.0
    assert out.coeffs[1, 1] == pytest.approx(0.5 * np.exp(-tau * z), abs=1e-14)


def test_semigroup_contraction(time32, dirichlet16, rng):
    u = random_field(time32, dirichlet16, rng)
    tau = 0.2
    a = hs_norm(analyze(apply_semigroup(u, tau)), 0.0)
    assert a <= math.exp(-tau * dirichlet16.eigenvalues[0]) * hs_norm(analyze(u), 0.0) * (1 + 1e-12)


def test_semigroup_small_tau(time32, dirichlet16, rng):
    u = random_field(time32, dirichlet16, rng, bandwidth=4)
    np.testing.assert_allclose(apply_semigroup(u, 1e-13).values, u.values, atol=1e-10)


def test_two_routes_agree(time32, dirichlet16, rng):
    u = random_field(time32, dirichlet16, rng)
    ref = synthesize(apply_fractional(analyze(u), 0.3)).values
    val, _ = fractional_via_semigroup(u, 0.3)
    assert np.linalg.norm(val.values - ref) / np.linalg.norm(ref) < 1e-6


def test_semigroup_route_single_mode(time32, dirichlet16):
    u = _single_mode(time32, dirichlet16, m=3, k=2)
    val, _ = fractional_via_semigroup(u, 0.5)
    c = analyze(val).coeffs[3, 2]
    assert abs(c - 0.5 * complex_power(time32.rho[3], 9.0, 0.5)) < 1e-6


def test_semigroup_route_zero(time32, dirichlet16):
    u = SpaceTimeField(time32, dirichlet16, np.zeros((time32.M, dirichlet16.N)))
    val, _ = fractional_via_semigroup(u, 0.4)
    assert np.all(val.values == 0)


def test_master_form_matches_spectral(time32, dirichlet16, rng):
    u = random_field(time32, dirichlet16, rng)
    v = random_field(time32, dirichlet16, rng)
    val, err = master_form(u, v, 0.5)
    ref = inner(synthesize(apply_fractional(analyze(u), 0.5)), v).real
    assert abs(val - ref) / abs(ref) < 1e-3
    assert abs(val - ref) <= err


def test_master_form_constant_in_time(time32, dirichlet16):
    vals = np.tile(dirichlet16.phi[:, 0], (time32.M, 1))
    u = SpaceTimeField(time32, dirichlet16, vals)
    val, _ = master_form(u, u, 0.4)
    # lambda_1 = 1, so lambda^s ||u||^2 = T
    assert val == pytest.approx(time32.T, rel=1e-6)


def test_master_form_zero(time32, dirichlet16, rng):
    u = random_field(time32, dirichlet16, rng)
    z = SpaceTimeField(time32, dirichlet16, np.zeros_like(u.values))
    val, _ = master_form(u, z, 0.5)
    assert val == pytest.approx(0.0, abs=1e-14)


def test_master_form_zero_mean_neumann(time32, neumann16, rng):
    # the dropped constant mode is absent from the retained heat kernel too
    u = random_field(time32, neumann16, rng)
    v = random_field(time32, neumann16, rng)
    val, _ = master_form(u, v, 0.5)
    ref = inner(synthesize(apply_fractional(analyze(u), 0.5)), v).real
    assert abs(val - ref) / abs(ref) < 1e-3


def test_marchaud_symbol(time32, dirichlet16):
    u = _single_mode(time32, dirichlet16, m=2, k=0)
    d, _ = marchaud_derivative(u, 0.6)
    c = analyze(d).coeffs
    assert abs(c[2, 0] - 0.5 * (1j * time32.rho[2]) ** 0.6) < 1e-6
    assert abs(c[-2, 0] - 0.5 * (-1j * time32.rho[2]) ** 0.6) < 1e-6
    assert np.isrealobj(d.values)


def test_marchaud_constant_in_time(time32, dirichlet16):
    u = SpaceTimeField(time32, dirichlet16, np.tile(dirichlet16.phi[:, 0], (time32.M, 1)))
    d, _ = marchaud_derivative(u, 0.6)
    assert np.max(np.abs(d.values)) < 1e-10


def test_origin_rejected(time32, neumann16):
    c = np.zeros((time32.M, neumann16.K), dtype=complex)
    sf = SpectralField(time32, neumann16, c)
    assert np.all(apply_fractional(sf, 0.5).coeffs == 0)
    es = replace(neumann16, eigenvalues=np.concatenate([[0.0], neumann16.eigenvalues[1:]]))
    c[0, 0] = 1.0
    with pytest.raises(DomainError):
        apply_fractional(SpectralField(time32, es, c), 0.5)
