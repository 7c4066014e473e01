import numpy as np
import pytest

from fracpar.bases import (
    build_eigensystem,
    expand,
    heat_kernel,
    operator_spec,
    semigroup_mass,
    synthesize,
)
from fracpar.errors import DomainError


def test_dirichlet_sine_eigenvalues():
    es = build_eigensystem(operator_spec("interval_dirichlet"), modes=4, grid_size=256)
    np.testing.assert_allclose(es.eigenvalues, [1, 4, 9, 16], rtol=1e-12)


def test_hermite_truncated_eigenvalues():
    es = build_eigensystem(operator_spec("hermite", radius=12.0), modes=6, grid_size=400)
    np.testing.assert_allclose(es.eigenvalues, [1, 3, 5, 7, 9, 11], atol=1e-6)


def test_neumann_drops_constant():
    es = build_eigensystem(operator_spec("interval_neumann"), modes=3, grid_size=256)
    assert es.zero_mean_mode
    np.testing.assert_allclose(es.eigenvalues, [1, 4, 9], rtol=1e-8)


@pytest.mark.parametrize("kind", ["interval_dirichlet", "interval_neumann", "hermite", "laguerre", "ultraspherical", "bessel"])
def test_orthonormality(kind):
    es = build_eigensystem(operator_spec(kind), modes=16, grid_size=128)
    assert es.orthonormality_error() < 1e-10


def test_unknown_kind_and_margin():
    with pytest.raises(DomainError):
        operator_spec("nonsense")
    with pytest.raises(DomainError):
        build_eigensystem(operator_spec("interval_dirichlet"), modes=40, grid_size=64)


def test_heat_kernel_symmetry_and_semigroup(dirichlet16):
    W1, _ = heat_kernel(dirichlet16, 0.1)
    W2, _ = heat_kernel(dirichlet16, 0.3)
    W3, _ = heat_kernel(dirichlet16, 0.4)
    assert np.array_equal(W1, W1.T)
    np.testing.assert_allclose(W1 @ (dirichlet16.w[:, None] * W2), W3, atol=1e-8)


def test_heat_kernel_decays(dirichlet16):
    W, _ = heat_kernel(dirichlet16, 40.0)
    assert np.max(np.abs(W)) < 1e-15


def test_neumann_mass_restored():
    es = build_eigensystem(operator_spec("interval_neumann"), modes=64, grid_size=256)
    mass = semigroup_mass(es, 0.5, restore_constant=True)
    np.testing.assert_allclose(mass, 1.0, atol=1e-8)


def test_dirichlet_mass_limits():
    es = build_eigensystem(operator_spec("interval_dirichlet"), modes=128, grid_size=512)
    assert np.max(np.abs(semigroup_mass(es, 30.0))) < 1e-10
    interior = (es.x > 1.0) & (es.x < np.pi - 1.0)
    # the Dirichlet loss at x is about 2 Phi(-x / sqrt(2 tau)); far below 1e-6 here
    np.testing.assert_allclose(semigroup_mass(es, 0.01)[interior], 1.0, atol=1e-6)


def test_expand_unit_vector(dirichlet16):
    c = expand(dirichlet16, dirichlet16.phi[:, 2])
    e = np.zeros(dirichlet16.K)
    e[2] = 1.0
    np.testing.assert_allclose(c, e, atol=1e-12)


def test_expand_synthesize_round_trip(dirichlet16, rng):
    c = rng.standard_normal((5, dirichlet16.K))
    f = synthesize(dirichlet16, c)
    np.testing.assert_allclose(expand(dirichlet16, f), c, atol=1e-10)
    np.testing.assert_allclose(synthesize(dirichlet16, expand(dirichlet16, f)), f, atol=1e-10)


def test_expand_rejects_bad_length(dirichlet16):
    with pytest.raises(DomainError):
        expand(dirichlet16, np.zeros(dirichlet16.N + 1))
