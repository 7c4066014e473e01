import math

import numpy as np
import pytest
from scipy import special

from fracpar.bases import build_eigensystem, operator_spec
from fracpar.errors import DomainError
from fracpar.transference import (
    ISOMETRY_TOL,
    MapRecipe,
    bessel_reference_spectrum,
    bind,
    builtin_maps,
    ou_reference_spectrum,
    pull,
    push,
    transferred_eigensystem,
    ultraspherical_reference_spectrum,
    verify_intertwine,
)


@pytest.fixture(scope="module")
def catalog():
    return builtin_maps()


@pytest.fixture(scope="module")
def ou(catalog):
    recipe = catalog["hermite_to_ou"]
    es = build_eigensystem(recipe.source_spec(), modes=64, grid_size=512)
    return es, bind(recipe, es)


def test_catalog_size(catalog):
    assert len(catalog) == 7


@pytest.mark.parametrize("name", sorted(builtin_maps()))
def test_each_map_is_isometric(catalog, name):
    recipe = catalog[name]
    tm = bind(recipe, build_eigensystem(recipe.source_spec(), modes=16, grid_size=256))
    assert tm.metadata["isometry_error"] <= ISOMETRY_TOL
    assert np.all(tm.m > 0) and np.all(tm.jacobian > 0)
    np.testing.assert_allclose(tm.w_target, tm.w_source * tm.m**2)


def test_pull_push_round_trip(ou, rng):
    _, tm = ou
    f = rng.standard_normal((3, tm.x.size))
    assert np.max(np.abs(pull(tm, push(tm, f)) - f)) < 1e-13
    assert np.max(np.abs(push(tm, pull(tm, f)) - f) / np.abs(f)) < 1e-13


def test_gaussian_tail_trimmed(ou):
    es, tm = ou
    # M underflows below 1e-300 only outside |x| ~ 37; radius 12 keeps every node
    assert tm.keep.all()
    assert np.min(tm.m) > 1e-300


def test_transferred_basis_is_pull_of_source(ou):
    es, tm = ou
    bar = transferred_eigensystem(es, tm)
    np.testing.assert_array_equal(bar.phi[:, 3], pull(tm, es.phi[:, 3]))
    np.testing.assert_allclose(push(tm, bar.phi[:, 3]), es.phi[:, 3], rtol=1e-15)
    np.testing.assert_array_equal(bar.eigenvalues, es.eigenvalues)


def test_ou_eigenfunctions_are_hermite_polynomials(ou):
    es, tm = ou
    bar = transferred_eigensystem(es, tm)
    x = bar.x
    inner = np.abs(x) < 4.0
    for k in range(8):
        ref = special.eval_hermite(k, x) / math.sqrt(2.0**k * math.factorial(k))
        got = bar.phi[:, k]
        sign = np.sign(got[inner] @ ref[inner])
        np.testing.assert_allclose(sign * got[inner], ref[inner], atol=1e-8)


def test_identity_map_is_exact():
    ident = MapRecipe(
        "identity", "interval_dirichlet", {},
        lambda x: np.asarray(x, float), lambda x: np.asarray(x, float),
        lambda x: np.ones_like(np.asarray(x, float)), lambda x: np.ones_like(np.asarray(x, float)),
        "same operator",
    )
    es = build_eigensystem(operator_spec("interval_dirichlet"), modes=16, grid_size=64)
    tm = bind(ident, es)
    f = np.random.default_rng(0).standard_normal(es.N)
    np.testing.assert_array_equal(push(tm, f), f)
    assert verify_intertwine(es, tm, 0.5, trials=3)["max_relative_discrepancy"] < 1e-14


def test_intertwine_hermite_half(ou):
    es, tm = ou
    assert verify_intertwine(es, tm, 0.5, trials=20)["max_relative_discrepancy"] < 1e-9


def test_intertwine_laguerre_square(catalog):
    recipe = catalog["laguerre_to_l"]
    es = build_eigensystem(recipe.source_spec(), modes=32, grid_size=256)
    tm = bind(recipe, es)
    np.testing.assert_allclose(tm.x_target, es.x**2)
    assert verify_intertwine(es, tm, 0.3, trials=5)["max_relative_discrepancy"] < 1e-9


def test_bind_rejects_wrong_source(catalog):
    es = build_eigensystem(operator_spec("hermite"), modes=16, grid_size=128)
    with pytest.raises(DomainError):
        bind(catalog["hermite_to_ou"], es)


def test_reference_spectra_classical():
    np.testing.assert_allclose(ou_reference_spectrum(12), 2.0 * np.arange(12), atol=1e-9)
    lam = 3.0
    np.testing.assert_allclose(ultraspherical_reference_spectrum(10, lam), (np.arange(10) + lam) ** 2, rtol=1e-10)


def test_ou_spectrum_vs_reference(ou):
    es, tm = ou
    K = es.K // 4
    ev = transferred_eigensystem(es, tm).eigenvalues[:K]
    ref = ou_reference_spectrum(K)
    assert np.max(np.abs(ev - ref) / np.maximum(ref, 1.0)) < 1e-6


def test_bessel_spectrum_vs_reference(catalog):
    recipe = catalog["bessel_to_weighted"]
    es = build_eigensystem(recipe.source_spec(), modes=64, grid_size=512)
    K = es.K // 4
    ev = transferred_eigensystem(es, bind(recipe, es)).eigenvalues[:K]
    ref = bessel_reference_spectrum(K, 3.0, es.spec.params["radius"])
    assert np.max(np.abs(ev - ref) / np.maximum(ref, 1.0)) < 1e-6


def test_alpha_near_minus_one_warns():
    with pytest.warns(RuntimeWarning):
        builtin_maps(alpha=-0.95)
    with pytest.raises(DomainError):
        builtin_maps(alpha=-1.0)
