import numpy as np
import pytest

from fracpar import _kernels_py, kernels

try:
    from fracpar import _ckernels
except ImportError:  # pragma: no cover - compiled build missing
    _ckernels = None

needs_c = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def _brute_form(W, w, a, b):
    da = a[:, :, None] - a[:, None, :]
    db = b[:, :, None] - b[:, None, :]
    return float(np.einsum("tij,tij,ij->", da, db, W * np.outer(w, w)))


def test_pure_double_difference_vs_brute(rng):
    N, M = 9, 5
    W = rng.random((N, N))
    W = W + W.T
    w, a, b = rng.random(N), rng.standard_normal((M, N)), rng.standard_normal((M, N))
    assert _kernels_py.double_difference_form(W, w, a, b) == pytest.approx(_brute_form(W, w, a, b), rel=1e-13)


def test_pure_holder_quotients_small_case():
    pts = np.array([[0.0, 0.0], [0.0, 1.0], [4.0, 0.0]])
    u = np.array([0.0, 1.0, 3.0])
    # distances: 1 (x), 2 (sqrt t), 2 (max(1, 2)); quotients at alpha = 1: 1, 1.5, 1
    out = _kernels_py.holder_quotients(pts, u, 1.0, np.array([0.5, 1.5, 2.5]))
    np.testing.assert_allclose(out, [1.0, 1.5])


@needs_c
def test_compiled_matches_pure(rng):
    N, M = 40, 12
    W = rng.random((N, N))
    W = W + W.T
    w, a, b = rng.random(N), rng.standard_normal((M, N)), rng.standard_normal((M, N))
    w.setflags(write=False)
    ref = _kernels_py.double_difference_form(W, w, a, b)
    assert _ckernels.double_difference_form(W, w, a, b) == pytest.approx(ref, rel=1e-13)
    pts = rng.random((200, 2))
    u = rng.standard_normal(200)
    edges = 0.01 * 2.0 ** (np.arange(12) / 2)
    for alpha in (0.0, 0.5, 1.0):
        np.testing.assert_array_equal(_ckernels.holder_quotients(pts, u, alpha, edges), _kernels_py.holder_quotients(pts, u, alpha, edges))


def test_dispatch_backend():
    assert kernels.BACKEND in ("cython", "python")
    if _ckernels is not None and kernels.BACKEND == "cython":
        assert kernels.holder_quotients is _ckernels.holder_quotients
