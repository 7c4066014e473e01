"""Pure-numpy versions of the hot kernels.

These define the reference semantics; the compiled module ``_ckernels``
must agree with them to round-off.
"""

import numpy as np


def double_difference_form(W, w, a, b):
    """sum_t sum_i sum_j w_i w_j W_ij (a_ti - a_tj) (b_ti - b_tj).

    ``W`` is (N, N) symmetric, ``w`` (N,), ``a`` and ``b`` (M, N) real.
    The differences are formed explicitly (no expansion into row-sum and
    bilinear parts), which avoids cancellation when W is concentrated near
    the diagonal.
    """
    W = np.asarray(W, dtype=float)
    w = np.asarray(w, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    acc = 0.0
    for i in range(a.shape[1]):
        da = a[:, i, None] - a
        db = b[:, i, None] - b
        acc += w[i] * float(np.sum((da * db) @ (W[i] * w)))
    return acc


def holder_quotients(points, values, alpha, scale_edges):
    """Maximum increment quotient per dyadic distance band.

    For every pair (p, q) with parabolic distance
    d = max(|x_p - x_q|, |t_p - t_q|^(1/2)) in [edges[k], edges[k+1]),
    record |u_p - u_q| / d^alpha, and return the per-band maxima
    (0 where a band is empty).
    """
    pts = np.asarray(points, dtype=float)
    u = np.asarray(values, dtype=float)
    edges = np.asarray(scale_edges, dtype=float)
    nb = edges.size - 1
    out = np.zeros(nb)
    P = pts.shape[0]
    for p in range(P - 1):
        dt = np.abs(pts[p + 1 :, 0] - pts[p, 0])
        dx = np.abs(pts[p + 1 :, 1] - pts[p, 1])
        d = np.maximum(dx, np.sqrt(dt))
        q = np.abs(u[p + 1 :] - u[p])
        band = np.searchsorted(edges, d, side="right") - 1
        ok = (band >= 0) & (band < nb) & (d > 0)
        if not ok.any():
            continue
        quot = q[ok] / d[ok] ** alpha
        np.maximum.at(out, band[ok], quot)
    return out
