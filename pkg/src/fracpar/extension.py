"""Extension field U(t, x, y) of a boundary datum u and its checks.

In coefficient form U_k(rho, y) = u_k(rho) I_s(y, i rho + lambda_k), so
everything here is per-mode algebra on top of ``specfun``.  The boundary
row y = 0 is the datum itself and is never computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy import integrate

from . import specfun
from .bases import EigenSystem
from .errors import AccuracyError, DomainError
from .fracop import (
    SpaceTimeField,
    SpectralField,
    TimeGrid,
    _check_origin,
    _semigroup_factor,
    _spectral_points,
    analyze,
    hs_norm,
    multiplier,
    synthesize,
)
from .specfun import QuadratureSpec, _order

__all__ = [
    "YGrid",
    "ExtensionField",
    "TraceResult",
    "EnergyReport",
    "ReflectedField",
    "extend",
    "extend_quadrature",
    "neumann_trace",
    "quotient_trace",
    "pde_residual",
    "reflect",
    "energy_norm",
    "kernel_second_derivative",
]


@dataclass(frozen=True)
class YGrid:
    """Geometric nodes y_l = y_min g^l, l = 0..L-1; y = 0 is symbolic."""

    y_min: float = 1e-3
    growth: float = 1.25
    L: int = 50

    def __post_init__(self):
        if self.y_min <= 0 or self.growth <= 1 or self.L < 3:
            raise DomainError("y grid needs y_min > 0, growth > 1, L >= 3")
        if self.y_max < 10:
            raise DomainError(f"y grid must reach y_max >= 10, got {self.y_max:.4g}")

    @property
    def nodes(self) -> np.ndarray:
        return self.y_min * self.growth ** np.arange(self.L)

    @property
    def y_max(self) -> float:
        return self.y_min * self.growth ** (self.L - 1)

    @classmethod
    def covering(cls, y_min=1e-3, growth=1.25, y_max=50.0) -> "YGrid":
        L = int(math.ceil(math.log(y_max / y_min) / math.log(growth))) + 1
        return cls(y_min, growth, L)


def _kernel_points(time: TimeGrid, es: EigenSystem):
    """Spectral points z = i rho + lambda and the mask of usable ones (Re z > 0)."""
    z = _spectral_points(time, es)
    return z, z.real > 0


def _mode_kernel(func, y, z, ok, time, *args, nyquist_real=True):
    """Evaluate func(y, z, ...) on ok-points for every y; Nyquist row made real."""
    out = np.zeros((y.size,) + z.shape, dtype=complex)
    zz = z[ok]
    for l, yl in enumerate(y):
        out[l][ok] = func(np.full(zz.shape, yl), zz, *args)
    if nyquist_real:
        ny = time.nyquist
        out[:, ny, :] = out[:, ny, :].real
    return out


def _support_check(sf: SpectralField, ok):
    _check_origin(sf)
    bad = ~ok
    if bad.any() and np.any(np.abs(sf.coeffs[..., bad]) > 0):
        scale = float(np.max(np.abs(sf.coeffs)))
        if np.max(np.abs(sf.coeffs[..., bad])) > 1e-12 * scale:
            raise DomainError("the extension needs Re(i rho + lambda) > 0 on the support (zero eigenvalue mode present)")


@dataclass(frozen=True, eq=False)
class ExtensionField:
    base: SpectralField
    s: float
    ygrid: YGrid
    kernel: np.ndarray  # I_s(y_l, i rho_m + lambda_k), shape (L, M, K)

    @property
    def coeffs(self) -> np.ndarray:
        return self.kernel * self.base.coeffs[None]

    def row(self, l: int) -> SpaceTimeField:
        """U(., ., y_l) as a space-time field."""
        return synthesize(replace(self.base, coeffs=self.coeffs[l]))

    @property
    def values(self) -> np.ndarray:
        return np.stack([self.row(l).values for l in range(self.ygrid.L)])

    def row_norms(self) -> np.ndarray:
        return np.array([hs_norm(replace(self.base, coeffs=c), 0.0) for c in self.coeffs])


def extend(sf: SpectralField, s, yg: YGrid | None = None) -> ExtensionField:
    """U_k(rho_m, y_l) = u_k(rho_m) I_s(y_l, i rho_m + lambda_k)."""
    s = _order(s)
    yg = yg or YGrid.covering()
    z, ok = _kernel_points(sf.time, sf.es)
    _support_check(sf, ok)
    ker = _mode_kernel(specfun.i_s, yg.nodes, z, ok, sf.time, s)
    return ExtensionField(sf, s, yg, ker)


def extend_quadrature(u: SpaceTimeField, s, y: float, q: QuadratureSpec | None = None):
    """U(., ., y) from 1/Gamma(s) int e^{-r} e^{-(y^2/4r) H} u r^(s-1) dr.

    The semigroup is applied spectrally at tau = y^2/(4r).  The substitution
    r = e^v gives a smooth integrand, integrated adaptively over the range
    where e^{-r} and e^{-tau lambda_min} are above 1e-18.  Returns
    (field, error estimate).
    """
    s = _order(s)
    q = q or QuadratureSpec()
    if y <= 0:
        raise DomainError("y must be positive")
    sf = analyze(u)
    z, ok = _kernel_points(u.time, u.es)
    _support_check(sf, ok)
    real = np.isrealobj(u.values)
    if not np.any(sf.coeffs):
        return SpaceTimeField(u.time, u.es, np.zeros_like(u.values)), 0.0
    lam_min = float(z.real[ok].min())
    v_lo = math.log(y * y * lam_min / (4 * 42.0))
    v_hi = math.log(42.0)
    c = sf.coeffs

    def integrand(v):
        r = math.exp(v)
        fac = _semigroup_factor(u.time, u.es, y * y / (4 * r))
        return (math.exp(-r) * r**s) * (c * fac)

    val, err = integrate.quad_vec(integrand, v_lo, v_hi, epsrel=q.relative_tolerance, epsabs=0.0, limit=q.nodes_outer)
    g = specfun.gamma_fn(s)
    out = synthesize(replace(sf, coeffs=val / g), real=real)
    return out, float(err) / g


@dataclass(frozen=True, eq=False)
class TraceResult:
    field: SpaceTimeField
    ratio: np.ndarray  # trace / (H^s u) per supported coefficient
    constant: float
    max_deviation: float  # max relative |ratio - constant| / |constant|
    extrapolation_error: float  # relative, from two shifted node sets


def _exponents(s):
    """Powers of y in the small-y expansion shared by both trace quotients."""
    return np.array([0.0, 2 - 2 * s, 2.0, 4 - 2 * s, 4.0])


def _richardson(vals, y, s):
    """Fit sum_j a_j y^(p_j) through len(p) rows and return a_0."""
    p = _exponents(s)
    yy = y / y[0]  # rescaled for conditioning; a_0 is unchanged
    A = yy[:, None] ** p[None, :]
    e0 = np.linalg.solve(A.T, np.eye(p.size)[0])  # row 0 of A^{-1}
    return np.tensordot(e0, vals, axes=(0, 0))


TRACE_NODES = 6


def _trace(ef: ExtensionField, rows, constant, tol):
    s, y = ef.s, ef.ygrid.nodes
    n = _exponents(s).size
    if y.size < n + 1:
        raise DomainError(f"traces need at least {n + 1} y nodes")
    a0 = _richardson(rows[:n], y[:n], s)
    a1 = _richardson(rows[1 : n + 1], y[1 : n + 1], s)
    sf = ef.base
    hs = sf.coeffs * multiplier(sf.time, sf.es, s)
    scale = max(float(np.max(np.abs(hs))), 1e-300)
    trace = a0 * sf.coeffs
    extrap_err = float(np.max(np.abs((a0 - a1) * sf.coeffs))) / (scale * abs(constant))
    supp = np.abs(hs) > 1e-12 * scale
    ratio = trace[supp] / hs[supp]
    dev = float(np.max(np.abs(ratio - constant))) / abs(constant) if ratio.size else 0.0
    if extrap_err > tol:
        raise AccuracyError(f"trace extrapolation residual {extrap_err:.3g} exceeds {tol:.3g}", extrap_err)
    fld = synthesize(replace(sf, coeffs=trace))
    return TraceResult(fld, ratio, constant, dev, extrap_err)


def neumann_trace(ef: ExtensionField, tol: float = 1e-6) -> TraceResult:
    """lim -y^(1-2s) dU/dy from the closed-form derivative at the smallest nodes."""
    s, y = ef.s, ef.ygrid.nodes[:TRACE_NODES]
    z, ok = _kernel_points(ef.base.time, ef.base.es)
    d = _mode_kernel(specfun.i_s_y_derivative, y, z, ok, ef.base.time, s)
    rows = -(y ** (1 - 2 * s))[:, None, None] * d
    return _trace(ef, rows, specfun.neumann_constant(s), tol)


def quotient_trace(ef: ExtensionField, tol: float = 1e-6) -> TraceResult:
    """lim (U(y) - u) / y^(2s), with I_s - 1 formed without cancellation."""
    s, y = ef.s, ef.ygrid.nodes[:TRACE_NODES]
    z, ok = _kernel_points(ef.base.time, ef.base.es)
    dev = _mode_kernel(specfun.i_s_deviation, y, z, ok, ef.base.time, s)
    rows = dev / (y ** (2 * s))[:, None, None]
    return _trace(ef, rows, specfun.quotient_constant(s), tol)


def kernel_second_derivative(y, lam, s):
    """d^2/dy^2 I_s(y, lam) in closed form through K_s and K_{1-s}.

    With zeta = y sqrt(lam) and A = 2^(1-s)/Gamma(s),
    I'' = lam A (zeta^s K_s(zeta) + (1-2s) zeta^(s-1) K_{1-s}(zeta)).
    """
    s = _order(s)
    y, lam = specfun._prep(y, lam)
    zeta = y * np.sqrt(lam)
    A = 2.0 ** (1 - s) / specfun.gamma_fn(s)
    ks = specfun.bessel_k(s, zeta)
    k1 = specfun.bessel_k(1 - s, zeta)
    return lam * A * (zeta**s * ks + (1 - 2 * s) * zeta ** (s - 1) * k1)


def pde_residual(ef: ExtensionField, es: EigenSystem | None = None, *, fd_check: bool = True) -> dict:
    """H U - ((1-2s)/y d/dy + d^2/dy^2) U per coefficient.

    The exact route uses (i rho + lambda) U for the H-part and closed forms
    for both y-derivatives.  The identity holds per complex mode, so the
    Nyquist row is checked before its real-part symmetrization.  The residual is scaled per entry by the sum of
    the magnitudes of the three terms.  The finite-difference variant
    replaces d^2/dy^2 by the three-point stencil on the geometric grid; its
    residual and observed order (grid halved in log y) are reported only.
    """
    es = es or ef.base.es
    if es is not ef.base.es:
        raise DomainError("eigensystem does not match the extension field")
    if ef.ygrid.L < 5:
        raise DomainError("pde_residual needs at least five y nodes")
    s, y = ef.s, ef.ygrid.nodes
    time = ef.base.time
    z, ok = _kernel_points(time, es)
    c = ef.base.coeffs
    supp = ok & (np.abs(c) > 1e-12 * max(float(np.max(np.abs(c))), 1e-300))
    ny = time.nyquist
    ker = ef.kernel.copy()
    ker[:, ny] = _mode_kernel(specfun.i_s, y, z[ny : ny + 1], ok[ny : ny + 1], time, s, nyquist_real=False)[:, 0]
    d1 = _mode_kernel(specfun.i_s_y_derivative, y, z, ok, time, s, nyquist_real=False)
    d2 = _mode_kernel(kernel_second_derivative, y, z, ok, time, s, nyquist_real=False)
    yy = y[:, None, None]
    hpart = z[None] * ker
    ypart = (1 - 2 * s) / yy * d1 + d2
    res = (hpart - ypart) * c[None]
    scale = (np.abs(hpart) + np.abs((1 - 2 * s) / yy * d1) + np.abs(d2)) * np.abs(c[None])
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > 0, np.abs(res) / scale, 0.0)
    rel = rel[:, supp]
    out = {
        "max_scaled_residual": float(rel.max()) if rel.size else 0.0,
        "l2_residual": float(np.sqrt(time.T * np.sum(np.abs(res) ** 2))),
        "max_residual": float(np.max(np.abs(res))) if res.size else 0.0,
    }
    if fd_check:
        out.update(_fd_residual(ef, z, ok, supp))
    return out


def _fd_once(y, ker, d1, z, s):
    h1 = y[1:-1] - y[:-2]
    h2 = y[2:] - y[1:-1]
    k = ker
    d2 = 2 * (k[2:] * h1[:, None, None] - k[1:-1] * (h1 + h2)[:, None, None] + k[:-2] * h2[:, None, None]) / (
        (h1 * h2 * (h1 + h2))[:, None, None]
    )
    yi = y[1:-1][:, None, None]
    res = z[None] * k[1:-1] - (1 - 2 * s) / yi * d1[1:-1] - d2
    scale = np.abs(z[None] * k[1:-1]) + np.abs((1 - 2 * s) / yi * d1[1:-1]) + np.abs(d2)
    return res, scale


def _fd_residual(ef, z, ok, supp):
    """Stencil residual where the grid resolves the mode (y |z|^(1/2) <= 1)."""
    s = ef.s
    time = ef.base.time
    y_top = 1.0 / math.sqrt(float(np.abs(z[supp]).min())) if supp.any() else 1.0
    errs = []
    for refine in (1, 2):
        g = ef.ygrid.growth ** (1.0 / refine)
        y = ef.ygrid.y_min * g ** np.arange((ef.ygrid.L - 1) * refine + 1)
        y = y[: max(int(np.searchsorted(y, y_top, side="right")) + 1, 3)]
        ker = _mode_kernel(specfun.i_s, y, z, ok, time, s, nyquist_real=False)
        d1 = _mode_kernel(specfun.i_s_y_derivative, y, z, ok, time, s, nyquist_real=False)
        res, scale = _fd_once(y, ker, d1, z, s)
        resolved = (y[1:-1, None, None] * np.sqrt(np.abs(z))[None] <= 1.0) & supp[None]
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(resolved & (scale > 0), np.abs(res) / scale, 0.0)
        errs.append(float(rel.max()))
    order = math.log2(errs[0] / errs[1]) if errs[1] > 0 and errs[0] > 0 else float("nan")
    return {"fd_scaled_residual": errs[0], "fd_scaled_residual_refined": errs[1], "fd_observed_order": order}


@dataclass(frozen=True, eq=False)
class ReflectedField:
    y: np.ndarray
    values: np.ndarray  # (2L', M, N), rows ordered by y
    weight: np.ndarray  # |y|^(1-2s)
    s: float
    metadata: dict = field(default_factory=dict)


def reflect(ef: ExtensionField, Y0: float) -> ReflectedField:
    """Even extension U(t, x, -y) = U(t, x, y) on (-Y0, Y0)."""
    if not (0 < Y0 <= ef.ygrid.y_max * (1 + 1e-12)):
        raise DomainError(f"Y0 must lie in (0, y_max = {ef.ygrid.y_max:.6g}]")
    y = ef.ygrid.nodes
    keep = np.nonzero(y < Y0 * (1 + 1e-12))[0]
    vals = np.stack([ef.row(l).values for l in keep])
    yk = y[keep]
    ys = np.concatenate([-yk[::-1], yk])
    allv = np.concatenate([vals[::-1], vals])
    w = np.abs(ys) ** (1 - 2 * ef.s)
    meta = {"weight": "|y|^(1-2s)", "weight_class": "A2", "s": ef.s, "Y0": float(Y0)}
    return ReflectedField(ys, allv, w, ef.s, meta)


@dataclass(frozen=True)
class EnergyReport:
    energy: float
    hs_norm_sq: float
    ratio: float


def mode_energy(z, s, y_min=1e-3, growth=1.25, y_max=50.0):
    """int_0^inf y^(1-2s) |z| |I_s(y, z)|^2 dy for each z, on the log grid used by energy_norm."""
    yg = YGrid.covering(y_min, growth, y_max)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    ker = np.stack([specfun.i_s(np.full(z.shape, yl), z, s) for yl in yg.nodes])
    return np.abs(z) * _log_trapezoid(yg, np.abs(ker) ** 2, s)


def _log_trapezoid(yg: YGrid, absk2, s):
    """int y^(1-2s) f dy with f given on the nodes (first axis); f ~ 1 on [0, y_min]."""
    y = yg.nodes.reshape((-1,) + (1,) * (absk2.ndim - 1))
    g = y ** (2 - 2 * s) * absk2
    h = math.log(yg.growth)
    body = h * (np.sum(g, axis=0) - 0.5 * (g[0] + g[-1]))
    head = yg.y_min ** (2 - 2 * s) / (2 - 2 * s) * absk2[0]
    return body + head


def energy_norm(ef: ExtensionField) -> EnergyReport:
    """int_0^inf y^(1-2s) sum |i rho + lambda| |U_k(rho, y)|^2 dy and its ratio to ||u||_{H^s}^2.

    Log-trapezoid in y over the grid plus the head [0, y_min] with U ~ u.
    The tail past y_max is dropped; it is below e^{-2 y_max sqrt(lambda_min)}.
    """
    sf = ef.base
    z = _spectral_points(sf.time, sf.es)
    absk2 = np.abs(ef.kernel) ** 2
    per_mode = _log_trapezoid(ef.ygrid, absk2, ef.s)
    energy = float(sf.time.T * np.sum(np.abs(z) * per_mode * np.abs(sf.coeffs) ** 2))
    hs2 = hs_norm(sf, ef.s) ** 2
    ratio = energy / hs2 if hs2 > 0 else float("nan")
    return EnergyReport(energy, hs2, ratio)
