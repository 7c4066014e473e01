"""Fractional powers H^s = (d/dt + L)^s on periodic space-time fields.

Three routes are provided:

* the spectral multiplier (i rho + lambda_k)^s (the definition);
* the semigroup integral 1/Gamma(-s) int (e^{-tau H} u - u) dtau / tau^(1+s);
* the bilinear master form built from the heat kernel W_tau and e^{-tau L} 1.

Time is periodic with window T and M samples.  Coefficients are stored in
numpy FFT order with u_k(t) = sum_m c[m, k] e^{i rho_m t}.  The Nyquist
frequency is its own conjugate partner, so every multiplier there is
replaced by its real part; this keeps real fields real on every route.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .bases import EigenSystem, expand, heat_kernel, synthesize as _synth_space
from .errors import DomainError
from .kernels import double_difference_form
from .specfun import QuadratureSpec, _order, gamma_fn, singular_integral

__all__ = [
    "TimeGrid",
    "SpaceTimeField",
    "SpectralField",
    "analyze",
    "synthesize",
    "inner",
    "multiplier",
    "apply_fractional",
    "apply_adjoint_fractional",
    "hs_norm",
    "apply_semigroup",
    "fractional_via_semigroup",
    "master_form",
    "marchaud_derivative",
    "random_field",
]

ORIGIN_TOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """M uniform samples on a periodic window [0, T)."""

    M: int
    T: float = 4.0

    def __post_init__(self):
        if self.M < 16 or self.M % 2:
            raise DomainError("time grid needs an even M >= 16")
        if self.T <= 0:
            raise DomainError("window length must be positive")

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.M)

    @property
    def rho(self) -> np.ndarray:
        """Angular frequencies in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.M, d=self.dt)

    @property
    def nyquist(self) -> int:
        return self.M // 2


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    time: TimeGrid
    es: EigenSystem
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape[-2:] != (self.time.M, self.es.N):
            raise DomainError(f"field shape {v.shape} does not match ({self.time.M}, {self.es.N})")
        if not np.all(np.isfinite(v)):
            raise DomainError("field has non-finite entries")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class SpectralField:
    time: TimeGrid
    es: EigenSystem
    coeffs: np.ndarray
    s_applied: tuple = field(default_factory=tuple)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape[-2:] != (self.time.M, self.es.K):
            raise DomainError(f"coefficient shape {c.shape} does not match ({self.time.M}, {self.es.K})")
        object.__setattr__(self, "coeffs", c)


def _check_same(a, b):
    if a.time != b.time or a.es is not b.es:
        raise DomainError("fields live on different grids")


def analyze(u: SpaceTimeField) -> SpectralField:
    """DFT in t (normalized by 1/M) composed with eigen-expansion in x."""
    modal = expand(u.es, u.values)
    c = np.fft.fft(modal, axis=-2) / u.time.M
    return SpectralField(u.time, u.es, c)


def synthesize(sf: SpectralField, *, real: bool | None = None) -> SpaceTimeField:
    """Inverse of ``analyze``.  Real output when the coefficients are conjugate symmetric."""
    modal = np.fft.ifft(sf.coeffs, axis=-2) * sf.time.M
    vals = _synth_space(sf.es, modal)
    if real is None:
        real = _is_conj_symmetric(sf.coeffs)
    if real:
        vals = vals.real
    return SpaceTimeField(sf.time, sf.es, vals)


def _is_conj_symmetric(c, tol=1e-12) -> bool:
    M = c.shape[-2]
    idx = (-np.arange(M)) % M
    partner = np.conj(np.take(c, idx, axis=-2))
    scale = max(float(np.max(np.abs(c))), 1e-300)
    return bool(np.max(np.abs(c - partner)) <= tol * scale)


def inner(u: SpaceTimeField, v: SpaceTimeField) -> complex:
    """<u, v> = int int u conj(v) dt d eta, discrete."""
    _check_same(u, v)
    val = u.time.dt * np.sum(u.values * np.conj(v.values) * u.es.w, axis=(-2, -1))
    return val


def _spectral_points(sf_or_time, es):
    rho = sf_or_time.rho
    lam = es.eigenvalues
    return np.add.outer(1j * rho, lam)  # (M, K) values of i rho + lambda


def _nyquist_real(mult, time: TimeGrid):
    mult = np.array(mult, dtype=complex)
    mult[..., time.nyquist, :] = mult[..., time.nyquist, :].real
    return mult


def multiplier(time: TimeGrid, es: EigenSystem, s) -> np.ndarray:
    """(i rho_m + lambda_k)^s on the principal branch, origin set to 0."""
    z = _spectral_points(time, es)
    s = float(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        mult = np.where(z == 0, 0.0, np.abs(z) ** s * np.exp(1j * s * np.angle(z)))
    return _nyquist_real(mult, time)


def _check_origin(sf: SpectralField):
    z = _spectral_points(sf.time, sf.es)
    at0 = z == 0
    if at0.any():
        c0 = np.abs(sf.coeffs[..., at0])
        scale = max(float(np.max(np.abs(sf.coeffs))), 1e-300)
        if np.any(c0 > ORIGIN_TOL * scale):
            raise DomainError(
                "nonzero coefficient at rho = 0, lambda = 0; fields must obey the zero-mean convention"
            )


def apply_fractional(sf: SpectralField, s) -> SpectralField:
    """Coefficient-wise multiplication by (i rho + lambda)^s."""
    s = _order(s)
    _check_origin(sf)
    return replace(sf, coeffs=sf.coeffs * multiplier(sf.time, sf.es, s), s_applied=sf.s_applied + (s,))


def apply_adjoint_fractional(sf: SpectralField, s) -> SpectralField:
    """Time-reversed adjoint: multiplication by (-i rho + lambda)^s."""
    s = _order(s)
    _check_origin(sf)
    return replace(sf, coeffs=sf.coeffs * np.conj(multiplier(sf.time, sf.es, s)), s_applied=sf.s_applied + (-s,))


def hs_norm(sf: SpectralField, s) -> float:
    """sqrt( T sum_m sum_k |i rho_m + lambda_k|^s |c_mk|^2 ); s = 0 gives L^2."""
    s = float(s)
    if s < 0:
        raise DomainError("hs_norm needs s >= 0")
    z = np.abs(_spectral_points(sf.time, sf.es))
    with np.errstate(divide="ignore"):
        wgt = np.where(z == 0, 0.0 if s > 0 else 1.0, z**s)
    return float(math.sqrt(sf.time.T * np.sum(wgt * np.abs(sf.coeffs) ** 2)))


def _semigroup_factor(time, es, tau, increment=False):
    z = _spectral_points(time, es)
    fac = np.expm1(-tau * z) if increment else np.exp(-tau * z)
    if increment:
        # Nyquist: real part of e^{-tau z} - 1, formed without cancellation
        ny = time.nyquist
        lam = es.eigenvalues
        rt = time.rho[ny] * tau
        fac[ny, :] = np.expm1(-tau * lam) * np.cos(rt) - 2.0 * np.sin(rt / 2) ** 2
        return fac
    return _nyquist_real(fac, time)


def apply_semigroup(u: SpaceTimeField, tau: float) -> SpaceTimeField:
    """e^{-tau H} u = e^{-tau L} u(. - tau): Fourier phase times mode damping."""
    if tau <= 0:
        raise DomainError("tau must be positive")
    sf = analyze(u)
    out = replace(sf, coeffs=sf.coeffs * _semigroup_factor(u.time, u.es, tau))
    return synthesize(out, real=np.isrealobj(u.values))


def _tau_scales(time, es, q):
    zabs = np.abs(_spectral_points(time, es))
    a = q.split_point / float(zabs.max())
    lam = es.eigenvalues
    pos = lam[lam > 0]
    lam_min = float(pos.min()) if pos.size else 0.0
    return a, lam_min


def fractional_via_semigroup(u: SpaceTimeField, s, q: QuadratureSpec | None = None):
    """H^s u by quadrature of the semigroup integral; returns (field, error).

    Modes with lambda = 0 never decay, so their contribution is folded onto
    one period with the Hurwitz-zeta weight.
    """
    s = _order(s)
    q = q or QuadratureSpec()
    sf = analyze(u)
    _check_origin(sf)
    real = np.isrealobj(u.values)
    a, lam_min = _tau_scales(u.time, u.es, q)
    zero_cols = u.es.eigenvalues == 0
    total = np.zeros_like(u.values, dtype=float if real else complex)
    err = 0.0
    for cols, periodic in ((~zero_cols, False), (zero_cols, True)):
        if not cols.any():
            continue
        c = np.where(cols[None, :], sf.coeffs, 0.0)
        if not np.any(c):
            continue
        part = replace(sf, coeffs=c)
        f0 = synthesize(part, real=real).values

        def incr(tau, part=part):
            fac = _semigroup_factor(u.time, u.es, tau, increment=True)
            return synthesize(replace(part, coeffs=part.coeffs * fac), real=real).values

        if periodic:
            val, e = singular_integral(incr, s, a, q, f0=f0, period=u.time.T)
        else:
            val, e = singular_integral(incr, s, a, q, f0=f0, tau_max=40.0 / lam_min)
        total = total + val
        err += e
    g = gamma_fn(-s)
    return SpaceTimeField(u.time, u.es, total / g), err / abs(g)


def master_form(u: SpaceTimeField, v: SpaceTimeField, s, q: QuadratureSpec | None = None):
    """<H^s u, v> from the heat-kernel decomposition; returns (value, error).

    At each tau the integrand is

        1/2 sum W_tau(x,z) (u(t-tau,x) - u(t-tau,z)) (v(t,x) - v(t,z))
        + sum (1 - e^{-tau L}1(x)) u(t,x) v(t,x)
        - sum e^{-tau L}1(x) (u(t-tau,x) - u(t,x)) v(t,x),

    integrated against dtau / (|Gamma(-s)| tau^(1+s)).  Shifts are periodic.
    The error estimate adds the adaptive-quadrature estimate and a
    round-off bound for the cancellation of the terms at small tau.
    Real fields only.
    """
    s = _order(s)
    q = q or QuadratureSpec()
    _check_same(u, v)
    if np.iscomplexobj(u.values) or np.iscomplexobj(v.values):
        raise DomainError("master_form works on real fields")
    es, time = u.es, u.time
    su = analyze(u)
    uu, vv, w, dt = u.values, v.values, es.w, time.dt
    a, lam_min = _tau_scales(time, es, q)
    if lam_min <= 0 or np.any(es.eigenvalues == 0):
        raise DomainError("master_form needs a strictly positive spectrum")
    if not np.any(u.values) or not np.any(v.values):
        # the relative quadrature tolerance has nothing to resolve
        return 0.0, 0.0
    mags = []

    def terms(tau):
        shift = np.exp(-1j * time.rho * tau)[:, None]
        shift[time.nyquist] = shift[time.nyquist].real
        us = synthesize(replace(su, coeffs=su.coeffs * shift), real=True).values
        W, _ = heat_kernel(es, tau)
        mass = W @ w
        A = 0.5 * dt * double_difference_form(W, w, us, vv)
        B = dt * np.sum((1.0 - mass) * w * uu * vv)
        C = -dt * np.sum(mass * w * (us - uu) * vv)
        mags.append(abs(A) + abs(B) + abs(C))
        return A + B + C

    f0 = float(inner(u, v).real)
    # terms(tau) = f(0) - f(tau) with f(tau) = <e^{-tau H} u, v>
    val, qerr = singular_integral(lambda tau: np.array([-terms(tau)]), s, a, q, f0=np.array([f0]), tau_max=40.0 / lam_min)
    g = abs(gamma_fn(-s))
    tau_c = 1e-8 * a
    roundoff = 8 * np.finfo(float).eps * max(mags) * tau_c ** (-s) / s
    return float(-val[0] / g), float((qerr + roundoff) / g)


def marchaud_derivative(u: SpaceTimeField, s, q: QuadratureSpec | None = None):
    """1/|Gamma(-s)| int (u(t) - u(t - tau)) tau^(-1-s) dtau; returns (field, error).

    Periodic shifts; the tail is folded onto one period with the Hurwitz
    zeta weight, so no truncation in tau is needed.
    """
    s = _order(s)
    q = q or QuadratureSpec()
    sf = analyze(u)
    real = np.isrealobj(u.values)
    rho = u.time.rho
    zabs = np.abs(rho).max()
    a = q.split_point / zabs

    def incr(tau):
        fac = np.expm1(-1j * rho * tau)
        ny = u.time.nyquist
        fac[ny] = -2.0 * np.sin(rho[ny] * tau / 2) ** 2
        return synthesize(replace(sf, coeffs=sf.coeffs * fac[:, None]), real=real).values

    val, err = singular_integral(incr, s, a, q, f0=u.values, period=u.time.T)
    g = abs(gamma_fn(-s))
    return SpaceTimeField(u.time, u.es, -val / g), err / g


def random_field(time: TimeGrid, es: EigenSystem, rng, *, modes: int | None = None, bandwidth: int | None = None) -> SpaceTimeField:
    """Random real band-limited field obeying the zero-mean convention.

    Coefficients are Gaussian with conjugate symmetry in time, restricted to
    the lowest ``modes`` spatial modes and |m| <= ``bandwidth`` (Nyquist
    always excluded).
    """
    K = es.K if modes is None else min(modes, es.K)
    band = time.M // 2 - 1 if bandwidth is None else min(bandwidth, time.M // 2 - 1)
    M = time.M
    c = np.zeros((M, es.K), dtype=complex)
    c[0, :K] = rng.standard_normal(K)
    for m in range(1, band + 1):
        z = rng.standard_normal(K) + 1j * rng.standard_normal(K)
        c[m, :K] = z / math.sqrt(2)
        c[M - m, :K] = np.conj(z) / math.sqrt(2)
    zero = es.eigenvalues == 0
    c[0, zero] = 0.0
    return synthesize(SpectralField(time, es, c), real=True)
