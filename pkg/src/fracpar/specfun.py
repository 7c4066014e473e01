"""Special functions: Gamma, complex fractional powers, K_nu and I_s.

I_s(y, lam) is the scalar kernel of the extension problem,

    I_s(y, lam) = 2^(1-s)/Gamma(s) * (y sqrt(lam))^s * K_s(y sqrt(lam)),

with three equivalent Laplace-type integral forms.  All integral forms are
evaluated on a ray through the saddle point of the integrand, where the
integrand is smooth and decays double exponentially in log-variables, so
the trapezoid rule converges geometrically.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate, special

from .errors import AccuracyError, DomainError

__all__ = [
    "FracOrder",
    "SpectralPoint",
    "QuadratureSpec",
    "gamma_fn",
    "complex_power",
    "gamma_power_oracle",
    "bessel_k",
    "i_s",
    "i_s_y_derivative",
    "i_s_deviation",
    "neumann_constant",
    "quotient_constant",
    "normalization_integral",
    "singular_integral",
]

# Lebedev quadrature below this modulus, asymptotic series above.
Z_SWITCH = 30.0
_EXP_UNDERFLOW = 700.0


@dataclass(frozen=True)
class FracOrder:
    """Fractional order 0 < s < 1."""

    s: float

    def __post_init__(self):
        s = float(self.s)
        if not (0.0 < s < 1.0) or not math.isfinite(s):
            raise DomainError(f"fractional order must satisfy 0 < s < 1, got {self.s!r}")
        object.__setattr__(self, "s", s)

    def __float__(self):
        return self.s


@dataclass(frozen=True)
class SpectralPoint:
    """The point i*rho + lambda of the right half plane."""

    rho: float
    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise DomainError(f"spatial eigenvalue must be >= 0, got {self.lam}")

    @property
    def z(self) -> complex:
        return complex(self.lam, self.rho)


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for the dtau / tau^(1+s) quadratures.

    ``nodes_inner`` and ``nodes_outer`` cap the number of adaptive
    subintervals on the two pieces of the split integral.
    """

    split_point: float = 1.0
    nodes_inner: int = 200
    nodes_outer: int = 2000
    relative_tolerance: float = 1e-10

    def __post_init__(self):
        if self.split_point <= 0:
            raise DomainError("split_point must be positive")
        if self.nodes_inner < 8 or self.nodes_outer < 8:
            raise DomainError("node counts must be >= 8")
        if not (0.0 < self.relative_tolerance <= 1e-2):
            raise DomainError("relative_tolerance must lie in (0, 1e-2]")


def _order(s) -> float:
    if isinstance(s, FracOrder):
        return s.s
    return FracOrder(float(s)).s


def gamma_fn(x: float) -> float:
    """Gamma function on the real line; poles raise DomainError."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise DomainError(f"Gamma has a pole at x = {int(x)}")
    return float(special.gamma(x))


def neumann_constant(s) -> float:
    """Gamma(1-s) / (4^(s-1/2) Gamma(s)), the weighted Neumann trace constant."""
    s = _order(s)
    return gamma_fn(1 - s) / (4.0 ** (s - 0.5) * gamma_fn(s))


def quotient_constant(s) -> float:
    """Gamma(-s) / (4^s Gamma(s)), the (negative) difference-quotient constant."""
    s = _order(s)
    return gamma_fn(-s) / (4.0**s * gamma_fn(s))


def complex_power(rho, lam, s):
    """Principal power (i*rho + lam)^s for lam >= 0.

    Accepts scalars or broadcastable arrays.  For lam >= 0 the principal
    argument lies in [-pi/2, pi/2], so conj((i rho + lam)^s) equals
    (-i rho + lam)^s.
    """
    s = _order(s)
    rho = np.asarray(rho, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise DomainError("complex_power needs lam >= 0")
    if np.any((rho == 0) & (lam == 0)):
        raise DomainError("complex_power is undefined at the origin rho = lam = 0")
    z = lam + 1j * rho
    out = np.abs(z) ** s * np.exp(1j * s * np.angle(z))
    return out[()] if out.ndim == 0 else out


def gamma_power_oracle(rho: float, lam: float, s, q: QuadratureSpec | None = None):
    """Quadrature of 1/Gamma(-s) * int_0^inf (e^{-tau z} - 1) tau^{-1-s} dtau.

    The integral is split at a = split/|z|.  On [0, a] the substitution
    tau = a v^(1/(1-s)) removes the endpoint singularity.  On [a, inf) the
    non-oscillating part uses tau = a e^u; for rho != 0 the oscillating
    factor e^{-i rho tau} is handled with a Fourier-weight rule.

    Returns ``(value, error_estimate)``.
    """
    s = _order(s)
    q = q or QuadratureSpec()
    z = complex(lam, rho)
    if abs(z) == 0:
        raise DomainError("gamma_power_oracle is undefined at the origin")
    if lam < 0:
        raise DomainError("lam must be >= 0")
    a = q.split_point / abs(z)
    p = 1.0 / (1.0 - s)
    tol = q.relative_tolerance * 1e-2

    def inner(v):
        tau = a * v**p
        w = -tau * z
        # (e^{-tau z} - 1) / tau without cancellation
        g = np.expm1(w) / tau if abs(w) > 1e-3 else -z * _expm1_over(w)
        return a ** (1 - s) * p * g

    re_in, e1 = integrate.quad(lambda v: inner(v).real, 0.0, 1.0, epsabs=0, epsrel=tol, limit=q.nodes_inner)
    im_in, e2 = integrate.quad(lambda v: inner(v).imag, 0.0, 1.0, epsabs=0, epsrel=tol, limit=q.nodes_inner)

    if rho == 0.0:
        # tau = a e^u; integrand e^{-lam a e^u} (a e^u)^{-s}
        def outer(u):
            tau = a * math.exp(u)
            return math.exp(-lam * tau) * tau ** (-s)

        umax = math.log(max(60.0 / (lam * a), 2.0))
        re_out, e3 = integrate.quad(outer, 0.0, umax, epsabs=0, epsrel=tol, limit=q.nodes_outer)
        im_out, e4 = 0.0, 0.0
    else:
        def env(tau):
            return math.exp(-lam * tau) * tau ** (-1 - s)

        w = abs(rho)
        c, e3 = integrate.quad(env, a, np.inf, weight="cos", wvar=w, limlst=200, limit=q.nodes_outer)
        sn, e4 = integrate.quad(env, a, np.inf, weight="sin", wvar=w, limlst=200, limit=q.nodes_outer)
        re_out = c
        im_out = -math.copysign(1.0, rho) * sn
    total = complex(re_in + re_out - a ** (-s) / s, im_in + im_out)
    g = gamma_fn(-s)
    err = (e1 + e2 + e3 + e4) / abs(g)
    value = total / g
    if not np.isfinite(err) or err > 1e3 * q.relative_tolerance * max(abs(value), 1e-300):
        raise AccuracyError("gamma_power_oracle did not converge", estimate=err)
    return value, err


def _expm1_over(w):
    """(e^w - 1)/w via a short series, valid for small |w|."""
    term, acc = 1.0 + 0j, 1.0 + 0j
    for k in range(2, 12):
        term = term * w / k
        acc = acc + term
    return acc


# ---------------------------------------------------------------------------
# ray quadrature


def _ray_quadrature(logf, theta, rtol=1e-14, n_start=64, n_max=1 << 15):
    """Integrate exp(logf(w)) dw/w along w = exp(i*theta + u), u real.

    ``logf(w, rows)`` maps a complex array of shape (len(rows), n) to the
    log of the integrand times w, for the selected rows.  ``theta`` has shape (P,).  The support is found by
    a coarse scan, then the trapezoid rule is doubled until successive
    values agree to ``rtol``.  Returns (values, error_estimates).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    P = theta.size
    ucoarse = np.arange(-110.0, 110.0 + 1e-9, 0.25)
    ec = logf(np.exp(1j * theta[:, None] + ucoarse[None, :]), np.arange(P)).real
    ec = np.where(np.isfinite(ec), ec, -np.inf)
    emax = ec.max(axis=1)
    keep = ec >= (emax - 55.0)[:, None]
    idx = np.arange(ucoarse.size)
    first = np.where(keep, idx, ucoarse.size).min(axis=1)
    last = np.where(keep, idx, -1).max(axis=1)
    lo = ucoarse[np.clip(first - 2, 0, ucoarse.size - 1)]
    hi = ucoarse[np.clip(last + 2, 0, ucoarse.size - 1)]

    def f_at(rows, u):
        lw = logf(np.exp(1j * theta[rows, None] + u), rows) - emax[rows, None]
        return np.exp(lw)

    values = np.zeros(P, dtype=complex)
    errors = np.full(P, np.inf)
    active = np.arange(P)
    n = n_start
    h = (hi - lo) / n
    u = lo[:, None] + h[:, None] * np.arange(n + 1)[None, :]
    fv = f_at(active, u)
    sums = fv[:, 1:-1].sum(axis=1) + 0.5 * (fv[:, 0] + fv[:, -1])
    prev = sums * h
    while active.size and n < n_max:
        hh = h[active] / 2
        mids = lo[active, None] + hh[:, None] * (2 * np.arange(n)[None, :] + 1)
        sums = sums + f_at(active, mids).sum(axis=1)
        cur = sums * hh
        err = np.abs(cur - prev)
        done = err <= rtol * np.abs(cur) + 1e-300
        values[active] = cur
        errors[active] = err
        keep_rows = ~done
        active = active[keep_rows]
        sums = sums[keep_rows]
        prev = cur[keep_rows]
        h[active] = hh[keep_rows]
        n *= 2
    scale = np.exp(emax)
    return values * scale, errors * scale


# ---------------------------------------------------------------------------
# Bessel K


def _k_asymptotic(nu, z):
    """Large-|z| expansion of K_nu(z), truncated at its smallest term."""
    mu = 4.0 * nu * nu
    term = np.ones_like(z)
    acc = np.ones_like(z)
    best = np.abs(term)
    done = np.zeros(z.shape, dtype=bool)
    for k in range(1, 80):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        mag = np.abs(term)
        grow = mag >= best
        done |= grow
        upd = ~done
        acc = np.where(upd, acc + term, acc)
        best = np.where(upd, mag, best)
        done |= mag < 1e-18 * np.abs(acc)
        if done.all():
            break
    return np.sqrt(np.pi / (2.0 * z)) * np.exp(-z) * acc


def bessel_k(nu: float, z, *, with_flag: bool = False):
    """Modified Bessel function K_nu(z) for 0 < nu < 1, |arg z| < pi/4.

    |z| <= 30: Lebedev integral 1/2 (z/2)^nu int e^{-t - z^2/(4t)} t^{-nu-1} dt
    on the ray through the saddle t = z/2.  |z| > 30: asymptotic series.
    Where e^{-Re z} underflows the result is exactly 0; ``with_flag`` also
    returns the boolean underflow mask.
    """
    if not (0.0 < nu < 1.0):
        raise DomainError(f"bessel_k exposes only 0 < nu < 1, got {nu}")
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.ravel()
    if np.any(zf == 0):
        raise DomainError("bessel_k needs |z| > 0")
    if np.any(np.abs(np.angle(zf)) >= np.pi / 4):
        raise DomainError("bessel_k needs |arg z| < pi/4")
    out = np.zeros(zf.shape, dtype=complex)
    under = zf.real > _EXP_UNDERFLOW
    big = (np.abs(zf) > Z_SWITCH) & ~under
    small = (np.abs(zf) <= Z_SWITCH)
    if big.any():
        out[big] = _k_asymptotic(nu, zf[big])
    if small.any():
        zs = zf[small]
        vals = np.empty(zs.shape, dtype=complex)
        for sl in _chunks(zs.size):
            zz = zs[sl][:, None]
            v, _ = _ray_quadrature(lambda t, r: -t - zz[r] ** 2 / (4.0 * t) - nu * np.log(t), np.angle(zs[sl]))
            vals[sl] = v
        out[small] = 0.5 * (zs / 2.0) ** nu * vals
    out = out.reshape(shape)
    res = out[()] if out.ndim == 0 else out
    if with_flag:
        flag = under.reshape(shape)
        return res, (flag[()] if flag.ndim == 0 else flag)
    return res


def _chunks(n, size=2048):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


# ---------------------------------------------------------------------------
# I_s

REPRESENTATIONS = ("bessel", "laplace_in_t", "laplace_in_r", "multiplier")


def _prep(y, lam):
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lam, dtype=complex)
    y, lam = np.broadcast_arrays(y, lam)
    if np.any(y <= 0):
        raise DomainError("i_s needs y > 0")
    if np.any(lam.real <= 0):
        raise DomainError("i_s needs Re(lam) > 0")
    return y, lam


def i_s(y, lam, s, representation: str = "bessel"):
    """Extension kernel I_s(y, lam) in one of its four equivalent forms.

    representation:
      bessel        2^(1-s)/Gamma(s) (y sqrt lam)^s K_s(y sqrt lam)
      laplace_in_t  1/Gamma(s) int e^{-t} e^{-y^2 lam/(4t)} t^(s-1) dt
      laplace_in_r  y^(2s)/(4^s Gamma(s)) int e^{-y^2/(4r)} e^{-r lam} r^(-1-s) dr
      multiplier    1/Gamma(s) int e^{-y^2/(4 tau)} e^{-tau lam} lam^s tau^(s-1) dtau
    """
    s = _order(s)
    if representation not in REPRESENTATIONS:
        raise DomainError(f"unknown representation {representation!r}")
    y, lam = _prep(y, lam)
    shape = y.shape
    yf, lf = y.ravel(), lam.ravel()
    rt = np.sqrt(lf)  # principal root, |arg| < pi/4
    g = gamma_fn(s)
    if representation == "bessel":
        zeta = yf * rt
        out = 2.0 ** (1 - s) / g * zeta**s * bessel_k(s, zeta)
    else:
        out = np.empty(yf.shape, dtype=complex)
        for sl in _chunks(yf.size):
            yy = yf[sl][:, None]
            ll = lf[sl][:, None]
            ang = np.angle(rt[sl])
            if representation == "laplace_in_t":
                v, _ = _ray_quadrature(lambda t, r: -t - yy[r] ** 2 * ll[r] / (4 * t) + s * np.log(t), ang)
                out[sl] = v / g
            elif representation == "laplace_in_r":
                v, _ = _ray_quadrature(lambda w, r: -yy[r] ** 2 / (4 * w) - w * ll[r] - s * np.log(w), -ang)
                out[sl] = yf[sl] ** (2 * s) / (4.0**s * g) * v
            else:
                v, _ = _ray_quadrature(lambda t, r: -yy[r] ** 2 / (4 * t) - t * ll[r] + s * np.log(t), -ang)
                out[sl] = lf[sl] ** s / g * v
    out = out.reshape(shape)
    return out[()] if out.ndim == 0 else out


def i_s_deviation(y, lam, s):
    """I_s(y, lam) - 1 without cancellation.

    For |y sqrt(lam)| <= 1 the ascending series of K_s gives, with c = y^2 lam / 4,

        I_s - 1 = Gamma(1-s) [ sum_{k>=1} c^k / (k! Gamma(k+1-s))
                              - sum_{k>=0} c^(k+s) / (k! Gamma(k+1+s)) ],

    which keeps full relative precision as y -> 0.  Elsewhere I_s - 1 is
    O(1) and is formed directly.
    """
    s = _order(s)
    y, lam = _prep(y, lam)
    c = y * y * lam / 4.0
    small = np.abs(c) <= 0.25
    out = np.empty(c.shape, dtype=complex)
    if small.any():
        cs = c[small]
        a = np.zeros_like(cs)
        b = np.zeros_like(cs)
        ck = np.ones_like(cs)
        for k in range(0, 25):
            if k >= 1:
                a = a + ck / (math.factorial(k) * special.gamma(k + 1 - s))
            b = b + ck / (math.factorial(k) * special.gamma(k + 1 + s))
            ck = ck * cs
        out[small] = special.gamma(1 - s) * (a - cs**s * b)
    if (~small).any():
        out[~small] = i_s(y[~small], lam[~small], s) - 1.0
    return out[()] if out.ndim == 0 else out


def i_s_y_derivative(y, lam, s):
    """d/dy I_s(y, lam) from -y^(1-2s) dI_s/dy = c_s lam^s I_{1-s}(y, lam)."""
    s = _order(s)
    y, lam = _prep(y, lam)
    c = neumann_constant(s)
    val = -c * lam**s * i_s(y, lam, 1.0 - s) * y ** (2 * s - 1)
    return val[()] if np.ndim(val) == 0 else val


def normalization_integral(y, s):
    """y^(2s)/(4^s Gamma(s)) int_0^inf e^{-y^2/(4 tau)} tau^(-1-s) dtau (equals 1).

    After tau = y^2/(4t) the integrand is e^{-t} t^(s-1); the algebraic
    endpoint factor is handled by an algebraic-weight rule on [0, 1].
    """
    s = _order(s)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    head, _ = integrate.quad(lambda t: math.exp(-t), 0.0, 1.0, weight="alg", wvar=(s - 1.0, 0.0), epsabs=0, epsrel=1e-13)
    tail, _ = integrate.quad(lambda t: math.exp(-t) * t ** (s - 1.0), 1.0, np.inf, epsabs=0, epsrel=1e-13)
    c = y * y / 4.0
    out = y ** (2 * s) / (4.0**s * gamma_fn(s)) * c ** (-s) * (head + tail)
    return out[0] if out.size == 1 else out


# ---------------------------------------------------------------------------
# singular tau-quadrature shared by the operator routes


def singular_integral(increment, s, a, q: QuadratureSpec, *, tau_max=None, f0=None, period=None):
    """int_0^inf (f(tau) - f(0)) tau^(-1-s) dtau for array-valued f.

    ``increment(tau)`` must return f(tau) - f(0) computed without
    cancellation where possible.  The integral is split at ``a``:

    * [tau_c, a] with tau = a v^(1/(1-s)), plus a linear head on [0, tau_c]
      using the slope increment(tau_c)/tau_c, tau_c = 1e-8 a;
    * [a, tau_max] with tau = a e^u, minus f(0) a^(-s)/s for the constant
      part (exact), if ``period`` is None;
    * for periodic f without decay, ``period`` = T folds the tail onto
      [a, a + T] with the Hurwitz-zeta weight T^(-1-s) zeta(1+s, tau/T).

    Returns (value, error_estimate).
    """
    s = _order(s)
    f0 = 0.0 if f0 is None else f0
    p = 1.0 / (1.0 - s)
    tau_c = 1e-8 * a
    v_c = (tau_c / a) ** (1.0 - s)
    rtol = q.relative_tolerance

    def inner(v):
        tau = a * v**p
        return a ** (1 - s) * p * increment(tau) / tau

    val_in, err_in = integrate.quad_vec(inner, v_c, 1.0, epsrel=rtol, epsabs=0.0, limit=q.nodes_inner)
    head = increment(tau_c) / tau_c * tau_c ** (1 - s) / (1 - s)
    if period is None:
        if tau_max is None:
            raise DomainError("tau_max required for non-periodic integrands")
        umax = math.log(max(tau_max / a, 1.0 + 1e-12))

        def outer(u):
            tau = a * math.exp(u)
            return (increment(tau) + f0) * tau ** (-s)

        val_out, err_out = integrate.quad_vec(outer, 0.0, umax, epsrel=rtol, epsabs=0.0, limit=q.nodes_outer)
        val_out = val_out - f0 * a ** (-s) / s
    else:
        T = float(period)

        def outer(tau):
            return (increment(tau) + f0) * T ** (-1 - s) * special.zeta(1 + s, tau / T)

        val_out, err_out = integrate.quad_vec(outer, a, a + T, epsrel=rtol, epsabs=0.0, limit=q.nodes_outer)
        val_out = val_out - f0 * a ** (-s) / s
    value = val_in + head + val_out
    err = float(err_in + err_out) + float(np.max(np.abs(head))) * 1e-6
    return value, err
