"""Discrete spectral data for the elliptic operators L.

Classical cases (sine / cosine on (0, pi)) are tabulated.  Everything else
is discretized through the bilinear form

    a(u, v) = int (a u' v' + c u v) d eta

in a sine discrete-variable representation (DVR): the unknowns are values
on the interior nodes of a uniform grid, derivatives are exact for the
sine basis, and integrals use the trapezoid rule against the measure.
The resulting symmetric generalized problem is solved densely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np
from scipy import linalg

from .errors import DomainError, NumericError

__all__ = [
    "OperatorSpec",
    "EigenSystem",
    "operator_spec",
    "build_eigensystem",
    "heat_kernel",
    "semigroup_mass",
    "expand",
    "synthesize",
    "KINDS",
]

KINDS = (
    "interval_dirichlet",
    "interval_neumann",
    "hermite",
    "hermite_shifted",
    "laguerre",
    "ultraspherical",
    "bessel",
    "generic_divergence",
)

ZERO_EIG_TOL = 1e-8


@dataclass(frozen=True)
class OperatorSpec:
    """Description of one operator L on a (possibly truncated) interval."""

    kind: str
    domain: tuple
    params: dict = field(default_factory=dict)
    a: Optional[Callable] = None
    c: Optional[Callable] = None
    measure_density: Optional[Callable] = None
    ellipticity: float = 1.0
    truncated_from: Optional[str] = None
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown operator kind {self.kind!r}")
        lo, hi = self.domain
        if not hi > lo:
            raise DomainError("domain must satisfy x_lo < x_hi")

    def describe(self) -> dict:
        """JSON-friendly summary (callables are not serialized)."""
        return {
            "kind": self.kind,
            "domain": [float(v) for v in self.domain],
            "params": {k: float(v) for k, v in self.params.items()},
            "truncated_from": self.truncated_from,
            "shift": float(self.shift),
        }


def operator_spec(kind: str, **kw) -> OperatorSpec:
    """Catalog constructor with the default domains and truncations.

    Keyword parameters: ``alpha`` (laguerre), ``lam`` (ultraspherical,
    bessel), ``radius`` (truncation radius of unbounded domains), ``shift``
    (added to every eigenvalue), and ``a``, ``c``, ``measure_density``,
    ``ellipticity``, ``domain`` for generic_divergence.
    """
    shift = float(kw.pop("shift", 0.0))
    if kind in ("interval_dirichlet", "interval_neumann"):
        return OperatorSpec(kind, (0.0, math.pi), shift=shift)
    if kind in ("hermite", "hermite_shifted"):
        R = float(kw.get("radius", 12.0))
        return OperatorSpec(kind, (-R, R), {"radius": R}, truncated_from="(-inf, inf)", shift=shift)
    if kind == "laguerre":
        alpha = float(kw.get("alpha", 0.5))
        if alpha <= -1:
            raise DomainError("laguerre requires alpha > -1")
        R = float(kw.get("radius", 12.0))
        return OperatorSpec(kind, (0.0, R), {"alpha": alpha, "radius": R}, truncated_from="(0, inf)", shift=shift)
    if kind == "ultraspherical":
        lam = float(kw.get("lam", 3.0))
        if lam <= 0:
            raise DomainError("ultraspherical requires lambda > 0")
        return OperatorSpec(kind, (0.0, math.pi), {"lam": lam}, shift=shift)
    if kind == "bessel":
        lam = float(kw.get("lam", 3.0))
        if lam <= 0:
            raise DomainError("bessel requires lambda > 0")
        R = float(kw.get("radius", 10.0))
        return OperatorSpec(kind, (0.0, R), {"lam": lam, "radius": R}, truncated_from="(0, inf)", shift=shift)
    if kind == "generic_divergence":
        dom = tuple(kw.get("domain", (0.0, math.pi)))
        return OperatorSpec(
            kind,
            dom,
            a=kw.get("a"),
            c=kw.get("c"),
            measure_density=kw.get("measure_density"),
            ellipticity=float(kw.get("ellipticity", 1.0)),
            shift=shift,
        )
    raise DomainError(f"unknown operator kind {kind!r}")


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenpairs sampled on a grid.

    ``phi`` has shape (N, K): column k holds phi_k(x_j).  ``w`` are the
    quadrature weights including the measure density, so that
    sum_j phi_k phi_l w_j = delta_kl.
    """

    x: np.ndarray
    w: np.ndarray
    eigenvalues: np.ndarray
    phi: np.ndarray
    spec: OperatorSpec
    zero_mean_mode: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("x", "w", "eigenvalues", "phi"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.phi.shape != (self.x.size, self.eigenvalues.size):
            raise DomainError("phi must have shape (N, K)")

    @property
    def K(self) -> int:
        return self.eigenvalues.size

    @property
    def N(self) -> int:
        return self.x.size

    def gram(self) -> np.ndarray:
        return self.phi.T @ (self.w[:, None] * self.phi)

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.K))))


# ---------------------------------------------------------------------------
# construction


def _coefficients(spec: OperatorSpec):
    """Return (a, c, eta) callables for the DVR route."""
    one = lambda x: np.ones_like(x)
    zero = lambda x: np.zeros_like(x)
    k = spec.kind
    p = spec.params
    if k == "hermite":
        return one, lambda x: x**2, one
    if k == "hermite_shifted":
        return one, lambda x: x**2 - 1.0, one
    if k == "laguerre":
        al = p["alpha"]
        return (lambda x: 0.25 * np.ones_like(x)), (lambda x: 0.25 * (x**2 + (al**2 - 0.25) / x**2)), one
    if k == "ultraspherical":
        lam = p["lam"]
        return one, (lambda x: lam * (lam - 1.0) / np.sin(x) ** 2), one
    if k == "bessel":
        lam = p["lam"]
        return one, (lambda x: lam * (lam - 1.0) / x**2), one
    if k == "generic_divergence":
        return spec.a or one, spec.c or zero, spec.measure_density or one
    if k == "interval_dirichlet":
        return one, zero, one
    raise DomainError(f"no bilinear-form route for {k!r}")


def _sine_dvr_derivative(N: int, L: float) -> np.ndarray:
    """Map interior values (N) to exact sine-series derivatives at all N+2 nodes."""
    j = np.arange(1, N + 1)
    k = np.arange(1, N + 1)
    S = np.sin(np.pi * np.outer(j, k) / (N + 1))
    Sinv = (2.0 / (N + 1)) * S  # S is symmetric and S @ S = (N+1)/2 I
    m = np.arange(0, N + 2)
    C = np.cos(np.pi * np.outer(m, k) / (N + 1)) * (k * np.pi / L)[None, :]
    return C @ Sinv


def _dvr_system(spec: OperatorSpec, N: int):
    lo, hi = spec.domain
    L = hi - lo
    h = L / (N + 1)
    xfull = lo + h * np.arange(0, N + 2)
    x = xfull[1:-1]
    a_fn, c_fn, eta_fn = _coefficients(spec)
    # a*eta at the two endpoints enters only the derivative quadrature;
    # sample it half a step inside so singular endpoints stay finite
    xa = xfull.copy()
    xa[0] = lo + 0.5 * h
    xa[-1] = hi - 0.5 * h
    a_full = np.asarray(a_fn(xa), dtype=float) * np.asarray(eta_fn(xa), dtype=float)
    eta = np.asarray(eta_fn(x), dtype=float)
    cx = np.asarray(c_fn(x), dtype=float)
    if spec.kind == "generic_divergence":
        lam_e = spec.ellipticity
        av = np.asarray(a_fn(x), dtype=float)
        if np.any(av < 1.0 / lam_e - 1e-14) or np.any(av > lam_e + 1e-14):
            raise DomainError("generic_divergence coefficient a violates the ellipticity bounds")
        if np.any(cx < 0):
            raise DomainError("generic_divergence requires c >= 0")
    if np.any(eta <= 0):
        raise DomainError("measure density must be positive")
    wtrap = np.full(N + 2, h)
    wtrap[[0, -1]] = 0.5 * h
    D = _sine_dvr_derivative(N, L)
    A = D.T @ ((a_full * wtrap)[:, None] * D)
    A = 0.5 * (A + A.T)
    A[np.diag_indices(N)] += cx * eta * h
    w = eta * h
    return x, w, A


def build_eigensystem(spec: OperatorSpec, modes: int = 64, grid_size: int = 512, *, allow_full: bool = False) -> EigenSystem:
    """Lowest ``modes`` eigenpairs of the operator on a ``grid_size`` grid.

    ``allow_full`` lifts the K <= N/4 accuracy margin; the harness uses it
    to obtain a complete (invertible) discrete basis.
    """
    K, N = int(modes), int(grid_size)
    if K < 1 or N < 4:
        raise DomainError("need modes >= 1 and grid_size >= 4")
    if not allow_full and K > N // 4:
        raise DomainError(f"modes={K} exceeds grid_size/4={N // 4}")
    meta = {"scheme": None, "shift": spec.shift}
    kind = spec.kind
    if kind == "interval_dirichlet":
        h = math.pi / (N + 1)
        x = h * np.arange(1, N + 1)
        w = np.full(N, h)
        k = np.arange(1, K + 1)
        if K > N:
            raise DomainError("interval_dirichlet needs modes <= grid_size")
        phi = math.sqrt(2.0 / math.pi) * np.sin(np.outer(x, k))
        lam = k.astype(float) ** 2
        meta["scheme"] = "analytic-sine"
        zero_mean = False
    elif kind == "interval_neumann":
        h = math.pi / (N - 1)
        x = h * np.arange(N)
        w = np.full(N, h)
        w[[0, -1]] = 0.5 * h
        if K > N - 2:
            raise DomainError("interval_neumann needs modes <= grid_size - 2")
        k = np.arange(1, K + 1)
        phi = math.sqrt(2.0 / math.pi) * np.cos(np.outer(x, k))
        lam = k.astype(float) ** 2
        meta["scheme"] = "analytic-cosine"
        zero_mean = True
    else:
        x, w, A = _dvr_system(spec, N)
        if K > N:
            raise DomainError("modes must not exceed grid_size")
        try:
            lam, vec = linalg.eigh(A, np.diag(w), subset_by_index=[0, K - 1])
        except linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
            raise NumericError(f"eigensolve failed: {exc}") from exc
        # fix the sign convention: first nonnegligible sample positive
        for col in range(vec.shape[1]):
            v = vec[:, col]
            i = int(np.argmax(np.abs(v) > 1e-3 * np.max(np.abs(v))))
            if v[i] < 0:
                vec[:, col] = -v
        phi = vec
        meta["scheme"] = "sine-dvr"
        zero_mean = False
        ref = _reference_eigenvalues(spec, K)
        if ref is not None:
            meta["reference_eigenvalues"] = ref
            meta["reference_verified"] = kind in ("hermite", "hermite_shifted")
    lam = np.asarray(lam, dtype=float) + spec.shift
    zero = np.abs(lam) < ZERO_EIG_TOL * max(1.0, float(np.max(np.abs(lam))))
    if zero.any():
        lam = np.where(zero, 0.0, lam)
        meta["zero_eigenvalue_modes"] = np.flatnonzero(zero).tolist()
    if np.any(lam < 0):
        raise NumericError("negative eigenvalue after discretization")
    if spec.truncated_from:
        meta["truncated_from"] = spec.truncated_from
        meta["truncation"] = list(spec.domain)
        meta["boundary_amplitude"] = float(np.max(np.abs(phi[[0, -1], :])))
    es = EigenSystem(x=x, w=w, eigenvalues=lam, phi=phi, spec=spec, zero_mean_mode=zero_mean, metadata=meta)
    err = es.orthonormality_error()
    if err > 1e-10:
        raise NumericError(f"discrete orthonormality violated ({err:.2e})")
    return es


def _reference_eigenvalues(spec: OperatorSpec, K: int):
    """Classical eigenvalues kept as metadata for comparison only."""
    k = np.arange(K, dtype=float)
    p = spec.params
    if spec.kind == "hermite":
        return (2 * k + 1).tolist()
    if spec.kind == "hermite_shifted":
        return (2 * k).tolist()
    if spec.kind == "laguerre":
        return (k + (p["alpha"] + 1) / 2).tolist()
    if spec.kind == "ultraspherical":
        return ((k + p["lam"]) ** 2).tolist()
    return None


# ---------------------------------------------------------------------------
# kernels and transforms


def heat_kernel(es: EigenSystem, tau: float):
    """W_tau(x_i, x_j) over the retained modes and its truncation tail bound."""
    if tau <= 0:
        raise DomainError("tau must be positive")
    damp = np.exp(-tau * es.eigenvalues)
    W = (es.phi * damp[None, :]) @ es.phi.T
    W = 0.5 * (W + W.T)
    tail = float(np.exp(-tau * es.eigenvalues[-1]) * es.K)
    return W, tail


def semigroup_mass(es: EigenSystem, tau: float, *, restore_constant: bool = False) -> np.ndarray:
    """e^{-tau L} 1 (x_i) as the weighted row sums of the heat kernel.

    For a Neumann system ``restore_constant`` adds back the dropped constant
    mode (eigenvalue 0) for this computation only.
    """
    W, _ = heat_kernel(es, tau)
    mass = W @ es.w
    if restore_constant and es.zero_mean_mode:
        # constant mode phi_0 = 1/sqrt(|Omega|) contributes exactly 1
        mass = mass + 1.0
    return mass


def expand(es: EigenSystem, f, *, return_info: bool = False):
    """Mode coefficients c_k = sum_j f(x_j) phi_k(x_j) w_j over the last axis."""
    f = np.asarray(f)
    if f.shape[-1] != es.N:
        raise DomainError(f"sample length {f.shape[-1]} does not match grid size {es.N}")
    info = {"projected_zero_mean": False}
    if es.zero_mean_mode:
        mean = (f @ es.w) / np.sum(es.w)
        f = f - np.asarray(mean)[..., None]
        info["projected_zero_mean"] = True
        info["mean_removed"] = mean
    coeffs = f @ (es.w[:, None] * es.phi)
    return (coeffs, info) if return_info else coeffs


def synthesize(es: EigenSystem, coeffs) -> np.ndarray:
    """Samples sum_k c_k phi_k(x_j) over the last axis."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[-1] != es.K:
        raise DomainError(f"coefficient length {coeffs.shape[-1]} does not match K={es.K}")
    return coeffs @ es.phi.T
