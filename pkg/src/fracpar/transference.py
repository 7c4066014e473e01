"""Transference by a change of variables composed with a multiplication.

A map is a pair (h, M): (U o W) f_bar (x) = M(x) f_bar(h(x)).  The target
grid is the h-image of the source grid, so push and pull are node-wise
relabelings with weights and no interpolation enters.  Target quadrature
weights are w_j M(x_j)^2, which makes the discrete isometry exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math
import warnings

import numpy as np
from scipy import linalg, special

from .bases import EigenSystem, OperatorSpec, operator_spec
from .errors import DomainError, NumericError
from .fracop import SpaceTimeField, TimeGrid, analyze, apply_fractional, random_field, synthesize

__all__ = [
    "MapRecipe",
    "TransferMap",
    "builtin_maps",
    "bind",
    "push",
    "pull",
    "transferred_eigensystem",
    "verify_intertwine",
    "ou_reference_spectrum",
    "bessel_reference_spectrum",
    "ultraspherical_reference_spectrum",
    "UNDERFLOW",
]

UNDERFLOW = 1e-300
ISOMETRY_TOL = 1e-10


def _identity(x):
    return np.asarray(x, dtype=float)


def _one(x):
    return np.ones_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class MapRecipe:
    """Symbolic description of one catalog map (h, M) and its source operator."""

    name: str
    source_kind: str
    source_params: dict
    h: callable
    h_inv: callable
    dh: callable
    M: callable
    target: str
    shift: float = 0.0

    def source_spec(self, **kw) -> OperatorSpec:
        params = dict(self.source_params)
        params.update(kw)
        return operator_spec(self.source_kind, shift=self.shift, **params)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "source_kind": self.source_kind,
            "source_params": {k: float(v) for k, v in self.source_params.items()},
            "target": self.target,
            "shift": float(self.shift),
        }


@dataclass(frozen=True, eq=False)
class TransferMap:
    """A recipe bound to a concrete source grid."""

    recipe: MapRecipe
    x: np.ndarray  # source nodes (kept ones)
    x_target: np.ndarray  # h(x)
    m: np.ndarray  # M(x) > 0
    jacobian: np.ndarray  # |h'(x)|
    w_source: np.ndarray
    w_target: np.ndarray  # w_source * m^2
    keep: np.ndarray  # boolean mask over the source grid
    metadata: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.recipe.name

    def isometry_error(self, rng=None, trials: int = 8) -> float:
        """max | ||push f||_source - ||f||_target | / ||f||_target over random f."""
        rng = rng or np.random.default_rng(0)
        worst = 0.0
        for _ in range(trials):
            f = rng.standard_normal(self.x.size)
            a = math.sqrt(float(np.sum(self.w_source * push(self, f) ** 2)))
            b = math.sqrt(float(np.sum(self.w_target * f**2)))
            worst = max(worst, abs(a - b) / b)
        return worst


def builtin_maps(alpha: float = 0.5, lam: float = 3.0) -> dict:
    """The seven one-dimensional catalog maps, keyed by name.

    hermite_to_ou                 h = id,  M = pi^(-1/4) e^(-x^2/2)
    laguerre_to_l                 h = x^2, M = sqrt 2 x^(alpha+1/2)
    laguerre_to_psi               h = id,  M = x^(alpha+1/2)
    laguerre_to_script_l          h = x^2, M = sqrt 2 x^(1/2)
    laguerre_to_L                 h = x^2, M = sqrt 2 e^(-x^2/2) x^(alpha+1/2),
                                  source shifted by -(alpha+1)/2
    ultraspherical_to_weighted    h = id,  M = (sin x)^lam
    bessel_to_weighted            h = id,  M = x^lam
    """
    return dict(_catalog(float(alpha), float(lam)))


@lru_cache(maxsize=32)
def _catalog(alpha: float, lam: float):
    if alpha <= -1:
        raise DomainError("Laguerre maps need alpha > -1")
    if alpha < -0.9:
        warnings.warn(f"alpha = {alpha} is close to -1: the target measure x^alpha degenerates", RuntimeWarning, stacklevel=3)
    if lam <= 0:
        raise DomainError("ultraspherical and Bessel maps need lambda > 0")
    sq = math.sqrt
    root2 = sq(2.0)
    square = lambda x: np.asarray(x, dtype=float) ** 2
    dsquare = lambda x: 2.0 * np.asarray(x, dtype=float)
    lag = {"alpha": alpha}
    maps = [
        MapRecipe(
            "hermite_to_ou", "hermite_shifted", {}, _identity, _identity, _one,
            lambda x: math.pi**-0.25 * np.exp(-np.asarray(x) ** 2 / 2),
            "-d2/dx2 + 2x d/dx on L2(pi^(-1/2) e^(-x^2) dx)",
        ),
        MapRecipe(
            "laguerre_to_l", "laguerre", lag, square, np.sqrt, dsquare,
            lambda x: root2 * np.asarray(x) ** (alpha + 0.5),
            "Laguerre functions l^alpha on L2(x^alpha dx)",
        ),
        MapRecipe(
            "laguerre_to_psi", "laguerre", lag, _identity, _identity, _one,
            lambda x: np.asarray(x) ** (alpha + 0.5),
            "Laguerre functions psi^alpha on L2(x^(2 alpha + 1) dx)",
        ),
        MapRecipe(
            "laguerre_to_script_l", "laguerre", lag, square, np.sqrt, dsquare,
            lambda x: root2 * np.asarray(x) ** 0.5,
            "Laguerre functions script-L^alpha on L2(dx)",
        ),
        MapRecipe(
            "laguerre_to_L", "laguerre", lag, square, np.sqrt, dsquare,
            lambda x: root2 * np.exp(-np.asarray(x) ** 2 / 2) * np.asarray(x) ** (alpha + 0.5),
            "Laguerre polynomials L^alpha on L2(e^(-x) x^alpha dx)",
            shift=-(alpha + 1) / 2,
        ),
        MapRecipe(
            "ultraspherical_to_weighted", "ultraspherical", {"lam": lam}, _identity, _identity, _one,
            lambda x: np.sin(np.asarray(x)) ** lam,
            "ultraspherical operator on L2(sin^(2 lam) x dx)",
        ),
        MapRecipe(
            "bessel_to_weighted", "bessel", {"lam": lam}, _identity, _identity, _one,
            lambda x: np.asarray(x) ** lam,
            "-d2/dx2 - (2 lam / x) d/dx on L2(x^(2 lam) dx)",
        ),
    ]
    return tuple((m.name, m) for m in maps)


def _same_source(recipe: MapRecipe, spec: OperatorSpec) -> bool:
    if spec.kind != recipe.source_kind or abs(spec.shift - recipe.shift) > 1e-15:
        return False
    return all(abs(spec.params.get(k, v) - v) <= 1e-15 for k, v in recipe.source_params.items())


def bind(recipe: MapRecipe, es: EigenSystem) -> TransferMap:
    """Sample the recipe on the grid of ``es`` and check the invariants."""
    if not _same_source(recipe, es.spec):
        raise DomainError(f"map {recipe.name} expects a {recipe.source_kind} source with {recipe.source_params}, shift {recipe.shift}")
    x = es.x
    m = np.asarray(recipe.M(x), dtype=float)
    keep = np.isfinite(m) & (m > UNDERFLOW)
    meta = {"recipe": recipe.describe()}
    if not keep.all():
        # mass of the retained eigenfunctions on the trimmed nodes
        meta["trimmed_nodes"] = int((~keep).sum())
        meta["trimmed_mass_bound"] = float(np.max(np.sum(es.w[~keep, None] * es.phi[~keep] ** 2, axis=0)))
    xk, mk = x[keep], m[keep]
    xt = np.asarray(recipe.h(xk), dtype=float)
    if np.any(np.diff(xt) <= 0):
        raise DomainError("h is not strictly increasing on the grid")
    jac = np.abs(np.asarray(recipe.dh(xk), dtype=float))
    if np.any(jac <= 0):
        raise DomainError("h has a vanishing Jacobian on the grid")
    if not np.allclose(recipe.h_inv(xt), xk, rtol=1e-13, atol=1e-13):
        raise DomainError("h_inv does not invert h on the grid")
    ws = es.w[keep]
    tm = TransferMap(recipe, xk, xt, mk, jac, ws, ws * mk**2, keep, meta)
    err = tm.isometry_error()
    meta["isometry_error"] = err
    if err > ISOMETRY_TOL:
        raise NumericError(f"map {recipe.name} fails the discrete isometry ({err:.2e})")
    return tm


def _conform(tm: TransferMap, f, grid, expected):
    f = np.asarray(f)
    if f.shape[-1] != tm.x.size:
        raise DomainError(f"samples of length {f.shape[-1]} do not conform to the {tm.x.size}-node map grid")
    if grid is not None and (np.shape(grid) != expected.shape or not np.array_equal(np.asarray(grid), expected)):
        raise DomainError("grid does not conform to the map")
    return f


def push(tm: TransferMap, f_bar, grid=None):
    """(U o W) f_bar = M * (f_bar o h), node by node; last axis is space."""
    f_bar = _conform(tm, f_bar, grid, tm.x_target)
    return tm.m * f_bar


def pull(tm: TransferMap, f, grid=None):
    """(U o W)^{-1} f = (f / M) o h^{-1}, node by node."""
    f = _conform(tm, f, grid, tm.x)
    return f / tm.m


def transferred_eigensystem(es: EigenSystem, tm: TransferMap) -> EigenSystem:
    """Same eigenvalues, pulled eigenfunctions, target-measure weights."""
    if not np.array_equal(es.x[tm.keep], tm.x):
        raise DomainError("eigensystem does not live on the map's source grid")
    phi = pull(tm, es.phi[tm.keep].T).T
    meta = dict(es.metadata)
    meta.update({"transferred_by": tm.name, "target": tm.recipe.target})
    out = EigenSystem(
        x=tm.x_target,
        w=tm.w_target,
        eigenvalues=es.eigenvalues.copy(),
        phi=phi,
        spec=es.spec,
        zero_mean_mode=es.zero_mean_mode,
        metadata=meta,
    )
    err = out.orthonormality_error()
    if err > 1e-10:
        raise NumericError(f"transferred orthonormality violated ({err:.2e})")
    return out


def verify_intertwine(es: EigenSystem, tm: TransferMap, s, trials: int = 20, *, time: TimeGrid | None = None, seed: int = 0) -> dict:
    """Compare pull(H^s push u_bar) with H_bar^s u_bar on random fields.

    Both sides use the multiplier route; discrepancy is measured in the
    target-weighted L^2 norm, relative.
    """
    time = time or TimeGrid(16, 4.0)
    es_bar = transferred_eigensystem(es, tm)
    rng = np.random.default_rng(seed)
    worst = 0.0
    K = min(es.K, 16)
    for _ in range(trials):
        ub = random_field(time, es_bar, rng, modes=K, bandwidth=time.M // 2 - 2)
        pushed = SpaceTimeField(time, es, _embed(es, tm, push(tm, ub.values)))
        a = pull(tm, synthesize(apply_fractional(analyze(pushed), s)).values[..., tm.keep])
        b = synthesize(apply_fractional(analyze(ub), s)).values
        num = math.sqrt(float(np.sum(tm.w_target * (a - b) ** 2)))
        den = math.sqrt(float(np.sum(tm.w_target * b**2)))
        worst = max(worst, num / den if den > 0 else num)
    return {"map": tm.name, "s": float(s), "trials": trials, "max_relative_discrepancy": worst}


def _embed(es, tm, vals):
    if tm.keep.all():
        return vals
    out = np.zeros(vals.shape[:-1] + (es.N,))
    out[..., tm.keep] = vals
    return out


# ---------------------------------------------------------------------------
# independent discretizations of target operators


def _scaled_lagrange_derivative(x, w):
    """B_qi = sqrt(w_q / w_i) l_i'(x_q) for the Lagrange basis on nodes x.

    Barycentric products and weights are combined in logarithms; the
    weights of a Gauss rule span hundreds of orders of magnitude.
    """
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    logc = np.sum(np.log(np.abs(diff)), axis=1) + 0.5 * np.log(w)
    sgn = np.prod(np.sign(diff), axis=1)
    B = sgn[:, None] * sgn[None, :] * np.exp(logc[:, None] - logc[None, :]) / diff
    np.fill_diagonal(B, 0.0)
    # diagonal of the plain derivative matrix: sum_{j != i} 1/(x_i - x_j)
    inv = 1.0 / diff
    np.fill_diagonal(inv, 0.0)
    B[np.diag_indices(x.size)] = np.sum(inv, axis=1)
    return B


def ou_reference_spectrum(K: int, nodes: int = 80) -> np.ndarray:
    """Lowest K eigenvalues of -d2/dx2 + 2x d/dx on L2(e^(-x^2) dx).

    Lagrange DVR on Gauss-Hermite nodes: the weak form
    sum_q w_q l_i'(x_q) l_j'(x_q) in the basis l_i / sqrt(w_i), which is
    orthonormal under the rule.  Polynomial eigenfunctions are reproduced
    exactly.
    """
    x, w = special.roots_hermite(nodes)
    B = _scaled_lagrange_derivative(x, w)
    A = B.T @ B
    return linalg.eigh(0.5 * (A + A.T), eigvals_only=True, subset_by_index=[0, K - 1])


def bessel_reference_spectrum(K: int, lam: float, radius: float, basis: int = 60) -> np.ndarray:
    """Lowest K eigenvalues of -d2/dx2 - (2 lam/x) d/dx on L2((0, R), x^(2 lam) dx), u(R) = 0.

    Galerkin in r = (x/R)^2 with basis (1 - r) P_n^(2, lam-1/2)(2r - 1).  In r
    the forms are 4/R^2 int f' g' r^(lam+1/2) dr and int f g r^(lam-1/2) dr,
    integrated exactly by Gauss-Jacobi quadrature.
    """
    b = lam - 0.5
    xi, wq = special.roots_jacobi(basis + 4, 0.0, b)
    r = 0.5 * (1 + xi)
    n = np.arange(basis)
    P = np.stack([special.eval_jacobi(k, 2.0, b, xi) for k in n], axis=1)
    dP = np.stack([0.5 * (k + 3.0 + b) * special.eval_jacobi(k - 1, 3.0, b + 1, xi) if k > 0 else np.zeros_like(xi) for k in n], axis=1)
    f = (1 - r)[:, None] * P
    df = -P + (1 - r)[:, None] * 2.0 * dP  # d/dr, with d xi / dr = 2
    # weights of the Gauss-Jacobi rule integrate against (1 + xi)^b = (2r)^b, dr = dxi / 2
    wr = wq * 0.5 / 2.0**b
    S = 4.0 / radius**2 * (df.T @ ((wr * r)[:, None] * df))
    Mm = f.T @ (wr[:, None] * f)
    ev = linalg.eigh(0.5 * (S + S.T), 0.5 * (Mm + Mm.T), eigvals_only=True, subset_by_index=[0, K - 1])
    return ev


def ultraspherical_reference_spectrum(K: int, lam: float, basis: int = 60) -> np.ndarray:
    """Lowest K eigenvalues of -d2/dx2 - 2 lam cot x d/dx + lam^2 on L2(sin^(2 lam) x dx).

    Galerkin in xi = cos x with Jacobi polynomials P_n^(b, b), b = lam - 1/2:
    stiffness int f' g' (1 - xi^2)^(b + 1) d xi, mass int f g (1 - xi^2)^b d xi.
    The constant lam^2 matches the spectrum of the source operator.
    """
    b = lam - 0.5
    xi, wq = special.roots_jacobi(basis + 4, b, b)
    n = np.arange(basis)
    f = np.stack([special.eval_jacobi(k, b, b, xi) for k in n], axis=1)
    df = np.stack([0.5 * (k + 2 * b + 1) * special.eval_jacobi(k - 1, b + 1, b + 1, xi) if k > 0 else np.zeros_like(xi) for k in n], axis=1)
    S = df.T @ ((wq * (1 - xi**2))[:, None] * df)
    Mm = f.T @ (wq[:, None] * f)
    ev = linalg.eigh(0.5 * (S + S.T), 0.5 * (Mm + Mm.T), eigvals_only=True, subset_by_index=[0, K - 1])
    return ev + lam**2
