"""Dense-matrix experiments on space-time cylinders.

The operator H^s is assembled as a real matrix on the (t_i, x_j) lattice,
nonlocal Dirichlet problems are solved by restricting to the rows of the
solve region, and sup/inf ratios and Holder quotients of the solutions
are reported.  Everything is seeded; per-trial data are smooth functions
of (t, x) whose parameters come from the trial's own generator, so the
same trial can be replayed on any lattice.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import math

import numpy as np
from scipy import linalg, ndimage
from scipy.interpolate import RegularGridInterpolator

from .bases import EigenSystem, build_eigensystem, operator_spec
from .errors import DomainError, NumericError, ResourceError
from .fracop import TimeGrid, multiplier
from .kernels import holder_quotients

__all__ = [
    "LATTICE_BUDGET",
    "assemble_hs_matrix",
    "CylinderGeometry",
    "BoundaryGeometry",
    "DirichletSolver",
    "solve_dirichlet",
    "HarnackReport",
    "TrialResult",
    "HarnackConfig",
    "harnack_experiment",
    "boundary_harnack_experiment",
    "holder_estimate",
    "exterior_data",
]

LATTICE_BUDGET = 8192
RESIDUAL_TOL = 1e-9
NONNEG_TOL = 1e-6
CLIP_GRID = 129
BOUNDARY_WINDOW = (-3.5, 1.0)


# ---------------------------------------------------------------------------
# matrix form


def _time_blocks(es: EigenSystem, tg: TimeGrid, s):
    """B_d(x, x') with H[(t, x), (t', x')] = B_{(t - t') mod M}(x, x')."""
    mult = multiplier(tg, es, s)  # (M, K), origin set to 0
    G = np.einsum("ik,mk,jk->mij", es.phi, mult, es.phi * es.w[:, None], optimize=True)
    B = np.fft.ifft(G, axis=0)
    return B.real, float(np.max(np.abs(B.imag)))


def assemble_hs_matrix(es: EigenSystem, tg: TimeGrid, s, rows=None):
    """Real matrix of u -> H^s u on the flattened (t, x) lattice (row-major).

    ``rows`` optionally selects lattice indices; the result then has shape
    (len(rows), M*N).  The multiplier at the origin (rho = 0, lambda = 0),
    if present, is set to 0.
    """
    M, N = tg.M, es.N
    if M * N > LATTICE_BUDGET:
        raise ResourceError(f"lattice {M}x{N} = {M * N} exceeds the dense budget of {LATTICE_BUDGET}")
    B, imag = _time_blocks(es, tg, float(s))
    if imag > 1e-10 * max(float(np.max(np.abs(B))), 1.0):
        raise NumericError(f"assembled operator is not real (imaginary part {imag:.2e})")
    idx = np.arange(M * N) if rows is None else np.asarray(rows)
    if idx.dtype == bool:
        idx = np.flatnonzero(idx)
    ti, xi = np.divmod(idx, N)
    d = (ti[:, None] - np.arange(M)[None, :]) % M
    H = B[d, xi[:, None], :]  # (P, M, N)
    return H.reshape(idx.size, M * N)


# ---------------------------------------------------------------------------
# geometry


def _lattice(tg: TimeGrid, es: EigenSystem, t_offset: float = 0.0):
    TT, XX = np.meshgrid(tg.t + t_offset, es.x, indexing="ij")
    return TT, XX


def _check_margin(es, lo, hi, what):
    h = float(np.min(np.diff(es.x)))
    if lo - es.spec.domain[0] < 2 * h or es.spec.domain[1] - hi < 2 * h:
        raise DomainError(f"{what} must sit inside the domain with at least two grid cells of margin")


@dataclass(frozen=True, eq=False)
class CylinderGeometry:
    """Masks for R = (0,1) x B_2r, R- = [1/4,1/2] x B_r, R+ = [3/4,1) x B_r."""

    center: float
    r: float
    TT: np.ndarray
    XX: np.ndarray
    R: np.ndarray
    R_minus: np.ndarray
    R_plus: np.ndarray
    past: np.ndarray
    K: np.ndarray  # Holder region [3/8, 7/8] x B_r, strictly inside R

    @classmethod
    def build(cls, tg: TimeGrid, es: EigenSystem, center: float, r: float):
        if r <= 0:
            raise DomainError("radius must be positive")
        _check_margin(es, center - 2 * r, center + 2 * r, "B_2r")
        TT, XX = _lattice(tg, es)
        dx = np.abs(XX - center)
        eps = 1e-12
        R = (TT > eps) & (TT < 1 - eps) & (dx < 2 * r - eps)
        Rm = (TT >= 0.25 - eps) & (TT <= 0.5 + eps) & (dx <= r + eps)
        Rp = (TT >= 0.75 - eps) & (TT < 1 - eps) & (dx <= r + eps)
        K = (TT >= 0.375 - eps) & (TT <= 0.875 + eps) & (dx <= r + eps)
        geo = cls(center, r, TT, XX, R, Rm, Rp, ~R, K)
        if not (Rm.any() and Rp.any()):
            raise DomainError("lattice too coarse: R- or R+ is empty")
        if np.any(Rm & ~R) or np.any(Rp & ~R):
            raise DomainError("R- and R+ must lie inside R")
        return geo


@dataclass(frozen=True, eq=False)
class BoundaryGeometry:
    """Boundary Harnack layout around an interior endpoint x_tilde of Omega_0 = (lo, x_tilde).

    Times are t in [-T/2, T/2).  Solve on (-2,2) x (Omega_0 n B_2r), force
    u = 0 on (-2,2) x ((Omega \\ Omega_0) n B_2r), sup over
    (-1,1) x (Omega_0 n B_r), reference node nearest (t0, x_tilde - r/2).
    """

    x_tilde: float
    r: float
    t0: float
    TT: np.ndarray
    XX: np.ndarray
    solve: np.ndarray
    zero: np.ndarray
    sup: np.ndarray
    ref: int

    @classmethod
    def build(cls, tg: TimeGrid, es: EigenSystem, x_tilde: float, r: float, t0: float):
        if tg.T < 6:
            raise DomainError("boundary Harnack needs a window of length >= 6")
        if not (1 < t0 < 2):
            raise DomainError("reference time must satisfy 1 < t0 < 2")
        _check_margin(es, x_tilde - 2 * r, x_tilde + 2 * r, "B_2r(x_tilde)")
        TT, XX = _lattice(tg, es, -tg.T / 2)
        eps = 1e-12
        band = (TT > -2 + eps) & (TT < 2 - eps)
        near = np.abs(XX - x_tilde) < 2 * r - eps
        inside = XX < x_tilde - eps
        solve = band & near & inside
        zero = band & near & ~inside
        sup = (TT > -1 + eps) & (TT < 1 - eps) & inside & (np.abs(XX - x_tilde) <= r + eps)
        x0 = x_tilde - r / 2
        d = np.abs(TT - t0) + np.abs(XX - x0)
        ref = int(np.argmin(d))
        if not solve.ravel()[ref]:
            raise DomainError("reference node falls outside the solve region")
        return cls(x_tilde, r, t0, TT, XX, solve, zero, sup, ref)


# ---------------------------------------------------------------------------
# solver


class DirichletSolver:
    """u = g off the solve set, (H^s u) = 0 on it; one LU factorization, many data."""

    def __init__(self, rows: np.ndarray, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool).ravel()
        if rows.shape != (mask.sum(), mask.size):
            raise DomainError("row block does not match the solve mask")
        self.mask = mask
        self.rows = rows
        A = rows[:, mask]
        self.A_ext = rows[:, ~mask]
        try:
            self.lu = linalg.lu_factor(A)
        except (linalg.LinAlgError, ValueError) as exc:  # pragma: no cover
            raise NumericError(f"factorization failed: {exc}") from exc
        rcond = _rcond(self.lu, A)
        self.condition = 1.0 / rcond if rcond > 0 else math.inf
        if not np.isfinite(self.condition) or rcond < 1e-14:
            raise NumericError(f"solve block is singular (condition estimate {self.condition:.3g})")

    def solve(self, g):
        g = np.asarray(g, dtype=float).ravel()
        if g.size != self.mask.size:
            raise DomainError("data does not match the lattice")
        u = g.copy()
        u[self.mask] = 0.0
        u[self.mask] = linalg.lu_solve(self.lu, -(self.A_ext @ g[~self.mask]))
        res = self.rows @ u
        gmax = float(np.max(np.abs(g)))
        residual = float(np.max(np.abs(res))) if res.size else 0.0
        if gmax > 0 and residual > RESIDUAL_TOL * gmax:
            # one step of iterative refinement
            u[self.mask] -= linalg.lu_solve(self.lu, res)
            residual = float(np.max(np.abs(self.rows @ u)))
        return u, residual


def _rcond(lu, A):
    anorm = float(np.max(np.sum(np.abs(A), axis=0)))
    gecon = linalg.get_lapack_funcs("gecon", (lu[0],))
    rcond, info = gecon(lu[0], anorm, norm="1")
    return float(rcond) if info == 0 else 0.0


def solve_dirichlet(mat, mask, g):
    """Solve with a full matrix (n x n) or its solve-set rows (|mask| x n); returns (u, residual)."""
    mask = np.asarray(mask, dtype=bool).ravel()
    mat = np.asarray(mat, dtype=float)
    rows = mat[mask] if mat.shape[0] == mask.size else mat
    g = np.asarray(g, dtype=float).ravel()
    if np.any(g[~mask] < 0):
        raise DomainError("exterior data must be nonnegative")
    u, res = DirichletSolver(rows, mask).solve(g)
    return u, res


# ---------------------------------------------------------------------------
# data


def _bump(TT, XX, t0, x0, wt, wx, period):
    dt = TT - t0 if period is None else (TT - t0 + period / 2) % period - period / 2
    rr = (dt / wt) ** 2 + ((XX - x0) / wx) ** 2
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(rr < 1, np.exp(-1.0 / np.maximum(1 - rr, 1e-300)), 0.0)


def _smoothstep(z):
    """C-infinity step: 0 for z <= 0, 1 for z >= 1."""
    z = np.clip(z, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(z > 0, np.exp(-1.0 / np.maximum(z, 1e-300)), 0.0)
        b = np.where(z < 1, np.exp(-1.0 / np.maximum(1 - z, 1e-300)), 0.0)
    return a / (a + b)


def _boundary_cutoff(TT, XX, x_tilde, r):
    """Smooth factor that vanishes on x >= x_tilde and on [-2,2] x B_2r(x_tilde).

    Equal to 1 once x <= x_tilde - r/2 and either |t| >= 5/2 or
    |x - x_tilde| >= 5r/2, so data stay smooth where they meet the
    solve set and the forced zeros.
    """
    side = _smoothstep((x_tilde - XX) / (0.5 * r))
    a = _smoothstep((np.abs(TT) - 2.0) / 0.5)
    b = _smoothstep((np.abs(XX - x_tilde) - 2 * r) / (0.5 * r))
    return side * (1.0 - (1.0 - a) * (1.0 - b))


def exterior_data(kind: str, rng, TT, XX, *, center, r, period, past=(-1.5, 0.0), reach=3.0):
    """Nonnegative smooth data on the lattice; the caller zeroes the solve set.

    bump     compactly supported C-infinity bump in the recent past
             (times in ``past``), centred within ``reach`` r of the centre;
    lateral  positive smooth field a + b cos^2(2 pi t / T + c), all times;
    clipped  random band-limited field, clipped at 0, windowed to the
             recent past and Gaussian-smoothed on a fixed auxiliary grid.
    Every parameter is drawn from ``rng`` before any lattice-dependent
    work, so the same trial is the same function on every lattice.
    """
    p0, p1 = past
    if kind == "bump":
        wt = rng.uniform(0.3, 0.5 * (p1 - p0))
        t0 = rng.uniform(p0 + wt, p1 - wt)
        x0 = center + rng.uniform(-reach, reach) * r
        wx = rng.uniform(0.75, 2.0) * r
        return _bump(TT, XX, t0, x0, wt, wx, period)
    if kind == "lateral":
        a, b, c = rng.uniform(0.5, 1.5, 3)
        return a + b * np.cos(2 * np.pi * TT / period + c) ** 2 + 0 * XX
    if kind == "clipped":
        n = 4
        amp = rng.standard_normal((n, n, 2)) / (1.0 + np.add.outer(np.arange(n), np.arange(n)))[:, :, None]
        shift = rng.uniform(0.2, 0.8)
        width = max(reach, 2.0) * r
        # clip and re-smooth on a fixed auxiliary grid, then interpolate
        ta = np.linspace(p0, p1, CLIP_GRID)
        xa = np.linspace(center - width, center + width, CLIP_GRID)
        A, X = np.meshgrid((ta - p0) / (p1 - p0), (xa - center + width) / (2 * width), indexing="ij")
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        ph = np.pi * (A[..., None, None] * i + X[..., None, None] * j)
        f = shift + np.sum(amp[..., 0] * np.cos(ph) + amp[..., 1] * np.sin(ph), axis=(-2, -1))
        f = np.maximum(f, 0.0) * _bump(A, X, 0.5, 0.5, 0.5, 0.5, None)
        sig = 0.08 * (CLIP_GRID - 1)
        f = ndimage.gaussian_filter(f, sigma=sig, mode="constant")
        interp = RegularGridInterpolator((ta, xa), f, bounds_error=False, fill_value=0.0)
        dt = (TT - p0) % period + p0
        return np.maximum(interp(np.stack([dt, XX], axis=-1)), 0.0)
    raise DomainError(f"unknown data kind {kind!r}")


# ---------------------------------------------------------------------------
# Holder quotients


def holder_estimate(values, TT, XX, K_mask, R_mask=None, *, norm_l2: float | None = None):
    """Fit a parabolic Holder exponent on K and report the seminorm.

    Quotients use d = max(|dx|, |dt|^(1/2)).  Bands are half-octaves
    [d0 2^(j/2), d0 2^((j+1)/2)) starting at the smallest pair distance; the
    exponent is the least-squares slope of log max|du| against log d with
    the two smallest bands dropped, and the seminorm is the largest
    quotient at that exponent.  A constant field returns (nan, 0).
    """
    K = np.asarray(K_mask, dtype=bool)
    if R_mask is not None:
        R = np.asarray(R_mask, dtype=bool)
        if np.any(K & ~R):
            raise DomainError("K must lie inside R")
        interior = ndimage.binary_erosion(R, structure=np.ones((3, 3), bool), border_value=0)
        if np.any(K & ~interior):
            raise DomainError("K touches the boundary of R")
    u = np.asarray(values, dtype=float).reshape(K.shape)[K]
    pts = np.stack([TT[K], XX[K]], axis=1)
    if u.size < 2 or np.ptp(u) == 0:
        return float("nan"), 0.0, {"bands": 0}
    dt = np.unique(np.diff(np.unique(pts[:, 0])))
    dx = np.unique(np.diff(np.unique(pts[:, 1])))
    d0 = min(float(np.sqrt(dt.min())) if dt.size else math.inf, float(dx.min()) if dx.size else math.inf)
    diam = max(float(np.sqrt(np.ptp(pts[:, 0]))), float(np.ptp(pts[:, 1])))
    nb = max(int(math.ceil(2 * math.log2(diam / d0))) + 1, 1)
    edges = d0 * 2.0 ** (np.arange(nb + 1) / 2.0)
    osc = holder_quotients(pts, u, 0.0, edges)
    use = np.arange(nb) >= 2
    use &= osc > 0
    if use.sum() >= 2:
        alpha = float(np.polyfit(np.log(edges[:-1][use]), np.log(osc[use]), 1)[0])
    else:
        alpha = float("nan")
    a_eval = alpha if np.isfinite(alpha) else 1.0
    semi = float(np.max(holder_quotients(pts, u, a_eval, edges)))
    info = {"bands": int(use.sum()), "edges": edges.tolist()}
    if norm_l2:
        info["seminorm_over_l2"] = semi / norm_l2
    return alpha, semi, info


# ---------------------------------------------------------------------------
# experiments


@dataclass
class HarnackConfig:
    kind: str = "interval_dirichlet"
    params: dict = field(default_factory=dict)
    s: float = 0.5
    resolutions: tuple = ((64, 31), (128, 63))
    T: float = 4.0
    center: float = math.pi / 2
    r: float = math.pi / 8
    trials: int = 100
    seed: int = 0
    data_kinds: tuple = ("bump", "lateral", "clipped")
    transfer: str | None = None
    t0_values: tuple = (1.25, 1.5, 1.75)


@dataclass
class TrialResult:
    trial: int
    resolution: str
    data_kind: str
    ratio: float
    min_interior: float  # min over the solve set, relative to ||g||_inf
    violation: bool
    alpha_fit: float
    seminorm: float
    seminorm_over_l2: float
    residual: float
    transferred_ratio: float = float("nan")


@dataclass
class HarnackReport:
    sup_Rminus: float
    inf_Rplus: float
    ratio: float  # ensemble max over the finest resolution
    min_interior: float
    holder_alpha: float
    holder_seminorm: float
    trial_metadata: dict
    label: str = "empirical ratio"

    def as_dict(self):
        return asdict(self)


def _eigensystem(cfg: HarnackConfig, N: int) -> EigenSystem:
    spec = operator_spec(cfg.kind, **cfg.params)
    return build_eigensystem(spec, modes=N, grid_size=N, allow_full=True)


def _ratio(sup, inf):
    if sup == 0 and inf == 0:
        return float("nan")  # degenerate 0/0 sentinel
    if inf <= 0:
        return math.inf
    return sup / inf


def _trial_rng(seed, trial):
    return np.random.default_rng([int(seed), int(trial)])


def harnack_experiment(cfg: HarnackConfig):
    """Interior Harnack ensemble on two resolutions; returns (report, trial rows)."""
    rows_out = []
    per_res = {}
    transfer_dev = 0.0
    for M, N in cfg.resolutions:
        es = _eigensystem(cfg, N)
        tg = TimeGrid(M, cfg.T)
        geo = CylinderGeometry.build(tg, es, cfg.center, cfg.r)
        solver = DirichletSolver(assemble_hs_matrix(es, tg, cfg.s, rows=geo.R.ravel()), geo.R)
        tsolver = tmap = None
        if cfg.transfer and (M, N) == tuple(cfg.resolutions[0]):
            tsolver, tmap = _transferred_solver(cfg, es, tg, geo)
        res_name = f"{M}x{N}"
        stats = []
        for k in range(cfg.trials):
            kind = cfg.data_kinds[k % len(cfg.data_kinds)]
            rng = _trial_rng(cfg.seed, k)
            g = exterior_data(kind, rng, geo.TT, geo.XX, center=cfg.center, r=cfg.r, period=cfg.T).ravel()
            g[geo.R.ravel()] = 0.0
            u, resid = solver.solve(g)
            gmax = float(np.max(np.abs(g)))
            sup = float(np.max(u[geo.R_minus.ravel()]))
            inf = float(np.min(u[geo.R_plus.ravel()]))
            ratio = _ratio(sup, inf)
            mn = float(np.min(u[geo.R.ravel()])) / gmax if gmax > 0 else 0.0
            l2 = math.sqrt(tg.dt * float(np.sum(u.reshape(M, N) ** 2 * es.w)))
            alpha, semi, info = holder_estimate(u, geo.TT, geo.XX, geo.K, geo.R, norm_l2=l2)
            tr = TrialResult(
                k, res_name, kind, ratio, mn, bool(mn < -NONNEG_TOL), alpha, semi, info.get("seminorm_over_l2", 0.0), resid / gmax if gmax else 0.0
            )
            if tsolver is not None:
                ub, _ = tsolver.solve((g.reshape(M, N) / tmap.m).ravel())
                back = (ub.reshape(M, N) * tmap.m).ravel()
                tr.transferred_ratio = _ratio(float(np.max(back[geo.R_minus.ravel()])), float(np.min(back[geo.R_plus.ravel()])))
                if np.isfinite(ratio):
                    transfer_dev = max(transfer_dev, abs(tr.transferred_ratio - ratio) / abs(ratio))
            stats.append((sup, inf))
            rows_out.append(tr)
        per_res[res_name] = {"condition": solver.condition, "stats": stats}
    return _summarize(cfg, rows_out, per_res, transfer_dev), rows_out


def _transferred_solver(cfg, es, tg, geo):
    from .transference import bind, builtin_maps, transferred_eigensystem

    recipe = builtin_maps()[cfg.transfer]
    tmap = bind(recipe, es)
    if not tmap.keep.all():
        raise DomainError("transferred harness run needs a map without trimmed nodes")
    es_bar = transferred_eigensystem(es, tmap)
    return DirichletSolver(assemble_hs_matrix(es_bar, tg, cfg.s, rows=geo.R.ravel()), geo.R), tmap


def _finite_max(vals):
    v = [x for x in vals if not math.isnan(x)]
    return max(v) if v else float("nan")


def _summarize(cfg, rows, per_res, transfer_dev):
    names = [f"{M}x{N}" for M, N in cfg.resolutions]
    ens = {n: _finite_max([t.ratio for t in rows if t.resolution == n]) for n in names}
    finite = all(math.isfinite(v) for v in ens.values())
    vals = list(ens.values())
    stability = max(vals) / min(vals) if finite and min(vals) > 0 else math.inf
    fine = [t for t in rows if t.resolution == names[-1]]
    best = max((t for t in fine if math.isfinite(t.ratio)), key=lambda t: t.ratio, default=None)
    sup_inf = per_res[names[-1]]["stats"][best.trial] if best else (float("nan"), float("nan"))
    alphas = [t.alpha_fit for t in fine if math.isfinite(t.alpha_fit)]
    meta = {
        "kind": cfg.kind,
        "params": cfg.params,
        "s": cfg.s,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "resolutions": names,
        "ensemble_max_ratio": ens,
        "refinement_factor": stability,
        "violations": {n: int(sum(t.violation for t in rows if t.resolution == n)) for n in names},
        "violation_fraction": float(np.mean([t.violation for t in rows])),
        "min_interior_by_resolution": {n: min(t.min_interior for t in rows if t.resolution == n) for n in names},
        "max_residual": max(t.residual for t in rows),
        "seminorm_over_l2_max": {n: max(t.seminorm_over_l2 for t in rows if t.resolution == n) for n in names},
        "condition": {n: per_res[n]["condition"] for n in names},
    }
    if cfg.transfer:
        meta["transfer"] = cfg.transfer
        meta["transfer_max_relative_deviation"] = transfer_dev
    return HarnackReport(
        sup_Rminus=float(sup_inf[0]),
        inf_Rplus=float(sup_inf[1]),
        ratio=ens[names[-1]],
        min_interior=min(t.min_interior for t in rows),
        holder_alpha=float(np.median(alphas)) if alphas else float("nan"),
        holder_seminorm=max(t.seminorm for t in fine),
        trial_metadata=meta,
    )


def boundary_harnack_experiment(cfg: HarnackConfig):
    """Boundary Harnack ensemble; returns (report dict, trial rows).

    The reported quantity per trial is sup over (-1,1) x (Omega_0 n B_r)
    divided by u(t0, x0).  The ensemble maximum is computed for every t0 in
    ``cfg.t0_values`` and for both resolutions; the first t0 is primary.
    """
    rows_out = []
    ens = {}
    for M, N in cfg.resolutions:
        es = _eigensystem(cfg, N)
        tg = TimeGrid(M, cfg.T)
        res_name = f"{M}x{N}"
        for t0 in cfg.t0_values:
            geo = BoundaryGeometry.build(tg, es, cfg.center, cfg.r, t0)
            if t0 == cfg.t0_values[0]:
                solver = DirichletSolver(assemble_hs_matrix(es, tg, cfg.s, rows=geo.solve.ravel()), geo.solve)
            vals = []
            for k in range(cfg.trials):
                kind = cfg.data_kinds[k % len(cfg.data_kinds)]
                rng = _trial_rng(cfg.seed, k)
                g = exterior_data(kind, rng, geo.TT, geo.XX, center=cfg.center - 2.25 * cfg.r, r=cfg.r, period=cfg.T, past=BOUNDARY_WINDOW, reach=1.25)
                g = (g * _boundary_cutoff(geo.TT, geo.XX, cfg.center, cfg.r)).ravel()
                g[geo.solve.ravel() | geo.zero.ravel()] = 0.0
                u, resid = solver.solve(g)
                gmax = float(np.max(np.abs(g)))
                sup = float(np.max(u[geo.sup.ravel()]))
                ref = float(u[geo.ref])
                ratio = _ratio(sup, ref)
                mn = float(np.min(u[geo.solve.ravel()])) / gmax if gmax > 0 else 0.0
                vals.append(ratio)
                if t0 == cfg.t0_values[0]:
                    rows_out.append(
                        TrialResult(k, res_name, kind, ratio, mn, bool(mn < -NONNEG_TOL), float("nan"), float("nan"), float("nan"), resid / gmax if gmax else 0.0)
                    )
            ens[(res_name, t0)] = _finite_max(vals)
    names = [f"{M}x{N}" for M, N in cfg.resolutions]
    prim = [ens[(n, cfg.t0_values[0])] for n in names]
    finite = all(math.isfinite(v) for v in prim)
    report = {
        "label": "empirical ratio",
        "kind": cfg.kind,
        "s": cfg.s,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "ensemble_max_ratio": {n: ens[(n, cfg.t0_values[0])] for n in names},
        "refinement_factor": max(prim) / min(prim) if finite and min(prim) > 0 else math.inf,
        "t0_trend": {f"{t0:g}": ens[(names[-1], t0)] for t0 in cfg.t0_values},
        "violations": {n: int(sum(t.violation for t in rows_out if t.resolution == n)) for n in names},
        "max_residual": max(t.residual for t in rows_out),
        "forced_zero_convention": "exact zeros on (-2,2) x ((Omega minus Omega_0) n B_2r)",
    }
    return report, rows_out
