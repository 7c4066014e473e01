"""Config-driven experiment runs.

A run config is an INI file.  ``[run]`` lists experiment section names;
each ``[experiment:<name>]`` section has a ``type`` and may override any
key of the global sections ``operator``, ``grids``, ``s-values``,
``geometry``, ``ensemble``, ``tolerances`` and ``seed``.

Outputs in the run directory:
  manifest.json  schema-versioned record of parameters, seeds, versions
                 and every check with its residual and tolerance;
  results.csv    one row per Harnack trial (deterministic given the seed);
  checks.csv     one row per check.
"""

from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass
import json
import math
from pathlib import Path
import platform
import re
import time

import numpy as np
import scipy

from . import __version__, acceptance, kernels
from .errors import DomainError
from .harness import HarnackConfig
from .io import _json_safe

__all__ = ["ConfigError", "RunResult", "SCHEMA", "EXPERIMENT_TYPES", "load_config", "run_config", "bundled_config"]

SCHEMA = "fracpar.manifest/1"
GLOBAL_SECTIONS = ("operator", "grids", "s-values", "geometry", "ensemble", "tolerances", "seed")

_NUM = re.compile(r"^\s*(?:[-+]?(?:\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|pi)(?:\s*[*/]\s*(?:\d+\.?\d*(?:[eE][-+]?\d+)?|pi))*\s*$")


class ConfigError(ValueError):
    """Malformed run config; the message names the section and key."""


def _number(text: str, where: str) -> float:
    if not _NUM.match(text):
        raise ConfigError(f"{where}: expected a number (pi, * and / allowed), got {text!r}")
    tokens = re.split(r"\s*([*/])\s*", text.strip())
    val = math.pi if tokens[0] == "pi" else float(tokens[0])
    for op, tok in zip(tokens[1::2], tokens[2::2]):
        x = math.pi if tok == "pi" else float(tok)
        val = val * x if op == "*" else val / x
    return val


def _int(text, where):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{where}: expected an integer, got {text!r}") from None


def _list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _numbers(text, where):
    return tuple(_number(t, where) for t in _list(text))


def _resolutions(text, where):
    out = []
    for t in _list(text):
        m = re.fullmatch(r"(\d+)\s*x\s*(\d+)", t)
        if not m:
            raise ConfigError(f"{where}: resolution must look like MxN, got {t!r}")
        out.append((int(m.group(1)), int(m.group(2))))
    if not out:
        raise ConfigError(f"{where}: empty resolution list")
    return tuple(out)


# key -> (global section, parser)
KEYS = {
    "kind": ("operator", lambda t, w: t.strip()),
    "radius": ("operator", _number),
    "alpha": ("operator", _number),
    "lam": ("operator", _number),
    "shift": ("operator", _number),
    "resolutions": ("grids", _resolutions),
    "period": ("grids", _number),
    "values": ("s-values", _numbers),
    "center": ("geometry", _number),
    "r": ("geometry", _number),
    "t0": ("geometry", _numbers),
    "trials": ("ensemble", _int),
    "data": ("ensemble", lambda t, w: tuple(_list(t))),
    "transfer": ("ensemble", lambda t, w: t.strip() or None),
    "refinement": ("tolerances", _number),
    "residual": ("tolerances", _number),
    "value": ("seed", _int),
}
EXPERIMENT_TYPES = ("branch", "kernel", "routes", "master", "traces", "extension", "transference", "harnack", "boundary_harnack")


@dataclass
class Experiment:
    name: str
    type: str
    options: dict


@dataclass
class RunResult:
    exit_code: int
    manifest: dict
    failures: list
    out_dir: Path


def bundled_config() -> Path:
    return Path(__file__).with_name("data") / "acceptance.cfg"


def load_config(path, *, only: str | None = None) -> tuple[dict, list]:
    """Parse and validate; returns (globals, experiments)."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    for sec in cp.sections():
        if sec not in GLOBAL_SECTIONS and sec != "run" and not sec.startswith("experiment:"):
            raise ConfigError(f"[{sec}]: unknown section")
    glob = {}
    for sec in GLOBAL_SECTIONS:
        if not cp.has_section(sec):
            continue
        for key, text in cp.items(sec):
            if key not in KEYS or KEYS[key][0] != sec:
                raise ConfigError(f"[{sec}] {key}: unknown key")
            glob[key] = KEYS[key][1](text, f"[{sec}] {key}")
    names = _list(cp.get("run", "experiments", fallback="")) if cp.has_section("run") else []
    if cp.has_section("run"):
        for key in cp.options("run"):
            if key not in ("experiments", "seed"):
                raise ConfigError(f"[run] {key}: unknown key")
        if cp.has_option("run", "seed"):
            glob["value"] = _int(cp.get("run", "seed"), "[run] seed")
    if not cp.has_section("run") and only is not None:
        names = ["default"]
    exps = []
    for name in names:
        sec = f"experiment:{name}"
        if name == "default" and not cp.has_section(sec):
            exps.append(Experiment(name, only, {}))
            continue
        if not cp.has_section(sec):
            raise ConfigError(f"[run] experiments: no section [{sec}]")
        typ = cp.get(sec, "type", fallback=None)
        if typ not in EXPERIMENT_TYPES:
            raise ConfigError(f"[{sec}] type: expected one of {', '.join(EXPERIMENT_TYPES)}, got {typ!r}")
        opts = {}
        for key, text in cp.items(sec):
            if key == "type":
                continue
            if key not in KEYS:
                raise ConfigError(f"[{sec}] {key}: unknown key")
            opts[key] = KEYS[key][1](text, f"[{sec}] {key}")
        exps.append(Experiment(name, typ, opts))
    if only is not None:
        exps = [e for e in exps if e.type == only]
    return glob, exps


def _opt(exp, glob, key, default):
    if key in exp.options:
        return exp.options[key]
    return glob.get(key, default)


def _harnack_cfg(exp, glob, s):
    kind = _opt(exp, glob, "kind", "interval_dirichlet")
    params = {k: _opt(exp, glob, k, None) for k in ("radius", "alpha", "lam", "shift")}
    params = {k: v for k, v in params.items() if v is not None}
    boundary = exp.type == "boundary_harnack"
    cfg = HarnackConfig(
        kind=kind,
        params=params,
        s=s,
        resolutions=_opt(exp, glob, "resolutions", ((64, 31), (128, 63))),
        T=_opt(exp, glob, "period", 8.0 if boundary else 4.0),
        center=_opt(exp, glob, "center", math.pi / 2),
        r=_opt(exp, glob, "r", math.pi / 8),
        trials=_opt(exp, glob, "trials", 100),
        seed=_opt(exp, glob, "value", 0),
        data_kinds=_opt(exp, glob, "data", ("bump", "lateral", "clipped")),
        transfer=_opt(exp, glob, "transfer", None),
        t0_values=_opt(exp, glob, "t0", (1.25, 1.5, 1.75)),
    )
    return cfg


def _run_experiment(exp, glob):
    seed = _opt(exp, glob, "value", 0)
    sv = _opt(exp, glob, "values", None)
    kw = {} if sv is None else {"s_values": tuple(sv)}
    t = exp.type
    if t == "branch":
        return acceptance.check_branch(**kw), [], []
    if t == "kernel":
        return acceptance.check_kernel(**kw), [], []
    if t == "routes":
        kinds = _opt(exp, glob, "kind", None)
        extra = {"kinds": tuple(_list(kinds))} if kinds else {}
        return acceptance.check_routes(seed=seed, trials=_opt(exp, glob, "trials", 20), **extra, **kw), [], []
    if t == "master":
        return acceptance.check_master(seed=seed, **kw), [], []
    if t == "traces":
        return acceptance.check_traces(seed=seed, **kw), [], []
    if t == "extension":
        return acceptance.check_extension(seed=seed, **kw), [], []
    if t == "transference":
        return acceptance.check_transference(seed=seed, trials=_opt(exp, glob, "trials", 10), **kw), [], []
    s_values = tuple(sv) if sv is not None else (0.5,)
    cfgs = [_harnack_cfg(exp, glob, s) for s in s_values]
    interior, boundary = (cfgs, []) if t == "harnack" else ([], cfgs)
    checks, rows, reports = acceptance.check_harnack(interior, boundary)
    tol_ref = _opt(exp, glob, "refinement", 2.0)
    tol_res = _opt(exp, glob, "residual", 1e-9)
    for c in checks:
        if "refinement" in c.name and tol_ref != c.tolerance:
            c.tolerance, c.passed = tol_ref, c.value < tol_ref
        if "residual" in c.name and tol_res != c.tolerance:
            c.tolerance, c.passed = tol_res, c.value < tol_res
    return checks, rows, reports


RESULT_COLUMNS = (
    "experiment",
    "type",
    "seed",
    "s",
    "operator",
    "resolution",
    "trial",
    "data",
    "ratio",
    "min_interior",
    "violation",
    "alpha_fit",
    "seminorm",
    "seminorm_over_l2",
    "residual",
    "transferred_ratio",
)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_results(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for name, typ, cfg, t in rows:
            w.writerow(
                [
                    _fmt(x)
                    for x in (
                        name,
                        typ,
                        cfg.seed,
                        cfg.s,
                        cfg.kind,
                        t.resolution,
                        t.trial,
                        t.data_kind,
                        t.ratio,
                        t.min_interior,
                        t.violation,
                        t.alpha_fit,
                        t.seminorm,
                        t.seminorm_over_l2,
                        t.residual,
                        t.transferred_ratio,
                    )
                ]
            )


def _write_checks(path, checks):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("experiment", "criterion", "check", "value", "comparison", "tolerance", "passed"))
        for name, c in checks:
            w.writerow([_fmt(x) for x in (name, c.criterion, c.name, c.value, c.comparison, c.tolerance, c.passed)])


def _versions():
    return {"fracpar": __version__, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__, "kernel_backend": kernels.BACKEND}


def run_config(path, out_dir=None, *, only: str | None = None, seed: int | None = None, log=None) -> RunResult:
    """Run every experiment in the config and write the artifacts.

    Exit code 0 iff every check passes; 2 for a malformed config (no
    artifacts are written then).
    """
    log = log or (lambda msg: None)
    out_dir = Path(out_dir or ".")
    try:
        glob, exps = load_config(path, only=only)
    except ConfigError as exc:
        return RunResult(2, {}, [str(exc)], out_dir)
    if seed is not None:
        glob["value"] = int(seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema": SCHEMA,
        "config": str(path),
        "versions": _versions(),
        "seed": glob.get("value", 0),
        "globals": _json_safe(glob),
        "experiments": [],
    }
    all_checks, all_rows, failures = [], [], []
    for exp in exps:
        log(f"running {exp.name} ({exp.type})")
        t0 = time.perf_counter()
        try:
            checks, rows, reports = _run_experiment(exp, glob)
        except (DomainError, ArithmeticError, RuntimeError) as exc:
            failures.append(f"{exp.name}: {type(exc).__name__}: {exc}")
            manifest["experiments"].append({"name": exp.name, "type": exp.type, "error": str(exc)})
            continue
        elapsed = time.perf_counter() - t0
        for c in checks:
            all_checks.append((exp.name, c))
            if not c.passed:
                failures.append(f"{exp.name}: {c.name} = {c.value!r} fails {c.comparison} {c.tolerance!r}")
        all_rows.extend((exp.name, exp.type, cfg, t) for _, cfg, t in rows)
        manifest["experiments"].append(
            {
                "name": exp.name,
                "type": exp.type,
                "options": _json_safe(exp.options),
                "seconds": round(elapsed, 3),
                "checks": [_json_safe({"criterion": c.criterion, "name": c.name, "value": c.value, "comparison": c.comparison, "tolerance": c.tolerance, "passed": c.passed, "detail": c.detail}) for c in checks],
                "reports": [_json_safe({"type": typ, "s": cfg.s, "kind": cfg.kind, "report": rep}) for typ, cfg, rep in reports],
            }
        )
        log(f"  {sum(c.passed for c in checks)}/{len(checks)} checks passed in {elapsed:.1f}s")
    manifest["all_passed"] = not failures
    manifest["failures"] = failures
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_results(out_dir / "results.csv", all_rows)
    _write_checks(out_dir / "checks.csv", all_checks)
    return RunResult(0 if not failures else 1, manifest, failures, out_dir)
