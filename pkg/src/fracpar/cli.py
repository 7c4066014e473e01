"""Command-line entry point ``fracpar``."""

from __future__ import annotations

import csv
import json
import sys

import click
import numpy as np

from .errors import AccuracyError, DomainError, NumericError, ResourceError
from .io import _json_safe

_ERRORS = (DomainError, AccuracyError, NumericError, ResourceError, OSError)


def _fail(exc):
    click.echo(f"error: {exc}", err=True)
    sys.exit(2)


def _dump(report, path):
    text = json.dumps(_json_safe(report), indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        click.echo(text, nl=False)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _floats(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from None


@click.group()
@click.version_option(package_name="artifact", prog_name="fracpar")
def main():
    """Fractional powers of parabolic operators: checks and experiments."""


@main.command("specfun-selftest", hidden=True)
@click.option("--out", "out", default="-", help="CSV path (default: stdout).")
@click.option("--s", "s_values", default="0.1,0.25,0.5,0.75,0.9", help="Comma-separated orders.")
def specfun_selftest(out, s_values):
    """Kernel invariant residuals on the test lattice as CSV."""
    from .acceptance import kernel_residuals

    fh = sys.stdout if out == "-" else open(out, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("s", "y", "re_lam", "im_lam", "check_name", "residual"))
        for s in _floats(s_values):
            yy, ll, table = kernel_residuals(s)
            for name, arr in table.items():
                for y, lam, r in zip(yy.ravel(), ll.ravel(), arr.ravel()):
                    w.writerow((repr(s), repr(float(y)), repr(float(lam.real)), repr(float(lam.imag)), name, repr(float(r))))
    finally:
        if fh is not sys.stdout:
            fh.close()


def _matching_es(kind, path):
    """Eigensystem named on the command line, checked against the field sidecar."""
    from .io import eigensystem_for, sidecar_path

    meta = json.loads(sidecar_path(path).read_text())
    op = meta["operator"]
    if op["kind"] != kind:
        raise DomainError(f"field was written for operator {op['kind']!r}, not {kind!r}")
    return eigensystem_for(meta)


@main.command()
@click.option("--op", "kind", required=True, help="Operator kind.")
@click.option("--s", "s", type=float, required=True)
@click.option("--route", type=click.Choice(["multiplier", "semigroup", "master"]), default="multiplier")
@click.option("--in", "inp", required=True, help="Input field file.")
@click.option("--out", "out", required=True, help="Output field file (JSON report for --route master).")
@click.option("--against", default=None, help="Second field v for --route master.")
def apply(kind, s, route, inp, out, against):
    """Apply H^s to a field by the chosen route.

    The master route evaluates the bilinear form <H^s u, v> and writes a
    JSON report; it needs --against.
    """
    from .fracop import analyze, apply_fractional, fractional_via_semigroup, master_form, synthesize
    from .io import load_field, save_field

    try:
        es = _matching_es(kind, inp)
        u = load_field(inp, es)
        if route == "multiplier":
            save_field(synthesize(apply_fractional(analyze(u), s)), out, route=route, s=s)
        elif route == "semigroup":
            v, err = fractional_via_semigroup(u, s)
            save_field(v, out, route=route, s=s, error_estimate=err)
        else:
            if against is None:
                raise click.UsageError("--route master needs --against <field-file>")
            v = load_field(against, es)
            val, err = master_form(u, v, s)
            _dump({"route": "master", "s": s, "value": val, "error_estimate": err}, out)
    except _ERRORS as exc:
        _fail(exc)


@main.command()
@click.option("--s", "s", type=float, required=True)
@click.option("--op", "kind", required=True)
@click.option("--in", "inp", required=True)
@click.option("--ygrid", default="1e-3,1.25,50", help="y_min,growth,L")
@click.option("--out", "out", required=True)
def extend(s, kind, inp, ygrid, out):
    """Extension U(t, x, y) of a field on a geometric y grid."""
    from .extension import YGrid, extend as _extend
    from .fracop import analyze
    from .io import load_field, save_extension

    try:
        y_min, growth, L = _floats(ygrid)
        yg = YGrid(y_min, growth, int(L))
        u = load_field(inp, _matching_es(kind, inp))
        ef = _extend(analyze(u), s, yg)
        save_extension(u, ef.values, s, yg, out)
    except _ERRORS as exc:
        _fail(exc)


@main.command("trace-check")
@click.option("--ext", "ext", required=True, help="Extension file.")
@click.option("--report", default="-")
def trace_check(ext, report):
    """Recover both trace constants and the PDE residual from an extension file."""
    from .extension import YGrid, extend as _extend, neumann_trace, pde_residual, quotient_trace
    from .fracop import analyze
    from .io import load_extension

    try:
        base, rows, meta = load_extension(ext)
        yg = YGrid(**meta["ygrid"])
        ef = _extend(analyze(base), meta["s"], yg)
        stored = float(np.max(np.abs(ef.values - rows))) / max(float(np.max(np.abs(rows))), 1e-300)
        out = {"s": meta["s"], "ygrid": meta["ygrid"], "stored_rows_relative_mismatch": stored}
        for name, fn in (("neumann", neumann_trace), ("quotient", quotient_trace)):
            tr = fn(ef)
            out[name] = {"constant": tr.constant, "max_deviation": tr.max_deviation, "extrapolation_error": tr.extrapolation_error}
        out["pde_residual"] = pde_residual(ef)
        _dump(out, report)
    except _ERRORS as exc:
        _fail(exc)


@main.command("transfer-check")
@click.option("--pair", required=True, help="Catalog map name.")
@click.option("--s", "s", type=float, required=True)
@click.option("--trials", type=int, default=20)
@click.option("--report", default="-")
@click.option("--seed", type=int, default=0)
def transfer_check(pair, s, trials, report, seed):
    """Intertwining discrepancy of one catalog map."""
    from .bases import build_eigensystem
    from .transference import bind, builtin_maps, verify_intertwine

    try:
        cat = builtin_maps()
        if pair not in cat:
            raise DomainError(f"unknown map {pair!r}; choose from {', '.join(cat)}")
        recipe = cat[pair]
        es = build_eigensystem(recipe.source_spec())
        tm = bind(recipe, es)
        out = verify_intertwine(es, tm, s, trials=trials, seed=seed)
        out["isometry_error"] = tm.isometry_error()
        out["recipe"] = recipe.describe()
        _dump(out, report)
    except _ERRORS as exc:
        _fail(exc)


def _run(config, out_dir, only, seed):
    from .runner import run_config

    res = run_config(config, out_dir, only=only, seed=seed, log=lambda m: click.echo(m, err=True))
    for f in res.failures:
        click.echo(f"FAIL {f}", err=True)
    if res.exit_code == 0:
        click.echo(f"all checks passed; artifacts in {res.out_dir}", err=True)
    sys.exit(res.exit_code)


@main.command()
@click.option("--config", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default=".", show_default=True)
@click.option("--seed", type=int, default=None, help="Override the config seed.")
def harnack(config, out_dir, seed):
    """Interior Harnack ensembles declared in a config."""
    _run(config, out_dir, "harnack", seed)


@main.command("boundary-harnack")
@click.option("--config", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", default=".", show_default=True)
@click.option("--seed", type=int, default=None)
def boundary_harnack(config, out_dir, seed):
    """Boundary Harnack ensembles declared in a config."""
    _run(config, out_dir, "boundary_harnack", seed)


@main.command("master-check")
@click.option("--s", "s_values", default="0.25,0.5,0.75")
@click.option("--pairs", type=int, default=1)
@click.option("--seed", type=int, default=0)
@click.option("--report", default="-")
def master_check(s_values, pairs, seed, report):
    """Master-equation form against the spectral pairing (interval_dirichlet, K=16, M=32)."""
    from .acceptance import check_master

    checks = check_master(_floats(s_values), pairs=pairs, seed=seed)
    _dump([{"name": c.name, "value": c.value, "tolerance": c.tolerance, "passed": c.passed, **c.detail} for c in checks], report)
    sys.exit(0 if all(c.passed for c in checks) else 1)


@main.command()
@click.option("--config", default=None, type=click.Path(exists=True, dir_okay=False), help="Defaults to the bundled acceptance.cfg.")
@click.option("--out-dir", default="fracpar-acceptance", show_default=True)
@click.option("--seed", type=int, default=None)
def acceptance(config, out_dir, seed):
    """Run the full acceptance suite."""
    from .runner import bundled_config

    _run(config or bundled_config(), out_dir, None, seed)


if __name__ == "__main__":  # pragma: no cover
    main()
