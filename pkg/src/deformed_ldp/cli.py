"""Command-line front end. Exit codes: 0 ok, 2 bad input, 3 domain error."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import asdict

import click
import numpy as np

from . import prior_rates, rmt_lab, variational
from .errors import ComputeError, ConfigError
from .measure import AtomicMeasure, load_measure, measure_from_dict
from .rate import INFINITY, Branch, DeformedModel
from .freeconv import FreeConvContext


# -- formatting ----------------------------------------------------------------

def _num(v, precision):
    if v is INFINITY or (isinstance(v, float) and math.isinf(v) and v > 0):
        return "inf"
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        r = float(f"{float(v):.{precision}g}")
        if r.is_integer() and abs(r) < 1e15:
            return int(r)
        return r
    if isinstance(v, dict):
        return {k: _num(x, precision) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_num(x, precision) for x in v]
    return v


def _cell(v, precision):
    if v is INFINITY:
        return "inf"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.{precision}g}"
    return str(v)


def _emit(ctx, payload=None, rows=None, header=None):
    opts = ctx.obj
    p = opts["precision"]
    fmt = opts["format"]
    if rows is not None and fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v, p) for v in r])
        text = buf.getvalue()
    else:
        if rows is not None:
            payload = [dict(zip(header, r)) for r in rows]
        text = json.dumps(_num(payload, p), indent=None) + "\n"
    if opts["out"]:
        with open(opts["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- option parsing ------------------------------------------------------------

def parse_grid(text: str):
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise ConfigError(f"grid must look like min:max:count, got {text!r}") from None
    if count < 2 or hi < lo:
        raise ConfigError("grid needs count >= 2 and max >= min")
    return np.linspace(lo, hi, count)


def _measure(text) -> AtomicMeasure:
    if text is None:
        raise ConfigError("--measure is required")
    if text.lstrip().startswith("{"):
        try:
            return measure_from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad inline measure: {exc}") from None
    return load_measure(text)


def _model(measure, t, outlier) -> DeformedModel:
    nu = _measure(measure)
    return DeformedModel(nu, t, nu.support_edge if outlier is None else outlier)


common_model = [
    click.option("--measure", help="measure JSON file or inline JSON"),
    click.option("--t", "t", type=float, default=1.0, show_default=True),
    click.option("--outlier", type=float, default=None,
                 help="outlier position (default: support edge, no outlier)"),
]


def model_options(f):
    for opt in reversed(common_model):
        f = opt(f)
    return f


@click.group()
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None)
@click.option("--precision", type=int, default=12, show_default=True)
@click.pass_context
def cli(ctx, out, fmt, precision):
    """Smallest-eigenvalue large deviations for deformed GOE matrices."""
    ctx.obj = {"out": out, "format": fmt, "precision": precision}


def _fmt_default(ctx, default):
    if ctx.obj["format"] is None:
        ctx.obj["format"] = default


@cli.command()
@model_options
@click.option("--grid", required=True, help="min:max:count")
@click.pass_context
def rate(ctx, measure, t, outlier, grid):
    """Rate function on a grid. CSV columns: lambda, rate, branch."""
    _fmt_default(ctx, "csv")
    model = _model(measure, t, outlier)
    rows = []
    for x in parse_grid(grid):
        r = model.rate(x)
        if r is INFINITY:
            tag = "above-edge"
        elif model.gamma(x) == model.outlier and not model.no_outlier:
            tag = Branch.BBP.value
        else:
            tag = Branch.PULLED.value
        rows.append((x, r, tag))
    _emit(ctx, rows=rows, header=["lambda", "rate", "branch"])


@cli.command()
@model_options
@click.pass_context
def edge(ctx, measure, t, outlier):
    """Shock point and left edge of the convolved law."""
    _fmt_default(ctx, "json")
    fc = FreeConvContext(_measure(measure), t)
    _emit(ctx, {"shock_point": fc.shock_point, "edge": fc.edge})


@cli.command()
@model_options
@click.pass_context
def bbp(ctx, measure, t, outlier):
    """Outlier location, edge and limiting smallest eigenvalue."""
    _fmt_default(ctx, "json")
    model = _model(measure, t, outlier)
    rho = None if model.no_outlier else model.rho()
    _emit(ctx, {"rho": rho, "edge": model.ctx.edge,
                "ell_lambda": model.limit_smallest(),
                "regime": "bbp" if model.branch is Branch.BBP else "sticking",
                "shock_point": model.ctx.shock_point})


@cli.command()
@model_options
@click.option("--n", "n_points", type=int, default=4000, show_default=True)
@click.pass_context
def density(ctx, measure, t, outlier, n_points):
    """Density of the convolved law. CSV columns: x, density."""
    _fmt_default(ctx, "csv")
    xs, ds = FreeConvContext(_measure(measure), t).density_curve(n_points)
    _emit(ctx, rows=list(zip(xs.tolist(), ds.tolist())), header=["x", "density"])


@cli.command()
@model_options
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=50, show_default=True)
@click.pass_context
def fixedpoint(ctx, measure, t, outlier, lam, seed, restarts):
    """Residual of the variational fixed-point equation at one lambda."""
    _fmt_default(ctx, "json")
    model = _model(measure, t, outlier)
    r = variational.fixed_point_report(model, lam, restarts, seed)
    _emit(ctx, {"lambda": r.lam, "rate": r.rate, "residual": r.residual,
                "argmin_y": list(r.argmin_y), "phi_at_argmin": r.phi_at_argmin})


@cli.command()
@click.argument("which", type=click.Choice(["maida", "mckenna", "goe"]))
@click.option("--grid", required=True, help="min:max:count")
@click.option("--measure", default=None)
@click.option("--outlier", type=float, default=None)
@click.option("--t", "t", type=float, default=1.0)
@click.pass_context
def compare(ctx, which, grid, measure, outlier, t):
    """Earlier closed forms against the general rate.

    CSV columns: x, prior_value, rate_value, abs_diff."""
    _fmt_default(ctx, "csv")
    xs = parse_grid(grid)
    if which == "maida":
        if outlier is None:
            raise ConfigError("maida needs --outlier")
        model = DeformedModel(AtomicMeasure.dirac(0.0), 0.5, outlier)
        prior = lambda x: prior_rates.spiked_rate(outlier, x)
    elif which == "mckenna":
        nu = _measure(measure)
        model = DeformedModel(nu, 1.0, nu.support_edge)
        prior = lambda x: prior_rates.no_outlier_rate(nu, x)
    else:
        model = DeformedModel(AtomicMeasure.dirac(0.0), t, 0.0)
        prior = lambda x: prior_rates.goe_rate(x, t)
    rows = []
    for x in xs:
        a, b = prior(x), model.rate(x)
        diff = 0.0 if (a is INFINITY and b is INFINITY) else (
            INFINITY if INFINITY in (a, b) else abs(a - b))
        rows.append((x, a, b, diff))
    _emit(ctx, rows=rows, header=["x", "prior_value", "rate_value", "abs_diff"])


def _mc_options(f):
    f = click.option("--workers", type=int, default=1, show_default=True)(f)
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    f = click.option("--n", "n_samples", type=int, default=2000, show_default=True)(f)
    f = click.option("--N", "size", type=int, default=150, show_default=True)(f)
    return model_options(f)


@cli.command()
@_mc_options
@click.option("--x", "x", type=float, required=True)
@click.option("--window", type=float, default=None)
@click.pass_context
def mc(ctx, measure, t, outlier, size, n_samples, seed, workers, x, window):
    """Monte Carlo tail probability near x."""
    _fmt_default(ctx, "json")
    model = _model(measure, t, outlier)
    rep = rmt_lab.ldp_tail_estimate(model, size, x, window, n_samples, seed, workers)
    out = asdict(rep)
    out["rate"] = model.rate(x)
    _emit(ctx, out)


@cli.command()
@click.option("--N", "size", type=int, default=2000, show_default=True)
@click.option("--t", "t", type=float, default=1.0)
@click.pass_context
def selberg(ctx, size, t):
    """Normalizing-constant ratio against its limit."""
    _fmt_default(ctx, "json")
    _emit(ctx, {"N": size, "t": t,
                "log_partition": variational.selberg_log_partition(size, t),
                "ratio": variational.selberg_ratio(size, t),
                "limit": variational.c_t(t)})


@cli.command("dirichlet-check")
@_mc_options
@click.pass_context
def dirichlet_check(ctx, measure, t, outlier, size, n_samples, seed, workers):
    """Eigenvector block masses against the Dirichlet means."""
    _fmt_default(ctx, "json")
    model = _model(measure, t, outlier)
    _emit(ctx, rmt_lab.dirichlet_law_check(model, size, n_samples, seed, workers))


@cli.command()
@model_options
@click.option("--sizes", default="100,200,400", show_default=True)
@click.option("--n", "n_samples", type=int, default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.pass_context
def converge(ctx, measure, t, outlier, sizes, n_samples, seed, workers):
    """Mean smallest eigenvalue against its almost-sure limit."""
    _fmt_default(ctx, "json")
    try:
        ns = [int(s) for s in sizes.split(",")]
    except ValueError:
        raise ConfigError(f"bad --sizes {sizes!r}") from None
    model = _model(measure, t, outlier)
    reps = rmt_lab.convergence_check(model, ns, n_samples, seed, workers)
    _emit(ctx, [asdict(r) for r in reps])


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="deformed-ldp", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except ConfigError as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "kind": type(exc).__name__}) + "\n")
        return 2
    except ComputeError as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "kind": type(exc).__name__}) + "\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
