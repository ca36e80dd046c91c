"""Command-line front end: parameter sweeps, figure presets and self-validation.

Usage::

    noneq-atomdyn rates    --config sweep.yaml [--out rates.csv] [--jobs 4]
    noneq-atomdyn steady   --preset fig8a --format json
    noneq-atomdyn dynamics --config dyn.yaml
    noneq-atomdyn sweep    --config sweep.yaml
    noneq-atomdyn figure   fig7 [--out fig7.csv]
    noneq-atomdyn validate

Exit codes: 0 success (failed rows are reported on stderr), 1 validation
failure, 2 configuration error, 3 every row failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .atom_dynamics import (
    DensityMatrix,
    LevelScheme,
    closest_thermal,
    lambda_rate_matrix,
    purity,
    three_level_evolve,
    three_level_steady,
    two_level_evolve,
    two_level_steady,
)
from .config import build_plan, load_preset, load_yaml, preset_names
from .constants import table_hash
from .errors import AtomDynError, ConfigError
from .quadrature import compute_factors
from .rates import transition_rates
from .slab_optics import Geometry

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_ALL_FAILED = 0, 1, 2, 3
JOBS_ENV = "NONEQ_ATOMDYN_JOBS"
STEADY_CHECK_TOL = 1e-8
OK = "ok"

RATE_COLS = ("alpha_W", "alpha_M", "n_eff", "T_eff", "gamma_down_over_gamma0",
             "gamma_up_over_gamma0", "quad_err")


# --------------------------------------------------------------------------
# column layout


def _base_cols(plan):
    w = ("omega",) if plan.scheme == "two_level" else ("omega31", "omega32")
    return w + ("z", "delta", "T_M", "T_W")


def columns(plan):
    base = _base_cols(plan)
    lam = plan.scheme == "lambda"
    pops = ("rho11", "rho22", "rho33") if lam else ("rho11", "rho22")
    if plan.command == "rates":
        head = ("transition", "omega") if lam else ("omega",)
        return head + ("z", "delta", "T_M", "T_W") + RATE_COLS + ("status",)
    if plan.command == "steady":
        teff = ("T_eff31", "T_eff32") if lam else ("T_eff",)
        return base + pops + ("purity", "ratio_22_11") + teff + ("T_closest", "distance", "status")
    if plan.command == "sweep":
        rates = (tuple(f"{c}_31" for c in RATE_COLS) + tuple(f"{c}_32" for c in RATE_COLS)
                 if lam else RATE_COLS)
        return base + rates + pops + ("purity", "ratio_22_11", "T_closest", "distance", "status")
    coh = (("re_rho12", "im_rho12", "re_rho13", "im_rho13", "re_rho23", "im_rho23")
           if lam else ("re_rho12", "im_rho12"))
    return base + ("t",) + pops + coh + ("status",)


# --------------------------------------------------------------------------
# per-point evaluation (runs in worker processes)


def _geometry(plan, z, delta):
    return Geometry.half_space(z) if plan.semi_infinite else Geometry(z, delta)


def _rate_values(r):
    return {
        "alpha_W": r.alpha_W,
        "alpha_M": r.alpha_M,
        "n_eff": r.n_eff,
        "T_eff": r.T_eff,
        "gamma_down_over_gamma0": r.gamma_down / r.gamma0,
        "gamma_up_over_gamma0": r.gamma_up / r.gamma0,
        "quad_err": r.quad_error,
    }


def _initial(plan):
    spec, dim = plan.initial_state, plan.dim
    if spec == "ground":
        return DensityMatrix.basis(dim, 0)
    if spec == "excited":
        return DensityMatrix.basis(dim, dim - 1)
    if spec == "mixed":
        return DensityMatrix.maximally_mixed(dim)
    key, vals = spec
    if key == "populations":
        return DensityMatrix.from_populations(vals)
    return DensityMatrix.pure(vals)


def _slowest_rate(plan, rs):
    if plan.scheme == "two_level":
        return rs[0].gamma_total
    lam = np.abs(np.linalg.eigvals(lambda_rate_matrix(*rs)))
    nz = lam[lam > 1e-12 * lam.max()]
    coh = [0.5 * (rs[0].gamma_up + rs[1].gamma_up)]
    return float(min(nz.min(), *coh)) if nz.size else 0.0


def _point_rows(plan, point):
    _, omegas, z, delta = point
    base_geo = {"z": z, "delta": delta}
    geom = _geometry(plan, z, delta)
    factors, fail = [], None
    for w in omegas:
        try:
            factors.append(compute_factors(w, geom, plan.model, plan.tol))
        except AtomDynError as exc:
            fail = type(exc).__name__
            break

    rows = []
    for env in plan.temperatures:
        head = dict(base_geo, T_M=env.T_M, T_W=env.T_W)
        if plan.scheme == "two_level":
            head["omega"] = omegas[0]
        else:
            head["omega31"], head["omega32"] = omegas
        rs, status = [], fail
        if status is None:
            try:
                rs = [transition_rates(w, plan.dipole, geom, plan.model, env, factors=f)
                      for w, f in zip(omegas, factors)]
            except AtomDynError as exc:
                status = type(exc).__name__
        try:
            rows.extend(_command_rows(plan, head, omegas, rs, status))
        except AtomDynError as exc:
            rows.extend(_command_rows(plan, head, omegas, [], type(exc).__name__))
    return rows


def _steady(plan, omegas, rs):
    if plan.scheme == "two_level":
        rho = two_level_steady(rs[0])
        scheme = LevelScheme.two_level(omegas[0])
    else:
        rho = three_level_steady(*rs)
        scheme = LevelScheme.lambda_scheme(*omegas)
    p = rho.populations
    t_c, dist = closest_thermal(rho, scheme)
    vals = {f"rho{i + 1}{i + 1}": x for i, x in enumerate(p)}
    vals.update(purity=purity(rho), ratio_22_11=p[1] / p[0] if p[0] > 0 else math.inf,
                T_closest=t_c, distance=dist)
    return rho, vals


def _command_rows(plan, head, omegas, rs, status):
    cmd = plan.command
    if cmd == "rates":
        if plan.scheme == "two_level":
            return [dict(head, **(_rate_values(rs[0]) if not status else {}), status=status or OK)]
        out = []
        for k, (label, w) in enumerate(zip(("31", "32"), omegas)):
            row = {c: head[c] for c in ("z", "delta", "T_M", "T_W")}
            row.update(transition=label, omega=w)
            if not status:
                row.update(_rate_values(rs[k]))
            out.append(dict(row, status=status or OK))
        return out
    if status:
        if cmd == "dynamics":
            return [dict(head, t=t, status=status) for t in plan.times]
        return [dict(head, status=status)]
    if cmd == "steady":
        _, vals = _steady(plan, omegas, rs)
        if plan.scheme == "two_level":
            vals["T_eff"] = rs[0].T_eff
        else:
            vals["T_eff31"], vals["T_eff32"] = rs[0].T_eff, rs[1].T_eff
        return [dict(head, **vals, status=OK)]
    if cmd == "sweep":
        _, vals = _steady(plan, omegas, rs)
        if plan.scheme == "two_level":
            vals.update(_rate_values(rs[0]))
        else:
            for suffix, r in zip(("31", "32"), rs):
                vals.update({f"{k}_{suffix}": v for k, v in _rate_values(r).items()})
        return [dict(head, **vals, status=OK)]
    return _dynamics_rows(plan, head, rs)


def _dynamics_rows(plan, head, rs):
    rho0 = _initial(plan)
    rows, last = [], None
    for t in plan.times:
        if plan.scheme == "two_level":
            rho = two_level_evolve(rho0, t, rs[0])
            pairs = ((0, 1),)
        else:
            rho = three_level_evolve(rho0, t, *rs)
            pairs = ((0, 1), (0, 2), (1, 2))
        row = dict(head, t=t)
        row.update({f"rho{i + 1}{i + 1}": x for i, x in enumerate(rho.populations)})
        for i, j in pairs:
            row[f"re_rho{i + 1}{j + 1}"] = rho[i, j].real
            row[f"im_rho{i + 1}{j + 1}"] = rho[i, j].imag
        row["status"] = OK
        rows.append(row)
        last = rho
    slow = _slowest_rate(plan, rs)
    if slow > 0 and plan.times[-1] >= 50.0 / slow:
        steady = two_level_steady(rs[0]) if plan.scheme == "two_level" else three_level_steady(*rs)
        if np.max(np.abs(last.data - steady.data)) > STEADY_CHECK_TOL:
            rows[-1]["status"] = "steady_mismatch"
    return rows


def _task(args):
    plan, point = args
    return point[0], _point_rows(plan, point)


def run_plan(plan, jobs=1):
    """Evaluate every grid point; rows come back in grid order whatever ``jobs`` is."""
    points = plan.points()
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_task, [(plan, p) for p in points], chunksize=1))
    else:
        results = [_task((plan, p)) for p in points]
    results.sort(key=lambda r: r[0])
    return [row for _, rows in results for row in rows]


# --------------------------------------------------------------------------
# emission


def _fmt(x):
    if isinstance(x, str):
        return x
    if x is None:
        return "nan"
    return format(float(x), ".17g")


def metadata(plan):
    return {
        "program": f"noneq-atomdyn {__version__}",
        "command": plan.command,
        "constants_sha256": table_hash(),
        "config": plan.echo,
    }


def render_csv(plan, rows):
    meta = metadata(plan)
    buf = io.StringIO()
    for key in ("program", "command", "constants_sha256"):
        buf.write(f"# {key}: {meta[key]}\n")
    buf.write(f"# config: {json.dumps(meta['config'], sort_keys=True, separators=(',', ':'))}\n")
    cols = columns(plan)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def _json_value(x):
    if isinstance(x, str):
        return x
    if x is None or not math.isfinite(x):
        return None if x is None or math.isnan(x) else ("inf" if x > 0 else "-inf")
    return float(x)


def render_json(plan, rows):
    cols = columns(plan)
    body = {
        "metadata": metadata(plan),
        "rows": [{c: _json_value(row.get(c)) for c in cols} for row in rows],
    }
    return json.dumps(body, indent=1, sort_keys=False, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# argument handling


def _jobs(cli_value, plan):
    if cli_value is not None:
        if cli_value < 1:
            raise ConfigError("--jobs must be >= 1")
        return cli_value
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{JOBS_ENV}={env!r} is not an integer") from None
        if n < 1:
            raise ConfigError(f"{JOBS_ENV} must be >= 1")
        return n
    return plan.jobs or 1


def _raw_config(args):
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.preset:
        return load_preset(args.preset)
    if args.config:
        return load_yaml(args.config)
    raise ConfigError("a --config file or --preset name is required")


def _emit(plan, rows, args):
    fmt = args.format or plan.output_format
    text = render_json(plan, rows) if fmt == "json" else render_csv(plan, rows)
    path = args.out or plan.output_path
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run(args, command):
    raw = _raw_config(args)
    plan = build_plan(raw, command=command)
    rows = run_plan(plan, _jobs(args.jobs, plan))
    failed = sum(1 for r in rows if r["status"] != OK)
    _emit(plan, rows, args)
    if failed:
        kinds = sorted({r["status"] for r in rows if r["status"] != OK})
        print(f"warning: {failed}/{len(rows)} rows failed ({', '.join(kinds)})", file=sys.stderr)
    if rows and failed == len(rows):
        return EXIT_ALL_FAILED
    return EXIT_OK


def _cmd_figure(args):
    if args.list:
        print("\n".join(preset_names()))
        return EXIT_OK
    name = args.name or args.preset
    if not name:
        raise ConfigError("figure needs a preset name (see --list)")
    args.preset, args.config = name, None
    raw = load_preset(name)
    cmd = raw.get("command") if isinstance(raw, dict) else None
    return _run(args, cmd)


def _cmd_validate(args):
    from .validation import format_report, parse_overrides, run_checks

    overrides = parse_overrides(args.inject_constant or [])
    results = run_checks(overrides)
    print(format_report(results), end="")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


def _add_run_options(p, config=True):
    if config:
        p.add_argument("--config", help="YAML sweep configuration")
    p.add_argument("--preset", help="named figure preset instead of --config")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--jobs", type=int, help=f"worker processes (fallback: ${JOBS_ENV})")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default: csv)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="noneq-atomdyn",
        description="Emitter dynamics near a slab out of thermal equilibrium.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("rates", "transition rates and effective temperatures on a grid"),
        ("steady", "steady states, purity and closest thermal state on a grid"),
        ("dynamics", "density-matrix time series"),
        ("sweep", "rates and steady states together"),
    ):
        _add_run_options(sub.add_parser(name, help=text))
    fig = sub.add_parser("figure", help="run a named figure preset")
    fig.add_argument("name", nargs="?", help="preset name")
    fig.add_argument("--list", action="store_true", help="list available presets")
    _add_run_options(fig, config=False)
    val = sub.add_parser("validate", help="run the built-in invariant checks")
    # test hook: NAME=VALUE replaces a physical constant for the duration of the run
    val.add_argument("--inject-constant", action="append", help=argparse.SUPPRESS)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "figure":
            return _cmd_figure(args)
        return _run(args, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
