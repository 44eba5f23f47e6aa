"""Command-line interface: configuration handling, sweep orchestration,
and deterministic CSV/JSON emission over the library modules.

Subcommands: topology, eigen, equilibrium, critical-q, classify,
simulate, probe, sweep, figure.  All floats are printed with 17
significant digits so identical configs produce byte-identical output;
files are UTF-8 with Unix newlines.  Exit codes: 0 success, 1
computational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from driftlab.topology import BoundaryCase, StreamTopology, build_matrices
from driftlab.spectral import _as_profile, lambda1, lambda1_result
from driftlab.equilibrium import SpeciesParams, single_species_equilibrium
from driftlab.invasion import (
    InvaderNotEstablished,
    NoRoot,
    NotPersistentAtZeroAdvection,
    _lambda1_star_at,
    classify_point,
    d_star,
    q_star,
    q_star_derivative,
)
from driftlab.dynamics import (
    CompetitionScenario,
    bistability_probe,
    simulate_competition,
    simulate_single,
)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def _emit(lines, out=None):
    if out is None:
        for line in lines:
            sys.stdout.write(line + "\n")
    else:
        _write_lines(out, lines)


class UsageError(Exception):
    """Invalid configuration value; reported with the field name."""


def _parse_grid(spec: str) -> np.ndarray:
    """Parse LO:HI:K into K linearly spaced values (empty when K = 0)."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid {spec!r}: expected LO:HI:K")
    try:
        lo, hi, k = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"grid {spec!r}: {exc}") from None
    if k < 0:
        raise UsageError(f"grid {spec!r}: K must be >= 0")
    return np.linspace(lo, hi, k)


def _parse_vec(spec: str, n: int, name: str) -> np.ndarray:
    vals = [float(tok) for tok in spec.split(",")]
    if len(vals) == 1:
        return np.full(n, vals[0])
    if len(vals) != n:
        raise UsageError(f"{name}: expected 1 or {n} values, got {len(vals)}")
    return np.asarray(vals)


def _topo(args) -> StreamTopology:
    if args.n is None:
        raise UsageError("n: missing patch count")
    if args.n < 2:
        raise UsageError(f"n: patch count must be >= 2, got {args.n}")
    if args.case is None:
        raise UsageError("case: missing boundary case")
    return StreamTopology(args.n, BoundaryCase.from_letter(args.case))


def _growth(args, topo) -> np.ndarray:
    if args.r is None:
        raise UsageError("r: missing growth profile")
    return _parse_vec(args.r, topo.n, "r")


def _species(args, which: str) -> SpeciesParams:
    d = getattr(args, f"d{which}")
    q = getattr(args, f"q{which}")
    if d is None or q is None:
        raise UsageError(f"d{which}/q{which}: missing species parameters")
    try:
        return SpeciesParams(d=d, q=q)
    except ValueError as exc:
        raise UsageError(f"d{which}/q{which}: {exc}") from None


def _apply_config(args, parser):
    """Fill unset (None) options from a flat key=value config file; flags
    given on the command line always win."""
    if getattr(args, "config", None) is None:
        return
    converters = {}
    for action in parser._actions:
        converters[action.dest] = action.type
    values = {}
    with open(args.config, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{args.config}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    for key, val in values.items():
        if key not in converters:
            raise UsageError(f"{args.config}: unknown key {key!r}")
        if getattr(args, key, None) is None or getattr(args, key) is False:
            conv = converters[key]
            if conv is None:
                if isinstance(getattr(args, key, None), bool) or val.lower() in (
                        "true", "false", "0", "1"):
                    setattr(args, key, val.lower() in ("true", "1"))
                else:
                    setattr(args, key, val)
            else:
                try:
                    setattr(args, key, conv(val))
                except ValueError as exc:
                    raise UsageError(f"{key}: {exc}") from None


# ---------------------------------------------------------------- commands

def cmd_topology(args):
    topo = _topo(args)
    mats = build_matrices(topo)
    header = ",".join(f"j={j}" for j in range(1, topo.n + 1))
    lines = []
    for name, M in (("D", mats.D), ("Q", mats.Q)):
        lines.append(f"matrix,{name}")
        lines.append(header)
        for row in M:
            lines.append(",".join(_fmt(x) for x in row))
    _emit(lines, args.out)
    return 0


def cmd_eigen(args):
    topo = _topo(args)
    r = _growth(args, topo)
    if args.d is None or args.q is None:
        raise UsageError("d/q: missing movement rates")
    res = lambda1_result(topo, args.d, args.q, r)
    lines = [f"lambda,{_fmt(res.lam)}",
             "phi," + ",".join(_fmt(x) for x in res.phi)]
    _emit(lines, args.out)
    return 0


def cmd_equilibrium(args):
    topo = _topo(args)
    r = _growth(args, topo)
    if args.d is None or args.q is None:
        raise UsageError("d/q: missing movement rates")
    eq = single_species_equilibrium(topo, SpeciesParams(args.d, args.q), r)
    lines = [f"status,{eq.status}"]
    if eq.status == "Positive":
        lines.append("u," + ",".join(_fmt(x) for x in eq.u))
    _emit(lines, args.out)
    return 0


def _curve_rows(topo, r, d_grid, resident=None):
    """Rows of the critical advection curve over d_grid.

    Without a resident: root of lambda_1(d, q, r) in q (columns
    d,q_star).  With a resident (d1, q1): curve for the invasion profile
    r - u*, plus its analytic d-derivative and the boundary eigenvalue
    lambda1_star.  Points past the case-b persistence cutoff d** are
    dropped; a point where lambda1_star is undefined leaves that cell
    empty.
    """
    r = np.asarray(r, dtype=float)
    if resident is None:
        profile = r
        p1 = None
    else:
        p1 = resident
        eq = single_species_equilibrium(topo, p1, r)
        if eq.status != "Positive":
            raise UsageError("resident: resident species does not persist")
        profile = r - eq.u

    d_grid = np.asarray(d_grid, dtype=float)
    if topo.case is BoundaryCase.StreamToOcean:
        cutoff = d_star(topo, profile)
        d_grid = d_grid[d_grid < cutoff - 1e-6]

    rows = []
    for d in d_grid:
        d = float(d)
        qs = q_star(topo, d, profile)
        if p1 is None:
            rows.append((_fmt(d), _fmt(qs)))
            continue
        deriv = q_star_derivative(topo, d, profile)
        try:
            lam_star = _fmt(_lambda1_star_at(topo, r, p1, d, qs))
        except InvaderNotEstablished:
            lam_star = ""
        rows.append((_fmt(d), _fmt(qs), _fmt(deriv), lam_star))
    return rows


def cmd_critical_q(args):
    topo = _topo(args)
    r = _growth(args, topo)
    if args.d_grid is None:
        raise UsageError("d-grid: missing grid spec")
    d_grid = _parse_grid(args.d_grid)
    resident = None
    if args.resident is not None:
        toks = args.resident.split(",")
        if len(toks) != 2:
            raise UsageError("resident: expected D1,Q1")
        resident = SpeciesParams(float(toks[0]), float(toks[1]))
    rows = _curve_rows(topo, r, d_grid, resident)
    header = "d,q_star" if resident is None else "d,q_star,dq_star_dd,lambda1_star"
    _emit([header] + [",".join(row) for row in rows], args.out)
    return 0


def cmd_classify(args):
    topo = _topo(args)
    r = _growth(args, topo)
    report = classify_point(topo, r, _species(args, "1"), _species(args, "2"))
    payload = {
        "region": report.region.value,
        "e1": report.e1_stable,
        "e2": report.e2_stable,
        "predicted": report.predicted,
    }
    _emit([json.dumps(payload, sort_keys=True)], args.out)
    return 0


def cmd_simulate(args):
    topo = _topo(args)
    r = _growth(args, topo)
    p1 = _species(args, "1")
    if args.u0 is None:
        raise UsageError("u0: missing initial state")
    u0 = _parse_vec(args.u0, topo.n, "u0")
    if args.t_end is None or args.t_end <= 0:
        raise UsageError("t-end: must be positive")
    samples = args.samples
    if samples < 2:
        raise UsageError("samples: must be >= 2")
    output_times = np.linspace(0.0, args.t_end, samples)[1:]

    competition = args.d2 is not None or args.q2 is not None or args.v0 is not None
    if competition:
        p2 = _species(args, "2")
        if args.v0 is None:
            raise UsageError("v0: missing invader initial state")
        v0 = _parse_vec(args.v0, topo.n, "v0")
        scenario = CompetitionScenario(topo, r, p1, p2)
        traj = simulate_competition(scenario, u0, v0, args.t_end,
                                    output_times=output_times,
                                    rtol=args.rtol, atol=args.atol)
        header = ("t," + ",".join(f"u{i}" for i in range(1, topo.n + 1))
                  + "," + ",".join(f"v{i}" for i in range(1, topo.n + 1)))
    else:
        traj = simulate_single(topo, p1.d, p1.q, r, u0, args.t_end,
                               output_times=output_times,
                               rtol=args.rtol, atol=args.atol)
        header = "t," + ",".join(f"u{i}" for i in range(1, topo.n + 1))
    lines = [header]
    for t, state in zip(traj.times, traj.states):
        lines.append(",".join([_fmt(t)] + [_fmt(x) for x in state]))
    _emit(lines, args.out)
    return 0


def cmd_probe(args):
    topo = _topo(args)
    r = _growth(args, topo)
    scenario = CompetitionScenario(topo, r, _species(args, "1"),
                                   _species(args, "2"))
    first, second = bistability_probe(scenario)
    payload = {
        "first": {"tag": first.tag, "horizon": first.horizon},
        "second": {"tag": second.tag, "horizon": second.horizon},
    }
    _emit([json.dumps(payload, sort_keys=True)], args.out)
    return 0


def _sweep_cell(topo, r, p1, d2, q2, with_probe):
    try:
        p2 = SpeciesParams(d2, q2)
        report = classify_point(topo, r, p1, p2)
        row = [_fmt(d2), _fmt(q2), report.region.value, report.predicted]
        if with_probe:
            first, second = bistability_probe(CompetitionScenario(topo, r, p1, p2))
            row += [first.tag, second.tag]
        row.append("")
        return row
    except Exception as exc:  # recorded per cell; the sweep continues
        row = [_fmt(d2), _fmt(q2), "", ""]
        if with_probe:
            row += ["", ""]
        row.append(str(exc).replace(",", ";"))
        return row


def cmd_sweep(args):
    topo = _topo(args)
    r = _growth(args, topo)
    p1 = _species(args, "1")
    if args.d2_grid is None or args.q2_grid is None:
        raise UsageError("d2-grid/q2-grid: missing grid specs")
    d_grid = _parse_grid(args.d2_grid)
    q_grid = _parse_grid(args.q2_grid)
    threads = args.threads or int(os.environ.get("DRIFTLAB_THREADS", "1"))

    cells = [(float(d2), float(q2)) for d2 in d_grid for q2 in q_grid]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(
                lambda cell: _sweep_cell(topo, r, p1, *cell, args.simulate),
                cells))
    else:
        rows = [_sweep_cell(topo, r, p1, d2, q2, args.simulate)
                for d2, q2 in cells]

    header = "d2,q2,region,predicted"
    if args.simulate:
        header += ",outcome1,outcome2"
    header += ",error"
    _emit([header] + [",".join(row) for row in rows], args.out)
    return 0


# ---------------------------------------------------------------- figures

_CURVE_GRID = np.unique(np.concatenate([
    np.geomspace(0.02, 20.0, 48), [1.0, 0.5, 2.0]]))
_SERIES_SAMPLES = 401
_SERIES_T_END = 2000.0


def _write_curve_csv(path, case_letter, resident):
    topo = StreamTopology(4, BoundaryCase.from_letter(case_letter))
    r = np.full(4, 2.0)
    rows = _curve_rows(topo, r, _CURVE_GRID, resident)
    _write_lines(path, ["d,q_star,dq_star_dd,lambda1_star"]
                 + [",".join(row) for row in rows])
    return path


def _write_series_csv(path, case_letter, p2, u0_val, v0_val):
    topo = StreamTopology(4, BoundaryCase.from_letter(case_letter))
    r = np.full(4, 2.0)
    scenario = CompetitionScenario(topo, r, SpeciesParams(1.0, 0.5), p2)
    output_times = np.linspace(0.0, _SERIES_T_END, _SERIES_SAMPLES)[1:]
    traj = simulate_competition(scenario, np.full(4, u0_val), np.full(4, v0_val),
                                _SERIES_T_END, output_times=output_times)
    header = "t,u1,u2,u3,u4,v1,v2,v3,v4"
    lines = [header] + [",".join([_fmt(t)] + [_fmt(x) for x in y])
                        for t, y in zip(traj.times, traj.states)]
    _write_lines(path, lines)
    return path


def run_figure_recipe(name: str, out_dir: str = ".") -> list:
    """Emit the CSV inputs for one figure recipe; returns written paths.

    Recipes (all n=4, r=2): fig3a — critical/boundary curve, case a,
    resident (1, 0.5); fig4 — the two bistability time series, case a,
    invader (0.08, 0.44); fig5 — case-b curves for residents (1, 0.5)
    and (1, 3); fig6 — coexistence time series, case b, invader
    (0.05, 0.555); fig7 — case-b curves for residents (0.5, 2) and (2, 2).
    """
    os.makedirs(out_dir, exist_ok=True)
    join = lambda fname: os.path.join(out_dir, fname)
    if name == "fig3a":
        return [_write_curve_csv(join("fig3a_curve.csv"), "a",
                                 SpeciesParams(1.0, 0.5))]
    if name == "fig4":
        return [
            _write_series_csv(join("fig4_run1.csv"), "a",
                              SpeciesParams(0.08, 0.44), 0.1, 2.0),
            _write_series_csv(join("fig4_run2.csv"), "a",
                              SpeciesParams(0.08, 0.44), 5.0, 1.0),
        ]
    if name == "fig5":
        return [
            _write_curve_csv(join("fig5_q05.csv"), "b", SpeciesParams(1.0, 0.5)),
            _write_curve_csv(join("fig5_q3.csv"), "b", SpeciesParams(1.0, 3.0)),
        ]
    if name == "fig6":
        return [_write_series_csv(join("fig6_run.csv"), "b",
                                  SpeciesParams(0.05, 0.555), 0.1, 2.0)]
    if name == "fig7":
        return [
            _write_curve_csv(join("fig7_d05.csv"), "b", SpeciesParams(0.5, 2.0)),
            _write_curve_csv(join("fig7_d2.csv"), "b", SpeciesParams(2.0, 2.0)),
        ]
    raise UsageError(f"figure: unknown recipe {name!r}")


def cmd_figure(args):
    paths = run_figure_recipe(args.name, args.out_dir)
    for path in paths:
        sys.stdout.write(path + "\n")
    return 0


# ---------------------------------------------------------------- parser

def _add_common(sub, *, species=0, growth=True):
    sub.add_argument("--config", help="flat key=value config file; "
                     "command-line flags override file values")
    sub.add_argument("--case", choices=["a", "b", "c"],
                     help="downstream boundary case")
    sub.add_argument("--n", type=int, help="number of patches (>= 2)")
    if growth:
        sub.add_argument("--r", help="growth rate: single value or n "
                         "comma-separated values")
    if species >= 1:
        sub.add_argument("--d1", type=float, help="resident diffusion rate")
        sub.add_argument("--q1", type=float, help="resident advection rate")
    if species >= 2:
        sub.add_argument("--d2", type=float, help="invader diffusion rate")
        sub.add_argument("--q2", type=float, help="invader advection rate")
    sub.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftlab",
        description="Persistence eigenvalues, critical advection curves, "
                    "and competition dynamics on patch stream networks.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("topology", help="print the D and Q movement matrices")
    p.add_argument("action", choices=["dump"])
    _add_common(p, growth=False)
    p.set_defaults(func=cmd_topology)

    p = subs.add_parser("eigen", help="principal eigenvalue and eigenvector")
    _add_common(p)
    p.add_argument("--d", type=float, help="diffusion rate")
    p.add_argument("--q", type=float, help="advection rate")
    p.set_defaults(func=cmd_eigen)

    p = subs.add_parser("equilibrium", help="single-species equilibrium")
    _add_common(p)
    p.add_argument("--d", type=float, help="diffusion rate")
    p.add_argument("--q", type=float, help="advection rate")
    p.set_defaults(func=cmd_equilibrium)

    p = subs.add_parser("critical-q", help="critical advection curve over a d grid")
    _add_common(p)
    p.add_argument("--d-grid", help="diffusion grid LO:HI:K")
    p.add_argument("--resident", help="D1,Q1: trace the invasion curve "
                   "q*(d) for the profile r - u* instead of r")
    p.set_defaults(func=cmd_critical_q)

    p = subs.add_parser("classify", help="region and stability classification")
    _add_common(p, species=2)
    p.set_defaults(func=cmd_classify)

    p = subs.add_parser("simulate", help="integrate the ODE model")
    _add_common(p, species=2)
    p.add_argument("--u0", help="initial resident state (value or list)")
    p.add_argument("--v0", help="initial invader state (value or list)")
    p.add_argument("--t-end", type=float, help="integration horizon")
    p.add_argument("--samples", type=int, default=201,
                   help="number of output times (default 201)")
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=1e-10)
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("probe", help="run the two canonical initial-data pairs")
    _add_common(p, species=2)
    p.set_defaults(func=cmd_probe)

    p = subs.add_parser("sweep", help="classify a (d2, q2) grid")
    _add_common(p, species=1)
    p.add_argument("--d2-grid", help="invader diffusion grid LO:HI:K")
    p.add_argument("--q2-grid", help="invader advection grid LO:HI:K")
    p.add_argument("--simulate", action="store_true",
                   help="also run the probe in every cell")
    p.add_argument("--threads", type=int,
                   help="worker threads (default: DRIFTLAB_THREADS or 1)")
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("figure", help="emit the CSV inputs for a figure recipe")
    p.add_argument("name", choices=["fig3a", "fig4", "fig5", "fig6", "fig7"])
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(func=cmd_figure)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        sub = next(a for a in parser._actions
                   if isinstance(a, argparse._SubParsersAction))
        _apply_config(args, sub.choices[args.command])
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
