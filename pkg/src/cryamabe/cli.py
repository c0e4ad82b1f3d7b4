"""Command line entry point: ``cryamabe <subcommand> ...``.

Exit status: 0 when every requested check passes, 1 when a check fails,
2 for usage or configuration errors, 3 when a flow stopped on a numerical
terminal event (blow-up guard or step failure).  A manifest is written
whenever an output directory exists.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import _accel
from .checks import (FAIL, NOT_RUN, PASS, Check, all_passed, flow_checks, initial_data_checks,
                     operator_checks)
from .errors import CRYamabeError, NumericalConsistencyError, StepFailure, UsageError
from .fieldio import read_snapshot
from .sphere import SpherePoint, build_grid, random_points

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
MANIFEST = "manifest.json"

log = logging.getLogger("cryamabe")


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _grid_arg(text):
    try:
        dims = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be N or N1,N2,N3, got {text!r}") from None
    if len(dims) == 1:
        dims *= 3
    if len(dims) != 3:
        raise argparse.ArgumentTypeError("grid needs one or three integers")
    return build_grid(*dims)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def write_manifest(out: Path, *, command, config, grid, started, checks, files=(), event=None,
                   tolerances=None, extra=None):
    out.mkdir(parents=True, exist_ok=True)
    present = sorted(f for f in set(files) if (out / f).exists())
    manifest = {
        "command": command,
        "config": config,
        "code_version": _version(),
        "backend": _accel.backend_name(),
        "grid": grid.to_dict() if grid is not None else None,
        "started": started,
        "finished": _now(),
        "terminal_event": event,
        "files": present,
        "tolerances": tolerances or {},
        "checks": {c.name: c.to_dict() for c in checks},
        "summary": {c.name: c.status for c in checks},
    }
    if extra:
        manifest.update(extra)
    (out / MANIFEST).write_text(json.dumps(manifest, indent=1, default=_json_default))
    return manifest


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _print_checks(checks, stream=sys.stdout):
    for c in checks:
        print(c.line(), file=stream)


def _status(checks):
    return EXIT_OK if all_passed(checks) else EXIT_FAIL


# -- subcommands --------------------------------------------------------------------

def cmd_verify_operators(args):
    started = _now()
    checks = operator_checks(args.grid, args.order, args.tol, args.poly_tol)
    _print_checks(checks)
    if args.out:
        write_manifest(Path(args.out), command="verify-operators", config=vars_json(args),
                       grid=args.grid, started=started, checks=checks,
                       tolerances={"exact": args.tol, "polynomial": args.poly_tol})
    return _status(checks)


def _params(args):
    from .initial_data import TorsionFreeParams
    if args.params:
        return TorsionFreeParams.from_json(Path(args.params).read_text())
    return TorsionFreeParams(complex(args.a), complex(args.b), complex(args.c))


def cmd_verify_initial_data(args):
    started = _now()
    p = _params(args)
    checks = initial_data_checks(p, args.grid, args.order, args.torsion_tol, args.curvature_tol,
                                 published_formula=args.check_pointwise_formula)
    _print_checks(checks)
    if args.out:
        write_manifest(Path(args.out), command="verify-initial-data", config=vars_json(args),
                       grid=args.grid, started=started, checks=checks,
                       extra={"params": p.to_dict()},
                       tolerances={"torsion": args.torsion_tol, "curvature": args.curvature_tol})
    return _status(checks)


def cmd_run(args):
    from .flow import FlowConfig, run
    started = _now()
    cfg = FlowConfig.from_json(args.config)
    if args.out:
        cfg.out = args.out
    if cfg.out is None:
        cfg.out = str(Path(args.config).with_suffix("")) + "_out"
    result = run(cfg)
    checks = flow_checks(result)
    _print_checks(checks)
    event = {"kind": result.event.kind, "t": result.event.t, "message": result.event.message,
             "last_valid_t": result.final_state.t}
    write_manifest(Path(cfg.out), command="run", config=cfg.to_dict(), grid=cfg.grid,
                   started=started, checks=checks, files=result.files, event=event,
                   tolerances=cfg.tolerances,
                   extra={"initial_levels": result.initial_levels,
                          "worst": _worst(result), "t_end": cfg.t_end})
    if result.event.numerical:
        return EXIT_NUMERICAL
    return _status(checks)


def _worst(result):
    cols = ("min_W", "max_W", "min_Y", "max_abs_A11", "max_abs_W0", "max_abs_W11",
            "res_2_7", "res_2_8")
    out = {}
    for c in cols:
        v = result.column(c)
        if v.size:
            out[c] = float(np.min(v)) if c.startswith("min") else float(np.max(v))
    return out


def _load_run(run_dir):
    run_dir = Path(run_dir)
    snaps = sorted(run_dir.glob("snapshot_*.json"))
    if not snaps:
        raise UsageError(f"{run_dir}: no snapshots found")
    loaded = [read_snapshot(p) for p in snaps]
    grid = loaded[0][1]
    manifest = {}
    if (run_dir / MANIFEST).exists():
        manifest = json.loads((run_dir / MANIFEST).read_text())
    return grid, loaded, manifest


def cmd_harnack_monitor(args):
    from .calculus import FrameCalculus
    from .harnack import LegendrianField, harnack_Y, harnack_Z, optimal_eta
    from .transform import PseudohermitianState
    started = _now()
    grid, loaded, manifest = _load_run(args.run)
    calc = FrameCalculus(grid, args.order)
    rng = np.random.default_rng(args.seed)
    diff_by_t = {}
    hpath = Path(args.run) / "harnack.csv"
    if hpath.exists():
        with open(hpath, newline="") as fh:
            diff_by_t = {float(r["t"]): float(r["min_diff_residual"]) for r in csv.DictReader(fh)}
    rows, worst_y, worst_gap, worst_opt = [], np.inf, np.inf, 0.0
    for header, _, fields in loaded:
        t = header["t"]
        if t < args.t_min:
            continue
        state = PseudohermitianState(calc, fields["lambda"], t)
        y = harnack_Y(state, t)
        k = int(np.argmin(y))
        eta, x1, x2 = grid.node_coordinates(k)
        opt = harnack_Z(state, optimal_eta(state), t)
        worst_opt = max(worst_opt, float(np.max(np.abs(opt - y)) / max(1.0, np.max(np.abs(y)))))
        for _ in range(args.samples):
            field = LegendrianField.random(rng, grid.shape, scale=args.scale)
            worst_gap = min(worst_gap, float(np.min(harnack_Z(state, field, t) - y)))
        worst_y = min(worst_y, float(y.flat[k]))
        near = min(diff_by_t, key=lambda s: abs(s - t), default=None)
        diff = diff_by_t[near] if near is not None and abs(near - t) < 1e-9 else float("nan")
        rows.append({"t": t, "min_Y": float(y.flat[k]), "argmin_eta": eta, "argmin_xi1": x1,
                     "argmin_xi2": x2, "min_diff_residual": diff})
    h_tol = args.tol
    if h_tol is None:
        level = manifest.get("initial_levels", {}).get("max_abs_lap_W")
        h_tol = 10.0 * level if level is not None else 1e-6
    checks = [
        Check.lower("min_Y", worst_y, -h_tol) if rows else Check("min_Y", None, -h_tol, NOT_RUN),
        Check.lower("min_Z_minus_Y_random_eta", worst_gap, -1e-12) if args.samples and rows
        else Check("min_Z_minus_Y_random_eta", None, -1e-12, NOT_RUN),
        Check.upper("optimal_eta_identity_rel", worst_opt, 1e-12),
    ]
    _print_checks(checks)
    out = Path(args.out or Path(args.run) / "monitor")
    out.mkdir(parents=True, exist_ok=True)
    from .flow import write_harnack
    write_harnack(out / "harnack.csv", rows)
    write_manifest(out, command="harnack-monitor", config=vars_json(args), grid=grid,
                   started=started, checks=checks, files=["harnack.csv"],
                   tolerances={"harnack_abs": h_tol})
    return _status(checks)


def cmd_path_action(args):
    from .legendrian import LambdaHistory, read_pairs, ratio_bound_check, write_paths
    from .flow import Snapshot
    started = _now()
    grid, loaded, _ = _load_run(args.run)
    snaps = [Snapshot(h["t"], f["lambda"]) for h, _, f in loaded]
    history = LambdaHistory.from_snapshots(grid, snaps)
    if args.pairs:
        pairs = read_pairs(args.pairs)
    else:
        rng = np.random.default_rng(args.seed)
        a, b = random_points(rng, args.random), random_points(rng, args.random)
        pairs = [(p, args.t1, q, args.t2) for p, q in zip(a, b)]
    results = []
    for x1, t1, x2, t2 in pairs:
        res = ratio_bound_check(x1, t1, x2, t2, history, n_segments=args.segments, seed=args.seed)
        results.append(res)
        print(f"{'PASS' if res.passed else 'FAIL'} t=({t1:g},{t2:g}) L_hat={res.L_hat:.6g} "
              f"lhs={res.lhs:.6g} rhs={res.rhs:.6g} defect={res.defect:.2e}")
    out = Path(args.out or Path(args.run) / "paths")
    out.mkdir(parents=True, exist_ok=True)
    write_paths(out / "paths.csv", results)
    checks = [Check("integrated_harnack_all_pairs", float(sum(r.passed for r in results)),
                    float(len(results)), PASS if all(r.passed for r in results) else FAIL,
                    "pairs passing / pairs")]
    write_manifest(out, command="path-action", config=vars_json(args), grid=grid,
                   started=started, checks=checks, files=["paths.csv"])
    return _status(checks)


def cmd_report(args):
    path = Path(args.run_dir) / MANIFEST
    if not path.exists():
        raise UsageError(f"{args.run_dir}: no {MANIFEST}")
    m = json.loads(path.read_text())
    print(f"command: {m.get('command')}   version: {m.get('code_version')}   grid: {m.get('grid')}")
    ev = m.get("terminal_event")
    if ev:
        print(f"terminal event: {ev['kind']} at t = {ev['t']:.6g} (last valid t = {ev['last_valid_t']:.6g})"
              + (f": {ev['message']}" if ev.get("message") else ""))
    worst = m.get("worst")
    if worst:
        print("worst-case monitored values:")
        for k, v in worst.items():
            print(f"  {k:14s} {v: .6g}")
    print("checks:")
    for c in m.get("checks", {}).values():
        print("  " + Check(**c).line())
    counts = {s: sum(1 for v in m.get("summary", {}).values() if v == s) for s in (PASS, FAIL, NOT_RUN)}
    print(f"summary: {counts[PASS]} pass, {counts[FAIL]} fail, {counts[NOT_RUN]} not run")
    return EXIT_OK if counts[FAIL] == 0 else EXIT_FAIL


def vars_json(args):
    d = {}
    for k, v in vars(args).items():
        if k == "func":
            continue
        d[k] = v.to_dict() if hasattr(v, "to_dict") else v
    return d


def build_parser():
    p = _Parser(prog="cryamabe", description="CR Yamabe flow experiments on the 3-sphere.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("run", help="integrate the flow from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("verify-operators", help="discrete operators against exact expressions")
    s.add_argument("--grid", type=_grid_arg, default=build_grid(16, 16, 16))
    s.add_argument("--order", type=int, default=8, choices=(4, 6, 8))
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--poly-tol", type=float, default=1e-3)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify_operators)

    s = sub.add_parser("verify-initial-data", help="torsion-free initial data checks")
    s.add_argument("--grid", type=_grid_arg, default=build_grid(32, 32, 32))
    s.add_argument("--params", help='JSON {"a": [re, im], "b": [re, im], "c": [re, im]}')
    s.add_argument("--a", default="0.1")
    s.add_argument("--b", default="0.05")
    s.add_argument("--c", default="1.0")
    s.add_argument("--order", type=int, default=8, choices=(4, 6, 8))
    s.add_argument("--torsion-tol", type=float, default=1e-6)
    s.add_argument("--curvature-tol", type=float, default=1e-4)
    s.add_argument("--check-pointwise-formula", action="store_true",
                   help="also require agreement with the quoted pointwise curvature expression")
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify_initial_data)

    s = sub.add_parser("harnack-monitor", help="Harnack quantities on the snapshots of a run")
    s.add_argument("--run", required=True)
    s.add_argument("--t-min", type=float, default=0.01)
    s.add_argument("--samples", type=int, default=10, help="random Legendrian fields per snapshot")
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--order", type=int, default=8, choices=(4, 6, 8))
    s.add_argument("--tol", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_harnack_monitor)

    s = sub.add_parser("path-action", help="integrated Harnack check along horizontal paths")
    s.add_argument("--run", required=True)
    s.add_argument("--pairs", help="JSON list of {x1, t1, x2, t2}")
    s.add_argument("--random", type=int, default=5, help="random pairs when --pairs is absent")
    s.add_argument("--t1", type=float, default=0.05)
    s.add_argument("--t2", type=float, default=0.2)
    s.add_argument("--segments", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_path_action)

    s = sub.add_parser("report", help="summarize a run directory")
    s.add_argument("run_dir")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (NumericalConsistencyError, StepFailure) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (CRYamabeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
