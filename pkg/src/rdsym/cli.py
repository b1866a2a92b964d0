"""Command line entry point: ``rdsym run | validate-reaction | report``.

Exit status: 0 when every verdict passes (or is inconclusive/informational),
2 when some verdict fails, 1 on configuration or runtime errors.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

from .config import RunConfig, load_config, serialize_config
from .exceptions import ConfigError, RdsymError
from .experiments import derive_verdicts, run_scenario
from .io import read_report, write_report, write_snapshot, write_verdicts
from .reactions import check_kpp, check_lower_bound, check_superposition

EXIT_OK, EXIT_RUNTIME, EXIT_VERDICT = 0, 1, 2


def _print_verdicts(verdicts, out=sys.stdout):
    for v in verdicts:
        measured = "" if v.measured is None else f"{v.measured:.6g}"
        bound = "" if v.bound is None else f" (bound {v.bound:.6g})"
        flag = "" if v.ok else "  <-- unexpected"
        print(f"{v.status:>12}  {v.name}: {v.inequality}; measured {measured}{bound}"
              f"{'; ' + v.note if v.note else ''}{flag}", file=out)


def _load(path):
    try:
        return load_config(path)
    except ConfigError as err:
        print(f"invalid configuration {path}:", file=sys.stderr)
        for e in err.errors:
            print(f"  {e}", file=sys.stderr)
    except OSError as err:
        print(f"cannot read {path}: {err}", file=sys.stderr)
    return None


def _out_dir(cfg: RunConfig, override):
    return override if override is not None else cfg.output.directory


def cmd_run(args):
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_RUNTIME
    out = _out_dir(cfg, args.out)
    os.makedirs(out, exist_ok=True)
    snap_dir = os.path.join(out, "snapshots")
    if cfg.output.snapshots:
        os.makedirs(snap_dir, exist_ok=True)
    with open(os.path.join(out, "config.json"), "w", newline="", encoding="utf-8") as fh:
        fh.write(serialize_config(cfg))

    rows, count = [], [0]

    def on_record(fields, new_rows):
        rows.extend(new_rows)
        if cfg.output.snapshots and count[0] % cfg.output.snapshot_stride == 0:
            for sid, field in fields.items():
                write_snapshot(field, snap_dir, f"{cfg.output.snapshot_prefix}_{sid}")
        count[0] += 1

    setting = cfg.setting(seed=args.seed, threads=args.threads)
    try:
        report = run_scenario(cfg.scenario, setting, on_record=on_record)
    except RdsymError as err:
        write_report(rows, os.path.join(out, "report.csv"))
        when = getattr(err, "time", None)
        suffix = f" (t={when:g})" if when is not None else ""
        print(f"run aborted{suffix}: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    write_report(report.rows, os.path.join(out, "report.csv"))
    write_verdicts(report.verdicts, os.path.join(out, "verdicts.csv"))
    print(f"{cfg.scenario.kind}: {len(report.rows)} rows -> {out}/report.csv")
    for k, v in report.derived.items():
        print(f"  {k} = {v}")
    _print_verdicts(report.verdicts)
    return EXIT_VERDICT if report.failures else EXIT_OK


def cmd_validate_reaction(args):
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_RUNTIME
    f = cfg.reaction
    print(f"reaction {f.to_dict()}")
    print(f"  {check_kpp(f)}")
    print(f"  {check_superposition(f)}")
    g = getattr(cfg.scenario, "g", None)
    if g is None and f.time_independent and math.isfinite(f.Z):
        g = f
    if g is not None and g.time_independent and math.isfinite(g.Z):
        print(f"  against g = {g.to_dict()}: {check_lower_bound(f, g)}")
    return EXIT_OK


def cmd_report(args):
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_RUNTIME
    path = args.csv or os.path.join(_out_dir(cfg, args.out), "report.csv")
    try:
        rows = read_report(path)
    except (OSError, ValueError) as err:
        print(f"cannot read report {path}: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    verdicts = derive_verdicts(cfg.scenario, rows, cfg.setting(seed=args.seed))
    print(f"{cfg.scenario.kind}: verdicts re-derived from {path} ({len(rows)} rows)")
    _print_verdicts(verdicts)
    return EXIT_VERDICT if any(not v.ok for v in verdicts) else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="rdsym", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, metavar="PATH", help="JSON run configuration")
        sp.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
        sp.add_argument("--seed", type=int, default=None,
                        help="seed of the randomized enclosing-circle construction")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker threads for time stepping (results do not depend on it)")

    sp = sub.add_parser("run", help="run the configured scenario and write report.csv")
    common(sp)
    sp.set_defaults(func=cmd_run)
    sp = sub.add_parser("validate-reaction", help="check the reaction hypotheses")
    common(sp)
    sp.set_defaults(func=cmd_validate_reaction)
    sp = sub.add_parser("report", help="re-derive verdicts from an existing report.csv")
    common(sp)
    sp.add_argument("--csv", metavar="PATH", help="report to read (default: <out>/report.csv)")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return EXIT_RUNTIME
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
