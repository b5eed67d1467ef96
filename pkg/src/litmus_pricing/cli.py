"""Command line entry point: ``litmus {calibrate,run,check}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .calibration import write_congestion_table, write_performance_table
from .config import ConfigError, ScenarioConfig, load_config
from .estimator import write_models
from .harness import InvariantViolation, calibrate_for, emit_report, load_entries, run_scenario, split_population

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2, 3


def _config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "method", None) is not None:
        changes["sharing_method"] = args.method
    return cfg.replace(**changes) if changes else cfg


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    refs, _ = split_population(cfg, load_entries(cfg))
    tables, models = calibrate_for(cfg, refs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_congestion_table(tables.congestion, out / "congestion_table.csv")
    write_performance_table(tables.performance, out / "performance_table.csv")
    write_models(models, out / "models.json")
    print(f"wrote calibration tables and models to {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    report = run_scenario(cfg)
    csv_path, json_path = emit_report(report, Path(args.out) / "report.csv")
    a = report.aggregates
    print(f"{len(report.rows)} functions, seed {cfg.seed}, method {cfg.sharing_method}")
    print(f"mean ideal discount   {a['mean_ideal_discount']:.4f}")
    print(f"mean litmus discount  {a['mean_litmus_discount']:.4f}")
    print(f"mean |weighted error| {a['mean_abs_weighted_error']:.4f}")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_check(args) -> int:
    from .acceptance import run_all

    results = run_all()
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="litmus", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", type=Path, help="flat key = value scenario file")
        if seed:
            sp.add_argument("--seed", type=int)
            sp.add_argument("--method", choices=("none", "method1", "method2"))
        sp.add_argument("--out", type=Path, default=Path("out"))

    sp = sub.add_parser("calibrate", help="build congestion/performance tables and fit models")
    common(sp)
    sp.set_defaults(func=cmd_calibrate)
    sp = sub.add_parser("run", help="run a pricing scenario and write the report")
    common(sp)
    sp.set_defaults(func=cmd_run)
    sp = sub.add_parser("check", help="run the acceptance checks")
    sp.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
