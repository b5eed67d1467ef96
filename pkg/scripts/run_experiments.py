"""Run the bundled scenario configs and print one summary line each.

Reports land in ``<out>/<config name>/report_seed<seed>.csv`` (plus the JSON sidecar).
"""

import argparse
from pathlib import Path

from litmus_pricing.config import load_config
from litmus_pricing.harness import emit_report, run_scenario

ROOT = Path(__file__).resolve().parent.parent

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("configs", nargs="*", type=Path, default=sorted((ROOT / "configs").glob("*.cfg")))
p.add_argument("--out", type=Path, default=Path("out"))
p.add_argument("--seeds", type=int, nargs="*", help="override the config seed; one run per seed")
args = p.parse_args()

print(f"{'scenario':<22} {'seed':>5} {'ideal':>8} {'litmus':>8} {'|werr|':>8}")
for path in args.configs:
    cfg = load_config(path)
    for seed in args.seeds or [cfg.seed]:
        rep = run_scenario(cfg.replace(seed=seed))
        emit_report(rep, args.out / path.stem / f"report_seed{seed}.csv")
        a = rep.aggregates
        print(
            f"{path.stem:<22} {seed:>5} {a['mean_ideal_discount']:>8.4f} "
            f"{a['mean_litmus_discount']:>8.4f} {a['mean_abs_weighted_error']:>8.4f}"
        )
