"""Regenerate the bundled workload CSV from its seed."""

import argparse
from pathlib import Path

from litmus_pricing.workload import POPULATION_SEED, default_workload_path, generate_default_population, write_workload

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--seed", type=int, default=POPULATION_SEED)
p.add_argument("--out", type=Path, default=default_workload_path())
args = p.parse_args()
write_workload(generate_default_population(args.seed), args.out)
print(f"wrote {args.out}")
