"""Print the private-slice stretch f(n) for n functions sharing a core."""

import argparse

from litmus_pricing.machine import SharingOverheadModel, sharing_factor

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--kappa", type=float, default=0.025)
p.add_argument("--plateau", type=int, default=20)
p.add_argument("--max-n", type=int, default=40)
args = p.parse_args()

model = SharingOverheadModel(args.kappa, args.plateau)
for n in range(1, args.max_n + 1):
    print(f"{n:>3} {sharing_factor(model, n):.6f}")
