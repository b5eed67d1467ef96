"""Ground-truth contention model of the simulated machine.

Slowdowns are affine in each congestion axis. Time-slicing overhead from
several functions sharing one core only stretches the private slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import ZERO, CongestionVector, ExecutionRecord, FunctionSpec, TimeSlices


@dataclass(frozen=True)
class SharingOverheadModel:
    kappa: float = 0.025
    plateau_n: int = 20

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.plateau_n < 1:
            raise ValueError("plateau_n must be >= 1")


DEFAULT_SHARING = SharingOverheadModel()


def sharing_factor(model: SharingOverheadModel, n: int) -> float:
    """Private-slice stretch for ``n`` functions time-sharing a core.

    Grows with log10(n) and is flat from ``plateau_n`` on; 1.025 at n = 10
    with the default kappa.
    """
    if n < 1:
        raise ValueError(f"co-runner count must be >= 1, got {n}")
    if n == 1:
        return 1.0
    return 1.0 + model.kappa * math.log10(min(n, model.plateau_n))


def execute(
    spec: FunctionSpec,
    c: CongestionVector,
    n: int = 1,
    model: SharingOverheadModel = DEFAULT_SHARING,
) -> ExecutionRecord:
    base = spec.base
    t_shared = base.t_shared * (1.0 + spec.sens_shared.dot(c))
    t_private = base.t_private * (1.0 + spec.sens_private.dot(c)) * sharing_factor(model, n)
    l3 = spec.base_l3_misses * (1.0 + spec.l3_sensitivity * c.post_l3)
    return ExecutionRecord(
        spec_name=spec.name,
        slices=TimeSlices(t_private, t_shared),
        solo=base,
        l3_misses=l3,
        co_runners=n,
    )


def execute_solo(spec: FunctionSpec, model: SharingOverheadModel = DEFAULT_SHARING) -> ExecutionRecord:
    return execute(spec, ZERO, 1, model)
