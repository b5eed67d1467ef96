"""Domain types shared by the simulator, calibration, estimator and pricing code."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

RUNTIMES = ("py", "nj", "go")
MIN_LEVEL = 1
MAX_LEVEL = 31


class InvalidSpec(ValueError):
    pass


class InvalidStressLevel(ValueError):
    pass


def check_level(level) -> int:
    """Return ``level`` as an int, rejecting anything outside 1..31."""
    if isinstance(level, bool) or int(level) != level:
        raise InvalidStressLevel(f"stress level must be an integer, got {level!r}")
    level = int(level)
    if not MIN_LEVEL <= level <= MAX_LEVEL:
        raise InvalidStressLevel(f"stress level {level} outside [{MIN_LEVEL}, {MAX_LEVEL}]")
    return level


@dataclass(frozen=True)
class CongestionVector:
    """Traffic intensity before the L3 (``pre_l3``) and after it (``post_l3``)."""

    pre_l3: float = 0.0
    post_l3: float = 0.0

    def __post_init__(self):
        if not (self.pre_l3 >= 0 and self.post_l3 >= 0):
            raise ValueError(f"congestion components must be >= 0: {self}")

    def __add__(self, other: CongestionVector) -> CongestionVector:
        return CongestionVector(self.pre_l3 + other.pre_l3, self.post_l3 + other.post_l3)

    def scaled(self, k: float) -> CongestionVector:
        return CongestionVector(self.pre_l3 * k, self.post_l3 * k)

    def __le__(self, other: CongestionVector) -> bool:
        return self.pre_l3 <= other.pre_l3 and self.post_l3 <= other.post_l3

    @property
    def is_zero(self) -> bool:
        return self.pre_l3 == 0 and self.post_l3 == 0


ZERO = CongestionVector(0.0, 0.0)


@dataclass(frozen=True)
class TimeSlices:
    t_private: float
    t_shared: float

    def __post_init__(self):
        if not (self.t_private >= 0 and self.t_shared >= 0):
            raise ValueError(f"time slices must be >= 0: {self}")

    @property
    def t_total(self) -> float:
        return self.t_private + self.t_shared

    def __add__(self, other: TimeSlices) -> TimeSlices:
        return TimeSlices(self.t_private + other.t_private, self.t_shared + other.t_shared)

    def scaled(self, k: float) -> TimeSlices:
        return TimeSlices(self.t_private * k, self.t_shared * k)

    def component(self, name: str) -> float:
        return {"private": self.t_private, "shared": self.t_shared, "total": self.t_total}[name]


class Sensitivity(NamedTuple):
    """Fractional slowdown per unit of (pre-L3, post-L3) congestion."""

    pre_l3: float
    post_l3: float

    def dot(self, c: CongestionVector) -> float:
        return self.pre_l3 * c.pre_l3 + self.post_l3 * c.post_l3


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    runtime: str
    base: TimeSlices
    sens_shared: Sensitivity = Sensitivity(0.0, 0.0)
    sens_private: Sensitivity = Sensitivity(0.0, 0.0)
    base_l3_misses: float = 0.0
    l3_sensitivity: float = 0.0
    memory_gb: float = 1.0


def validate_spec(spec: FunctionSpec) -> FunctionSpec:
    """Return ``spec`` unchanged, or raise :class:`InvalidSpec` naming the first broken rule."""
    if not spec.name:
        raise InvalidSpec("name must be non-empty")
    if spec.runtime not in RUNTIMES:
        raise InvalidSpec(f"{spec.name}: runtime {spec.runtime!r} not in {RUNTIMES}")
    if not spec.base.t_total > 0:
        raise InvalidSpec(f"{spec.name}: base.t_total must be > 0")
    for label, sens in (("sens_shared", spec.sens_shared), ("sens_private", spec.sens_private)):
        for axis, v in zip(("pre_l3", "post_l3"), sens):
            if not (v >= 0 and math.isfinite(v)):
                raise InvalidSpec(f"{spec.name}: {label}.{axis} must be finite and >= 0")
    for axis, priv, shr in zip(("pre_l3", "post_l3"), spec.sens_private, spec.sens_shared):
        if priv > shr:
            raise InvalidSpec(
                f"{spec.name}: sens_private.{axis}={priv} exceeds sens_shared.{axis}={shr}"
            )
    if not spec.base_l3_misses >= 0:
        raise InvalidSpec(f"{spec.name}: base_l3_misses must be >= 0")
    if not spec.l3_sensitivity >= 0:
        raise InvalidSpec(f"{spec.name}: l3_sensitivity must be >= 0")
    if not spec.memory_gb > 0:
        raise InvalidSpec(f"{spec.name}: memory_gb must be > 0")
    return spec


@dataclass(frozen=True)
class ExecutionRecord:
    spec_name: str
    slices: TimeSlices
    solo: TimeSlices  # ground truth; only oracles (ideal price) may read it
    l3_misses: float
    co_runners: int = 1

    def __post_init__(self):
        if self.co_runners < 1:
            raise ValueError("co_runners must be >= 1")
        if self.slices.t_private < self.solo.t_private or self.slices.t_shared < self.solo.t_shared:
            raise ValueError(f"{self.spec_name}: congested slices shorter than solo slices")


@dataclass(frozen=True)
class ChargingRates:
    r_private: float = 1.0
    r_shared: float = 1.0
    r_base: float = 1.0

    def __post_init__(self):
        if not self.r_base > 0:
            raise ValueError("r_base must be > 0")
        for r in (self.r_private, self.r_shared):
            if not 0 < r <= self.r_base:
                raise ValueError(f"charging rate {r} outside (0, r_base={self.r_base}]")


@dataclass(frozen=True)
class PriceBreakdown:
    p_private: float
    p_shared: float
    p_total: float
    discount_fraction: float = 0.0
    rates: Optional[ChargingRates] = field(default=None, compare=False)

    @classmethod
    def from_components(
        cls,
        p_private: float,
        p_shared: float,
        commercial_total: Optional[float] = None,
        rates: Optional[ChargingRates] = None,
    ) -> PriceBreakdown:
        p_total = p_private + p_shared
        discount = 0.0
        if commercial_total is not None and commercial_total > 0:
            # rounding can leave a -1ulp discount when nothing was discounted
            discount = max(0.0, 1.0 - p_total / commercial_total)
        return cls(p_private, p_shared, p_total, discount, rates)
