"""From a startup-probe reading to estimated per-component slowdowns.

Per generator, a straight line maps startup slowdown to reference slowdown,
and a log curve maps startup total slowdown to the L3 misses that generator
would produce. The measured L3 misses then place the machine between the
two generator regimes, in log space.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .calibration import (
    CongestionTable,
    PerformanceTable,
    Slowdowns,
    StartupSpec,
    slowdowns,
)
from .core import CongestionVector, TimeSlices
from .machine import DEFAULT_SHARING, SharingOverheadModel, execute
from .traffic import GENERATORS

COMPONENTS = ("private", "shared", "total")
FIT_MODES = ("component", "total")


class DegenerateFit(ValueError):
    pass


class DomainError(ValueError):
    pass


class RegimeCollapse(UserWarning):
    """Both generators predict the same L3 misses, so the reading cannot pick a regime."""


@dataclass(frozen=True)
class LinearModel:
    slope: float
    intercept: float
    r_squared: float = 1.0

    def __call__(self, x: float) -> float:
        return self.intercept + self.slope * x


@dataclass(frozen=True)
class LogModel:
    """``y = a + b * ln(x)``."""

    a: float
    b: float

    def __call__(self, x: float) -> float:
        if not x > 0:
            raise DomainError(f"log model evaluated at x={x}")
        return self.a + self.b * math.log(x)


def _ols(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    n = len(xs)
    if n < 2 or n != len(ys):
        raise DegenerateFit("need at least two (x, y) points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        raise DegenerateFit("all x values are equal")
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = my - slope * mx
    syy = math.fsum((y - my) ** 2 for y in ys)
    ss_res = math.fsum((y - intercept - slope * x) ** 2 for x, y in zip(xs, ys))
    r2 = 1.0 if syy == 0 else min(1.0, max(0.0, 1.0 - ss_res / syy))
    return slope, intercept, r2


def fit_linear(points: Sequence[tuple[float, float]]) -> LinearModel:
    xs = [float(x) for x, _ in points]
    ys = [float(y) for _, y in points]
    return LinearModel(*_ols(xs, ys))


def fit_log(points: Sequence[tuple[float, float]]) -> LogModel:
    for x, _ in points:
        if not x > 0:
            raise DomainError(f"log fit needs x > 0, got {x}")
    slope, intercept, _ = _ols([math.log(x) for x, _ in points], [float(y) for _, y in points])
    return LogModel(a=intercept, b=slope)


@dataclass(frozen=True)
class GeneratorModels:
    private: LinearModel
    shared: LinearModel
    total: LinearModel
    l3: LogModel

    def linear(self, component: str) -> LinearModel:
        return getattr(self, component)


@dataclass(frozen=True)
class DiscountModelSet:
    ct: GeneratorModels
    mb: GeneratorModels
    fit_on: str = "component"

    def __post_init__(self):
        if self.fit_on not in FIT_MODES:
            raise ValueError(f"fit_on must be one of {FIT_MODES}")

    def generator(self, kind: str) -> GeneratorModels:
        return {"CT": self.ct, "MB": self.mb}[kind]

    def to_dict(self) -> dict:
        out = {"fit_on": self.fit_on, "generators": {}}
        for kind in GENERATORS:
            g = self.generator(kind)
            block = {
                c: {"slope": m.slope, "intercept": m.intercept, "r_squared": m.r_squared}
                for c, m in ((c, g.linear(c)) for c in COMPONENTS)
            }
            block["l3"] = {"a": g.l3.a, "b": g.l3.b}
            out["generators"][kind] = block
        return out

    @classmethod
    def from_dict(cls, d: dict) -> DiscountModelSet:
        gens = {}
        for kind in GENERATORS:
            block = d["generators"][kind]
            gens[kind] = GeneratorModels(
                *(LinearModel(**block[c]) for c in COMPONENTS), l3=LogModel(**block["l3"])
            )
        return cls(gens["CT"], gens["MB"], d.get("fit_on", "component"))


def write_models(models: DiscountModelSet, path) -> None:
    Path(path).write_text(json.dumps(models.to_dict(), indent=2, sort_keys=True) + "\n")


def read_models(path) -> DiscountModelSet:
    return DiscountModelSet.from_dict(json.loads(Path(path).read_text()))


def fit_models(ct: CongestionTable, pt: PerformanceTable, fit_on: str = "component") -> DiscountModelSet:
    """Fit the per-generator regressions from a row-correspondent table pair.

    With ``fit_on="total"`` every component regresses on the startup total
    slowdown instead of the matching startup component.
    """
    if ct.keys() != pt.keys():
        raise ValueError("congestion and performance tables are not row-correspondent")
    gens = {}
    for kind in GENERATORS:
        crow = ct.sub(kind)
        if len(crow) < 2:
            raise DegenerateFit(f"{kind} sub-table needs at least two rows")
        prow = [pt.row(kind, r.level) for r in crow]
        lines = {}
        for comp in COMPONENTS:
            xcol = "su_total" if fit_on == "total" else f"su_{comp}"
            lines[comp] = fit_linear([(getattr(c, xcol), getattr(p, f"ref_{comp}")) for c, p in zip(crow, prow)])
        l3 = fit_log([(c.su_total, c.l3_misses) for c in crow])
        gens[kind] = GeneratorModels(**lines, l3=l3)
    return DiscountModelSet(gens["CT"], gens["MB"], fit_on)


@dataclass(frozen=True)
class LitmusReading:
    startup_slowdown: Slowdowns
    l3_misses: float
    # raw probe slices, when known, let a sharing divisor be applied exactly
    slices: Optional[TimeSlices] = None
    solo: Optional[TimeSlices] = None

    def __post_init__(self):
        if self.l3_misses < 0:
            raise ValueError("l3_misses must be >= 0")
        if min(self.startup_slowdown) < 1.0 - 1e-12:
            raise ValueError(f"startup slowdowns must be >= 1: {self.startup_slowdown}")

    def consistent_with(self, probe_solo: TimeSlices, tol: float = 1e-12) -> bool:
        """Total slowdown must be the solo-mix weighted average of the components."""
        s = self.startup_slowdown
        if probe_solo.t_total <= 0:
            return False
        expect = (s.private * probe_solo.t_private + s.shared * probe_solo.t_shared) / probe_solo.t_total
        lo, hi = min(s.private, s.shared), max(s.private, s.shared)
        return lo - tol <= s.total <= hi + tol and abs(s.total - expect) <= tol * max(1.0, expect)

    def deflate_private(self, divisor: float) -> LitmusReading:
        """Remove a known time-slicing stretch from the startup private slice."""
        if divisor == 1.0:
            return self
        if self.slices is not None and self.solo is not None:
            adj = TimeSlices(self.slices.t_private / divisor, self.slices.t_shared)
            # the divisor may overshoot the real stretch; slowdowns stay >= 1
            sd = slowdowns(adj, self.solo)
            sd = Slowdowns(*(max(1.0, v) for v in sd))
            return LitmusReading(sd, self.l3_misses, adj, self.solo)
        s = self.startup_slowdown
        sd = Slowdowns(max(1.0, s.private / divisor), s.shared, max(1.0, s.total / divisor))
        return LitmusReading(sd, self.l3_misses)


def run_litmus_test(
    probes: StartupSpec,
    c: CongestionVector,
    n: int = 1,
    model: SharingOverheadModel = DEFAULT_SHARING,
    probe: str = "py",
) -> LitmusReading:
    """Read the machine state through the startup phase of the configured probe(s)."""
    recs = [execute(p, c, n, model) for p in probes.select(probe)]
    if len(recs) == 1:
        r = recs[0]
        return LitmusReading(slowdowns(r.slices, r.solo), r.l3_misses, r.slices, r.solo)
    sds = [slowdowns(r.slices, r.solo) for r in recs]
    k = len(recs)
    mean = Slowdowns(*(math.fsum(col) / k for col in zip(*sds)))
    return LitmusReading(mean, math.fsum(r.l3_misses for r in recs) / k)


def regime_weight(reading: LitmusReading, models: DiscountModelSet) -> float:
    """0 means the machine looks like CT traffic, 1 like MB traffic.

    MB is the upper bound on L3 misses. Where its curve falls below CT's
    (extrapolated under its first calibrated levels) the CT estimate is used.
    """
    x = reading.startup_slowdown.total
    m_ct = models.ct.l3(x)
    m_mb = models.mb.l3(x)
    if m_mb == m_ct:
        warnings.warn(RegimeCollapse(f"m_ct == m_mb == {m_ct} at x={x}"), stacklevel=3)
        return 0.0
    if m_mb < m_ct or m_ct <= 0 or reading.l3_misses <= 0:
        return 0.0
    lo, hi = math.log(m_ct), math.log(m_mb)
    w = (math.log(reading.l3_misses) - lo) / (hi - lo)
    return min(1.0, max(0.0, w))


def interpolate(reading: LitmusReading, models: DiscountModelSet, component: str) -> float:
    """Estimated slowdown (>= 1) of ``component`` for a tenant under this reading.

    The two generator estimates are blended as discounts (1 - 1/slowdown),
    so a reading halfway between the regimes in log-L3 space gets the
    midpoint discount.
    """
    if component not in COMPONENTS:
        raise ValueError(f"unknown component {component!r}")
    x = reading.startup_slowdown.total if models.fit_on == "total" else getattr(reading.startup_slowdown, component)
    d_ct = max(1.0, models.ct.linear(component)(x))
    d_mb = max(1.0, models.mb.linear(component)(x))
    w = regime_weight(reading, models)
    discount = (1.0 - w) * (1.0 - 1.0 / d_ct) + w * (1.0 - 1.0 / d_mb)
    return 1.0 / (1.0 - discount)
