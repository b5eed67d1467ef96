"""Commercial, ideal and Litmus prices, and the weighted price error.

Prices are memory_gb x simulated cycles with a base charging rate of 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .core import ChargingRates, ExecutionRecord, PriceBreakdown, TimeSlices
from .estimator import DiscountModelSet, LitmusReading, interpolate


class DegenerateComponent(RuntimeError):
    pass


@dataclass(frozen=True)
class PricingInputs:
    record: ExecutionRecord
    rates: ChargingRates
    memory_gb: float = 1.0
    sharing_adjustment: float = 1.0

    def __post_init__(self):
        if not self.memory_gb > 0:
            raise ValueError("memory_gb must be > 0")
        if self.sharing_adjustment < 1.0:
            raise ValueError("sharing_adjustment must be >= 1")

    def price(self) -> PriceBreakdown:
        s = self.record.slices
        k = self.memory_gb * self.rates.r_base
        return PriceBreakdown.from_components(
            k * self.rates.r_private * s.t_private,
            k * self.rates.r_shared * s.t_shared,
            self.memory_gb * s.t_total,
            self.rates,
        )


def commercial_price(record: ExecutionRecord, memory_gb: float = 1.0) -> PriceBreakdown:
    s = record.slices
    PricingInputs(record, ChargingRates(), memory_gb)  # validates memory_gb
    return PriceBreakdown.from_components(memory_gb * s.t_private, memory_gb * s.t_shared, rates=ChargingRates())


def _ideal_rate(solo: float, congested: float) -> float:
    if congested == 0:
        if solo > 0:
            raise DegenerateComponent("congested slice is 0 while its solo slice is not")
        return 1.0
    return min(1.0, solo / congested)


def ideal_price(record: ExecutionRecord, memory_gb: float = 1.0) -> PriceBreakdown:
    """Charge each slice at solo/congested: the tenant pays for its solo run."""
    rates = ChargingRates(
        _ideal_rate(record.solo.t_private, record.slices.t_private),
        _ideal_rate(record.solo.t_shared, record.slices.t_shared),
    )
    return PricingInputs(record, rates, memory_gb).price()


def litmus_rates(
    reading: LitmusReading, models: DiscountModelSet, sharing_adjustment: float = 1.0
) -> ChargingRates:
    """Charging rates from a reading.

    ``sharing_adjustment`` is the known time-slicing stretch of the private
    slice. It is taken out of the reading before the tables are consulted
    and folded back into the private slowdown, so the private rate also
    refunds the switching overhead.
    """
    if sharing_adjustment < 1.0:
        raise ValueError("sharing_adjustment must be >= 1")
    adjusted = reading.deflate_private(sharing_adjustment)
    s_private = sharing_adjustment * interpolate(adjusted, models, "private")
    s_shared = interpolate(adjusted, models, "shared")
    return ChargingRates(1.0 / s_private, 1.0 / s_shared)


def litmus_price(
    record: ExecutionRecord,
    reading: LitmusReading,
    models: DiscountModelSet,
    memory_gb: float = 1.0,
    sharing_adjustment: float = 1.0,
) -> PriceBreakdown:
    rates = litmus_rates(reading, models, sharing_adjustment)
    if record.slices.t_shared == 0:
        rates = ChargingRates(rates.r_private, 1.0)
    return PricingInputs(record, rates, memory_gb, sharing_adjustment).price()


class WeightedError(NamedTuple):
    private: float
    shared: float
    total: float
    degenerate: bool = False


def weighted_error(litmus: PriceBreakdown, ideal: PriceBreakdown, slices: TimeSlices) -> WeightedError:
    """Relative price error per component, weighted by that slice's share of run time.

    Positive means the tenant was under-compensated.
    """
    if not ideal.p_total > 0 or not slices.t_total > 0:
        raise ValueError("weighted error needs a positive ideal price and run time")
    degenerate = False
    errs = []
    for lit, idl, t in (
        (litmus.p_private, ideal.p_private, slices.t_private),
        (litmus.p_shared, ideal.p_shared, slices.t_shared),
    ):
        if idl == 0:
            degenerate = True
            errs.append(0.0)
        else:
            errs.append((lit - idl) / idl * (t / slices.t_total))
    total = (litmus.p_total - ideal.p_total) / ideal.p_total
    return WeightedError(errs[0], errs[1], total, degenerate)
