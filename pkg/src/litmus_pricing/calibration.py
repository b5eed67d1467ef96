"""Congestion and performance tables.

Both tables are indexed by (generator, stress level). The congestion table
holds how much the language-runtime startup probes slow down; the
performance table holds the geometric-mean slowdown of the reference
functions in the same cell.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .core import (
    MAX_LEVEL,
    MIN_LEVEL,
    CongestionVector,
    FunctionSpec,
    Sensitivity,
    TimeSlices,
    check_level,
    validate_spec,
)
from .machine import DEFAULT_SHARING, SharingOverheadModel, execute
from .traffic import CT_DEFAULT, MB_DEFAULT, GeneratorProfile, congestion_at

DEFAULT_LEVELS = tuple(range(MIN_LEVEL, MAX_LEVEL + 1))
STARTUP_INSTRUCTIONS = 45e6


class EmptyInput(ValueError):
    pass


class NonPositiveValue(ValueError):
    pass


class NonMonotoneTable(ValueError):
    pass


class Slowdowns(NamedTuple):
    private: float
    shared: float
    total: float


@dataclass(frozen=True)
class StartupSpec:
    """One fixed startup probe per language runtime."""

    probes: dict = field(default_factory=dict)  # runtime -> FunctionSpec
    instruction_budget: float = STARTUP_INSTRUCTIONS

    def __post_init__(self):
        if not self.probes:
            raise ValueError("at least one startup probe is required")
        for runtime, spec in self.probes.items():
            validate_spec(spec)
            if spec.runtime != runtime:
                raise ValueError(f"probe {spec.name} registered under runtime {runtime!r}")

    def select(self, which: str) -> list[FunctionSpec]:
        """``"mean"`` selects every probe; a runtime name selects that probe alone."""
        if which == "mean":
            return [self.probes[k] for k in sorted(self.probes)]
        if which not in self.probes:
            raise KeyError(f"no startup probe for runtime {which!r}")
        return [self.probes[which]]


# The python startup mostly runs in private resources; node and go differ a bit.
DEFAULT_PROBES = StartupSpec(
    {
        "py": FunctionSpec(
            "startup-py", "py", TimeSlices(3.8e7, 2.0e6),
            sens_shared=Sensitivity(0.055, 0.16), sens_private=Sensitivity(0.0016, 0.0040),
            base_l3_misses=2000.0, l3_sensitivity=0.5,
        ),
        "nj": FunctionSpec(
            "startup-nj", "nj", TimeSlices(5.2e7, 3.5e6),
            sens_shared=Sensitivity(0.050, 0.17), sens_private=Sensitivity(0.0014, 0.0042),
            base_l3_misses=3100.0, l3_sensitivity=0.45,
        ),
        "go": FunctionSpec(
            "startup-go", "go", TimeSlices(1.6e7, 0.6e6),
            sens_shared=Sensitivity(0.060, 0.15), sens_private=Sensitivity(0.0017, 0.0036),
            base_l3_misses=700.0, l3_sensitivity=0.55,
        ),
    }
)


def _ratio(num: float, den: float) -> float:
    # a zero solo slice cannot slow down; report it as 1
    return num / den if den > 0 else 1.0


def slowdowns(slices: TimeSlices, solo: TimeSlices) -> Slowdowns:
    return Slowdowns(
        _ratio(slices.t_private, solo.t_private),
        _ratio(slices.t_shared, solo.t_shared),
        _ratio(slices.t_total, solo.t_total),
    )


def measure_startup(
    probe: FunctionSpec,
    c: CongestionVector,
    n: int = 1,
    model: SharingOverheadModel = DEFAULT_SHARING,
) -> tuple[Slowdowns, float]:
    rec = execute(probe, c, n, model)
    return slowdowns(rec.slices, rec.solo), rec.l3_misses


def gmean(values: Iterable[float]) -> float:
    values = list(values)
    if not values:
        raise EmptyInput("geometric mean of an empty sequence")
    for v in values:
        if not v > 0:
            raise NonPositiveValue(f"geometric mean needs positive values, got {v}")
    return math.exp(math.fsum(math.log(v) for v in values) / len(values))


@dataclass(frozen=True)
class CongestionRow:
    generator: str
    level: int
    su_private: float
    su_shared: float
    su_total: float
    l3_misses: float


@dataclass(frozen=True)
class PerformanceRow:
    generator: str
    level: int
    ref_private: float
    ref_shared: float
    ref_total: float


CONGESTION_COLUMNS = ("su_private", "su_shared", "su_total", "l3_misses")
PERFORMANCE_COLUMNS = ("ref_private", "ref_shared", "ref_total")


class _Table:
    rows: tuple
    columns: tuple = ()

    def generators(self) -> list[str]:
        return sorted({r.generator for r in self.rows})

    def sub(self, generator: str) -> list:
        return sorted((r for r in self.rows if r.generator == generator), key=lambda r: r.level)

    def keys(self) -> set[tuple[str, int]]:
        return {(r.generator, r.level) for r in self.rows}

    def row(self, generator: str, level: int):
        for r in self.rows:
            if r.generator == generator and r.level == level:
                return r
        raise KeyError((generator, level))

    def check_monotone(self) -> None:
        for g in self.generators():
            sub = self.sub(g)
            for col in self.columns:
                for prev, cur in zip(sub, sub[1:]):
                    if getattr(cur, col) < getattr(prev, col):
                        raise NonMonotoneTable(
                            f"{g} {col} decreases from level {prev.level} to {cur.level}"
                        )


@dataclass(frozen=True)
class CongestionTable(_Table):
    rows: tuple[CongestionRow, ...]
    columns = CONGESTION_COLUMNS


@dataclass(frozen=True)
class PerformanceTable(_Table):
    rows: tuple[PerformanceRow, ...]
    columns = PERFORMANCE_COLUMNS


@dataclass(frozen=True)
class CalibrationTables:
    congestion: CongestionTable
    performance: PerformanceTable

    def __post_init__(self):
        if self.congestion.keys() != self.performance.keys() or len(self.congestion.rows) != len(
            self.performance.rows
        ):
            raise ValueError("congestion and performance tables are not row-correspondent")


def _check_levels(levels: Sequence[int]) -> list[int]:
    levels = [check_level(lv) for lv in levels]
    if not levels:
        raise ValueError("calibration needs at least one stress level")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("calibration levels must be strictly increasing")
    return levels


def build_congestion_table(
    probes: StartupSpec = DEFAULT_PROBES,
    profiles: Sequence[GeneratorProfile] = (CT_DEFAULT, MB_DEFAULT),
    levels: Sequence[int] = DEFAULT_LEVELS,
    n: int = 1,
    model: SharingOverheadModel = DEFAULT_SHARING,
    probe: str = "mean",
) -> CongestionTable:
    """One row per (generator, level); ``probe`` picks a runtime or averages all."""
    levels = _check_levels(levels)
    chosen = probes.select(probe)
    rows = []
    for prof in profiles:
        for lv in levels:
            c = congestion_at(prof, lv)
            readings = [measure_startup(p, c, n, model) for p in chosen]
            k = len(readings)
            rows.append(
                CongestionRow(
                    prof.kind,
                    lv,
                    math.fsum(s.private for s, _ in readings) / k,
                    math.fsum(s.shared for s, _ in readings) / k,
                    math.fsum(s.total for s, _ in readings) / k,
                    math.fsum(m for _, m in readings) / k,
                )
            )
    table = CongestionTable(tuple(rows))
    table.check_monotone()
    return table


def build_performance_table(
    refs: Sequence[FunctionSpec],
    profiles: Sequence[GeneratorProfile] = (CT_DEFAULT, MB_DEFAULT),
    levels: Sequence[int] = DEFAULT_LEVELS,
    n: int = 1,
    model: SharingOverheadModel = DEFAULT_SHARING,
) -> PerformanceTable:
    if not refs:
        raise EmptyInput("performance table needs at least one reference function")
    levels = _check_levels(levels)
    for r in refs:
        validate_spec(r)
    rows = []
    for prof in profiles:
        for lv in levels:
            c = congestion_at(prof, lv)
            sds = [slowdowns(rec.slices, rec.solo) for rec in (execute(r, c, n, model) for r in refs)]
            rows.append(
                PerformanceRow(
                    prof.kind,
                    lv,
                    gmean(s.private for s in sds),
                    gmean(s.shared for s in sds),
                    gmean(s.total for s in sds),
                )
            )
    table = PerformanceTable(tuple(rows))
    table.check_monotone()
    return table


def calibrate(
    refs: Sequence[FunctionSpec],
    probes: StartupSpec = DEFAULT_PROBES,
    profiles: Sequence[GeneratorProfile] = (CT_DEFAULT, MB_DEFAULT),
    levels: Sequence[int] = DEFAULT_LEVELS,
    n: int = 1,
    model: SharingOverheadModel = DEFAULT_SHARING,
    probe: str = "mean",
) -> CalibrationTables:
    return CalibrationTables(
        build_congestion_table(probes, profiles, levels, n, model, probe),
        build_performance_table(refs, profiles, levels, n, model),
    )


# -- CSV persistence ---------------------------------------------------------


def _write(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([r.generator, r.level] + [repr(float(getattr(r, c))) for c in header[2:]])


def _read(path, header, row_cls):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got is None or tuple(got) != tuple(header):
            raise ValueError(f"{path}: expected header {','.join(header)}, got {got}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields")
            rows.append(row_cls(rec[0], int(rec[1]), *(float(v) for v in rec[2:])))
    return tuple(rows)


def write_congestion_table(table: CongestionTable, path) -> None:
    _write(path, ("generator", "level") + CONGESTION_COLUMNS, table.rows)


def read_congestion_table(path) -> CongestionTable:
    return CongestionTable(_read(path, ("generator", "level") + CONGESTION_COLUMNS, CongestionRow))


def write_performance_table(table: PerformanceTable, path) -> None:
    _write(path, ("generator", "level") + PERFORMANCE_COLUMNS, table.rows)


def read_performance_table(path) -> PerformanceTable:
    return PerformanceTable(_read(path, ("generator", "level") + PERFORMANCE_COLUMNS, PerformanceRow))
