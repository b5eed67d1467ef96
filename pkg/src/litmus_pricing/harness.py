"""Scenario engine: co-runner churn, calibration, pricing runs and reports."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .calibration import DEFAULT_PROBES, CalibrationTables, StartupSpec, calibrate
from .config import ConfigError, ScenarioConfig
from .core import CongestionVector, PriceBreakdown, TimeSlices
from .estimator import DiscountModelSet, fit_models, run_litmus_test
from .machine import execute
from .pricing import commercial_price, ideal_price, litmus_price, weighted_error
from .workload import WorkloadEntry, load_default_workload, read_workload

REPORT_COLUMNS = (
    "function",
    "runtime",
    "norm_commercial",
    "norm_ideal",
    "norm_litmus",
    "ideal_discount",
    "litmus_discount",
    "werr_private",
    "werr_shared",
    "werr_total",
)
AGGREGATE_KEYS = ("mean_ideal_discount", "mean_litmus_discount", "mean_abs_weighted_error")


class InvariantViolation(RuntimeError):
    pass


def lifetime_steps(entry: WorkloadEntry, step_cycles: float) -> int:
    return max(1, math.ceil(entry.spec.base.t_total / step_cycles))


def churn_congestion(
    pool: Sequence[WorkloadEntry],
    co_runners: int,
    seed: int,
    steps: int,
    duty: float = 1.0,
    step_cycles: float = 1e8,
) -> list[CongestionVector]:
    """Ground-truth congestion seen at each step while co-runners churn.

    ``co_runners`` slots each hold a function with some steps left to run.
    The step's congestion is ``duty`` times the summed footprints of the
    occupants. After each step every slot ticks down; an emptied slot is
    refilled with a uniform draw from ``pool`` running its full lifetime.
    Initial occupants start at a random point of their lifetime. Draws come
    from one ``numpy.random.default_rng(seed)`` stream in slot order.
    """
    if not pool:
        raise ValueError("churn pool is empty")
    rng = np.random.default_rng(seed)
    life = [lifetime_steps(e, step_cycles) for e in pool]
    slots = []
    for _ in range(co_runners):
        i = int(rng.integers(len(pool)))
        slots.append([i, int(rng.integers(1, life[i] + 1))])
    seq = []
    for _ in range(steps):
        pre = math.fsum(pool[i].footprint.pre_l3 for i, _ in slots)
        post = math.fsum(pool[i].footprint.post_l3 for i, _ in slots)
        seq.append(CongestionVector(duty * pre, duty * post))
        for slot in slots:
            slot[1] -= 1
            if slot[1] == 0:
                i = int(rng.integers(len(pool)))
                slot[0], slot[1] = i, life[i]
    return seq


def mean_congestion(seq: Sequence[CongestionVector]) -> CongestionVector:
    n = len(seq)
    return CongestionVector(math.fsum(c.pre_l3 for c in seq) / n, math.fsum(c.post_l3 for c in seq) / n)


@dataclass(frozen=True)
class ReportRow:
    function: str
    runtime: str
    norm_commercial: float
    norm_ideal: float
    norm_litmus: float
    ideal_discount: float
    litmus_discount: float
    werr_private: float
    werr_shared: float
    werr_total: float


def compute_aggregates(rows: Sequence[ReportRow]) -> dict:
    if not rows:
        return {k: None for k in AGGREGATE_KEYS}
    n = len(rows)
    return {
        "mean_ideal_discount": math.fsum(r.ideal_discount for r in rows) / n,
        "mean_litmus_discount": math.fsum(r.litmus_discount for r in rows) / n,
        "mean_abs_weighted_error": math.fsum(abs(r.werr_total) for r in rows) / n,
    }


@dataclass
class ScenarioReport:
    rows: list[ReportRow]
    aggregates: dict
    config: dict = field(default_factory=dict)
    seed: Optional[int] = None
    metadata: dict = field(default_factory=dict)

    def check(self) -> None:
        if compute_aggregates(self.rows) != self.aggregates:
            raise InvariantViolation("aggregates do not match the report rows")
        for r in self.rows:
            if r.norm_commercial != 1.0:
                raise InvariantViolation(f"{r.function}: commercial price not normalised to 1")
            if not (r.norm_ideal <= 1.0 and r.norm_litmus <= 1.0):
                raise InvariantViolation(f"{r.function}: price above commercial")
            if not (0.0 <= r.ideal_discount < 1.0 and 0.0 <= r.litmus_discount < 1.0):
                raise InvariantViolation(f"{r.function}: discount outside [0, 1)")


def load_entries(cfg: ScenarioConfig) -> list[WorkloadEntry]:
    if cfg.workload_file is None:
        return load_default_workload()
    try:
        return read_workload(cfg.workload_file)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read workload {cfg.workload_file}: {exc}") from exc


def split_population(cfg: ScenarioConfig, entries: Sequence[WorkloadEntry]):
    """(references, test functions), with the reference set taken from the config."""
    names = {e.name for e in entries}
    missing = [n for n in cfg.reference_names if n not in names]
    if missing:
        raise ConfigError(f"reference functions not in workload: {missing}")
    refs = [e for e in entries if e.name in cfg.reference_names]
    tests = [e for e in entries if e.name not in cfg.reference_names]
    if {e.name for e in refs} & {e.name for e in tests}:
        raise ConfigError("reference and test sets overlap")
    if not tests:
        raise ConfigError("no test functions left after removing references")
    return refs, tests


def churn_pool(cfg: ScenarioConfig, entries: Sequence[WorkloadEntry]) -> list[WorkloadEntry]:
    if not cfg.memory_intensive_bias:
        return list(entries)
    pool = [e for e in entries if e.name in cfg.memory_intensive_names]
    if not pool:
        raise ConfigError("memory_intensive_bias set but no memory-intensive functions in workload")
    return pool


def calibrate_for(cfg: ScenarioConfig, refs: Sequence[WorkloadEntry], probes: StartupSpec = DEFAULT_PROBES):
    """Tables and fitted models; method2 calibrates under the scenario's core sharing."""
    n = cfg.functions_per_core if cfg.sharing_method == "method2" else 1
    tables = calibrate(
        [e.spec for e in refs],
        probes,
        cfg.profiles(),
        cfg.levels,
        n,
        cfg.sharing_model(),
        cfg.probe,
    )
    return tables, fit_models(tables.congestion, tables.performance, cfg.fit_on)


def run_scenario(
    cfg: ScenarioConfig,
    entries: Optional[Sequence[WorkloadEntry]] = None,
    probes: StartupSpec = DEFAULT_PROBES,
    models: Optional[DiscountModelSet] = None,
) -> ScenarioReport:
    """Price every test function under churned congestion.

    Each repetition picks a start step, runs the function over the mean
    congestion of its lifetime window, and reads the probe at the start
    step (or the step before, with ``litmus.timing = most_recent``).
    Per-repetition randomness is keyed by (seed, function index, repetition).
    """
    entries = list(entries) if entries is not None else load_entries(cfg)
    refs, tests = split_population(cfg, entries)
    if models is None:
        _, models = calibrate_for(cfg, refs, probes)
    seq = churn_congestion(
        churn_pool(cfg, entries), cfg.co_runners, cfg.seed, cfg.churn_steps, cfg.duty, cfg.step_cycles
    )
    n = cfg.functions_per_core
    model = cfg.sharing_model()
    adj = cfg.sharing_adjustment()

    rows = []
    for j, entry in enumerate(tests):
        spec = entry.spec
        window = min(lifetime_steps(entry, cfg.step_cycles), cfg.churn_steps - 1)
        tot = {k: [0.0, 0.0] for k in ("commercial", "ideal", "litmus")}
        slices = TimeSlices(0.0, 0.0)
        for r in range(cfg.repetitions):
            rng = np.random.default_rng([cfg.seed, j, r])
            start = int(rng.integers(1, cfg.churn_steps - window + 1))
            c_run = mean_congestion(seq[start : start + window])
            c_probe = seq[start] if cfg.probe_timing == "own_start" else seq[start - 1]
            rec = execute(spec, c_run, n, model)
            reading = run_litmus_test(probes, c_probe, n, model, cfg.probe)
            for key, p in (
                ("commercial", commercial_price(rec, spec.memory_gb)),
                ("ideal", ideal_price(rec, spec.memory_gb)),
                ("litmus", litmus_price(rec, reading, models, spec.memory_gb, adj)),
            ):
                tot[key][0] += p.p_private
                tot[key][1] += p.p_shared
            slices = slices + rec.slices
        k = cfg.repetitions
        com, idl, lit = (
            PriceBreakdown.from_components(tot[key][0] / k, tot[key][1] / k)
            for key in ("commercial", "ideal", "litmus")
        )
        err = weighted_error(lit, idl, slices.scaled(1.0 / k))
        norm_ideal = idl.p_total / com.p_total
        norm_litmus = lit.p_total / com.p_total
        rows.append(
            ReportRow(
                spec.name,
                spec.runtime,
                1.0,
                norm_ideal,
                norm_litmus,
                max(0.0, 1.0 - norm_ideal),
                max(0.0, 1.0 - norm_litmus),
                err.private,
                err.shared,
                err.total,
            )
        )
    c_mean = mean_congestion(seq)
    report = ScenarioReport(
        rows,
        compute_aggregates(rows),
        cfg.to_dict(),
        cfg.seed,
        {
            "error_weights": "congested slice ratios",
            "functions_per_core": n,
            "sharing_adjustment": adj,
            "mean_congestion": [c_mean.pre_l3, c_mean.post_l3],
        },
    )
    report.check()
    return report


# -- report files ------------------------------------------------------------


def emit_report(report: ScenarioReport, path) -> tuple[Path, Path]:
    """Write ``path`` (CSV rows) and a JSON sidecar next to it; returns both paths."""
    report.check()
    path = Path(path)
    sidecar = path.with_suffix(".json")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            for r in report.rows:
                d = asdict(r)
                w.writerow([d["function"], d["runtime"]] + [repr(float(d[c])) for c in REPORT_COLUMNS[2:]])
        doc = {
            "aggregates": report.aggregates,
            "config": report.config,
            "seed": report.seed,
            "metadata": report.metadata,
        }
        sidecar.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"writing report to {path}: {exc}") from exc
    return path, sidecar


def read_report(path) -> ScenarioReport:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != REPORT_COLUMNS:
            raise ValueError(f"{path}: unexpected report header {header}")
        rows = [ReportRow(rec[0], rec[1], *(float(v) for v in rec[2:])) for rec in reader]
    doc = json.loads(path.with_suffix(".json").read_text())
    return ScenarioReport(rows, doc["aggregates"], doc["config"], doc["seed"], doc.get("metadata", {}))
