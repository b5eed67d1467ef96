"""Exit criteria for the simulator, runnable from pytest or ``litmus check``.

Each check computes its own expected values by a route independent of the
code path it exercises, and enforces its wall-clock budget.
"""

from __future__ import annotations

import functools
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibration import (
    DEFAULT_PROBES,
    Slowdowns,
    read_congestion_table,
    read_performance_table,
    write_congestion_table,
    write_performance_table,
)
from .config import ScenarioConfig
from .core import CongestionVector, FunctionSpec, Sensitivity, TimeSlices
from .estimator import (
    DiscountModelSet,
    GeneratorModels,
    LinearModel,
    LitmusReading,
    LogModel,
    fit_linear,
    fit_log,
    interpolate,
    run_litmus_test,
)
from .harness import calibrate_for, load_entries, run_scenario, split_population
from .machine import DEFAULT_SHARING, execute, sharing_factor
from .pricing import ideal_price, litmus_price
from .traffic import congestion_at
from .workload import reference_equivalent

SCENARIO_SEEDS = tuple(range(10))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    budget: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number}. {self.name}: {self.detail} ({self.elapsed:.2f}s, budget {self.budget:g}s)"


def _timed(number, name, budget):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper() -> CriterionResult:
            t0 = time.perf_counter()
            ok, detail = fn()
            dt = time.perf_counter() - t0
            return CriterionResult(number, name, bool(ok) and dt < budget, detail, dt, budget)

        return wrapper

    return deco


def anchored_models(ct_discount=0.01, mb_discount=0.06, ct_misses=10.0, mb_misses=1000.0) -> DiscountModelSet:
    """Flat regression lines: each generator predicts one discount and one L3 count."""

    def gen(discount, misses):
        line = LinearModel(0.0, 1.0 / (1.0 - discount))
        return GeneratorModels(line, line, line, LogModel(misses, 0.0))

    return DiscountModelSet(gen(ct_discount, ct_misses), gen(mb_discount, mb_misses))


@_timed(1, "interpolation worked example", 1.0)
def interpolation_example():
    models = anchored_models()
    got = {}
    for misses in (10.0, 100.0, 1000.0):
        reading = LitmusReading(Slowdowns(1.0, 1.0, 1.0), misses)
        got[misses] = 1.0 - 1.0 / interpolate(reading, models, "total")
    ok = (
        abs(got[100.0] - 0.035) <= 0.001
        and abs(got[10.0] - 0.010) <= 0.0005
        and abs(got[1000.0] - 0.060) <= 0.0005
    )
    detail = ", ".join(f"{int(m)} misses -> {100 * d:.3f}%" for m, d in got.items())
    return ok, detail


def random_spec(rng: np.random.Generator, name="rand") -> FunctionSpec:
    shared = Sensitivity(*rng.uniform(0, 0.3, 2))
    private = Sensitivity(*(shared[i] * rng.uniform(0, 1) for i in range(2)))
    t_total = float(np.exp(rng.uniform(0, 25)))
    frac = rng.uniform(0, 1)
    return FunctionSpec(
        name,
        str(rng.choice(["py", "nj", "go"])),
        TimeSlices(t_total * (1 - frac), t_total * frac),
        shared,
        private,
        float(rng.uniform(0, 1e6)),
        float(rng.uniform(0, 2)),
        float(rng.uniform(0.05, 8)),
    )


@_timed(2, "ideal-price identity", 5.0)
def ideal_identity(trials: int = 10_000):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(trials):
        spec = random_spec(rng)
        c = CongestionVector(*rng.uniform(0, 40, 2))
        n = int(rng.integers(1, 64))
        rec = execute(spec, c, n)
        expect = spec.memory_gb * spec.base.t_total
        worst = max(worst, abs(ideal_price(rec, spec.memory_gb).p_total - expect) / expect)
    return worst <= 1e-12, f"{trials} triples, worst relative error {worst:.2e}"


@_timed(3, "closed-loop estimator exactness", 10.0)
def closed_loop():
    cfg = ScenarioConfig()
    refs, _ = split_population(cfg, load_entries(cfg))
    _, models = calibrate_for(cfg, refs)
    eq = reference_equivalent([e.spec for e in refs])
    worst, where = 0.0, None
    for prof in cfg.profiles():
        for level in cfg.levels:
            c = congestion_at(prof, level)
            rec = execute(eq, c)
            reading = run_litmus_test(DEFAULT_PROBES, c, 1, DEFAULT_SHARING, cfg.probe)
            lit = litmus_price(rec, reading, models, eq.memory_gb).discount_fraction
            ideal = 1.0 - eq.base.t_total / rec.slices.t_total
            if abs(lit - ideal) >= worst:
                worst, where = abs(lit - ideal), (prof.kind, level)
    n_cells = 2 * len(cfg.levels)
    return worst <= 1e-3, f"{n_cells} cells, worst |litmus - ideal| discount {worst:.2e} at {where}"


@functools.lru_cache(maxsize=None)
def scenario_reports():
    """Every scenario the suite runs, keyed by label."""
    reports = {}
    base = ScenarioConfig()
    for seed in SCENARIO_SEEDS:
        reports[f"26/seed{seed}"] = run_scenario(base.replace(seed=seed))
    for method in ("none", "method1", "method2"):
        reports[f"160/{method}"] = run_scenario(base.replace(co_runners=160, cores=16, sharing_method=method))
    reports["320-heavy"] = run_scenario(
        base.replace(co_runners=320, cores=16, sharing_method="method2", memory_intensive_bias=True)
    )
    return reports


@_timed(4, "end-to-end discount tracking", 60.0)
def end_to_end():
    reports = scenario_reports()
    gaps = []
    for seed in SCENARIO_SEEDS:
        a = reports[f"26/seed{seed}"].aggregates
        gaps.append(abs(a["mean_litmus_discount"] - a["mean_ideal_discount"]))
    heavy = reports["320-heavy"].aggregates["mean_ideal_discount"]
    light = max(reports[f"26/seed{s}"].aggregates["mean_ideal_discount"] for s in SCENARIO_SEEDS)
    ok = max(gaps) <= 0.02 and heavy > light
    detail = f"max gap {max(gaps):.4f} over {len(gaps)} seeds; heavy ideal {heavy:.4f} vs 26 ideal <= {light:.4f}"
    return ok, detail


@_timed(5, "time-sharing overhead anchor", 1.0)
def sharing_anchor():
    f = [sharing_factor(DEFAULT_SHARING, n) for n in range(1, 201)]
    exact = sharing_factor(DEFAULT_SHARING, 10) == 1.025
    nondecreasing = all(b >= a for a, b in zip(f, f[1:]))
    flat = all(v == f[19] for v in f[19:])
    return exact and nondecreasing and flat and f[0] == 1.0, f"f(10)={f[9]!r}, f(20..200)={f[19]:.6f}"


def normal_equations(x, y):
    """Independent OLS: solve (X^T X) beta = X^T y with an intercept column."""
    X = np.column_stack([np.ones(len(x)), np.asarray(x, float)])
    beta = np.linalg.solve(X.T @ X, X.T @ np.asarray(y, float))
    return float(beta[0]), float(beta[1])


@_timed(6, "regression oracle equivalence", 5.0)
def regression_oracle(datasets: int = 100):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(datasets):
        n = int(rng.integers(2, 60))
        x = rng.uniform(0.5, 4.0, n)
        y = rng.normal(0, 5) + rng.normal(0, 5) * x + rng.normal(0, 0.5, n)
        lin = fit_linear(list(zip(x, y)))
        a, b = normal_equations(x, y)
        lg = fit_log(list(zip(x, y)))
        la, lb = normal_equations(np.log(x), y)
        for got, want in ((lin.intercept, a), (lin.slope, b), (lg.a, la), (lg.b, lb)):
            worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    return worst <= 1e-9, f"{datasets} datasets, worst deviation {worst:.2e}"


@_timed(7, "table monotonicity and CSV round-trip", 5.0)
def tables_roundtrip():
    cfg = ScenarioConfig()
    refs, _ = split_population(cfg, load_entries(cfg))
    tables, _ = calibrate_for(cfg, refs)
    mono = True
    for table in (tables.congestion, tables.performance):
        for g in ("CT", "MB"):
            rows = sorted((r for r in table.rows if r.generator == g), key=lambda r: r.level)
            for col in table.columns:
                vals = [getattr(r, col) for r in rows]
                mono &= all(b >= a for a, b in zip(vals, vals[1:]))
    with tempfile.TemporaryDirectory() as tmp:
        cpath, ppath = Path(tmp) / "congestion.csv", Path(tmp) / "performance.csv"
        write_congestion_table(tables.congestion, cpath)
        write_performance_table(tables.performance, ppath)
        same = read_congestion_table(cpath) == tables.congestion and read_performance_table(ppath) == tables.performance
    return mono and same, f"monotone={mono}, round-trip exact={same}"


@_timed(8, "never surcharge", 60.0)
def never_surcharge():
    bad = []
    count = 0
    for label, rep in scenario_reports().items():
        for r in rep.rows:
            count += 1
            if not (r.norm_litmus <= r.norm_commercial and 0.0 <= r.litmus_discount < 1.0 and 0.0 <= r.ideal_discount < 1.0):
                bad.append(f"{label}:{r.function}")
    return not bad, f"{count} priced rows, {len(bad)} surcharged" + (f" ({bad[:3]})" if bad else "")


CRITERIA = (
    interpolation_example,
    ideal_identity,
    closed_loop,
    end_to_end,
    sharing_anchor,
    regression_oracle,
    tables_roundtrip,
    never_surcharge,
)


def run_all() -> list[CriterionResult]:
    return [c() for c in CRITERIA]
