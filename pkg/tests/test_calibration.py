import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from litmus_pricing.calibration import (
    DEFAULT_LEVELS,
    DEFAULT_PROBES,
    CongestionRow,
    CongestionTable,
    EmptyInput,
    NonMonotoneTable,
    NonPositiveValue,
    PerformanceTable,
    StartupSpec,
    build_congestion_table,
    build_performance_table,
    calibrate,
    gmean,
    measure_startup,
    read_congestion_table,
    read_performance_table,
    write_congestion_table,
    write_performance_table,
)
from litmus_pricing.core import ZERO, CongestionVector, FunctionSpec, Sensitivity, TimeSlices
from litmus_pricing.machine import execute
from litmus_pricing.traffic import CT_DEFAULT, MB_DEFAULT, GeneratorProfile, congestion_at
from litmus_pricing.workload import DEFAULT_REFERENCES, load_default_workload


@pytest.fixture(scope="module")
def refs():
    return [e.spec for e in load_default_workload() if e.name in DEFAULT_REFERENCES]


@pytest.fixture(scope="module")
def tables(refs):
    return calibrate(refs, probe="py")


def test_startup_solo_identity(worked_spec):
    sd, l3 = measure_startup(worked_spec, ZERO, 1)
    assert tuple(sd) == (1.0, 1.0, 1.0)
    assert l3 == worked_spec.base_l3_misses


def test_startup_under_pre_l3_traffic(worked_spec):
    sd, _ = measure_startup(worked_spec, CongestionVector(10, 0), 1)
    assert sd.private == pytest.approx(1.01, rel=1e-14)
    assert sd.shared == pytest.approx(1.5, rel=1e-14)
    assert sd.total == pytest.approx((909 + 150) / 1000, rel=1e-14)


def test_startup_zero_shared_slice_reports_one():
    probe = FunctionSpec("p", "py", TimeSlices(100.0, 0.0), Sensitivity(0.2, 0.2), Sensitivity(0.1, 0.1))
    sd, _ = measure_startup(probe, CongestionVector(30, 30), 4)
    assert sd.shared == 1.0
    assert sd.private > 1.0


def test_gmean_examples():
    assert gmean([1.0, 1.0, 1.0]) == 1.0
    assert gmean([2.0, 8.0]) == pytest.approx(4.0, rel=1e-15)


def test_gmean_matches_product_root():
    rng = np.random.default_rng(13)
    for _ in range(50):
        vals = rng.uniform(0.5, 3.0, 13)
        assert gmean(vals) == pytest.approx(math.prod(vals) ** (1 / 13), rel=1e-12)


def test_gmean_errors():
    with pytest.raises(EmptyInput):
        gmean([])
    with pytest.raises(NonPositiveValue):
        gmean([1.0, 0.0])


def test_zero_alpha_single_level():
    flat = (GeneratorProfile("CT", 0.0, 0.0), GeneratorProfile("MB", 0.0, 0.0))
    ct = build_congestion_table(DEFAULT_PROBES, flat, [1])
    assert all((r.su_private, r.su_shared, r.su_total) == (1.0, 1.0, 1.0) for r in ct.rows)


def test_ct_never_inflates_l3(tables):
    ct_rows = tables.congestion.sub("CT")
    assert len(ct_rows) == 31
    base = DEFAULT_PROBES.probes["py"].base_l3_misses
    assert all(r.l3_misses == base for r in ct_rows)


def test_mb_l3_strictly_increasing(tables):
    vals = [r.l3_misses for r in tables.congestion.sub("MB")]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_probe_mean_averages_runtimes():
    c = congestion_at(MB_DEFAULT, 7)
    table = build_congestion_table(DEFAULT_PROBES, (CT_DEFAULT, MB_DEFAULT), [7, 8], probe="mean")
    each = [measure_startup(p, c)[0].shared for p in DEFAULT_PROBES.probes.values()]
    assert table.row("MB", 7).su_shared == pytest.approx(sum(each) / 3, rel=1e-14)


def test_insensitive_refs_give_unit_table():
    flat = [FunctionSpec(f"f{i}", "py", TimeSlices(10.0 + i, 3.0)) for i in range(4)]
    pt = build_performance_table(flat, levels=[1, 5, 31])
    assert all((r.ref_private, r.ref_shared, r.ref_total) == (1.0, 1.0, 1.0) for r in pt.rows)


def test_singleton_reference_table(worked_spec):
    pt = build_performance_table([worked_spec], levels=[3, 9])
    rec = execute(worked_spec, congestion_at(MB_DEFAULT, 9))
    assert pt.row("MB", 9).ref_shared == pytest.approx(rec.slices.t_shared / 100.0, rel=1e-14)


def test_performance_table_brute_force_mb14(refs, tables):
    assert len(refs) == 13
    c = CongestionVector(0.6 * 14, 1.0 * 14)
    prod = {"private": 1.0, "shared": 1.0, "total": 1.0}
    for r in refs:
        # slowdowns written out from the affine law, not via execute()
        sp = 1 + r.sens_private.pre_l3 * c.pre_l3 + r.sens_private.post_l3 * c.post_l3
        ss = 1 + r.sens_shared.pre_l3 * c.pre_l3 + r.sens_shared.post_l3 * c.post_l3
        tp, ts = r.base.t_private * sp, r.base.t_shared * ss
        prod["private"] *= sp
        prod["shared"] *= ss
        prod["total"] *= (tp + ts) / r.base.t_total
    row = tables.performance.row("MB", 14)
    assert row.ref_private == pytest.approx(prod["private"] ** (1 / 13), rel=1e-12)
    assert row.ref_shared == pytest.approx(prod["shared"] ** (1 / 13), rel=1e-12)
    assert row.ref_total == pytest.approx(prod["total"] ** (1 / 13), rel=1e-12)


def test_tables_row_correspondent(tables):
    assert tables.congestion.keys() == tables.performance.keys()
    assert len(tables.congestion.rows) == len(tables.performance.rows) == 62


def test_rebuild_is_bit_identical(refs, tables):
    assert calibrate(refs, probe="py") == tables


def test_non_monotone_table_detected():
    rows = (
        CongestionRow("CT", 1, 1.1, 1.2, 1.15, 10.0),
        CongestionRow("CT", 2, 1.05, 1.3, 1.2, 10.0),
    )
    with pytest.raises(NonMonotoneTable, match="su_private"):
        CongestionTable(rows).check_monotone()


def test_levels_must_increase(worked_spec):
    with pytest.raises(ValueError):
        build_performance_table([worked_spec], levels=[3, 3])
    with pytest.raises(ValueError):
        build_performance_table([worked_spec], levels=[])


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.01, 3.0),
    st.floats(0.0, 0.99),
    st.floats(0.01, 3.0),
    st.lists(st.integers(1, 31), min_size=1, max_size=8, unique=True),
)
def test_tables_monotone_for_valid_profiles(refs, ct_pre, mb_ratio, mb_post, levels):
    profiles = (GeneratorProfile("CT", ct_pre, 0.0), GeneratorProfile("MB", ct_pre * mb_ratio, mb_post))
    levels = sorted(levels)
    # construction runs check_monotone and would raise
    calibrate(refs, DEFAULT_PROBES, profiles, levels)


def test_csv_round_trip(tables, tmp_path):
    write_congestion_table(tables.congestion, tmp_path / "c.csv")
    write_performance_table(tables.performance, tmp_path / "p.csv")
    assert read_congestion_table(tmp_path / "c.csv") == tables.congestion
    assert read_performance_table(tmp_path / "p.csv") == tables.performance
    header = (tmp_path / "c.csv").read_text().splitlines()[0]
    assert header == "generator,level,su_private,su_shared,su_total,l3_misses"
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "generator,level,ref_private,ref_shared,ref_total"


def test_csv_bad_header(tmp_path):
    (tmp_path / "c.csv").write_text("a,b\n")
    with pytest.raises(ValueError, match="header"):
        read_congestion_table(tmp_path / "c.csv")


def test_startup_spec_rejects_mislabelled_probe(worked_spec):
    with pytest.raises(ValueError):
        StartupSpec({"go": worked_spec})
