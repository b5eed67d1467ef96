"""Workload CSV format and the bundled synthetic function population."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .calibration import gmean
from .core import CongestionVector, FunctionSpec, Sensitivity, TimeSlices, validate_spec

WORKLOAD_COLUMNS = (
    "name",
    "runtime",
    "base_t_private",
    "base_t_shared",
    "sens_shared_pre",
    "sens_shared_post",
    "sens_private_pre",
    "sens_private_post",
    "base_l3",
    "l3_sens",
    "memory_gb",
    "footprint_pre",
    "footprint_post",
)

# 27 functions, 13 of them references, named after common serverless benchmarks.
DEFAULT_FUNCTIONS = (
    ("dyn-py", "py"), ("thum-py", "py"), ("compre-py", "py"), ("recogn-py", "py"),
    ("pager-py", "py"), ("mst-py", "py"), ("bfs-py", "py"), ("visual-py", "py"),
    ("geo-go", "go"), ("profile-go", "go"), ("rate-go", "go"), ("chame-py", "py"),
    ("float-py", "py"), ("gzip-py", "py"), ("randDisk-py", "py"), ("seqDisk-py", "py"),
    ("cur-nj", "nj"), ("pay-nj", "nj"), ("auth-py", "py"), ("auth-nj", "nj"),
    ("auth-go", "go"), ("fib-py", "py"), ("fib-nj", "nj"), ("fib-go", "go"),
    ("aes-py", "py"), ("aes-nj", "nj"), ("aes-go", "go"),
)
DEFAULT_REFERENCES = (
    "thum-py", "bfs-py", "visual-py", "gzip-py", "randDisk-py", "cur-nj", "profile-go",
    "auth-py", "fib-py", "fib-nj", "aes-nj", "fib-go", "aes-go",
)
DEFAULT_MEMORY_INTENSIVE = (
    "aes-py", "compre-py", "thum-py", "bfs-py", "auth-py", "fib-go", "geo-go", "profile-go",
)
COMPUTE_BOUND = ("float-py", "fib-py", "fib-nj", "chame-py")

# centre of the population's congestion sensitivities
SHARED_SENS = Sensitivity(0.06, 0.18)
PRIVATE_SENS = Sensitivity(0.0015, 0.0037)
POPULATION_SEED = 20240611


@dataclass(frozen=True)
class WorkloadEntry:
    spec: FunctionSpec
    footprint: CongestionVector  # congestion this function adds while it runs

    @property
    def name(self) -> str:
        return self.spec.name


def generate_default_population(seed: int = POPULATION_SEED) -> list[WorkloadEntry]:
    """Draw the bundled population.

    References get +-8% jitter around the sensitivity centre, test functions
    +-35%, so references are representative without being identical to
    what they stand in for.
    """
    rng = np.random.default_rng(seed)
    out = []
    for name, runtime in DEFAULT_FUNCTIONS:
        is_ref = name in DEFAULT_REFERENCES
        is_mem = name in DEFAULT_MEMORY_INTENSIVE
        spread = 0.08 if is_ref else 0.35
        t_total = float(np.exp(rng.uniform(math.log(2e8), math.log(2e9))))
        if name in COMPUTE_BOUND:
            frac = rng.uniform(0.0004, 0.01)
        elif is_mem:
            frac = rng.uniform(0.08, 0.30)
        else:
            frac = rng.uniform(0.01, 0.12)
        j = rng.uniform(1 - spread, 1 + spread, size=4)
        shared = Sensitivity(SHARED_SENS.pre_l3 * j[0], SHARED_SENS.post_l3 * j[1])
        private = Sensitivity(PRIVATE_SENS.pre_l3 * j[2], PRIVATE_SENS.post_l3 * j[3])
        if is_mem:
            fp = CongestionVector(rng.uniform(0.6, 0.9), rng.uniform(0.4, 0.7))
        else:
            fp = CongestionVector(rng.uniform(0.25, 0.55), rng.uniform(0.05, 0.30))
        spec = FunctionSpec(
            name=name,
            runtime=runtime,
            base=TimeSlices(round(t_total * (1 - frac)), round(t_total * frac)),
            sens_shared=Sensitivity(*(round(v, 6) for v in shared)),
            sens_private=Sensitivity(*(round(v, 7) for v in private)),
            base_l3_misses=float(round(t_total * rng.uniform(2e-5, 2e-4) * (3 if is_mem else 1))),
            l3_sensitivity=round(rng.uniform(0.3, 0.6), 4),
            memory_gb=float(rng.choice([0.128, 0.256, 0.512, 1.0, 2.0])),
        )
        fp = CongestionVector(round(fp.pre_l3, 4), round(fp.post_l3, 4))
        out.append(WorkloadEntry(validate_spec(spec), fp))
    return out


def reference_equivalent(refs: Sequence[FunctionSpec], name: str = "ref-equivalent") -> FunctionSpec:
    """A single function standing for the reference set.

    Each sensitivity is the geometric mean of the references' per-unit
    slowdown factors (1 + s), minus one; slices are geometric means too.
    """
    if not refs:
        raise ValueError("need at least one reference")

    def g(values):
        return gmean(1.0 + v for v in values) - 1.0

    return validate_spec(
        FunctionSpec(
            name=name,
            runtime="py",
            base=TimeSlices(gmean(r.base.t_private for r in refs), gmean(r.base.t_shared for r in refs)),
            sens_shared=Sensitivity(g(r.sens_shared.pre_l3 for r in refs), g(r.sens_shared.post_l3 for r in refs)),
            sens_private=Sensitivity(
                g(r.sens_private.pre_l3 for r in refs), g(r.sens_private.post_l3 for r in refs)
            ),
            base_l3_misses=gmean(max(r.base_l3_misses, 1.0) for r in refs),
            l3_sensitivity=g(r.l3_sensitivity for r in refs),
        )
    )


def _fmt(v) -> str:
    return repr(float(v))


def write_workload(entries: Sequence[WorkloadEntry], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(WORKLOAD_COLUMNS)
        for e in entries:
            s = e.spec
            w.writerow(
                [s.name, s.runtime]
                + [
                    _fmt(v)
                    for v in (
                        s.base.t_private, s.base.t_shared, *s.sens_shared, *s.sens_private,
                        s.base_l3_misses, s.l3_sensitivity, s.memory_gb,
                        e.footprint.pre_l3, e.footprint.post_l3,
                    )
                ]
            )


def read_workload(path) -> list[WorkloadEntry]:
    path = Path(path)
    out = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != WORKLOAD_COLUMNS:
            raise ValueError(f"{path}: header must be {','.join(WORKLOAD_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                f = {k: float(row[k]) for k in WORKLOAD_COLUMNS[2:]}
                spec = FunctionSpec(
                    name=row["name"],
                    runtime=row["runtime"],
                    base=TimeSlices(f["base_t_private"], f["base_t_shared"]),
                    sens_shared=Sensitivity(f["sens_shared_pre"], f["sens_shared_post"]),
                    sens_private=Sensitivity(f["sens_private_pre"], f["sens_private_post"]),
                    base_l3_misses=f["base_l3"],
                    l3_sensitivity=f["l3_sens"],
                    memory_gb=f["memory_gb"],
                )
                out.append(
                    WorkloadEntry(validate_spec(spec), CongestionVector(f["footprint_pre"], f["footprint_post"]))
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    names = [e.name for e in out]
    if len(set(names)) != len(names):
        raise ValueError(f"{path}: duplicate function names")
    return out


def default_workload_path() -> Path:
    return Path(str(resources.files("litmus_pricing") / "data" / "workload.csv"))


def load_default_workload() -> list[WorkloadEntry]:
    return read_workload(default_workload_path())
