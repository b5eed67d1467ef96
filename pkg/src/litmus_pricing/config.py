"""Scenario configuration: a flat ``key = value`` file.

Lists are comma separated; ``calibration.levels`` also accepts ranges such
as ``1-31`` or ``1-10,20,31``. Unknown keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .calibration import DEFAULT_LEVELS
from .core import check_level
from .machine import SharingOverheadModel, sharing_factor
from .traffic import GeneratorProfile, check_profiles
from .workload import DEFAULT_MEMORY_INTENSIVE, DEFAULT_REFERENCES

SHARING_METHODS = ("none", "method1", "method2")
PROBES = ("py", "nj", "go", "mean")
TIMINGS = ("own_start", "most_recent")


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _names(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _levels(s: str) -> tuple[int, ...]:
    out = []
    for part in _names(s):
        if "-" in part:
            lo, hi = (int(p) for p in part.split("-", 1))
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _opt_float(s: str) -> Optional[float]:
    return None if s.strip().lower() in ("", "auto", "none") else float(s)


def _opt_path(s: str) -> Optional[str]:
    return None if s.strip().lower() in ("", "default", "none") else s.strip()


# config key -> (dataclass field, parser)
KEYS = {
    "seed": ("seed", int),
    "workload_file": ("workload_file", _opt_path),
    "references": ("reference_names", _names),
    "memory_intensive": ("memory_intensive_names", _names),
    "memory_intensive_bias": ("memory_intensive_bias", _bool),
    "co_runners": ("co_runners", int),
    "cores": ("cores", int),
    "sharing_method": ("sharing_method", str),
    "repetitions": ("repetitions", int),
    "churn.steps": ("churn_steps", int),
    "churn.step_cycles": ("step_cycles", float),
    "generator.ct.alpha_pre": ("ct_alpha_pre", float),
    "generator.mb.alpha_pre": ("mb_alpha_pre", float),
    "generator.mb.alpha_post": ("mb_alpha_post", float),
    "calibration.levels": ("levels", _levels),
    "litmus.probe": ("probe", str),
    "litmus.timing": ("probe_timing", str),
    "estimator.fit_on": ("fit_on", str),
    "sharing.kappa": ("kappa", float),
    "sharing.plateau_n": ("plateau_n", int),
    "method1.divisor": ("method1_divisor", _opt_float),
}


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 42
    workload_file: Optional[str] = None  # None: bundled population
    reference_names: tuple[str, ...] = DEFAULT_REFERENCES
    memory_intensive_names: tuple[str, ...] = DEFAULT_MEMORY_INTENSIVE
    memory_intensive_bias: bool = False
    co_runners: int = 26
    cores: int = 32
    sharing_method: str = "none"
    repetitions: int = 30
    churn_steps: int = 2000
    step_cycles: float = 1e8
    ct_alpha_pre: float = 1.0
    mb_alpha_pre: float = 0.6
    mb_alpha_post: float = 1.0
    levels: tuple[int, ...] = DEFAULT_LEVELS
    probe: str = "py"
    probe_timing: str = "own_start"
    fit_on: str = "component"
    kappa: float = 0.025
    plateau_n: int = 20
    method1_divisor: Optional[float] = None  # None: sharing_factor at functions_per_core

    def __post_init__(self):
        try:
            self.validate()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        if self.co_runners < 1 or self.cores < 1:
            raise ValueError("co_runners and cores must be >= 1")
        if self.sharing_method not in SHARING_METHODS:
            raise ValueError(f"sharing_method must be one of {SHARING_METHODS}")
        if self.repetitions < 1 or self.churn_steps < 2 or self.step_cycles <= 0:
            raise ValueError("repetitions, churn.steps and churn.step_cycles must be positive")
        if self.probe not in PROBES:
            raise ValueError(f"litmus.probe must be one of {PROBES}")
        if self.probe_timing not in TIMINGS:
            raise ValueError(f"litmus.timing must be one of {TIMINGS}")
        if self.fit_on not in ("component", "total"):
            raise ValueError("estimator.fit_on must be 'component' or 'total'")
        if self.method1_divisor is not None and self.method1_divisor < 1:
            raise ValueError("method1.divisor must be >= 1")
        for lv in self.levels:
            check_level(lv)
        if len(self.levels) < 2 or any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("calibration.levels needs >= 2 strictly increasing levels")
        check_profiles(*self.profiles())
        SharingOverheadModel(self.kappa, self.plateau_n)
        if not self.reference_names:
            raise ValueError("reference set is empty")

    def profiles(self) -> tuple[GeneratorProfile, GeneratorProfile]:
        return (
            GeneratorProfile("CT", self.ct_alpha_pre, 0.0),
            GeneratorProfile("MB", self.mb_alpha_pre, self.mb_alpha_post),
        )

    def sharing_model(self) -> SharingOverheadModel:
        return SharingOverheadModel(self.kappa, self.plateau_n)

    @property
    def functions_per_core(self) -> int:
        return max(1, round(self.co_runners / self.cores))

    @property
    def duty(self) -> float:
        """Fraction of co-runners on a core at any instant."""
        return min(1.0, self.cores / self.co_runners)

    def sharing_adjustment(self) -> float:
        if self.sharing_method != "method1":
            return 1.0
        if self.method1_divisor is not None:
            return self.method1_divisor
        return sharing_factor(self.sharing_model(), self.functions_per_core)

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for key, (attr, _) in KEYS.items():
            v = getattr(self, attr)
            out[key] = list(v) if isinstance(v, tuple) else v
        return out


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str  # keep key case
    try:
        cp.read_string("[scenario]\n" + text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    kwargs = {}
    for key, raw in cp["scenario"].items():
        if key not in KEYS:
            raise ConfigError(f"{source}: unknown key {key!r}")
        attr, conv = KEYS[key]
        try:
            kwargs[attr] = conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{source}: bad value for {key}: {exc}") from exc
    return ScenarioConfig(**kwargs)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config(text, str(path))
    if cfg.workload_file is not None and not Path(cfg.workload_file).is_absolute():
        # relative workload paths resolve against the config file
        cfg = cfg.replace(workload_file=str((path.parent / cfg.workload_file).resolve()))
    return cfg
