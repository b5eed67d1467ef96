"""The two synthetic traffic generators used to calibrate the tables.

CT stresses the path from the cores up to the L3 (misses L2, hits L3).
MB misses the L3 and eats memory bandwidth; its own L3 misses throttle it,
so it pushes less pre-L3 traffic per thread than CT does.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import CongestionVector, check_level

GENERATORS = ("CT", "MB")


@dataclass(frozen=True)
class GeneratorProfile:
    kind: str
    alpha_pre: float
    alpha_post: float

    def __post_init__(self):
        if self.kind not in GENERATORS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.alpha_pre < 0 or self.alpha_post < 0:
            raise ValueError(f"{self.kind}: per-thread intensities must be >= 0")


CT_DEFAULT = GeneratorProfile("CT", alpha_pre=1.0, alpha_post=0.0)
MB_DEFAULT = GeneratorProfile("MB", alpha_pre=0.6, alpha_post=1.0)


def check_profiles(ct: GeneratorProfile, mb: GeneratorProfile) -> None:
    """Raise ValueError unless (ct, mb) bracket the congestion space."""
    if ct.kind != "CT" or mb.kind != "MB":
        raise ValueError("expected a (CT, MB) profile pair")
    if ct.alpha_post != 0:
        raise ValueError("CT profile must not generate post-L3 traffic")
    if ct.alpha_pre <= 0:
        raise ValueError("CT profile needs alpha_pre > 0")
    if mb.alpha_post <= 0:
        raise ValueError("MB profile needs alpha_post > 0")
    if not mb.alpha_pre < ct.alpha_pre:
        raise ValueError("MB alpha_pre must stay below CT alpha_pre (self-throttling)")


def congestion_at(profile: GeneratorProfile, level: int) -> CongestionVector:
    level = check_level(level)
    return CongestionVector(profile.alpha_pre * level, profile.alpha_post * level)
