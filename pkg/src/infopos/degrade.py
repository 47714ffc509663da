"""Data-quality degradation operators for simulating poorer data positions.

Every operator maps a Segment to a Segment, keeps its metadata and is the
exact identity at its neutral parameter value.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .core import MIN_SEGMENT_SAMPLES, EmptySegment, Level, Segment
from .ingest import make_rng


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(int(seed))


def _check_len(seg: Segment, n: int, op: str) -> None:
    if n < MIN_SEGMENT_SAMPLES:
        raise EmptySegment(f"{seg.scenario_id}: {op} left {n} samples in "
                           f"{seg.phase_type} instance {seg.instance_id}")


def jitter(seg: Segment, sigma_rel: float, seed=0) -> Segment:
    """Add Gaussian noise with sd ``sigma_rel * std(values)``."""
    if sigma_rel < 0:
        raise ValueError("sigma_rel must be >= 0")
    if sigma_rel == 0:
        return seg
    sd = sigma_rel * float(np.std(seg.values))
    noise = _rng(seed).standard_normal(len(seg))
    return seg.replace(values=seg.values + sd * noise)


def time_warp(seg: Segment, strength: float, seed=0) -> Segment:
    """Remap timestamps through ``w(t) = t + delta * 4x(1-x)``.

    ``x`` is the position in ``[t_start, t_end]`` and ``delta`` is uniform in
    ``±strength * duration / 4``. The bump has slope at most ``4|delta|/D``,
    so ``w`` stays strictly increasing for ``strength < 1``, fixes both
    endpoints exactly and moves no point by more than ``strength * D / 2``.
    """
    if not 0 <= strength < 1:
        raise ValueError("strength must lie in [0, 1)")
    if strength == 0:
        return seg
    d = seg.duration
    delta = _rng(seed).uniform(-1.0, 1.0) * strength * d / 4.0
    x = (seg.t - seg.t_start) / d
    return seg.replace(t=seg.t + delta * 4.0 * x * (1.0 - x))


def time_mask(seg: Segment, fraction: float, seed=0) -> Segment:
    """Drop every sample inside one random window of ``fraction * duration``."""
    if not 0 <= fraction < 1:
        raise ValueError("fraction must lie in [0, 1)")
    if fraction == 0:
        return seg
    width = fraction * seg.duration
    start = seg.t_start + _rng(seed).uniform(0.0, seg.duration - width)
    keep = (seg.t < start) | (seg.t >= start + width)
    _check_len(seg, int(keep.sum()), "time_mask")
    return seg.replace(t=seg.t[keep], values=seg.values[keep])


def amplitude_scale(seg: Segment, factor: float) -> Segment:
    if factor <= 0:
        raise ValueError("factor must be > 0")
    if factor == 1.0:
        return seg
    return seg.replace(values=seg.values * factor)


def spike_inject(seg: Segment, count: int, magnitude_rel: float, seed=0) -> Segment:
    """Add ``±magnitude_rel * std(values)`` at ``count`` distinct random samples."""
    if count < 0:
        raise ValueError("count must be >= 0")
    if count > len(seg):
        raise ValueError(f"cannot place {count} spikes in {len(seg)} samples")
    if count == 0:
        return seg
    rng = _rng(seed)
    idx = rng.choice(len(seg), size=count, replace=False)
    sign = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    values = seg.values.copy()
    values[idx] += sign * magnitude_rel * float(np.std(seg.values))
    return seg.replace(values=values)


def decimate(seg: Segment, keep_every: int) -> Segment:
    if keep_every < 1:
        raise ValueError("keep_every must be >= 1")
    if keep_every == 1:
        return seg
    _check_len(seg, len(range(0, len(seg), keep_every)), "decimate")
    return seg.replace(t=seg.t[::keep_every], values=seg.values[::keep_every])


OPERATORS: Mapping[str, Callable[..., Segment]] = {
    "jitter": jitter,
    "time_warp": time_warp,
    "time_mask": time_mask,
    "amplitude_scale": amplitude_scale,
    "spike_inject": spike_inject,
    "decimate": decimate,
}
SEEDED = {"jitter", "time_warp", "time_mask", "spike_inject"}


@dataclass(frozen=True)
class OperatorSpec:
    name: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in OPERATORS:
            raise ValueError(f"unknown degradation operator {self.name!r}")


@dataclass(frozen=True)
class DegradationPlan:
    """Ordered operators plus a seed; the empty plan is the Rich identity."""

    operators: tuple[OperatorSpec, ...] = ()
    seed: int = 0
    position: Level = Level.RICH
    name: str = "identity"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "position": self.position.title,
            "seed": self.seed,
            "operators": [{"op": o.name, **dict(o.params)} for o in self.operators],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> DegradationPlan:
        ops = []
        for o in doc.get("operators", []):
            o = dict(o)
            ops.append(OperatorSpec(o.pop("op"), o))
        return cls(tuple(ops), int(doc.get("seed", 0)),
                   Level.parse(doc.get("position", "Rich")), str(doc.get("name", "identity")))


def _stable_id(text: str) -> int:
    return zlib.crc32(text.encode("utf-8"))


def apply_plan(seg: Segment, plan: DegradationPlan, segment_index: int | None = None) -> Segment:
    """Apply the plan's operators in order.

    Randomness for operator ``k`` is keyed by (plan seed, scenario id,
    segment index, k), so results do not depend on processing order. The
    default segment index is derived from the phase type and instance id,
    which gives one physical phase instance the same degradation under every
    phase selector.
    """
    if segment_index is None:
        segment_index = _stable_id(seg.phase_type) * 1_000_003 + seg.instance_id
    for k, op in enumerate(plan.operators):
        fn = OPERATORS[op.name]
        if op.name in SEEDED:
            rng = make_rng(plan.seed, _stable_id(seg.scenario_id), segment_index, k)
            seg = fn(seg, seed=rng, **op.params)
        else:
            seg = fn(seg, **op.params)
    return seg


def apply_plan_all(segments: Sequence[Segment], plan: DegradationPlan) -> list[Segment]:
    return [apply_plan(s, plan) for s in segments]
