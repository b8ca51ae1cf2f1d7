"""Rhythm perturbation: random segmentation of the feature timeline with
per-segment linear-interpolation time resampling.

Segment lengths and resampling factors are drawn from a self-contained
splitmix64 stream so identical (seed, utt_id) pairs reproduce bit-identical
output on every platform, independent of batch order or parallelism.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dsp
from .audio_io import AudioBuffer
from .errors import PlanMismatchError
from .features import FeatureBundle

_MASK64 = (1 << 64) - 1

DEFAULT_F0_FLOOR = 50.0


class SplitMix64:
    """Deterministic 64-bit generator (splitmix64 update, bit-exact).

    Uniform floats in [0, 1) take the high 53 bits of each output word.
    """

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def next_int(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return min(lo + int(self.next_float() * (hi - lo + 1)), hi)

    def next_uniform(self, lo: float, hi: float) -> float:
        return lo + self.next_float() * (hi - lo)


def fnv1a64(text: str) -> int:
    """FNV-1a 64-bit hash of the UTF-8 encoding of ``text``."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


@dataclass(frozen=True)
class RpmConfig:
    seg_min: int = 19
    seg_max: int = 32
    factor_lo: float = 0.5
    factor_hi: float = 1.5
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.seg_min <= self.seg_max:
            raise ValueError(f"need 1 <= seg_min <= seg_max, got [{self.seg_min}, {self.seg_max}]")
        if not 0.0 < self.factor_lo <= self.factor_hi:
            raise ValueError(
                f"need 0 < factor_lo <= factor_hi, got [{self.factor_lo}, {self.factor_hi}]"
            )


@dataclass(frozen=True)
class Segment:
    start: int
    length: int
    factor: float


@dataclass(frozen=True)
class SegmentPlan:
    """Contiguous, in-order tiling of [0, total_frames) with per-segment factors."""

    segments: tuple[Segment, ...]

    @property
    def total_frames(self) -> int:
        if not self.segments:
            return 0
        last = self.segments[-1]
        return last.start + last.length

    def output_frames(self) -> int:
        return sum(dsp.resampled_length(s.length, s.factor) for s in self.segments)

    def tiles(self, total_frames: int) -> bool:
        pos = 0
        for seg in self.segments:
            if seg.start != pos or seg.length < 1:
                return False
            pos += seg.length
        return pos == total_frames

    def to_json(self, utt_id: str, seed: int) -> str:
        doc = {
            "utt_id": utt_id,
            "seed": seed,
            "segments": [
                {"start": s.start, "len": s.length, "factor": s.factor} for s in self.segments
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SegmentPlan":
        doc = json.loads(text)
        return cls(
            segments=tuple(
                Segment(start=s["start"], length=s["len"], factor=s["factor"])
                for s in doc["segments"]
            )
        )


def sample_segment_plan(total_frames: int, cfg: RpmConfig, rng: SplitMix64) -> SegmentPlan:
    """Tile the timeline with segments of random length and factor.

    Per segment two draws, length then factor; the final segment is clipped
    to the frames that remain.
    """
    if total_frames < 1:
        raise ValueError(f"total_frames must be >= 1, got {total_frames}")
    segments = []
    pos = 0
    while pos < total_frames:
        length = rng.next_int(cfg.seg_min, cfg.seg_max)
        factor = rng.next_uniform(cfg.factor_lo, cfg.factor_hi)
        length = min(length, total_frames - pos)
        segments.append(Segment(start=pos, length=length, factor=factor))
        pos += length
    return SegmentPlan(segments=tuple(segments))


def apply_plan(
    bundle: FeatureBundle, plan: SegmentPlan, f0_floor: float = DEFAULT_F0_FLOOR
) -> FeatureBundle:
    """Resample each segment's mel block and F0 slice by the segment's factor.

    F0 is interpolated through unvoiced 0.0 sentinels; interpolated values
    that fall below ``f0_floor`` snap back to 0.0 so no impossible pitch is
    emitted. Framing metadata is copied unchanged.
    """
    if not plan.tiles(bundle.n_frames):
        raise PlanMismatchError(
            f"plan covers {plan.total_frames} frames, bundle has {bundle.n_frames}"
        )
    mel_parts = []
    f0_parts = []
    for seg in plan.segments:
        stop = seg.start + seg.length
        mel_parts.append(dsp.linear_resample(bundle.mel[seg.start : stop], seg.factor))
        f0_seg = dsp.linear_resample(bundle.f0[seg.start : stop], seg.factor)
        f0_seg[f0_seg < f0_floor] = 0.0
        f0_parts.append(f0_seg)
    return FeatureBundle(
        mel=np.concatenate(mel_parts, axis=0),
        f0=np.concatenate(f0_parts),
        sample_rate=bundle.sample_rate,
        hop_length=bundle.hop_length,
        win_length=bundle.win_length,
    )


def rng_for_utterance(seed: int, utt_id: str) -> SplitMix64:
    return SplitMix64(seed ^ fnv1a64(utt_id))


def rhythm_perturb(
    bundle: FeatureBundle,
    cfg: RpmConfig,
    utt_id: str,
    f0_floor: float = DEFAULT_F0_FLOOR,
) -> tuple[FeatureBundle, SegmentPlan]:
    """Sample a segment plan keyed on (seed, utt_id) and apply it.

    Returns the perturbed bundle together with the plan for provenance.
    """
    rng = rng_for_utterance(cfg.seed, utt_id)
    plan = sample_segment_plan(bundle.n_frames, cfg, rng)
    return apply_plan(bundle, plan, f0_floor=f0_floor), plan


def speed_perturb(audio: AudioBuffer, factor: float) -> AudioBuffer:
    """Waveform-domain time scaling: duration scales by ``factor`` while the
    sample_rate field is kept, so every frequency shifts by 1/factor on
    playback. Contrast case to feature-domain rhythm perturbation.
    """
    if factor <= 0.0:
        raise ValueError(f"factor must be positive, got {factor}")
    return AudioBuffer(
        samples=dsp.linear_resample(audio.samples, factor),
        sample_rate=audio.sample_rate,
    )


def write_plan(path: str | Path, plan: SegmentPlan, utt_id: str, seed: int) -> None:
    Path(path).write_text(plan.to_json(utt_id, seed) + "\n", encoding="utf-8")
