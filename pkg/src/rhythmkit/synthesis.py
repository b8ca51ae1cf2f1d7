"""Desk-scale copy-synthesis: mel inversion plus iterative phase estimation.

Stands in for a neural vocoder so the augmentation loop closes locally; the
F0 track is carried through untouched for external vocoders that want it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dsp
from .audio_io import AudioBuffer
from .errors import ShapeMismatchError
from .features import FeatureBundle, FeatureConfig, extract_features, mel_filterbank
from .rpm import RpmConfig, SegmentPlan, rhythm_perturb

OUTPUT_PEAK = 0.95

# Tikhonov weight for the mel pseudo-inverse, scaled by the mean diagonal
# energy of filterbank @ filterbank.T.
MEL_INV_LAMBDA = 1e-5


@dataclass(frozen=True)
class GriffinLimConfig:
    n_iters: int = 60
    init_phase: str = "zeros"  # "zeros" | "random"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_iters < 1:
            raise ValueError(f"n_iters must be >= 1, got {self.n_iters}")
        if self.init_phase not in ("zeros", "random"):
            raise ValueError(f"init_phase must be 'zeros' or 'random', got {self.init_phase!r}")


@dataclass(frozen=True)
class GriffinLimResult:
    audio: AudioBuffer
    # Spectral distance || |STFT(x_k)| - target || after each iteration,
    # objective[0] being the initial waveform's distance.
    objective: np.ndarray


@dataclass(frozen=True)
class CopySynthesisResult:
    audio: AudioBuffer
    plan: SegmentPlan | None
    features: FeatureBundle


def mel_to_linear(mel: np.ndarray, filterbank: np.ndarray) -> np.ndarray:
    """Invert log-mel frames to linear magnitude frames.

    Solves the underdetermined power reconstruction with a Tikhonov-regularized
    pseudo-inverse of the filterbank, clips negatives to zero and takes the
    square root (power -> magnitude).
    """
    mel = np.asarray(mel, dtype=np.float64)
    fb = np.asarray(filterbank, dtype=np.float64)
    if mel.ndim != 2 or mel.shape[1] != fb.shape[0]:
        raise ShapeMismatchError(
            f"mel frames of shape {mel.shape} do not match filterbank with {fb.shape[0]} bands"
        )
    gram = fb @ fb.T
    lam = MEL_INV_LAMBDA * np.trace(gram) / fb.shape[0]
    weights = np.linalg.solve(gram + lam * np.eye(fb.shape[0]), np.exp(mel).T)
    power = np.maximum(fb.T @ weights, 0.0)
    return np.sqrt(power).T


def _stft(x: np.ndarray, spec: dsp.FrameSpec, n_fft: int) -> np.ndarray:
    return np.fft.rfft(dsp.frame_signal(x, spec), n=n_fft, axis=1)


def _spectral_distance(mags: np.ndarray, target: np.ndarray) -> float:
    """Frobenius distance between magnitude spectrograms, with interior rfft
    bins double-weighted so the norm equals the full-spectrum one (the norm
    in which both Griffin-Lim projection steps are optimal)."""
    sq = (mags - target) ** 2
    return float(np.sqrt(np.sum(sq[:, [0, -1]]) + 2.0 * np.sum(sq[:, 1:-1])))


def _istft_least_squares(spectra: np.ndarray, spec: dsp.FrameSpec, n_fft: int) -> np.ndarray:
    """Least-squares inverse STFT: window-weighted frames over a squared-window
    envelope. This is the projection Griffin-Lim's convergence proof needs,
    unlike the amplitude-normalized overlap_add in dsp."""
    frames = np.fft.irfft(spectra, n=n_fft, axis=1)[:, : spec.win_length]
    n, win = frames.shape
    hop = spec.hop_length
    w = spec.window_array()
    out = np.zeros((n - 1) * hop + win)
    env = np.zeros_like(out)
    for i in range(n):
        start = i * hop
        out[start : start + win] += frames[i] * w
        env[start : start + win] += w * w
    return out / np.maximum(env, dsp.OLA_ENVELOPE_FLOOR)


def griffin_lim(
    magnitudes: np.ndarray,
    spec: dsp.FrameSpec,
    cfg: GriffinLimConfig,
    sample_rate: int,
) -> GriffinLimResult:
    """Classic momentum-free alternating projection onto the target magnitudes.

    The spectral distance || |STFT(x_k)| - M ||_F is non-increasing across
    iterations; the final waveform is peak-normalized to 0.95.
    """
    target = np.asarray(magnitudes, dtype=np.float64)
    if target.ndim != 2:
        raise ShapeMismatchError(f"magnitudes must be 2-D, got shape {target.shape}")
    if not np.all(np.isfinite(target)) or np.any(target < 0.0):
        raise ValueError("magnitudes must be finite and nonnegative")
    n_fft = 2 * (target.shape[1] - 1)
    if spec.win_length > n_fft:
        raise ShapeMismatchError(
            f"win_length {spec.win_length} exceeds n_fft {n_fft} implied by the magnitudes"
        )
    if cfg.init_phase == "zeros":
        phase = np.ones_like(target, dtype=np.complex128)
    else:
        rng = np.random.default_rng(cfg.seed)
        phase = np.exp(2j * np.pi * rng.random(target.shape))
    x = _istft_least_squares(target * phase, spec, n_fft)
    objective = np.empty(cfg.n_iters + 1)
    for it in range(cfg.n_iters + 1):
        spectra = _stft(x, spec, n_fft)
        mags = np.abs(spectra)
        objective[it] = _spectral_distance(mags, target)
        if it == cfg.n_iters:
            break
        # Keep measured phase, impose target magnitude; guard zero bins.
        unit = np.where(mags > 0.0, spectra / np.maximum(mags, 1e-300), 1.0)
        x = _istft_least_squares(target * unit, spec, n_fft)
    peak = np.max(np.abs(x))
    if peak > 0.0:
        x = x * (OUTPUT_PEAK / peak)
    return GriffinLimResult(
        audio=AudioBuffer(samples=x, sample_rate=sample_rate), objective=objective
    )


def copy_synthesize(
    audio: AudioBuffer,
    feat_cfg: FeatureConfig,
    rpm_cfg: RpmConfig | None,
    gl_cfg: GriffinLimConfig,
    utt_id: str,
) -> CopySynthesisResult:
    """Re-synthesize an utterance from its own features, optionally passing the
    feature timeline through the rhythm perturbation module first.

    Returns the audio, the segment plan (None without RPM) and the features
    actually rendered, so callers can serialize all three.
    """
    bundle = extract_features(audio, feat_cfg)
    plan = None
    if rpm_cfg is not None:
        bundle, plan = rhythm_perturb(bundle, rpm_cfg, utt_id, f0_floor=feat_cfg.f0_min)
    fb = mel_filterbank(feat_cfg, audio.sample_rate)
    magnitudes = mel_to_linear(bundle.mel, fb)
    result = griffin_lim(magnitudes, feat_cfg.frame, gl_cfg, audio.sample_rate)
    return CopySynthesisResult(audio=result.audio, plan=plan, features=bundle)
