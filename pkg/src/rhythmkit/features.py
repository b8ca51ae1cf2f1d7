"""Vocoder-facing features: log-mel spectrogram and F0 track, time-aligned.

Both extractors share one FrameSpec so mel and F0 always have the same
number of frames. Unvoiced frames carry F0 = 0.0 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dsp
from .audio_io import AudioBuffer
from .errors import TooManyMelsError

MEL_LOG_FLOOR = 1e-10


def hz_to_mel(f: np.ndarray | float) -> np.ndarray | float:
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m: np.ndarray | float) -> np.ndarray | float:
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@dataclass(frozen=True)
class FeatureConfig:
    n_fft: int = 1024
    frame: dsp.FrameSpec = field(default_factory=lambda: dsp.FrameSpec(1024, 256, "hann"))
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float | None = None  # None -> Nyquist
    f0_min: float = 50.0
    f0_max: float = 500.0
    voicing_threshold: float = 0.3

    def __post_init__(self) -> None:
        if self.frame.win_length > self.n_fft:
            raise ValueError(
                f"win_length {self.frame.win_length} exceeds n_fft {self.n_fft}"
            )
        if self.n_mels < 1:
            raise ValueError(f"n_mels must be positive, got {self.n_mels}")
        if not 0.0 < self.f0_min < self.f0_max:
            raise ValueError(f"need 0 < f0_min < f0_max, got [{self.f0_min}, {self.f0_max}]")
        if not 0.0 < self.voicing_threshold < 1.0:
            raise ValueError(f"voicing_threshold must lie in (0,1), got {self.voicing_threshold}")

    def effective_fmax(self, sample_rate: int) -> float:
        nyquist = sample_rate / 2.0
        fmax = nyquist if self.fmax is None else self.fmax
        if not self.fmin < fmax <= nyquist:
            raise ValueError(f"need fmin < fmax <= Nyquist, got [{self.fmin}, {fmax}] at fs={sample_rate}")
        return fmax


@dataclass(frozen=True)
class FeatureBundle:
    """Time-aligned log-mel frames and F0 track plus the framing metadata."""

    mel: np.ndarray  # (n_frames, n_mels), natural log of floored mel power
    f0: np.ndarray  # (n_frames,), Hz; 0.0 = unvoiced
    sample_rate: float
    hop_length: int
    win_length: int

    def __post_init__(self) -> None:
        mel = np.asarray(self.mel, dtype=np.float64)
        f0 = np.asarray(self.f0, dtype=np.float64)
        if mel.ndim != 2:
            raise ValueError(f"mel must be 2-D, got shape {mel.shape}")
        if f0.shape != (mel.shape[0],):
            raise ValueError(f"mel has {mel.shape[0]} frames but f0 has shape {f0.shape}")
        object.__setattr__(self, "mel", mel)
        object.__setattr__(self, "f0", f0)

    @property
    def n_frames(self) -> int:
        return self.mel.shape[0]

    @property
    def n_mels(self) -> int:
        return self.mel.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureBundle):
            return NotImplemented
        return (
            np.array_equal(self.mel, other.mel)
            and np.array_equal(self.f0, other.f0)
            and self.sample_rate == other.sample_rate
            and self.hop_length == other.hop_length
            and self.win_length == other.win_length
        )


def stft_magnitude(audio: AudioBuffer, cfg: FeatureConfig) -> np.ndarray:
    """Magnitude spectrogram, shape (n_frames, n_fft//2 + 1)."""
    frames = dsp.frame_signal(audio.samples, cfg.frame)
    return np.abs(np.fft.rfft(frames, n=cfg.n_fft, axis=1))


def mel_filterbank(cfg: FeatureConfig, sample_rate: int) -> np.ndarray:
    """Triangular mel filters, shape (n_mels, n_fft//2 + 1), each peaking at 1."""
    fmax = cfg.effective_fmax(sample_rate)
    n_bins = cfg.n_fft // 2 + 1
    mel_pts = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(fmax), cfg.n_mels + 2)
    hz_pts = np.asarray(mel_to_hz(mel_pts))
    center_bins = np.rint(hz_pts[1:-1] * cfg.n_fft / sample_rate).astype(int)
    if np.any(np.diff(center_bins) < 1):
        raise TooManyMelsError(
            f"{cfg.n_mels} filters over [{cfg.fmin}, {fmax}] Hz collide on the "
            f"{cfg.n_fft}-point DFT grid"
        )
    freqs = np.arange(n_bins) * (sample_rate / cfg.n_fft)
    lower, center, upper = hz_pts[:-2], hz_pts[1:-1], hz_pts[2:]
    rising = (freqs[None, :] - lower[:, None]) / (center - lower)[:, None]
    falling = (upper[:, None] - freqs[None, :]) / (upper - center)[:, None]
    fb = np.maximum(0.0, np.minimum(rising, falling))
    return fb / fb.max(axis=1, keepdims=True)


def mel_spectrogram(audio: AudioBuffer, cfg: FeatureConfig) -> np.ndarray:
    """log(max(filterbank @ power_spectrum, floor)) per frame, shape (n_frames, n_mels)."""
    power = stft_magnitude(audio, cfg) ** 2
    fb = mel_filterbank(cfg, audio.sample_rate)
    return np.log(np.maximum(power @ fb.T, MEL_LOG_FLOOR))


def _parabolic_offset(y_prev: float, y_peak: float, y_next: float) -> float:
    denom = y_prev - 2.0 * y_peak + y_next
    if denom == 0.0:
        return 0.0
    return 0.5 * (y_prev - y_next) / denom


def estimate_f0(audio: AudioBuffer, cfg: FeatureConfig) -> np.ndarray:
    """Autocorrelation F0 track with parabolic lag refinement.

    Frames are raw (unwindowed) slices on the config's framing grid.  A frame
    is unvoiced (0.0) when the normalized autocorrelation peak over the
    admissible lag range stays below the voicing threshold.
    """
    fs = audio.sample_rate
    spec = dsp.FrameSpec(cfg.frame.win_length, cfg.frame.hop_length, "rect")
    frames = dsp.frame_signal(audio.samples, spec)
    lag_lo = max(1, int(np.ceil(fs / cfg.f0_max)))
    lag_hi = min(int(np.floor(fs / cfg.f0_min)), spec.win_length - 1)
    n = frames.shape[0]
    track = np.zeros(n)
    if lag_lo > lag_hi:
        return track
    for i in range(n):
        r = dsp.autocorrelation(frames[i], lag_hi)
        if r[0] <= 0.0:
            continue
        rho = r / r[0]
        k = lag_lo + int(np.argmax(rho[lag_lo : lag_hi + 1]))
        if rho[k] < cfg.voicing_threshold:
            continue
        delta = 0.0
        if lag_lo < k < lag_hi:
            delta = _parabolic_offset(rho[k - 1], rho[k], rho[k + 1])
        f0 = fs / (k + delta)
        track[i] = min(max(f0, cfg.f0_min), cfg.f0_max)
    return track


def extract_features(audio: AudioBuffer, cfg: FeatureConfig) -> FeatureBundle:
    """Mel spectrogram + F0 on one framing grid; frame counts match by construction."""
    mel = mel_spectrogram(audio, cfg)
    f0 = estimate_f0(audio, cfg)
    return FeatureBundle(
        mel=mel,
        f0=f0,
        sample_rate=float(audio.sample_rate),
        hop_length=cfg.frame.hop_length,
        win_length=cfg.frame.win_length,
    )
