"""Glottal flow estimation by iterative adaptive inverse filtering.

Per frame, alternating low-order source and high-order vocal-tract LPC
estimates strip the vocal tract and lip radiation from the speech signal;
the residual source frames are hann-weighted and overlap-added into one
utterance-level glottal flow.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import dsp
from .audio_io import AudioBuffer
from .errors import TooShortError, UnstableFrameError

log = logging.getLogger(__name__)

OUTPUT_PEAK = 0.95


@dataclass(frozen=True)
class IaifConfig:
    """Analysis settings; framing is in milliseconds so one config serves any rate.

    vocal_tract_order None resolves to round(2 + sample_rate/1000).
    """

    vocal_tract_order: int | None = None
    glottal_order: int = 4
    lip_d: float = 0.99
    win_ms: float = 25.0
    hop_ms: float = 5.0
    window: str = "hann"
    highpass_cutoff: float = 70.0

    def __post_init__(self) -> None:
        if not 0.0 < self.lip_d < 1.0:
            raise ValueError(f"lip_d must lie in (0, 1), got {self.lip_d}")
        if self.glottal_order < 1:
            raise ValueError(f"glottal_order must be positive, got {self.glottal_order}")
        if self.win_ms <= 0 or self.hop_ms <= 0 or self.hop_ms > self.win_ms:
            raise ValueError(f"need 0 < hop_ms <= win_ms, got hop={self.hop_ms} win={self.win_ms}")
        if self.highpass_cutoff < 0:
            raise ValueError(f"highpass_cutoff must be nonnegative, got {self.highpass_cutoff}")

    def tract_order(self, sample_rate: int) -> int:
        p = self.vocal_tract_order
        if p is None:
            p = int(round(2 + sample_rate / 1000.0))
        return p

    def frame_spec(self, sample_rate: int) -> dsp.FrameSpec:
        win = int(round(self.win_ms * sample_rate / 1000.0))
        hop = int(round(self.hop_ms * sample_rate / 1000.0))
        spec = dsp.FrameSpec(win, hop, self.window)
        p = self.tract_order(sample_rate)
        if not 0 < self.glottal_order < p < win:
            raise ValueError(
                f"need 0 < glottal_order < vocal_tract_order < win_length, "
                f"got g={self.glottal_order} p={p} win={win}"
            )
        return spec


@dataclass(frozen=True)
class GlottalFrameResult:
    glottal: np.ndarray
    vocal_tract: dsp.LpcModel
    glottal_source_model: dsp.LpcModel


@dataclass(frozen=True)
class GlottalFlowResult:
    flow: AudioBuffer
    unstable_frames: int
    total_frames: int


def highpass(x: np.ndarray, sample_rate: int, cutoff: float) -> np.ndarray:
    """4th-order Butterworth high-pass as two cascaded RBJ biquads.

    Biquad coefficients per the audio-EQ-cookbook high-pass prototype with
    the Butterworth pole Qs 1/(2*cos(pi/8)) and 1/(2*cos(3*pi/8)).
    """
    if cutoff <= 0.0:
        return np.asarray(x, dtype=np.float64).copy()
    if cutoff >= sample_rate / 2.0:
        raise ValueError(f"cutoff {cutoff} Hz must be below Nyquist ({sample_rate / 2} Hz)")
    y = np.asarray(x, dtype=np.float64)
    w0 = 2.0 * np.pi * cutoff / sample_rate
    for q in (0.5411961001461969, 1.3065629648763766):
        alpha = np.sin(w0) / (2.0 * q)
        c = np.cos(w0)
        b = np.array([(1.0 + c) / 2.0, -(1.0 + c), (1.0 + c) / 2.0])
        a = np.array([1.0 + alpha, -2.0 * c, 1.0 - alpha])
        y = lfilter(b / a[0], a / a[0], y)
    return y


def _lpc_of(signal: np.ndarray, window: np.ndarray, order: int) -> dsp.LpcModel:
    """LPC model of a frame: windowed autocorrelation analysis.

    Silent frames (zero energy) yield the zero-coefficient identity model so
    the surrounding stage sequence degrades to a pass-through.
    """
    r = dsp.autocorrelation(signal * window, order)
    if r[0] <= 0.0:
        return dsp.LpcModel.identity(order)
    return dsp.levinson_durbin(r, order)


def iaif_frame(frame: np.ndarray, cfg: IaifConfig, sample_rate: int) -> GlottalFrameResult:
    """Estimate one frame's glottal source and the models that produced it.

    Stage sequence (models estimated on the windowed frame, filtering applied
    to the raw frame):
      1. order-1 LPC on the input, inverse filter: coarse tilt removal
      2. order-p LPC on (1), inverse filter input, integrate: first source estimate
      3. order-g LPC on (2), inverse filter input, integrate: tilt-free signal
      4. order-p LPC on (3) = final vocal tract; inverse filter input,
         integrate: glottal flow

    Raises UnstableFrameError when any LPC stage goes non-minimum-phase.
    """
    x = np.asarray(frame, dtype=np.float64)
    spec = cfg.frame_spec(sample_rate)
    if len(x) != spec.win_length:
        raise ValueError(f"frame length {len(x)} != win_length {spec.win_length}")
    w = spec.window_array()
    p = cfg.tract_order(sample_rate)
    g = cfg.glottal_order
    d = cfg.lip_d

    tilt = _lpc_of(x, w, 1)
    y1 = dsp.inverse_filter(x, tilt)

    vt1 = _lpc_of(y1, w, p)
    g1 = dsp.leaky_integrate(dsp.inverse_filter(x, vt1), d)

    source = _lpc_of(g1, w, g)
    y2 = dsp.leaky_integrate(dsp.inverse_filter(x, source), d)

    vt2 = _lpc_of(y2, w, p)
    glottal = dsp.leaky_integrate(dsp.inverse_filter(x, vt2), d)

    return GlottalFrameResult(glottal=glottal, vocal_tract=vt2, glottal_source_model=source)


def extract_glottal_flow(audio: AudioBuffer, cfg: IaifConfig | None = None) -> GlottalFlowResult:
    """Utterance-level glottal flow via frame-wise IAIF and hann overlap-add.

    Frames whose LPC goes unstable are passed through raw and tallied; the
    output is peak-normalized to 0.95.
    """
    cfg = cfg or IaifConfig()
    spec = cfg.frame_spec(audio.sample_rate)
    if len(audio) < spec.win_length:
        raise TooShortError(
            f"utterance of {len(audio)} samples is shorter than the "
            f"{spec.win_length}-sample analysis window"
        )
    x = highpass(audio.samples, audio.sample_rate, cfg.highpass_cutoff)
    raw_frames = dsp.frame_signal(x, dsp.FrameSpec(spec.win_length, spec.hop_length, "rect"))
    w = spec.window_array()
    out_frames = np.empty_like(raw_frames)
    unstable = 0
    for i in range(raw_frames.shape[0]):
        try:
            out_frames[i] = iaif_frame(raw_frames[i], cfg, audio.sample_rate).glottal
        except UnstableFrameError:
            out_frames[i] = raw_frames[i]
            unstable += 1
            log.warning("unstable LPC at frame %d; passing frame through raw", i)
    flow = dsp.overlap_add(out_frames * w[None, :], spec)
    peak = np.max(np.abs(flow))
    if peak > 0.0:
        flow = flow * (OUTPUT_PEAK / peak)
    return GlottalFlowResult(
        flow=AudioBuffer(samples=flow, sample_rate=audio.sample_rate),
        unstable_frames=unstable,
        total_frames=raw_frames.shape[0],
    )
