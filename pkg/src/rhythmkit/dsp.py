"""Numeric kernel: framing, windowing, overlap-add, LPC, filtering, resampling.

All functions operate on plain float64 numpy arrays and are pure; audio
container types live in audio_io.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import (
    InconsistentFrameLengthError,
    LagTooLargeError,
    TooShortError,
    UnstableFrameError,
)

# Multiplicative white-noise floor on r[0]; keeps |k| < 1 on
# near-deterministic frames.
AUTOCORR_REG = 1e-6

# Overlap-add divides by the summed window envelope; floor avoids blowup at
# the tapered edges.
OLA_ENVELOPE_FLOOR = 1e-8

WINDOW_KINDS = ("hann", "hamming", "rect")


@dataclass(frozen=True)
class FrameSpec:
    """Analysis framing: window length, hop and window shape (samples)."""

    win_length: int
    hop_length: int
    window: str = "hann"

    def __post_init__(self) -> None:
        if self.win_length <= 0:
            raise ValueError(f"win_length must be positive, got {self.win_length}")
        if not 0 < self.hop_length <= self.win_length:
            raise ValueError(
                f"need 0 < hop_length <= win_length, got hop={self.hop_length} win={self.win_length}"
            )
        if self.window not in WINDOW_KINDS:
            raise ValueError(f"unknown window {self.window!r}, expected one of {WINDOW_KINDS}")

    def window_array(self) -> np.ndarray:
        return make_window(self.window, self.win_length)


@dataclass(frozen=True)
class LpcModel:
    """All-pole model A(z) = 1 + sum_k coeffs[k-1] z^-k with residual gain.

    ``reflections`` records the Levinson reflection coefficients so the
    minimum-phase invariant (every |k| < 1) stays checkable after the fact.
    """

    order: int
    coeffs: np.ndarray
    gain: float
    reflections: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "reflections", np.asarray(self.reflections, dtype=np.float64))
        if self.order < 0:
            raise ValueError(f"order must be nonnegative, got {self.order}")
        if coeffs.shape != (self.order,):
            raise ValueError(f"expected {self.order} coefficients, got shape {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("LPC coefficients must be finite")
        if not (np.isfinite(self.gain) and self.gain >= 0):
            raise ValueError(f"gain must be finite and nonnegative, got {self.gain}")

    @classmethod
    def identity(cls, order: int = 0) -> "LpcModel":
        """A(z) = 1 with zero predictor coefficients (whitening no-op)."""
        return cls(order=order, coeffs=np.zeros(order), gain=0.0)


def make_window(kind: str, length: int) -> np.ndarray:
    """Periodic (DFT-even) analysis window of the given length."""
    if length <= 0:
        raise ValueError(f"window length must be positive, got {length}")
    n = np.arange(length)
    if kind == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / length)
    if kind == "hamming":
        return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / length)
    if kind == "rect":
        return np.ones(length)
    raise ValueError(f"unknown window {kind!r}, expected one of {WINDOW_KINDS}")


def pre_emphasis(x: np.ndarray, a: float) -> np.ndarray:
    """y[n] = x[n] - a*x[n-1] with y[0] = x[0]; length preserved."""
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"pre-emphasis coefficient must lie in [0, 1], got {a}")
    x = np.asarray(x, dtype=np.float64)
    y = x.copy()
    y[1:] -= a * x[:-1]
    return y


def num_frames(length: int, spec: FrameSpec) -> int:
    if length < spec.win_length:
        raise TooShortError(
            f"signal of {length} samples is shorter than win_length={spec.win_length}"
        )
    return 1 + (length - spec.win_length) // spec.hop_length


def frame_signal(x: np.ndarray, spec: FrameSpec) -> np.ndarray:
    """Window-weighted frames, shape (n_frames, win_length).

    Trailing samples that do not fill a whole window are dropped.
    """
    x = np.asarray(x, dtype=np.float64)
    n = num_frames(len(x), spec)
    idx = np.arange(spec.win_length)[None, :] + spec.hop_length * np.arange(n)[:, None]
    frames = x[idx]
    if spec.window != "rect":
        frames = frames * spec.window_array()[None, :]
    return frames


def overlap_add(frames: np.ndarray, spec: FrameSpec) -> np.ndarray:
    """Reassemble already window-weighted frames into one signal.

    Each output sample is the sum of frame contributions divided by the
    summed window envelope at that sample, so frame_signal -> overlap_add
    recovers the input on the fully overlapped interior.
    """
    try:
        frames = np.asarray(frames, dtype=np.float64)
    except ValueError as exc:  # ragged input cannot form a rectangular stack
        raise InconsistentFrameLengthError(str(exc)) from exc
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise InconsistentFrameLengthError("overlap_add needs a non-empty 2-D frame stack")
    if frames.shape[1] != spec.win_length:
        raise InconsistentFrameLengthError(
            f"frames have length {frames.shape[1]}, spec expects {spec.win_length}"
        )
    n, win = frames.shape
    hop = spec.hop_length
    out = np.zeros((n - 1) * hop + win)
    env = np.zeros_like(out)
    w = spec.window_array()
    for i in range(n):
        start = i * hop
        out[start : start + win] += frames[i]
        env[start : start + win] += w
    return out / np.maximum(env, OLA_ENVELOPE_FLOOR)


def autocorrelation(frame: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased autocorrelation r[k] = sum_n frame[n]*frame[n+k], k = 0..max_lag."""
    frame = np.asarray(frame, dtype=np.float64)
    n = len(frame)
    if max_lag >= n:
        raise LagTooLargeError(f"max_lag={max_lag} must be below frame length {n}")
    r = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        r[k] = np.dot(frame[: n - k], frame[k:])
    return r


def levinson_durbin(r: np.ndarray, order: int) -> LpcModel:
    """Solve the normal equations for an all-pole model of the given order.

    r[0] is inflated by AUTOCORR_REG before the recursion.  Raises
    UnstableFrameError if any reflection coefficient reaches magnitude 1,
    so a returned model is always minimum-phase.
    """
    r = np.asarray(r, dtype=np.float64)
    if len(r) < order + 1:
        raise LagTooLargeError(f"need {order + 1} autocorrelation lags, got {len(r)}")
    r0 = r[0] * (1.0 + AUTOCORR_REG)
    if not r0 > 0.0:
        raise ValueError(f"autocorrelation r[0] must be positive, got {r[0]}")
    a = np.zeros(order)
    ks = np.zeros(order)
    err = r0
    for i in range(1, order + 1):
        acc = r[i] + np.dot(a[: i - 1], r[i - 1 : 0 : -1])
        k = -acc / err
        if not abs(k) < 1.0:
            raise UnstableFrameError(f"reflection coefficient |k_{i}| = {abs(k):.6g} >= 1")
        ks[i - 1] = k
        head = a[: i - 1].copy()
        a[: i - 1] = head + k * head[::-1]
        a[i - 1] = k
        err *= 1.0 - k * k
    return LpcModel(order=order, coeffs=a, gain=float(np.sqrt(err)), reflections=ks)


def inverse_filter(x: np.ndarray, model: LpcModel) -> np.ndarray:
    """Prediction residual e[n] = x[n] + sum_k a[k] x[n-k], zero initial state."""
    x = np.asarray(x, dtype=np.float64)
    if model.order == 0:
        return x.copy()
    b = np.concatenate(([1.0], model.coeffs))
    return lfilter(b, [1.0], x)


def allpole_filter(e: np.ndarray, model: LpcModel) -> np.ndarray:
    """Synthesis counterpart: y[n] = e[n] - sum_k a[k] y[n-k], zero initial state."""
    e = np.asarray(e, dtype=np.float64)
    if model.order == 0:
        return e.copy()
    a = np.concatenate(([1.0], model.coeffs))
    return lfilter([1.0], a, e)


def leaky_integrate(x: np.ndarray, d: float) -> np.ndarray:
    """y[n] = x[n] + d*y[n-1]; inverse of the differentiator 1 - d z^-1."""
    if not 0.0 < d <= 1.0:
        raise ValueError(f"leak coefficient must lie in (0, 1], got {d}")
    x = np.asarray(x, dtype=np.float64)
    return lfilter([1.0], [1.0, -d], x)


def resampled_length(length: int, factor: float) -> int:
    """Output length under a resampling factor: max(1, round(L*r)), half away from zero."""
    if factor <= 0.0:
        raise ValueError(f"resampling factor must be positive, got {factor}")
    return max(1, int(np.floor(length * factor + 0.5)))


def linear_resample(seq: np.ndarray, factor: float) -> np.ndarray:
    """Time-axis linear interpolation onto an endpoint-anchored grid.

    1-D input is resampled directly; frame-major 2-D input is resampled per
    column over axis 0.  Output position i maps to input position
    i*(L-1)/(L'-1), so the first and last samples are preserved and every
    output value lies within the input range of its bracketing samples.
    factor == 1.0 is a bit-exact identity.
    """
    x = np.asarray(seq, dtype=np.float64)
    if x.ndim not in (1, 2):
        raise ValueError(f"expected 1-D or 2-D input, got ndim={x.ndim}")
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    length = x.shape[0]
    if length < 1:
        raise ValueError("cannot resample an empty sequence")
    if factor == 1.0:
        out = x.copy()
    else:
        out_len = resampled_length(length, factor)
        if out_len == 1:
            out = x[:1].copy()
        elif length == 1:
            out = np.repeat(x, out_len, axis=0)
        else:
            # Multiply before dividing so position L'-1 lands on L-1 exactly.
            pos = (np.arange(out_len) * float(length - 1)) / float(out_len - 1)
            lo = np.minimum(pos.astype(np.int64), length - 2)
            frac = (pos - lo)[:, None]
            xlo = x[lo]
            xhi = x[lo + 1]
            out = xlo + frac * (xhi - xlo)
            # Rounding must not push values outside the bracketing samples.
            np.clip(out, np.minimum(xlo, xhi), np.maximum(xlo, xhi), out=out)
            out[0] = x[0]
            out[-1] = x[length - 1]
    return out[:, 0] if squeeze else out
