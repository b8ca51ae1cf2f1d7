"""Audio, manifest and feature-file I/O.

WAV support is deliberately narrow: mono RIFF/WAVE, PCM16 or IEEE float32.
Samples are held as float64 internally regardless of file encoding.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import (
    BadMagicError,
    DuplicateIdError,
    EmptyAudioError,
    ParseError,
    UnsupportedFormatError,
    VersionMismatchError,
)

if TYPE_CHECKING:
    from .features import FeatureBundle

_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3

FEATURE_MAGIC = b"RFB1"
FEATURE_VERSION = 1

MANIFEST_KEYS = ("bonafide", "spoof")
BONAFIDE_ATTACK = "-"


@dataclass(frozen=True)
class AudioBuffer:
    """Mono signal: float64 samples in [-1, 1] plus sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite (no NaN/Inf)")
        object.__setattr__(self, "samples", samples)
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class ManifestEntry:
    """One corpus row: utterance id, audio path, bonafide/spoof key, attack tag."""

    utt_id: str
    path: str
    key: str
    attack: str

    def __post_init__(self) -> None:
        if self.key not in MANIFEST_KEYS:
            raise ValueError(f"key must be one of {MANIFEST_KEYS}, got {self.key!r}")
        if self.key == "bonafide" and self.attack != BONAFIDE_ATTACK:
            raise ValueError(
                f"bonafide entries must carry attack {BONAFIDE_ATTACK!r}, got {self.attack!r}"
            )


def _read_chunks(raw: bytes, path: Path) -> dict[str, bytes]:
    if len(raw) < 12:
        raise UnsupportedFormatError(f"{path}: too small to be a RIFF file")
    if raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise UnsupportedFormatError(f"{path}: not a RIFF/WAVE container")
    chunks: dict[str, bytes] = {}
    off = 12
    while off + 8 <= len(raw):
        cid = raw[off : off + 4]
        (size,) = struct.unpack_from("<I", raw, off + 4)
        body = raw[off + 8 : off + 8 + size]
        if len(body) < size:
            raise UnsupportedFormatError(f"{path}: truncated chunk {cid!r}")
        chunks.setdefault(cid.decode("latin-1"), body)
        off += 8 + size + (size & 1)  # chunks are word-aligned
    return chunks


def read_wav(path: str | Path) -> AudioBuffer:
    """Decode a mono PCM16 or float32 WAV file into an AudioBuffer.

    PCM16 values are scaled by 1/32768, so -32768 maps to -1.0 exactly.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such audio file: {path}")
    raw = path.read_bytes()
    chunks = _read_chunks(raw, path)
    if "fmt " not in chunks or "data" not in chunks:
        raise UnsupportedFormatError(f"{path}: missing fmt/data chunk")
    fmt = chunks["fmt "]
    if len(fmt) < 16:
        raise UnsupportedFormatError(f"{path}: fmt chunk too short")
    audio_format, channels, sample_rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if channels != 1:
        raise UnsupportedFormatError(f"{path}: channels={channels}")
    if audio_format == _WAVE_FORMAT_PCM:
        if bits != 16:
            raise UnsupportedFormatError(f"{path}: bits={bits}")
        dtype = "<i2"
    elif audio_format == _WAVE_FORMAT_IEEE_FLOAT:
        if bits != 32:
            raise UnsupportedFormatError(f"{path}: bits={bits}")
        dtype = "<f4"
    else:
        raise UnsupportedFormatError(f"{path}: format={audio_format}")
    data = chunks["data"]
    width = np.dtype(dtype).itemsize
    n = len(data) // width
    if n == 0:
        raise EmptyAudioError(f"{path}: data chunk holds no samples")
    values = np.frombuffer(data[: n * width], dtype=dtype)
    if audio_format == _WAVE_FORMAT_PCM:
        samples = values.astype(np.float64) / 32768.0
    else:
        samples = values.astype(np.float64)
    return AudioBuffer(samples=samples, sample_rate=sample_rate)


def wav_encoding(path: str | Path) -> str:
    """Report a readable file's sample encoding: 'pcm16' or 'float32'."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such audio file: {path}")
    chunks = _read_chunks(path.read_bytes(), path)
    if "fmt " not in chunks or len(chunks["fmt "]) < 16:
        raise UnsupportedFormatError(f"{path}: missing or short fmt chunk")
    (audio_format,) = struct.unpack_from("<H", chunks["fmt "], 0)
    if audio_format == _WAVE_FORMAT_PCM:
        return "pcm16"
    if audio_format == _WAVE_FORMAT_IEEE_FLOAT:
        return "float32"
    raise UnsupportedFormatError(f"{path}: format={audio_format}")


def write_wav(path: str | Path, buf: AudioBuffer, encoding: str = "pcm16") -> None:
    """Write an AudioBuffer as mono WAV; samples clamped to [-1, 1] for pcm16."""
    if len(buf) == 0:
        raise EmptyAudioError("refusing to write a buffer with no samples")
    if encoding == "pcm16":
        scaled = np.rint(np.clip(buf.samples, -1.0, 1.0) * 32768.0)
        payload = np.clip(scaled, -32768, 32767).astype("<i2").tobytes()
        audio_format, bits = _WAVE_FORMAT_PCM, 16
    elif encoding == "float32":
        payload = buf.samples.astype("<f4").tobytes()
        audio_format, bits = _WAVE_FORMAT_IEEE_FLOAT, 32
    else:
        raise ValueError(f"encoding must be 'pcm16' or 'float32', got {encoding!r}")
    block_align = bits // 8
    byte_rate = buf.sample_rate * block_align
    fmt = struct.pack(
        "<HHIIHH", audio_format, 1, buf.sample_rate, byte_rate, block_align, bits
    )
    body = b"WAVE"
    body += b"fmt " + struct.pack("<I", len(fmt)) + fmt
    if audio_format == _WAVE_FORMAT_IEEE_FLOAT:
        body += b"fact" + struct.pack("<II", 4, len(buf))
    body += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        body += b"\x00"
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """Parse a TSV manifest: utt_id, path, key, attack; one entry per line."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such manifest: {path}")
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}")
        utt_id, wav_path, key, attack = fields
        if utt_id in seen:
            raise DuplicateIdError(f"{path}:{lineno}: duplicate utt_id {utt_id!r}")
        seen.add(utt_id)
        try:
            entries.append(ManifestEntry(utt_id=utt_id, path=wav_path, key=key, attack=attack))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return entries


def write_manifest(path: str | Path, entries: list[ManifestEntry]) -> None:
    lines = [f"{e.utt_id}\t{e.path}\t{e.key}\t{e.attack}" for e in entries]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def write_features(path: str | Path, bundle: "FeatureBundle") -> None:
    """Serialize a FeatureBundle; read_features inverts this bit-exactly."""
    mel = np.ascontiguousarray(bundle.mel, dtype="<f8")
    f0 = np.ascontiguousarray(bundle.f0, dtype="<f8")
    n_frames, n_mels = mel.shape
    header = FEATURE_MAGIC + struct.pack(
        "<IIIdII",
        FEATURE_VERSION,
        n_frames,
        n_mels,
        float(bundle.sample_rate),
        bundle.hop_length,
        bundle.win_length,
    )
    Path(path).write_bytes(header + mel.tobytes() + f0.tobytes())


def read_features(path: str | Path) -> "FeatureBundle":
    """Parse a feature file back into a FeatureBundle; never returns a partial bundle."""
    from .features import FeatureBundle  # deferred: audio_io <-> features cycle

    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such feature file: {path}")
    raw = path.read_bytes()
    if len(raw) < 4 or raw[:4] != FEATURE_MAGIC:
        raise BadMagicError(f"{path}: missing {FEATURE_MAGIC!r} magic")
    header_size = 4 + struct.calcsize("<IIIdII")
    if len(raw) < header_size:
        raise ParseError(f"{path}: truncated header")
    version, n_frames, n_mels, sample_rate, hop_length, win_length = struct.unpack_from(
        "<IIIdII", raw, 4
    )
    if version != FEATURE_VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {FEATURE_VERSION}")
    mel_bytes = 8 * n_frames * n_mels
    f0_bytes = 8 * n_frames
    if len(raw) != header_size + mel_bytes + f0_bytes:
        raise ParseError(
            f"{path}: payload is {len(raw) - header_size} bytes, expected {mel_bytes + f0_bytes}"
        )
    mel = np.frombuffer(raw, dtype="<f8", count=n_frames * n_mels, offset=header_size)
    f0 = np.frombuffer(raw, dtype="<f8", count=n_frames, offset=header_size + mel_bytes)
    return FeatureBundle(
        mel=mel.reshape(n_frames, n_mels).copy(),
        f0=f0.copy(),
        sample_rate=sample_rate,
        hop_length=hop_length,
        win_length=win_length,
    )
