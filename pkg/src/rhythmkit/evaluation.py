"""Equal error rate over detector score files, pooled and per attack.

Convention, fixed so every consumer agrees: FRR(t) is the fraction of
bonafide trials scoring strictly below t, FAR(t) the fraction of spoof
trials scoring at or above t (ties accepted). The EER is read off the
linearly interpolated crossing of those two step functions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateIdError,
    InsufficientClassesError,
    ParseError,
    UnknownAttackError,
)

# ASVspoof 2019 LA evaluation protocol: A07-A16 synthesize from text,
# A17-A19 convert voices.
DEFAULT_ATTACK_GROUPS: dict[str, str] = {
    **{f"A{i:02d}": "TTS" for i in range(7, 17)},
    **{f"A{i:02d}": "VC" for i in range(17, 20)},
}

BONAFIDE_ATTACK = "-"


@dataclass(frozen=True)
class ScoreRecord:
    utt_id: str
    key: str
    attack: str
    score: float

    def __post_init__(self) -> None:
        if self.key not in ("bonafide", "spoof"):
            raise ValueError(f"key must be bonafide or spoof, got {self.key!r}")
        if not np.isfinite(self.score):
            raise ValueError(f"score must be finite, got {self.score}")


@dataclass(frozen=True)
class ScoreSet:
    records: tuple[ScoreRecord, ...]

    def bonafide_scores(self) -> np.ndarray:
        return np.array([r.score for r in self.records if r.key == "bonafide"])

    def spoof_scores(self, attacks: set[str] | None = None) -> np.ndarray:
        return np.array(
            [
                r.score
                for r in self.records
                if r.key == "spoof" and (attacks is None or r.attack in attacks)
            ]
        )

    def attacks(self) -> list[str]:
        seen = {r.attack for r in self.records if r.key == "spoof"}
        return sorted(seen)


@dataclass(frozen=True)
class EerResult:
    eer: float
    threshold: float


@dataclass(frozen=True)
class EerBreakdown:
    total: EerResult
    tts: EerResult | None
    vc: EerResult | None
    per_attack: dict[str, EerResult] = field(default_factory=dict)


def read_scores(path: str | Path) -> ScoreSet:
    """Parse a score TSV: utt_id, key, attack, score; one trial per line."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such score file: {path}")
    records: list[ScoreRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}")
        utt_id, key, attack, score_text = fields
        if utt_id in seen:
            raise DuplicateIdError(f"{path}:{lineno}: duplicate utt_id {utt_id!r}")
        seen.add(utt_id)
        try:
            score = float(score_text)
            records.append(ScoreRecord(utt_id=utt_id, key=key, attack=attack, score=score))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return ScoreSet(records=tuple(records))


def eer_from_scores(bonafide: np.ndarray, spoof: np.ndarray) -> EerResult:
    """EER of raw score arrays (higher score = more bonafide)."""
    bona = np.sort(np.asarray(bonafide, dtype=np.float64))
    spoof = np.sort(np.asarray(spoof, dtype=np.float64))
    if len(bona) == 0 or len(spoof) == 0:
        raise InsufficientClassesError(
            f"need at least one bonafide and one spoof trial, got {len(bona)}/{len(spoof)}"
        )
    thresholds = np.unique(np.concatenate([bona, spoof]))
    # Sentinel above every score: FAR 0, FRR 1, so a crossing always exists.
    thresholds = np.append(thresholds, np.nextafter(thresholds[-1], np.inf))
    frr = np.searchsorted(bona, thresholds, side="left") / len(bona)
    far = (len(spoof) - np.searchsorted(spoof, thresholds, side="left")) / len(spoof)
    diff = far - frr  # non-increasing, starts at +1, ends at -1
    idx = int(np.argmax(diff <= 0.0))
    if diff[idx] == 0.0:
        return EerResult(
            eer=float((far[idx] + frr[idx]) / 2.0), threshold=float(thresholds[idx])
        )
    prev = idx - 1
    alpha = diff[prev] / (diff[prev] - diff[idx])
    eer_far = far[prev] + alpha * (far[idx] - far[prev])
    eer_frr = frr[prev] + alpha * (frr[idx] - frr[prev])
    threshold = thresholds[prev] + alpha * (thresholds[idx] - thresholds[prev])
    return EerResult(eer=float((eer_far + eer_frr) / 2.0), threshold=float(threshold))


def compute_eer(scores: ScoreSet) -> EerResult:
    return eer_from_scores(scores.bonafide_scores(), scores.spoof_scores())


def eer_breakdown(
    scores: ScoreSet,
    attack_groups: dict[str, str] | None = None,
    strict: bool = True,
) -> EerBreakdown:
    """Pooled total, per-group (TTS/VC) and per-attack EER.

    Every pool reuses all bonafide trials against the selected spoof trials.
    Unmapped attack labels raise in strict mode and form their own
    per-attack row either way.
    """
    groups = DEFAULT_ATTACK_GROUPS if attack_groups is None else attack_groups
    bona = scores.bonafide_scores()
    attacks = scores.attacks()
    if strict:
        unknown = [a for a in attacks if a not in groups]
        if unknown:
            raise UnknownAttackError(f"attacks with no TTS/VC mapping: {unknown}")
    per_attack = {a: eer_from_scores(bona, scores.spoof_scores({a})) for a in attacks}
    result: dict[str, EerResult | None] = {}
    for group in ("TTS", "VC"):
        members = {a for a in attacks if groups.get(a) == group}
        pooled = scores.spoof_scores(members)
        result[group] = eer_from_scores(bona, pooled) if len(pooled) else None
    return EerBreakdown(
        total=compute_eer(scores),
        tts=result["TTS"],
        vc=result["VC"],
        per_attack=per_attack,
    )


def load_attack_groups(path: str | Path) -> dict[str, str]:
    """Read an attack -> {TTS, VC} mapping file (TSV, one pair per line)."""
    path = Path(path)
    groups: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2 or fields[1] not in ("TTS", "VC"):
            raise ParseError(f"{path}:{lineno}: expected '<attack>\\tTTS|VC'")
        groups[fields[0]] = fields[1]
    return groups


def _pct(result: EerResult | None) -> str:
    return "-" if result is None else f"{100.0 * result.eer:.2f}"


def format_report(breakdown: EerBreakdown) -> str:
    """Aligned-column text: TTS, VC, Total, then one column per attack."""
    headers = ["TTS", "VC", "Total"] + sorted(breakdown.per_attack)
    values = [_pct(breakdown.tts), _pct(breakdown.vc), _pct(breakdown.total)]
    values += [_pct(breakdown.per_attack[a]) for a in sorted(breakdown.per_attack)]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    head = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
    body = "  ".join(v.rjust(w) for v, w in zip(values, widths))
    return head + "\n" + body + "\n"


def report_json(breakdown: EerBreakdown) -> str:
    """EER percentages as JSON: {total, tts, vc, per_attack}."""
    doc = {
        "total": 100.0 * breakdown.total.eer,
        "tts": None if breakdown.tts is None else 100.0 * breakdown.tts.eer,
        "vc": None if breakdown.vc is None else 100.0 * breakdown.vc.eer,
        "per_attack": {a: 100.0 * r.eer for a, r in sorted(breakdown.per_attack.items())},
    }
    return json.dumps(doc, indent=2)
