"""Grasp pattern library and the context-to-candidates mapper.

Scoring is an auditable rule table: per-pattern prior times a triangular
size-fit kernel that peaks at the midpoint of the pattern's size range and
is exactly zero outside it. The top k (default 3) patterns form the
candidate set the classifier is restricted to.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import EmptyCandidates, LibraryValidationError, NoApplicableGrasp
from .signal import GestureLabel

NUM_ACTUATORS = 6  # five digits plus thumb abduction
DEFAULT_K_MAX = 3

CLASS_VOCABULARY = ("cup", "bottle", "smartphone", "door_handle", "pen", "block")


@dataclass(frozen=True)
class GraspPattern:
    id: int
    label: str
    setpoints: tuple[float, ...]
    applicable_classes: frozenset[str]
    size_range_m: tuple[float, float]
    prior: float

    @property
    def gesture(self) -> Optional[GestureLabel]:
        """The EMG gesture that triggers this pattern, if any."""
        try:
            return GestureLabel[self.label.upper()]
        except KeyError:
            return None


@dataclass(frozen=True)
class CandidateSet:
    """The k context-appropriate patterns with normalized, descending scores."""
    entries: tuple[tuple[int, float], ...]
    source_object: int

    def __post_init__(self):
        if not self.entries:
            raise EmptyCandidates("candidate set may not be empty")
        ids = [pid for pid, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate pattern ids in candidate set")
        scores = [s for _, s in self.entries]
        if any(b > a for a, b in zip(scores, scores[1:])):
            raise ValueError("scores must be descending")
        if abs(sum(scores) - 1.0) > 1e-9:
            raise ValueError("scores must sum to 1")

    def __len__(self) -> int:
        return len(self.entries)

    def pattern_ids(self) -> tuple[int, ...]:
        return tuple(pid for pid, _ in self.entries)


class GraspLibrary:
    """Immutable set of grasp patterns; ids unique, all six gestures covered."""

    def __init__(self, patterns: Sequence[GraspPattern], k_max: int = DEFAULT_K_MAX):
        self.patterns = tuple(patterns)
        self.k_max = k_max
        self._by_id = {p.id: p for p in self.patterns}
        self._validate()

    def _validate(self) -> None:
        if len(self._by_id) != len(self.patterns):
            raise LibraryValidationError("pattern ids must be unique")
        if len(self.patterns) < len(GestureLabel):
            raise LibraryValidationError(
                f"library needs at least {len(GestureLabel)} patterns")
        covered = {p.gesture for p in self.patterns if p.gesture is not None}
        missing = set(GestureLabel) - covered
        if missing:
            raise LibraryValidationError(
                f"no pattern for gestures {sorted(g.name for g in missing)}")
        if self.k_max < 1:
            raise LibraryValidationError("k_max must be at least 1")

    def __len__(self) -> int:
        return len(self.patterns)

    def pattern(self, pattern_id: int) -> GraspPattern:
        return self._by_id[pattern_id]

    def pattern_for_gesture(self, gesture: GestureLabel) -> GraspPattern:
        for p in self.patterns:
            if p.gesture == gesture:
                return p
        raise KeyError(gesture)

    def label_map(self) -> dict[int, GestureLabel]:
        """pattern id -> gesture, for the patterns that have one."""
        return {p.id: p.gesture for p in self.patterns if p.gesture is not None}

    def setpoints(self, gesture: GestureLabel) -> tuple[float, ...]:
        return self.pattern_for_gesture(gesture).setpoints


def triangular_fit(size_m: float, size_range: tuple[float, float]) -> float:
    """Unit peak at the range midpoint, linear to exact zero at the edges."""
    lo, hi = size_range
    if size_m < lo or size_m > hi:
        return 0.0
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    fit = 1.0 - abs(size_m - mid) / half
    return fit if fit > 1e-12 else 0.0   # exact zero at the edges despite rounding


def context_to_grasps(obj, lib: GraspLibrary) -> CandidateSet:
    """Score the library against one fixated object and keep the top k_max.

    obj needs class_label, grasp_size_m and id attributes. Patterns whose
    class set excludes the object or whose size fit is zero are dropped;
    if nothing remains the controller must stay idle (NoApplicableGrasp).
    """
    scored = []
    for p in lib.patterns:
        if obj.class_label not in p.applicable_classes:
            continue
        raw = p.prior * triangular_fit(obj.grasp_size_m, p.size_range_m)
        if raw > 0.0:
            scored.append((p.id, raw))
    if not scored:
        raise NoApplicableGrasp(
            f"no grasp admits class {obj.class_label!r} at size {obj.grasp_size_m}")
    scored.sort(key=lambda t: (-t[1], t[0]))
    top = scored[:lib.k_max]
    total = sum(raw for _, raw in top)
    return CandidateSet(tuple((pid, raw / total) for pid, raw in top), obj.id)


def restrict_classify(logits: np.ndarray, candidates: CandidateSet,
                      label_map: Mapping[int, GestureLabel]) -> tuple[GestureLabel, float]:
    """Argmax over only the candidate gestures; confidence from the masked softmax.

    Candidate patterns without a gesture mapping contribute nothing to the
    mask; ties break to the lowest label code.
    """
    logits = np.asarray(logits, dtype=float)
    allowed = sorted({int(label_map[pid]) for pid, _ in candidates.entries
                      if pid in label_map})
    if not allowed:
        raise EmptyCandidates("no candidate pattern maps to a gesture")
    masked = np.full(logits.shape, -np.inf)
    masked[allowed] = logits[allowed]
    label = GestureLabel(int(np.argmax(masked)))
    surviving = logits[allowed]
    z = surviving - surviving.max()
    probs = np.exp(z) / np.exp(z).sum()
    confidence = float(probs[allowed.index(int(label))])
    return label, confidence


def cycle_alternative(candidates: CandidateSet, current_index: int) -> int:
    """Advance the highlighted candidate, wrapping at k."""
    if len(candidates) == 0:
        raise EmptyCandidates("cannot cycle an empty candidate set")
    return (current_index + 1) % len(candidates)


# --- library file -------------------------------------------------------------

def load_library(path: str | Path, k_max: int = DEFAULT_K_MAX) -> GraspLibrary:
    """Parse and validate a JSON pattern list, reporting the offending field."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise LibraryValidationError("library file must contain a JSON list")
    patterns = []
    for i, entry in enumerate(doc):
        where = f"pattern[{i}]"
        try:
            pid = int(entry["id"])
            label = str(entry["label"])
            setpoints = tuple(float(v) for v in entry["setpoints"])
            classes = frozenset(str(c) for c in entry["classes"])
            lo, hi = (float(v) for v in entry["size_range"])
            prior = float(entry["prior"])
        except (KeyError, TypeError, ValueError) as exc:
            raise LibraryValidationError(f"{where}: {exc}") from exc
        if len(setpoints) != NUM_ACTUATORS:
            raise LibraryValidationError(f"{where}.setpoints: need {NUM_ACTUATORS} values")
        if any(not (0.0 <= s <= 1.0) for s in setpoints):
            raise LibraryValidationError(f"{where}.setpoints: values must lie in [0, 1]")
        if not lo < hi:
            raise LibraryValidationError(f"{where}.size_range: lo must be < hi")
        if not (0.0 < prior <= 1.0):
            raise LibraryValidationError(f"{where}.prior: must lie in (0, 1]")
        unknown = classes - set(CLASS_VOCABULARY)
        if unknown:
            raise LibraryValidationError(f"{where}.classes: unknown {sorted(unknown)}")
        patterns.append(GraspPattern(pid, label, setpoints, classes, (lo, hi), prior))
    return GraspLibrary(patterns, k_max=k_max)


def save_library(path: str | Path, lib: GraspLibrary) -> None:
    doc = [{
        "id": p.id,
        "label": p.label,
        "setpoints": list(p.setpoints),
        "classes": sorted(p.applicable_classes),
        "size_range": list(p.size_range_m),
        "prior": p.prior,
    } for p in lib.patterns]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
