"""Deterministic grasp state machine.

Fuses fixation context with restricted EMG decisions behind a confirmation
dwell, and is the safety gate: a decision whose gesture is not in the
armed candidate set is discarded (and counted), never actuated. All
transitions are pure; replaying an event trace reproduces the command log
exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

from .errors import NoApplicableGrasp
from .grasp import CandidateSet, GraspLibrary, context_to_grasps, cycle_alternative
from .scene import SceneObject
from .signal import GestureLabel

NUM_ACTUATORS = 6


@dataclass(frozen=True)
class ControllerConfig:
    confirm_windows: int = 5
    confirm_threshold: float = 0.6
    ramp_ms: int = 800


@dataclass(frozen=True)
class ActuatorCommand:
    setpoints: tuple[float, ...]
    ramp_ms: int

    def __post_init__(self):
        if len(self.setpoints) != NUM_ACTUATORS:
            raise ValueError("need six actuator setpoints")
        if any(not (0.0 <= s <= 1.0) for s in self.setpoints):
            raise ValueError("setpoints must lie in [0, 1]")
        if self.ramp_ms <= 0:
            raise ValueError("ramp must be positive")


# --- states ---------------------------------------------------------------------

@dataclass(frozen=True)
class Idle:
    pass


@dataclass(frozen=True)
class Armed:
    object_id: int
    candidates: CandidateSet
    highlighted: int = 0


@dataclass(frozen=True)
class Confirming:
    label: GestureLabel
    hold_windows: int
    object_id: int
    candidates: CandidateSet
    highlighted: int = 0


@dataclass(frozen=True)
class Executing:
    label: GestureLabel
    progress: float = 0.0


@dataclass(frozen=True)
class Holding:
    label: GestureLabel


@dataclass(frozen=True)
class Releasing:
    label: GestureLabel
    progress: float = 0.0


ControllerState = Union[Idle, Armed, Confirming, Executing, Holding, Releasing]


# --- events ---------------------------------------------------------------------

@dataclass(frozen=True)
class Fixation:
    """Gaze settled on an object (carried along for candidate scoring) or background."""
    object_id: Optional[int]
    obj: Optional[SceneObject] = None


@dataclass(frozen=True)
class FixationLost:
    pass


@dataclass(frozen=True)
class EmgDecision:
    label: GestureLabel
    confidence: float


@dataclass(frozen=True)
class CycleGesture:
    pass


@dataclass(frozen=True)
class Tick:
    dt_ms: float

    def __post_init__(self):
        if self.dt_ms <= 0:
            raise ValueError("tick dt must be positive")


@dataclass(frozen=True)
class Release:
    pass


ControlEvent = Union[Fixation, FixationLost, EmgDecision, CycleGesture, Tick, Release]


class StepResult(NamedTuple):
    state: ControllerState
    command: Optional[ActuatorCommand]
    rejected: bool


def _candidate_labels(candidates: CandidateSet, lib: GraspLibrary) -> set[GestureLabel]:
    label_map = lib.label_map()
    return {label_map[pid] for pid in candidates.pattern_ids() if pid in label_map}


def _arm(event: Fixation, lib: GraspLibrary) -> ControllerState:
    if event.object_id is None or event.obj is None:
        return Idle()
    try:
        candidates = context_to_grasps(event.obj, lib)
    except NoApplicableGrasp:
        return None  # caller keeps/clears state per the originating rule
    return Armed(event.object_id, candidates)


def step(state: ControllerState, event: ControlEvent, lib: GraspLibrary,
         config: ControllerConfig = ControllerConfig()) -> StepResult:
    """Total deterministic transition; commands are emitted only on grasp
    execution and on release."""

    match state, event:
        # -- arming ------------------------------------------------------------
        case Idle(), Fixation() as fix:
            armed = _arm(fix, lib)
            return StepResult(armed if armed is not None else state, None, False)

        case (Armed() | Confirming()), Fixation() as fix:
            # gaze moved to another object (or background): stale context is dropped
            armed = _arm(fix, lib)
            return StepResult(armed if armed is not None else Idle(), None, False)

        case (Armed() | Confirming()), FixationLost():
            return StepResult(Idle(), None, False)

        # -- selection ----------------------------------------------------------
        case Armed() as st, EmgDecision(label=label, confidence=conf):
            if label not in _candidate_labels(st.candidates, lib):
                return StepResult(st, None, True)
            if conf < config.confirm_threshold:
                return StepResult(st, None, False)
            return StepResult(Confirming(label, 1, st.object_id, st.candidates,
                                         st.highlighted), None, False)

        case Confirming() as st, EmgDecision(label=label, confidence=conf):
            if label not in _candidate_labels(st.candidates, lib):
                return StepResult(st, None, True)
            if label != st.label or conf < config.confirm_threshold:
                return StepResult(Armed(st.object_id, st.candidates, st.highlighted),
                                  None, False)
            hold = st.hold_windows + 1
            if hold < config.confirm_windows:
                return StepResult(replace(st, hold_windows=hold), None, False)
            command = ActuatorCommand(lib.setpoints(st.label), config.ramp_ms)
            return StepResult(Executing(st.label, 0.0), command, False)

        case Armed() as st, CycleGesture():
            nxt = cycle_alternative(st.candidates, st.highlighted)
            return StepResult(replace(st, highlighted=nxt), None, False)

        # -- motion -------------------------------------------------------------
        case Executing() as st, Tick(dt_ms=dt):
            progress = st.progress + dt / config.ramp_ms
            if progress >= 1.0:
                return StepResult(Holding(st.label), None, False)
            return StepResult(replace(st, progress=progress), None, False)

        case Holding() as st, Release():
            command = ActuatorCommand((0.0,) * NUM_ACTUATORS, config.ramp_ms)
            return StepResult(Releasing(st.label, 0.0), command, False)

        case Releasing() as st, Tick(dt_ms=dt):
            progress = st.progress + dt / config.ramp_ms
            if progress >= 1.0:
                return StepResult(Idle(), None, False)
            return StepResult(replace(st, progress=progress), None, False)

        # -- everything else is a no-op (total function) --------------------------
        case _, EmgDecision():
            return StepResult(state, None, False)
        case _, _:
            return StepResult(state, None, False)


# --- trace replay ----------------------------------------------------------------

@dataclass(frozen=True)
class CommandRecord:
    """One emitted command plus the context needed to audit it from the log."""
    index: int
    state_before: str
    label: Optional[GestureLabel]
    setpoints: tuple[float, ...]
    ramp_ms: int
    candidate_labels: tuple[int, ...]      # gestures armed when confirmation began
    candidate_patterns: tuple[int, ...]


@dataclass
class TraceResult:
    final_state: ControllerState
    log: list[CommandRecord]
    rejected: int


def state_name(state: ControllerState) -> str:
    return type(state).__name__


def run_trace(initial: ControllerState, events: Sequence[ControlEvent],
              lib: GraspLibrary,
              config: ControllerConfig = ControllerConfig()) -> TraceResult:
    """Fold step over an ordered event sequence, logging every command."""
    state = initial
    log: list[CommandRecord] = []
    rejected = 0
    for i, event in enumerate(events):
        before = state
        state, command, was_rejected = step(state, event, lib, config)
        rejected += was_rejected
        if command is not None:
            if isinstance(before, Confirming):
                label = before.label
                cand_labels = tuple(sorted(int(g) for g in
                                           _candidate_labels(before.candidates, lib)))
                cand_patterns = before.candidates.pattern_ids()
            else:  # release from Holding
                label = before.label if isinstance(before, Holding) else None
                cand_labels = ()
                cand_patterns = ()
            log.append(CommandRecord(i, state_name(before), label,
                                     command.setpoints, command.ramp_ms,
                                     cand_labels, cand_patterns))
    return TraceResult(state, log, rejected)


def audit_command_log(log: Sequence[CommandRecord]) -> int:
    """Count unsafe executions: nonzero-setpoint commands whose gesture was
    outside the candidate set captured when confirmation began."""
    unsafe = 0
    for record in log:
        if not any(s != 0.0 for s in record.setpoints):
            continue
        if record.label is None or int(record.label) not in record.candidate_labels:
            unsafe += 1
    return unsafe


# --- trace files (JSON lines) ------------------------------------------------------

def event_to_json(event: ControlEvent) -> dict:
    match event:
        case Fixation(object_id=oid):
            return {"type": "fixation", "object_id": oid}
        case FixationLost():
            return {"type": "fixation_lost"}
        case EmgDecision(label=label, confidence=conf):
            return {"type": "emg_decision", "label": int(label), "confidence": conf}
        case CycleGesture():
            return {"type": "cycle"}
        case Tick(dt_ms=dt):
            return {"type": "tick", "dt_ms": dt}
        case Release():
            return {"type": "release"}
    raise ValueError(f"unknown event {event!r}")


def event_from_json(doc: dict, objects: Optional[dict[int, SceneObject]] = None) -> ControlEvent:
    kind = doc.get("type")
    if kind == "fixation":
        oid = doc.get("object_id")
        obj = objects.get(oid) if (objects and oid is not None) else None
        return Fixation(oid, obj)
    if kind == "fixation_lost":
        return FixationLost()
    if kind == "emg_decision":
        return EmgDecision(GestureLabel(int(doc["label"])), float(doc["confidence"]))
    if kind == "cycle":
        return CycleGesture()
    if kind == "tick":
        return Tick(float(doc["dt_ms"]))
    if kind == "release":
        return Release()
    raise ValueError(f"unknown event type {kind!r}")


def write_event_trace(path: str | Path, events: Sequence[ControlEvent]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event_to_json(event)) + "\n")


def read_event_trace(path: str | Path, scene_objects: Optional[Sequence[SceneObject]] = None
                     ) -> list[ControlEvent]:
    by_id = {o.id: o for o in scene_objects} if scene_objects else None
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(event_from_json(json.loads(line), by_id))
    return events


def write_command_log(path: str | Path, log: Sequence[CommandRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in log:
            fh.write(json.dumps({
                "t": r.index,
                "state_before": r.state_before,
                "label": int(r.label) if r.label is not None else None,
                "setpoints": list(r.setpoints),
                "ramp_ms": r.ramp_ms,
                "candidate_labels": list(r.candidate_labels),
                "candidate_patterns": list(r.candidate_patterns),
            }) + "\n")
