"""End-to-end scripted trials over the full pipeline.

A scenario fixates one object, streams synthetic EMG for an intended
gesture, and expects either a specific executed grasp or no actuation.
The run drives gaze -> fixation -> candidates -> classification ->
controller, collects the command log, and audits it for safety.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..classify import GesturePipeline, classify_window
from ..controller import (
    ControllerConfig,
    ControlEvent,
    EmgDecision,
    Fixation,
    Holding,
    Idle,
    Release,
    Tick,
    audit_command_log,
    run_trace,
    state_name,
)
from ..errors import NeuromanipError
from ..grasp import GraspLibrary
from ..scene import (
    GazeSample,
    Scene,
    depth_from_disparity,
    detect_fixation,
    detect_objects,
    extract_rois,
    gaze_object_intersection,
    render_frame,
    project_bbox,
)
from ..signal import GestureLabel
from .datagen import synth_window


@dataclass(frozen=True)
class Scenario:
    name: str
    fixate_object: Optional[int]       # None: gaze wanders off-scene
    intend: Optional[GestureLabel]
    expect_grasp: Optional[GestureLabel]
    decisions: int = 8
    noise_sigma: float = 0.002
    gaze_rate_hz: float = 100.0
    gaze_ms: float = 500.0


def load_scenario(path: str | Path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return Scenario(
        name=str(doc.get("name", Path(path).stem)),
        fixate_object=doc.get("fixate_object"),
        intend=GestureLabel(int(doc["intend"])) if doc.get("intend") is not None else None,
        expect_grasp=(GestureLabel(int(doc["expect_grasp"]))
                      if doc.get("expect_grasp") is not None else None),
        decisions=int(doc.get("decisions", 8)),
        noise_sigma=float(doc.get("noise_sigma", 0.002)),
        gaze_rate_hz=float(doc.get("gaze_rate_hz", 100.0)),
        gaze_ms=float(doc.get("gaze_ms", 500.0)),
    )


@dataclass
class TrialLog:
    scenario: str
    fixated_object: Optional[int]
    fixation_dwell_ms: Optional[float]
    detection_class: Optional[str]
    depth_m: Optional[float]
    decisions: list[dict] = field(default_factory=list)
    final_state: str = "Idle"
    executed: Optional[GestureLabel] = None
    commands: int = 0
    rejected: int = 0
    unsafe_executions: int = 0

    def ok(self, expect: Optional[GestureLabel]) -> bool:
        if self.unsafe_executions != 0:
            return False
        return self.executed == expect

    def to_json(self) -> str:
        return json.dumps({
            "scenario": self.scenario,
            "fixated_object": self.fixated_object,
            "fixation_dwell_ms": self.fixation_dwell_ms,
            "detection_class": self.detection_class,
            "depth_m": self.depth_m,
            "decisions": self.decisions,
            "final_state": self.final_state,
            "executed": int(self.executed) if self.executed is not None else None,
            "commands": self.commands,
            "rejected": self.rejected,
            "unsafe_executions": self.unsafe_executions,
        }, sort_keys=True)


def _gaze_trace(scene: Scene, object_id: Optional[int], rate_hz: float,
                duration_ms: float, seed: int) -> list[GazeSample]:
    """Jittered gaze at the object center, or off into the background."""
    rng = np.random.default_rng(seed)
    if object_id is not None:
        obj = scene.object_by_id(object_id)
        center = (np.asarray(obj.aabb_min) + np.asarray(obj.aabb_max)) / 2.0
    else:
        center = np.array([5.0, 5.0, 1.0])   # far off every box
    base = center / np.linalg.norm(center)
    n = int(duration_ms * rate_hz / 1000.0)
    samples = []
    jitter_rad = math.radians(0.3)
    for i in range(n):
        d = base + rng.normal(0.0, jitter_rad, 3)
        d /= np.linalg.norm(d)
        samples.append(GazeSample(i * int(1e6 / rate_hz), (0.0, 0.0, 0.0), tuple(d)))
    return samples


def simulate(scenario: Scenario, pipeline: GesturePipeline, scene: Scene,
             lib: GraspLibrary,
             controller_config: ControllerConfig = ControllerConfig(),
             seed: int = 7) -> TrialLog:
    log = TrialLog(scenario=scenario.name, fixated_object=None,
                   fixation_dwell_ms=None, detection_class=None, depth_m=None)

    # gaze front end: dwell detection, then ray picking on the fixation
    gaze = _gaze_trace(scene, scenario.fixate_object, scenario.gaze_rate_hz,
                       scenario.gaze_ms, seed)
    fixations = detect_fixation(gaze)
    events: list[ControlEvent] = []
    if fixations:
        fix = fixations[0]
        span = [s for s in gaze if fix.onset_us <= s.timestamp_us
                <= fix.onset_us + fix.dwell_ms * 1000.0]
        mean = np.mean([s.direction for s in span], axis=0)
        mean /= np.linalg.norm(mean)
        ray = GazeSample(fix.onset_us, (0.0, 0.0, 0.0), tuple(mean))
        fix.object_id = gaze_object_intersection(ray, scene.objects)
        log.fixated_object = fix.object_id
        log.fixation_dwell_ms = fix.dwell_ms
        if fix.object_id is not None:
            obj = scene.object_by_id(fix.object_id)
            events.append(Fixation(fix.object_id, obj))

            # vision side channel: difference frames, oracle detection, depth
            center = (np.asarray(obj.aabb_min) + np.asarray(obj.aabb_max)) / 2.0
            u = scene.camera.focal_px * center[0] / center[2] + scene.camera.width / 2
            v = scene.camera.focal_px * center[1] / center[2] + scene.camera.height / 2
            before = render_frame(scene, (u, v), 0, intensities={obj.id: 0.0})
            after = render_frame(scene, (u, v), 33_000)
            rois = extract_rois(before, after)
            detections = [d for d in detect_objects(rois, scene) if d.object_id is not None]
            if detections:
                log.detection_class = detections[0].class_label
            disparity = scene.camera.focal_px * scene.camera.baseline_m / center[2]
            log.depth_m = depth_from_disparity(disparity, scene.camera.focal_px,
                                               scene.camera.baseline_m)

    # EMG intent stream through the classifier (unrestricted decisions; the
    # controller is the safety gate that discards out-of-candidate gestures)
    if scenario.intend is not None:
        for i in range(scenario.decisions):
            window = synth_window(scenario.intend, scenario.noise_sigma, 0.02,
                                  seed * 1000 + i)
            result = classify_window(pipeline, window, backend="dense")
            events.append(EmgDecision(result.label, result.confidence))
            log.decisions.append({"label": int(result.label),
                                  "confidence": round(result.confidence, 4)})

    events += [Tick(controller_config.ramp_ms + 50.0)]
    trace = run_trace(Idle(), events, lib, controller_config)

    executed = [r for r in trace.log if r.candidate_labels]  # grasp commands only
    if executed:
        log.executed = executed[0].label

    # release if the hand is holding, then settle
    if isinstance(trace.final_state, Holding):
        tail = run_trace(trace.final_state,
                         [Release(), Tick(controller_config.ramp_ms + 50.0)],
                         lib, controller_config)
        trace.log.extend(tail.log)
        trace.final_state = tail.final_state

    log.final_state = state_name(trace.final_state)
    log.commands = len(trace.log)
    log.rejected = trace.rejected
    log.unsafe_executions = audit_command_log(trace.log)
    return log
