"""Local service the cockpit UI steers.

One FastAPI app: a WebSocket endpoint speaking UTF-8 JSON messages and a
static mount for the built frontend. Client events are serialized through
a single controller queue; the controller state is broadcast to every
connected client at 20 Hz. All safety logic stays on this side of the
wire: the UI only renders broadcasts.
"""

from __future__ import annotations

import asyncio
import json
import socket
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from ..classify import GesturePipeline, classify_window
from ..controller import (
    Armed,
    Confirming,
    ControllerConfig,
    CycleGesture,
    EmgDecision,
    Executing,
    Fixation,
    FixationLost,
    Holding,
    Idle,
    Release,
    Releasing,
    Tick,
    step,
)
from ..errors import PortInUse
from ..grasp import GraspLibrary
from ..scene import Scene, gaze_object_intersection, pixel_to_ray, project_bbox
from ..signal import GestureLabel
from .config import RunConfig
from .datagen import synth_window

BROADCAST_HZ = 20.0
DWELL_MS = 300.0
GAZE_LOSS_MS = 150.0


@dataclass
class _Session:
    """Controller plus the live gaze/dwell bookkeeping behind the socket."""
    pipeline: GesturePipeline
    scene: Scene
    lib: GraspLibrary
    config: RunConfig
    state: object = field(default_factory=Idle)
    rejected: int = 0
    fixated: Optional[int] = None          # object announced to the controller
    gaze_hit: Optional[int] = None         # object currently under the gaze ray
    gaze_since_ms: float = 0.0
    gaze_none_since_ms: Optional[float] = None
    now_ms: float = 0.0
    setpoints_from: tuple = (0.0,) * 6
    setpoints_target: tuple = (0.0,) * 6
    last_latency_us: Optional[float] = None
    intent_counter: int = 0

    def controller_config(self) -> ControllerConfig:
        return ControllerConfig(self.config.confirm_windows,
                                self.config.confirm_threshold)

    def apply(self, event) -> None:
        before = self.state
        result = step(self.state, event, self.lib, self.controller_config())
        self.state = result.state
        self.rejected += result.rejected
        if result.command is not None:
            self.setpoints_from = self.current_setpoints()
            self.setpoints_target = result.command.setpoints
        if isinstance(before, (Executing, Holding, Releasing)) and isinstance(self.state, Idle):
            self.setpoints_from = self.setpoints_target = (0.0,) * 6
        if isinstance(self.state, Idle) and self.fixated is not None:
            # the controller dropped its context (release finished, re-arm
            # failed): restart the dwell so a held gaze can arm again
            self.fixated = None
            self.gaze_since_ms = self.now_ms

    def on_gaze(self, x_px: float, y_px: float) -> None:
        ray = pixel_to_ray(self.scene.camera, x_px, y_px, int(self.now_ms * 1000))
        hit = gaze_object_intersection(ray, self.scene.objects)
        if hit != self.gaze_hit:
            self.gaze_hit = hit
            self.gaze_since_ms = self.now_ms
        if hit is None:
            if self.gaze_none_since_ms is None:
                self.gaze_none_since_ms = self.now_ms
            if (self.fixated is not None
                    and self.now_ms - self.gaze_none_since_ms >= GAZE_LOSS_MS):
                self.fixated = None
                self.apply(FixationLost())
            return
        self.gaze_none_since_ms = None
        if hit != self.fixated and self.now_ms - self.gaze_since_ms >= DWELL_MS:
            self.fixated = hit
            self.apply(Fixation(hit, self.scene.object_by_id(hit)))

    def on_intent(self, gesture: GestureLabel) -> None:
        """Synthesize one EMG window for the intent and decode it unrestricted;
        the controller discards gestures outside the armed candidates."""
        seed = int(np.random.SeedSequence(
            [self.config.seed, 404, self.intent_counter]).generate_state(1)[0])
        self.intent_counter += 1
        window = synth_window(gesture, self.config.serve_noise_sigma,
                              self.config.mains_amp, seed)
        result = classify_window(self.pipeline, window, backend="dense")
        self.last_latency_us = result.latency_us
        self.apply(EmgDecision(result.label, result.confidence))

    def tick(self, dt_ms: float) -> None:
        self.now_ms += dt_ms
        if isinstance(self.state, (Executing, Releasing)):
            self.apply(Tick(dt_ms))

    def current_setpoints(self) -> tuple:
        if isinstance(self.state, (Executing, Releasing)):
            p = min(self.state.progress, 1.0)
            return tuple(a + (b - a) * p
                         for a, b in zip(self.setpoints_from, self.setpoints_target))
        return self.setpoints_target

    def state_message(self) -> dict:
        controller: dict = {"state": type(self.state).__name__}
        candidates = []
        if isinstance(self.state, (Armed, Confirming)):
            cand = self.state.candidates
            controller["object_id"] = self.state.object_id
            controller["highlighted"] = getattr(self.state, "highlighted", 0)
            if isinstance(self.state, Confirming):
                controller["label"] = int(self.state.label)
                controller["hold_windows"] = self.state.hold_windows
            for pid, score in cand.entries:
                pattern = self.lib.pattern(pid)
                candidates.append({"id": pid, "label": pattern.label,
                                   "gesture": (int(pattern.gesture)
                                               if pattern.gesture is not None else None),
                                   "score": round(score, 6)})
        elif isinstance(self.state, (Executing, Holding, Releasing)):
            controller["label"] = int(self.state.label)
            if not isinstance(self.state, Holding):
                controller["progress"] = round(min(self.state.progress, 1.0), 4)
        return {
            "type": "state",
            "controller": controller,
            "fixated": self.fixated,
            "candidates": candidates,
            "setpoints": [round(s, 4) for s in self.current_setpoints()],
            "rejected": self.rejected,
            "latency_us": self.last_latency_us,
        }

    def scene_message(self) -> dict:
        objects = []
        for obj in self.scene.objects:
            x, y, w, h = project_bbox(self.scene.camera, obj)
            objects.append({"id": obj.id, "class": obj.class_label,
                            "bbox_px": [round(v, 1) for v in (x, y, w, h)],
                            "grasp_size_m": obj.grasp_size_m})
        return {"type": "scene", "width": self.scene.camera.width,
                "height": self.scene.camera.height, "objects": objects,
                "k_max": self.lib.k_max}


def build_app(pipeline: GesturePipeline, scene: Scene, lib: GraspLibrary,
              config: RunConfig, static_dir: Optional[str | Path] = None):
    session = _Session(pipeline, scene, lib, config)
    clients: set = set()
    lock = asyncio.Lock()

    async def broadcaster():
        period = 1.0 / BROADCAST_HZ
        while True:
            await asyncio.sleep(period)
            async with lock:
                session.tick(period * 1000.0)
                message = json.dumps(session.state_message())
            dead = []
            for ws in clients:
                try:
                    await ws.send_text(message)
                except Exception:
                    dead.append(ws)
            for ws in dead:
                clients.discard(ws)

    @asynccontextmanager
    async def lifespan(app):
        task = asyncio.create_task(broadcaster())
        yield
        task.cancel()

    app = FastAPI(lifespan=lifespan)
    app.state.session = session

    @app.get("/scene")
    async def scene_doc():
        return JSONResponse(session.scene_message())

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        clients.add(ws)
        await ws.send_text(json.dumps(session.scene_message()))
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    doc = json.loads(raw)
                    kind = doc["type"]
                except (json.JSONDecodeError, TypeError, KeyError):
                    await ws.send_text(json.dumps({"type": "error",
                                                   "code": "bad_message"}))
                    continue
                async with lock:
                    try:
                        if kind == "gaze":
                            session.on_gaze(float(doc["x"]), float(doc["y"]))
                        elif kind == "emg_intent":
                            session.on_intent(GestureLabel(int(doc["gesture"])))
                        elif kind == "cycle":
                            session.apply(CycleGesture())
                        elif kind == "release":
                            session.apply(Release())
                        else:
                            raise ValueError(kind)
                    except (KeyError, ValueError, TypeError):
                        await ws.send_text(json.dumps({"type": "error",
                                                       "code": "bad_message"}))
        except WebSocketDisconnect:
            pass
        finally:
            clients.discard(ws)

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="cockpit")
    return app


def check_port_free(port: int, host: str = "127.0.0.1") -> None:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            s.bind((host, port))
        except OSError as exc:
            raise PortInUse(f"port {port} is already in use") from exc


def serve(pipeline: GesturePipeline, scene: Scene, lib: GraspLibrary,
          config: RunConfig, port: Optional[int] = None,
          static_dir: Optional[str | Path] = None) -> None:
    """Run the service until interrupted (uvicorn handles signals)."""
    import uvicorn

    port = port or config.serve_port
    check_port_free(port)
    app = build_app(pipeline, scene, lib, config, static_dir=static_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
