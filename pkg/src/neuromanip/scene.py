"""Synthetic 3-D scene and gaze front end.

Provides dispersion-based fixation detection over gaze rays, slab-method
ray/box picking, temporal-differencing ROI extraction around the gaze
point, stereo triangulation, and a pluggable object detector whose bundled
implementation reads scene ground truth.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np
from scipy import ndimage

from .errors import (
    DimensionMismatch,
    NonMonotonicTimestamps,
    NonPositiveDisparity,
    SceneNotLoaded,
)

DISPERSION_DEG = 1.5
DWELL_MS = 300.0

ROI_RADIUS_PX = 120
ROI_TAU = 0.1
ROI_MARGIN_PX = 8
ROI_MIN_AREA_PX = 16
ROI_MAX_COUNT = 4

DETECTOR_IOU_THRESHOLD = 0.3


@dataclass(frozen=True)
class SceneObject:
    id: int
    class_label: str
    aabb_min: tuple[float, float, float]
    aabb_max: tuple[float, float, float]
    yaw: float
    grasp_size_m: float

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.aabb_min, self.aabb_max)):
            raise ValueError(f"object {self.id}: aabb min must be < max per axis")
        diag = math.dist(self.aabb_min, self.aabb_max)
        if not 0.0 < self.grasp_size_m <= diag:
            raise ValueError(f"object {self.id}: grasp size outside (0, box diagonal]")


@dataclass(frozen=True)
class GazeSample:
    timestamp_us: int
    origin: tuple[float, float, float]
    direction: tuple[float, float, float]

    def __post_init__(self):
        norm = math.sqrt(sum(c * c for c in self.direction))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"gaze direction must be unit length (|d|={norm})")


@dataclass
class FixationEvent:
    object_id: Optional[int]
    onset_us: int
    dwell_ms: float


@dataclass(frozen=True)
class Camera:
    focal_px: float
    baseline_m: float
    width: int
    height: int


@dataclass(frozen=True)
class Frame:
    """Grayscale image with the gaze point expressed in its pixel grid."""
    pixels: np.ndarray          # (height, width) intensities in [0, 1]
    timestamp_us: int
    gaze_px: tuple[float, float]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class Roi:
    rect: tuple[int, int, int, int]   # x, y, w, h
    crop: np.ndarray


@dataclass(frozen=True)
class Detection:
    object_id: Optional[int]
    class_label: Optional[str]
    bbox_px: tuple[float, float, float, float]
    confidence: float


@dataclass
class Scene:
    objects: list[SceneObject]
    camera: Camera

    def object_by_id(self, object_id: int) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)


# --- fixation detection --------------------------------------------------------

def _mean_direction(dirs: list[np.ndarray]) -> np.ndarray:
    m = np.mean(dirs, axis=0)
    return m / np.linalg.norm(m)


def _angle_deg(a: np.ndarray, b: np.ndarray) -> float:
    return math.degrees(math.acos(min(1.0, max(-1.0, float(np.dot(a, b))))))


def detect_fixation(samples: Sequence[GazeSample],
                    dispersion_deg: float = DISPERSION_DEG,
                    dwell_ms: float = DWELL_MS) -> list[FixationEvent]:
    """Dispersion-threshold fixation detection over a gaze stream.

    A fixation opens once every direction inside a sliding dwell-length span
    stays within the dispersion cone of the span mean; it grows while new
    samples stay inside the cone and closes (emitting one event) when one
    leaves or the stream ends. object_id is left unresolved here; callers
    intersect the fixation direction with the scene.
    """
    for a, b in zip(samples, samples[1:]):
        if b.timestamp_us <= a.timestamp_us:
            raise NonMonotonicTimestamps(
                f"gaze timestamp {b.timestamp_us} follows {a.timestamp_us}")

    events: list[FixationEvent] = []
    dirs = [np.asarray(s.direction, dtype=float) for s in samples]
    times = [s.timestamp_us for s in samples]
    n = len(samples)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and times[j] - times[i] < dwell_ms * 1000.0:
            j += 1
        if times[j] - times[i] < dwell_ms * 1000.0:
            break  # tail shorter than the dwell requirement
        window = dirs[i:j + 1]
        mean = _mean_direction(window)
        if all(_angle_deg(d, mean) <= dispersion_deg for d in window):
            k = j
            while k + 1 < n and _angle_deg(dirs[k + 1], mean) <= dispersion_deg:
                k += 1
                window.append(dirs[k])
                mean = _mean_direction(window)
            events.append(FixationEvent(None, times[i], (times[k] - times[i]) / 1000.0))
            i = k + 1
        else:
            i += 1
    return events


# --- ray picking ----------------------------------------------------------------

def _ray_box_entry(origin, direction, box_min, box_max) -> Optional[float]:
    """Slab method; returns the entry distance (0 if the origin is inside)."""
    t_enter, t_exit = -math.inf, math.inf
    for o, d, lo, hi in zip(origin, direction, box_min, box_max):
        if d == 0.0:
            if o < lo or o > hi:
                return None
            continue
        t0, t1 = (lo - o) / d, (hi - o) / d
        if t0 > t1:
            t0, t1 = t1, t0
        t_enter = max(t_enter, t0)
        t_exit = min(t_exit, t1)
        if t_exit < t_enter:
            return None
    if t_exit < 0.0:
        return None
    return max(t_enter, 0.0)


def gaze_object_intersection(ray: GazeSample,
                             objects: Sequence[SceneObject]) -> Optional[int]:
    """Nearest object the gaze ray enters; ties break to the smaller id."""
    best_id, best_t = None, math.inf
    for obj in objects:
        t = _ray_box_entry(ray.origin, ray.direction, obj.aabb_min, obj.aabb_max)
        if t is None:
            continue
        if t < best_t - 1e-9 or (abs(t - best_t) < 1e-9 and
                                 (best_id is None or obj.id < best_id)):
            best_id, best_t = obj.id, t
    return best_id


# --- temporal differencing ROIs ---------------------------------------------------

def extract_rois(prev: Frame, cur: Frame, radius_px: int = ROI_RADIUS_PX,
                 tau: float = ROI_TAU) -> list[Roi]:
    """Changed regions near the gaze point, largest first, at most four.

    The inter-frame difference is thresholded at tau, masked to a disk
    around the current gaze point, split into 4-connected components,
    and each surviving component's bounding box is padded by 8 px.
    """
    if prev.pixels.shape != cur.pixels.shape:
        raise DimensionMismatch(
            f"frame shapes differ: {prev.pixels.shape} vs {cur.pixels.shape}")
    changed = np.abs(cur.pixels - prev.pixels) > tau
    gx, gy = cur.gaze_px
    yy, xx = np.mgrid[0:cur.height, 0:cur.width]
    changed &= (xx - gx) ** 2 + (yy - gy) ** 2 <= radius_px ** 2

    labels, count = ndimage.label(changed, structure=[[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    rois: list[tuple[int, Roi]] = []
    for comp in range(1, count + 1):
        ys, xs = np.nonzero(labels == comp)
        area = len(xs)
        if area < ROI_MIN_AREA_PX:
            continue
        x0 = max(int(xs.min()) - ROI_MARGIN_PX, 0)
        y0 = max(int(ys.min()) - ROI_MARGIN_PX, 0)
        x1 = min(int(xs.max()) + ROI_MARGIN_PX, cur.width - 1)
        y1 = min(int(ys.max()) + ROI_MARGIN_PX, cur.height - 1)
        rect = (x0, y0, x1 - x0 + 1, y1 - y0 + 1)
        crop = cur.pixels[y0:y1 + 1, x0:x1 + 1].copy()
        rois.append((area, Roi(rect, crop)))
    rois.sort(key=lambda t: -t[0])
    return [roi for _, roi in rois[:ROI_MAX_COUNT]]


# --- stereo depth ------------------------------------------------------------------

def depth_from_disparity(disparity_px: float, focal_px: float,
                         baseline_m: float) -> float:
    """Triangulated depth z = f * B / d."""
    if disparity_px <= 0.0:
        raise NonPositiveDisparity(f"disparity must be positive, got {disparity_px}")
    if focal_px <= 0.0 or baseline_m <= 0.0:
        raise ValueError("focal length and baseline must be positive")
    return focal_px * baseline_m / disparity_px


# --- projection and rendering --------------------------------------------------------

def project_point(camera: Camera, point: Sequence[float]) -> tuple[float, float]:
    x, y, z = point
    if z <= 0.0:
        raise ValueError("point behind the camera")
    u = camera.focal_px * x / z + camera.width / 2.0
    v = camera.focal_px * y / z + camera.height / 2.0
    return u, v


def project_bbox(camera: Camera, obj: SceneObject) -> tuple[float, float, float, float]:
    """Pixel-space bounding rectangle (x, y, w, h) of the projected box corners."""
    us, vs = [], []
    for cx in (obj.aabb_min[0], obj.aabb_max[0]):
        for cy in (obj.aabb_min[1], obj.aabb_max[1]):
            for cz in (obj.aabb_min[2], obj.aabb_max[2]):
                u, v = project_point(camera, (cx, cy, cz))
                us.append(u)
                vs.append(v)
    x0, y0 = min(us), min(vs)
    return x0, y0, max(us) - x0, max(vs) - y0


def pixel_to_ray(camera: Camera, x_px: float, y_px: float,
                 timestamp_us: int = 0) -> GazeSample:
    """Gaze ray through a pixel, from the camera origin."""
    dx = (x_px - camera.width / 2.0) / camera.focal_px
    dy = (y_px - camera.height / 2.0) / camera.focal_px
    d = np.array([dx, dy, 1.0])
    d /= np.linalg.norm(d)
    return GazeSample(timestamp_us, (0.0, 0.0, 0.0), tuple(d))


def render_frame(scene: Scene, gaze_px: tuple[float, float],
                 timestamp_us: int = 0,
                 intensities: Optional[dict[int, float]] = None) -> Frame:
    """Objects drawn as filled rectangles by projection, white-ish on black."""
    img = np.zeros((scene.camera.height, scene.camera.width))
    for obj in scene.objects:
        x, y, w, h = project_bbox(scene.camera, obj)
        x0 = max(int(round(x)), 0)
        y0 = max(int(round(y)), 0)
        x1 = min(int(round(x + w)), scene.camera.width)
        y1 = min(int(round(y + h)), scene.camera.height)
        level = (intensities or {}).get(obj.id, 0.35 + 0.06 * (obj.id % 8))
        img[y0:y1, x0:x1] = level
    return Frame(img, timestamp_us, gaze_px)


# --- object detector interface ---------------------------------------------------------

class ObjectDetector(Protocol):
    """Anything that can label ROIs; the real system would put a CNN here."""

    def detect(self, rois: Sequence[Roi]) -> list[Detection]: ...


def _rect_iou(a: Sequence[float], b: Sequence[float]) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


class OracleDetector:
    """Ground-truth detector: matches ROIs to projected boxes by IoU."""

    def __init__(self, scene: Optional[Scene]):
        if scene is None or not scene.objects:
            raise SceneNotLoaded("oracle detector needs a loaded scene")
        self.scene = scene
        self._boxes = [(obj, project_bbox(scene.camera, obj)) for obj in scene.objects]

    def detect(self, rois: Sequence[Roi]) -> list[Detection]:
        out = []
        for roi in rois:
            best_obj, best_box, best_iou = None, None, 0.0
            for obj, box in self._boxes:
                iou = _rect_iou(roi.rect, box)
                if iou > best_iou:
                    best_obj, best_box, best_iou = obj, box, iou
            if best_obj is not None and best_iou >= DETECTOR_IOU_THRESHOLD:
                out.append(Detection(best_obj.id, best_obj.class_label,
                                     best_box, best_iou))
            else:
                out.append(Detection(None, None, tuple(map(float, roi.rect)), 0.0))
        return out


def detect_objects(rois: Sequence[Roi], scene: Scene) -> list[Detection]:
    """Oracle implementation of the detector interface over scene ground truth."""
    return OracleDetector(scene).detect(rois)


# --- scene and gaze files ------------------------------------------------------------------

def load_scene(path: str | Path) -> Scene:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    cam = doc["camera"]
    camera = Camera(float(cam["focal_px"]), float(cam["baseline_m"]),
                    int(cam["width"]), int(cam["height"]))
    objects = [SceneObject(int(o["id"]), str(o["class"]),
                           tuple(float(v) for v in o["aabb"]["min"]),
                           tuple(float(v) for v in o["aabb"]["max"]),
                           float(o.get("yaw", 0.0)), float(o["grasp_size_m"]))
               for o in doc["objects"]]
    return Scene(objects, camera)


def save_scene(path: str | Path, scene: Scene) -> None:
    doc = {
        "camera": {"focal_px": scene.camera.focal_px,
                   "baseline_m": scene.camera.baseline_m,
                   "width": scene.camera.width,
                   "height": scene.camera.height},
        "objects": [{"id": o.id, "class": o.class_label,
                     "aabb": {"min": list(o.aabb_min), "max": list(o.aabb_max)},
                     "yaw": o.yaw, "grasp_size_m": o.grasp_size_m}
                    for o in scene.objects],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


GAZE_HEADER = ["t_us", "ox", "oy", "oz", "dx", "dy", "dz"]


def write_gaze_trace(path: str | Path, samples: Sequence[GazeSample]) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GAZE_HEADER)
        for s in samples:
            writer.writerow([s.timestamp_us, *[repr(float(v)) for v in s.origin],
                             *[repr(float(v)) for v in s.direction]])


def read_gaze_trace(path: str | Path) -> list[GazeSample]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != GAZE_HEADER:
            raise ValueError(f"unexpected gaze trace header {header}")
        return [GazeSample(int(r[0]), tuple(float(v) for v in r[1:4]),
                           tuple(float(v) for v in r[4:7]))
                for r in reader if r]
