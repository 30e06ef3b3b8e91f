"""Built-in desk scene and grasp library.

The scene is a 4x3 grid of graspable objects spanning the class vocabulary
and a spread of sizes, chosen so every gesture is admitted by at least one
object's candidate set. The library ships eight patterns: one per gesture
plus two extras without an EMG mapping.
"""

from __future__ import annotations

from ..grasp import GraspLibrary, GraspPattern
from ..scene import Camera, Scene, SceneObject

DEFAULT_CAMERA = Camera(focal_px=700.0, baseline_m=0.06, width=960, height=720)

# (id, class, grasp size, center x, y, z)
_OBJECT_SPECS = [
    (0, "cup", 0.080, -0.45, -0.20, 1.05),
    (1, "pen", 0.015, -0.15, -0.20, 1.10),
    (2, "block", 0.055, 0.15, -0.20, 1.15),
    (3, "door_handle", 0.150, 0.45, -0.20, 1.20),
    (4, "smartphone", 0.020, -0.45, 0.00, 1.25),
    (5, "bottle", 0.070, -0.15, 0.00, 1.30),
    (6, "cup", 0.035, 0.15, 0.00, 1.35),
    (7, "smartphone", 0.008, 0.45, 0.00, 1.40),
    (8, "door_handle", 0.105, -0.45, 0.20, 1.10),
    (9, "block", 0.180, -0.15, 0.20, 1.20),
    (10, "bottle", 0.250, 0.15, 0.20, 1.30),
    (11, "cup", 0.045, 0.45, 0.20, 1.15),
]


def default_scene() -> Scene:
    objects = []
    for oid, cls, size, cx, cy, cz in _OBJECT_SPECS:
        hx = 0.55 * size + 0.005
        hy = 0.70 * size + 0.005
        hz = 0.35 * size + 0.005
        objects.append(SceneObject(
            id=oid, class_label=cls,
            aabb_min=(cx - hx, cy - hy, cz - hz),
            aabb_max=(cx + hx, cy + hy, cz + hz),
            yaw=0.0, grasp_size_m=size))
    return Scene(objects, DEFAULT_CAMERA)


def default_library(k_max: int = 3) -> GraspLibrary:
    all_classes = frozenset({"cup", "bottle", "smartphone", "door_handle", "pen", "block"})
    patterns = [
        GraspPattern(0, "rest", (0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
                     all_classes, (0.12, 0.30), 0.35),
        GraspPattern(1, "cylindrical_grip", (0.8, 0.8, 0.8, 0.8, 0.8, 0.2),
                     frozenset({"cup", "bottle", "door_handle"}), (0.05, 0.12), 1.0),
        GraspPattern(2, "lateral_pinch", (0.9, 0.35, 0.1, 0.1, 0.1, 0.85),
                     frozenset({"cup", "pen", "smartphone", "block"}), (0.01, 0.05), 0.8),
        GraspPattern(3, "tripod_pinch", (0.7, 0.7, 0.7, 0.1, 0.1, 0.6),
                     frozenset({"cup", "pen", "block", "smartphone", "bottle"}),
                     (0.02, 0.09), 0.8),
        GraspPattern(4, "open_hand", (0.05, 0.05, 0.05, 0.05, 0.05, 0.3),
                     frozenset({"door_handle", "bottle", "block"}), (0.06, 0.25), 0.7),
        GraspPattern(5, "index_point", (0.6, 0.0, 0.85, 0.85, 0.85, 0.4),
                     frozenset({"smartphone", "door_handle", "block"}), (0.005, 0.08), 0.6),
        GraspPattern(6, "hook_carry", (0.0, 0.85, 0.85, 0.85, 0.85, 0.1),
                     frozenset({"bottle", "door_handle"}), (0.02, 0.10), 0.5),
        GraspPattern(7, "spherical_wrap", (0.6, 0.6, 0.6, 0.6, 0.6, 0.8),
                     frozenset({"block", "cup"}), (0.03, 0.10), 0.55),
    ]
    return GraspLibrary(patterns, k_max=k_max)
