import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuromanip.errors import (
    DimensionMismatch,
    NonMonotonicTimestamps,
    NonPositiveDisparity,
    SceneNotLoaded,
)
from neuromanip.scene import (
    Camera,
    Frame,
    GazeSample,
    OracleDetector,
    Roi,
    Scene,
    SceneObject,
    depth_from_disparity,
    detect_fixation,
    detect_objects,
    extract_rois,
    gaze_object_intersection,
    load_scene,
    pixel_to_ray,
    project_bbox,
    read_gaze_trace,
    render_frame,
    save_scene,
    write_gaze_trace,
)


def unit(v):
    v = np.asarray(v, dtype=float)
    return tuple(float(c) for c in v / np.linalg.norm(v))


def gaze_at(direction, t_us):
    return GazeSample(t_us, (0.0, 0.0, 0.0), unit(direction))


def box(oid, lo, hi, cls="cup", size=0.05):
    return SceneObject(oid, cls, tuple(lo), tuple(hi), 0.0, size)


class TestFixation:
    def test_constant_gaze_one_event(self):
        samples = [gaze_at((0, 0, 1), t * 10_000) for t in range(100)]  # 1 s at 100 Hz
        events = detect_fixation(samples)
        assert len(events) == 1
        assert events[0].dwell_ms == pytest.approx(990.0)
        assert events[0].onset_us == 0

    def test_alternating_gaze_never_fixates(self):
        a, b = unit((0, 0, 1)), unit((math.sin(math.radians(10)), 0,
                                      math.cos(math.radians(10))))
        samples = []
        for i in range(60):  # flip every 100 ms for 6 s
            d = a if (i // 10) % 2 == 0 else b
            samples.append(GazeSample(i * 10_000, (0.0, 0.0, 0.0), d))
        assert detect_fixation(samples) == []

    def test_jittered_gaze_fixates(self):
        rng = np.random.default_rng(4)
        base = np.array([0.0, 0.0, 1.0])
        dirs = []
        for i in range(60):  # 600 ms at 100 Hz, jitter well inside the cone
            theta = rng.uniform(0, 0.5 * math.pi / 180)
            phi = rng.uniform(0, 2 * math.pi)
            d = base + theta * np.array([math.cos(phi), math.sin(phi), 0.0])
            dirs.append(unit(d))
        # oracle: max pairwise angle stays under the dispersion threshold
        worst = max(math.degrees(math.acos(min(1.0, float(np.dot(p, q)))))
                    for p in dirs for q in dirs)
        assert worst < 1.5
        samples = [GazeSample(i * 10_000, (0.0, 0.0, 0.0), d)
                   for i, d in enumerate(dirs)]
        events = detect_fixation(samples)
        assert len(events) == 1

    def test_rejects_unordered_stream(self):
        samples = [gaze_at((0, 0, 1), 100), gaze_at((0, 0, 1), 50)]
        with pytest.raises(NonMonotonicTimestamps):
            detect_fixation(samples)

    def test_rerun_is_identical(self):
        rng = np.random.default_rng(9)
        samples = []
        for i in range(200):
            d = unit(np.array([0, 0, 1]) + 0.002 * rng.normal(0, 1, 3))
            samples.append(GazeSample(i * 10_000, (0.0, 0.0, 0.0), d))
        first = detect_fixation(samples)
        second = detect_fixation(samples)
        assert [(e.onset_us, e.dwell_ms) for e in first] == \
               [(e.onset_us, e.dwell_ms) for e in second]


def ray_march_entry(origin, direction, lo, hi, t_max=10.0, steps=10_000):
    """Brute-force oracle: first marched point inside the box."""
    origin = np.asarray(origin, float)
    direction = np.asarray(direction, float)
    for i in range(steps):
        t = t_max * i / steps
        p = origin + t * direction
        if np.all(p >= lo) and np.all(p <= hi):
            return t
    return None


class TestRayPicking:
    def test_empty_scene_misses(self):
        assert gaze_object_intersection(gaze_at((0, 0, 1), 0), []) is None

    def test_direct_hit(self):
        target = box(7, (-0.5, -0.5, 1.0), (0.5, 0.5, 2.0))
        assert gaze_object_intersection(gaze_at((0, 0, 1), 0), [target]) == 7

    def test_nearer_box_wins(self):
        near = box(5, (-0.2, -0.2, 0.9), (0.2, 0.2, 1.1))
        far = box(2, (-0.2, -0.2, 2.9), (0.2, 0.2, 3.1))
        ray = gaze_at((0, 0, 1), 0)
        assert gaze_object_intersection(ray, [far, near]) == 5
        t_near = ray_march_entry(ray.origin, ray.direction, near.aabb_min, near.aabb_max)
        t_far = ray_march_entry(ray.origin, ray.direction, far.aabb_min, far.aabb_max)
        assert t_near < t_far

    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        boxes = []
        for i in range(6):
            lo = rng.uniform(-1, 1, 3) + np.array([0, 0, 1.5])
            hi = lo + rng.uniform(0.1, 0.5, 3)
            boxes.append(box(i, lo, hi))
        ray = gaze_at((0.1, -0.05, 1.0), 0)
        reference = gaze_object_intersection(ray, boxes)
        for perm_seed in range(5):
            perm = list(np.random.default_rng(perm_seed).permutation(6))
            shuffled = [boxes[i] for i in perm]
            assert gaze_object_intersection(ray, shuffled) == reference

    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=40, deadline=None)
    def test_shrinking_never_creates_hits(self, seed):
        rng = np.random.default_rng(seed)
        lo = rng.uniform(-1, 1, 3) + np.array([0, 0, 1.2])
        hi = lo + rng.uniform(0.2, 0.8, 3)
        big = box(0, lo, hi)
        shrink = 0.25 * (np.asarray(hi) - np.asarray(lo))
        small = box(0, lo + shrink, hi - shrink)
        d = unit(rng.normal(0, 1, 3) + np.array([0, 0, 2.0]))
        ray = GazeSample(0, (0.0, 0.0, 0.0), d)
        if gaze_object_intersection(ray, [big]) is None:
            assert gaze_object_intersection(ray, [small]) is None

    def test_agrees_with_ray_march_oracle(self):
        rng = np.random.default_rng(8)
        boxes = []
        for i in range(4):
            lo = rng.uniform(-0.8, 0.4, 3) + np.array([0, 0, 1.0])
            hi = lo + rng.uniform(0.2, 0.6, 3)
            boxes.append(box(i, lo, hi))
        for trial in range(25):
            d = unit(rng.normal(0, 0.3, 3) + np.array([0, 0, 1.0]))
            ray = GazeSample(0, (0.0, 0.0, 0.0), d)
            picked = gaze_object_intersection(ray, boxes)
            entries = {}
            for b in boxes:
                t = ray_march_entry(ray.origin, ray.direction, b.aabb_min, b.aabb_max)
                if t is not None:
                    entries[b.id] = t
            expected = min(entries, key=entries.get) if entries else None
            assert picked == expected


def flat_frame(value=0.0, w=400, h=300, gaze=(200.0, 150.0), t=0):
    return Frame(np.full((h, w), value), t, gaze)


class TestRois:
    def test_identical_frames_no_rois(self):
        assert extract_rois(flat_frame(), flat_frame(t=33_000)) == []

    def test_block_change_produces_padded_roi(self):
        prev = flat_frame()
        pixels = prev.pixels.copy()
        pixels[140:160, 190:210] += 0.5       # 20x20 block at the gaze point
        cur = Frame(pixels, 33_000, (200.0, 150.0))
        rois = extract_rois(prev, cur)
        assert len(rois) == 1
        x, y, w, h = rois[0].rect
        assert (w, h) == (36, 36)             # 20 + 2 * 8 margin
        assert (x, y) == (182, 132)
        # oracle: every changed pixel is inside the returned rect
        ys, xs = np.nonzero(np.abs(cur.pixels - prev.pixels) > 0.1)
        assert xs.min() >= x and xs.max() <= x + w - 1
        assert ys.min() >= y and ys.max() <= y + h - 1

    def test_change_outside_gaze_radius_ignored(self):
        prev = flat_frame()
        pixels = prev.pixels.copy()
        pixels[10:30, 10:30] += 0.5           # ~240 px from the gaze point
        cur = Frame(pixels, 33_000, (300.0, 200.0))
        assert extract_rois(prev, cur, radius_px=120) == []

    def test_small_components_dropped(self):
        prev = flat_frame()
        pixels = prev.pixels.copy()
        pixels[150:152, 200:202] += 0.5       # 4 px < 16 px minimum
        cur = Frame(pixels, 33_000, (200.0, 150.0))
        assert extract_rois(prev, cur) == []

    def test_rois_come_from_disjoint_components(self):
        prev = flat_frame()
        pixels = prev.pixels.copy()
        pixels[140:160, 150:170] += 0.5
        pixels[140:160, 230:250] += 0.5
        cur = Frame(pixels, 33_000, (200.0, 150.0))
        rois = extract_rois(prev, cur)
        assert len(rois) == 2

    def test_at_most_four_rois_largest_first(self):
        prev = flat_frame()
        pixels = prev.pixels.copy()
        sizes = [22, 18, 14, 10, 6]
        for i, s in enumerate(sizes):
            r0, c0 = 80 + 40 * i, 150 + 25 * i
            pixels[r0:r0 + s, c0:c0 + s] += 0.5
        cur = Frame(pixels, 33_000, (210.0, 160.0))
        rois = extract_rois(prev, cur, radius_px=250)
        assert len(rois) == 4
        areas = [r.rect[2] * r.rect[3] for r in rois]
        assert areas == sorted(areas, reverse=True)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            extract_rois(flat_frame(w=100), flat_frame())


class TestDepth:
    def test_identity_case(self):
        assert depth_from_disparity(1.0, 1.0, 1.0) == 1.0

    def test_hand_computed_case(self):
        assert depth_from_disparity(42.0, 700.0, 0.06) == pytest.approx(1.0)

    def test_zero_disparity_rejected(self):
        with pytest.raises(NonPositiveDisparity):
            depth_from_disparity(0.0, 700.0, 0.06)

    @given(d=st.floats(min_value=1.0, max_value=200.0),
           delta=st.floats(min_value=0.1, max_value=50.0),
           b=st.floats(min_value=0.01, max_value=0.5),
           k=st.floats(min_value=0.1, max_value=10.0))
    @settings(max_examples=50, deadline=None)
    def test_decreasing_in_disparity_linear_in_baseline(self, d, delta, b, k):
        f = 700.0
        assert depth_from_disparity(d + delta, f, b) < depth_from_disparity(d, f, b)
        assert depth_from_disparity(d, f, k * b) == pytest.approx(
            k * depth_from_disparity(d, f, b))


class TestOracleDetector:
    def scene_with_one_cup(self):
        camera = Camera(700.0, 0.06, 960, 720)
        cup = box(3, (-0.05, -0.06, 0.97), (0.05, 0.06, 1.03), "cup", 0.08)
        return Scene([cup], camera)

    def test_exact_bbox_full_confidence(self):
        scene = self.scene_with_one_cup()
        bx, by, bw, bh = project_bbox(scene.camera, scene.objects[0])
        roi = Roi((int(bx), int(by), int(round(bw)), int(round(bh))),
                  np.zeros((int(round(bh)), int(round(bw)))))
        det = detect_objects([roi], scene)[0]
        assert det.object_id == 3
        assert det.confidence == pytest.approx(1.0, abs=0.05)

    def test_disjoint_roi_detects_nothing(self):
        scene = self.scene_with_one_cup()
        det = detect_objects([Roi((0, 0, 20, 20), np.zeros((20, 20)))], scene)[0]
        assert det.object_id is None
        assert det.confidence == 0.0

    def test_half_overlap_confidence_matches_iou_oracle(self):
        scene = self.scene_with_one_cup()
        bx, by, bw, bh = project_bbox(scene.camera, scene.objects[0])
        bx, by, bw, bh = round(bx), round(by), round(bw), round(bh)
        roi_rect = (bx, by, bw, 2 * bh)       # half of this ROI covers the box
        det = detect_objects([Roi(roi_rect, np.zeros((2 * bh, bw)))], scene)[0]
        inter = bw * bh
        union = bw * bh + bw * 2 * bh - inter
        assert det.object_id == 3
        assert det.confidence == pytest.approx(inter / union, abs=0.02)

    def test_requires_scene(self):
        with pytest.raises(SceneNotLoaded):
            OracleDetector(None)


class TestSceneFiles:
    def test_roundtrip(self, tmp_path, scene):
        path = tmp_path / "scene.json"
        save_scene(path, scene)
        back = load_scene(path)
        assert back.camera == scene.camera
        assert back.objects == scene.objects

    def test_gaze_trace_roundtrip(self, tmp_path):
        samples = [gaze_at((0.1 * i, 0.05, 1.0), i * 10_000) for i in range(5)]
        path = tmp_path / "gaze.csv"
        write_gaze_trace(path, samples)
        assert read_gaze_trace(path) == samples


class TestDefaultScene:
    def test_center_rays_pick_their_object(self, scene):
        for obj in scene.objects:
            center = (np.asarray(obj.aabb_min) + np.asarray(obj.aabb_max)) / 2
            ray = GazeSample(0, (0.0, 0.0, 0.0), unit(center))
            assert gaze_object_intersection(ray, scene.objects) == obj.id

    def test_render_and_pixel_ray_consistency(self, scene):
        frame = render_frame(scene, (480.0, 360.0))
        assert frame.pixels.shape == (720, 960)
        assert frame.pixels.max() <= 1.0
        for obj in scene.objects[:4]:
            center = (np.asarray(obj.aabb_min) + np.asarray(obj.aabb_max)) / 2
            u = scene.camera.focal_px * center[0] / center[2] + 480
            v = scene.camera.focal_px * center[1] / center[2] + 360
            ray = pixel_to_ray(scene.camera, u, v)
            assert gaze_object_intersection(ray, scene.objects) == obj.id
