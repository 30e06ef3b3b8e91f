import dataclasses
import json
import os

import numpy as np
import pytest

from neuromanip.errors import (
    CalibrationFailed,
    ConfigError,
    DatasetContextMismatch,
    EmptyBench,
)
from neuromanip.harness import config as config_mod
from neuromanip.harness.cli import main
from neuromanip.harness.config import RunConfig, load_config, save_config
from neuromanip.harness.datagen import (
    admitted_gestures,
    export_dataset,
    make_eval_set,
    make_training_set,
    qualifying_objects,
)
from neuromanip.harness.evaluate import (
    bench_latency,
    calibrate_noise,
    evaluate,
    evaluate_dataset,
)
from neuromanip.harness.simulate import Scenario, load_scenario, simulate
from neuromanip.scene import gaze_object_intersection
from neuromanip.signal import GestureLabel, read_manifest, read_recording


class TestConfig:
    def test_packaged_default_loads(self):
        config = load_config()
        assert config.eval_samples == 6000
        assert config.noise_sigma == 0.0075

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"seed": 1, "mystery": 2}))
        with pytest.raises(ConfigError, match="mystery"):
            load_config(path)

    def test_invalid_values_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"k_max": 0}))
        with pytest.raises(ConfigError):
            load_config(path)

    def test_env_seed_override(self, tmp_path, monkeypatch):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"seed": 3}))
        monkeypatch.setenv("NEUROMANIP_SEED", "99")
        assert load_config(path).seed == 99

    def test_env_config_path(self, tmp_path, monkeypatch):
        path = tmp_path / "c.json"
        save_config(path, RunConfig(seed=123))
        monkeypatch.setenv("NEUROMANIP_CONFIG", str(path))
        assert load_config().seed == 123

    def test_roundtrip(self, tmp_path):
        path = tmp_path / "c.json"
        save_config(path, RunConfig(seed=11, eval_samples=50))
        back = load_config(path)
        assert back.seed == 11 and back.eval_samples == 50


class TestDatagen:
    def test_training_set_balanced_and_deterministic(self):
        X1, y1 = make_training_set(70, seed=5)
        X2, y2 = make_training_set(70, seed=5)
        assert X1.shape == (420, 32)
        assert np.array_equal(X1, X2) and np.array_equal(y1, y2)
        for g in GestureLabel:
            assert np.sum(y1 == int(g)) == 70

    def test_different_seed_changes_data(self):
        X1, _ = make_training_set(60, seed=5)
        X2, _ = make_training_set(60, seed=6)
        assert not np.array_equal(X1, X2)

    def test_every_gesture_has_qualifying_objects(self, scene, library):
        table = qualifying_objects(scene, library)
        for g in GestureLabel:
            assert table[g], f"no object admits {g.name}"

    def test_eval_samples_consistent_with_context(self, config, scene, library):
        samples = make_eval_set(120, config.noise_sigma, scene, library, seed=3)
        for s in samples:
            obj = scene.object_by_id(s.object_id)
            assert s.label in admitted_gestures(obj, library)
            assert gaze_object_intersection(s.gaze, scene.objects) == s.object_id

    def test_packaged_model_training_accuracy(self, config, pipeline):
        # the shipped model must fit its own (regenerated) training data well
        from neuromanip.classify import dense_forward_batch
        X, y = make_training_set(config.train_samples_per_class, config.seed,
                                 config.mains_amp)
        preds = np.argmax(dense_forward_batch(
            pipeline.dense, pipeline.dense.standardize(X)), axis=1)
        assert float(np.mean(preds == y)) >= 0.90

    def test_export_dataset(self, tmp_path):
        manifest_path = export_dataset(tmp_path / "ds", 2, seed=4, sigma=0.002)
        entries = read_manifest(manifest_path)
        assert len(entries) == 12
        first = read_recording(tmp_path / "ds" / entries[0]["file"])
        assert len(first) == 290
        codes = sorted({e["gesture"] for e in entries})
        assert codes == [0, 1, 2, 3, 4, 5]


class TestEvaluate:
    def test_restricted_report_fields(self, config, pipeline, scene, library):
        samples = make_eval_set(240, config.noise_sigma, scene, library, config.seed)
        report = evaluate(samples, pipeline, scene, library, mode="restricted",
                          noise_sigma=config.noise_sigma, seed=config.seed,
                          latency_probe=10)
        assert report.n_samples == 240
        assert 0.0 <= report.acc_unrestricted <= 1.0
        # dominance: with the true label always admitted, masking never loses
        assert report.acc_restricted >= report.acc_unrestricted
        assert report.lift >= 0.0
        assert report.unsafe_executions == 0
        assert np.array(report.confusion).sum() == 240
        for g in range(6):
            assert sum(report.confusion[g]) == 40   # balanced rows
        assert "dense" in report.mean_latency_us

    def test_noiseless_set_is_perfect(self, pipeline, scene, library, config):
        samples = make_eval_set(300, 0.0, scene, library, config.seed)
        report = evaluate(samples, pipeline, scene, library, mode="restricted",
                          latency_probe=0, noise_sigma=0.0)
        assert report.acc_unrestricted == 1.0
        assert report.lift == 0.0

    def test_report_bytes_deterministic(self, config, pipeline, scene, library):
        def run():
            samples = make_eval_set(150, config.noise_sigma, scene, library,
                                    config.seed)
            report = evaluate(samples, pipeline, scene, library, mode="restricted",
                              noise_sigma=config.noise_sigma, seed=config.seed,
                              latency_probe=5)
            return report.to_json(include_latency=False)
        assert run() == run()

    def test_context_mismatch_guard(self, config, pipeline, scene, library):
        samples = make_eval_set(12, config.noise_sigma, scene, library, config.seed)
        # forge a sample whose gesture the fixated object cannot reach
        bad_obj = next(o for o in scene.objects
                       if GestureLabel.OPEN_HAND not in admitted_gestures(o, library))
        forged = dataclasses.replace(
            samples[0], label=GestureLabel.OPEN_HAND, object_id=bad_obj.id,
            gaze=next(s for s in make_eval_set(60, 0.001, scene, library, 9)
                      if s.object_id == bad_obj.id).gaze)
        with pytest.raises(DatasetContextMismatch):
            evaluate([forged], pipeline, scene, library, mode="restricted",
                     latency_probe=0)

    def test_spiking_backend_reports_event_ratio(self, config, pipeline, scene,
                                                 library):
        samples = make_eval_set(90, config.noise_sigma, scene, library, config.seed)
        report = evaluate(samples, pipeline, scene, library, mode="unrestricted",
                          backend="spiking", latency_probe=0)
        assert report.mean_event_ratio is not None
        assert 0.0 < report.mean_event_ratio <= 1.0


class TestCalibration:
    def test_perfect_target_returns_lower_edge(self, config, pipeline, scene, library):
        small = dataclasses.replace(config)
        sigma = calibrate_noise(pipeline, scene, library, small, target_acc=1.0,
                                tol=0.02, val_samples=300)
        assert sigma == 0.0

    def test_hits_target_within_tolerance(self, config, pipeline, scene, library):
        sigma = calibrate_noise(pipeline, scene, library, config, target_acc=0.83,
                                tol=0.05, val_samples=900)
        assert 0.0 < sigma < 0.04
        samples = make_eval_set(900, sigma, scene, library, config.seed)
        feats = np.array([s.features for s in samples])
        truth = np.array([int(s.label) for s in samples])
        from neuromanip.classify import dense_forward_batch
        preds = np.argmax(dense_forward_batch(
            pipeline.dense, pipeline.dense.standardize(feats)), axis=1)
        assert abs(float(np.mean(preds == truth)) - 0.83) <= 0.05

    def test_unreachable_target_fails(self, config, pipeline, scene, library):
        with pytest.raises(CalibrationFailed):
            calibrate_noise(pipeline, scene, library, config, target_acc=0.10,
                            tol=0.02, val_samples=300)


class TestBench:
    def test_empty_bench_rejected(self, pipeline):
        with pytest.raises(EmptyBench):
            bench_latency(pipeline, "dense", n=0)

    def test_small_bench_sane(self, pipeline):
        report = bench_latency(pipeline, "dense", n=50, warmup=5)
        assert report.n == 50
        assert 0 < report.median_us <= report.p99_us
        assert report.mean_us > 0


class TestSimulate:
    def test_cup_cylindrical_trial(self, pipeline, scene, library):
        scenario = Scenario("cup", fixate_object=0,
                            intend=GestureLabel.CYLINDRICAL_GRIP,
                            expect_grasp=GestureLabel.CYLINDRICAL_GRIP)
        log = simulate(scenario, pipeline, scene, library)
        assert log.fixated_object == 0
        assert log.executed == GestureLabel.CYLINDRICAL_GRIP
        assert log.unsafe_executions == 0
        assert log.final_state == "Idle"
        assert log.detection_class == "cup"
        assert log.depth_m == pytest.approx(1.05, abs=0.01)
        assert log.ok(scenario.expect_grasp)

    def test_background_gaze_never_commands(self, pipeline, scene, library):
        scenario = Scenario("nothing", fixate_object=None, intend=None,
                            expect_grasp=None)
        log = simulate(scenario, pipeline, scene, library)
        assert log.commands == 0
        assert log.executed is None
        assert log.ok(None)

    def test_non_candidate_intent_rejected_not_executed(self, pipeline, scene,
                                                        library):
        scenario = Scenario("wrong-intent", fixate_object=0,
                            intend=GestureLabel.OPEN_HAND, expect_grasp=None)
        log = simulate(scenario, pipeline, scene, library)
        assert log.executed is None
        assert log.rejected > 0
        assert log.unsafe_executions == 0
        assert log.ok(None)

    def test_scenario_file_loader(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps({"name": "t", "fixate_object": 2, "intend": 3,
                                    "expect_grasp": 3, "decisions": 6}))
        s = load_scenario(path)
        assert s.fixate_object == 2
        assert s.intend == GestureLabel.TRIPOD_PINCH
        assert s.decisions == 6


class TestCli:
    def test_study_stats_reference_passthrough(self, capsys):
        from neuromanip.harness.config import reference_study_path
        assert main(["study-stats", str(reference_study_path())]) == 0
        out = capsys.readouterr().out
        assert "completion_s,100,51.6,,1" in out
        assert "tlx_physical,300,16.5,1.1,1" in out

    def test_study_stats_trial_records(self, tmp_path, capsys):
        path = tmp_path / "trials.csv"
        path.write_text("participant,mass_g,trial,completion_s\n"
                        "p1,100,1,50.0\np1,100,2,51.0\np1,100,3,53.0\n")
        assert main(["study-stats", str(path)]) == 0
        out = capsys.readouterr().out
        assert "fatigue_index,100,3.0,,1" in out

    def test_simulate_exit_codes(self, tmp_path, capsys):
        good = tmp_path / "good.json"
        good.write_text(json.dumps({"name": "ok", "fixate_object": 0, "intend": 1,
                                    "expect_grasp": 1}))
        assert main(["simulate", str(good)]) == 0
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"name": "no", "fixate_object": 0, "intend": 4,
                                   "expect_grasp": 4}))   # open hand not offered
        assert main(["simulate", str(bad)]) == 3

    def test_eval_deterministic_output(self, tmp_path, capsys):
        argv = ["eval", "--restricted", "--samples", "90", "--no-latency"]
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        second = capsys.readouterr().out
        assert first == second
        doc = json.loads(first)
        assert doc["unsafe_executions"] == 0

    def test_gen_data_cli(self, tmp_path, capsys):
        out = tmp_path / "ds"
        assert main(["gen-data", "--out", str(out), "--per-class", "1"]) == 0
        assert (out / "manifest.json").exists()

    def test_train_cli_small_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        save_config(cfg, RunConfig(seed=2, train_samples_per_class=60,
                                   calib_samples=60))
        model_path = tmp_path / "m.json"
        assert main(["--config", str(cfg), "train", "--out", str(model_path),
                     "--epochs", "6"]) == 0
        from neuromanip.classify import load_model
        back = load_model(model_path)
        assert back.dense is not None
        assert back.snn is not None

    def test_bad_config_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text("{\"weird\": 1}")
        assert main(["--config", str(cfg), "study-stats", "x.csv"]) == 2

    def test_bench_cli(self, capsys):
        assert main(["bench", "--backends", "dense", "-n", "20"]) == 0
        doc = json.loads(capsys.readouterr().out.strip())
        assert doc["backend"] == "dense" and doc["n"] == 20
