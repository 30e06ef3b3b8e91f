"""Command-line entry points.

Exit codes: 0 success, 2 validation/configuration error, 3 acceptance
failure (a scenario or check did not meet its expectation).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from ..classify import convert_to_snn, save_model, train_dense
from ..errors import NeuromanipError
from ..signal import GestureLabel
from . import config as config_mod
from .config import RunConfig, load_config, save_config
from .datagen import export_dataset, make_training_set
from .evaluate import bench_latency, calibrate_noise, evaluate_dataset
from .simulate import load_scenario, simulate
from .study import (
    format_table,
    read_aggregate_csv,
    read_tlx_csv,
    read_trial_csv,
    sniff_study_csv,
    study_aggregate,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ACCEPTANCE = 3


def _load_bundle(config: RunConfig):
    pipeline = config_mod.resolve_model(config)
    scene = config_mod.resolve_scene(config)
    lib = config_mod.resolve_library(config)
    return pipeline, scene, lib


def cmd_gen_data(args, config: RunConfig) -> int:
    manifest = export_dataset(args.out, args.per_class, config.seed,
                              sigma=args.sigma, mains_amp=config.mains_amp)
    print(f"wrote dataset manifest {manifest}")
    return EXIT_OK


def cmd_train(args, config: RunConfig) -> int:
    X, y = make_training_set(config.train_samples_per_class, config.seed,
                             config.mains_amp)
    net = train_dense(X, y, epochs=args.epochs, lr=args.lr, seed=config.seed)
    from ..classify import dense_forward_batch
    import numpy as np
    acc = float(np.mean(np.argmax(dense_forward_batch(net, net.standardize(X)), 1) == y))
    snn = None
    if not args.no_convert:
        calib = X[:: max(1, len(X) // config.calib_samples)]
        snn = convert_to_snn(net, calib, config.timesteps)
    save_model(args.out, net, snn)
    print(f"trained on {len(X)} samples, training accuracy {acc:.4f}, "
          f"saved {args.out}")
    return EXIT_OK


def cmd_convert(args, config: RunConfig) -> int:
    from ..classify import load_model
    pipeline = load_model(args.model)
    X, _ = make_training_set(config.train_samples_per_class, config.seed,
                             config.mains_amp)
    calib = X[:: max(1, len(X) // config.calib_samples)]
    snn = convert_to_snn(pipeline.dense, calib, config.timesteps)
    save_model(args.out or args.model, pipeline.dense, snn)
    print(f"conversion thresholds: {[round(t, 4) for t in snn.thresholds]}")
    return EXIT_OK


def cmd_calibrate(args, config: RunConfig) -> int:
    pipeline, scene, lib = _load_bundle(config)
    sigma = calibrate_noise(pipeline, scene, lib, config,
                            target_acc=args.target, tol=args.tol,
                            val_samples=args.samples)
    config.noise_sigma = sigma
    if args.write:
        save_config(args.write, config)
        print(f"sigma* = {sigma!r} written to {args.write}")
    else:
        print(f"sigma* = {sigma!r}")
    return EXIT_OK


def cmd_eval(args, config: RunConfig) -> int:
    pipeline, scene, lib = _load_bundle(config)
    mode = "restricted" if args.restricted else "unrestricted"
    report = evaluate_dataset(pipeline, scene, lib, config, mode=mode,
                              backend=args.backend, n_samples=args.samples)
    text = report.to_json(include_latency=not args.no_latency)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_bench(args, config: RunConfig) -> int:
    pipeline, _, _ = _load_bundle(config)
    for backend in args.backends.split(","):
        report = bench_latency(pipeline, backend.strip(), n=args.n,
                               sigma=config.noise_sigma, seed=config.seed)
        text = report.to_json()
        print(text)
        if args.out:
            path = Path(args.out)
            existing = path.read_text(encoding="utf-8") if path.exists() else ""
            path.write_text(existing + text + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_simulate(args, config: RunConfig) -> int:
    pipeline, scene, lib = _load_bundle(config)
    scenario = load_scenario(args.scenario)
    log = simulate(scenario, pipeline, scene, lib, seed=config.seed)
    print(log.to_json())
    return EXIT_OK if log.ok(scenario.expect_grasp) else EXIT_ACCEPTANCE


def cmd_study_stats(args, config: RunConfig) -> int:
    kind = sniff_study_csv(args.csv)
    if kind == "aggregate":
        rows = read_aggregate_csv(args.csv)
    elif kind == "trial":
        rows = study_aggregate(trial_records=read_trial_csv(args.csv))
    else:
        rows = study_aggregate(tlx_records=read_tlx_csv(args.csv))
    print(format_table(rows))
    return EXIT_OK


def cmd_serve(args, config: RunConfig) -> int:
    from .service import serve
    pipeline, scene, lib = _load_bundle(config)
    static = args.static
    if static is None:
        repo_root = Path(__file__).resolve().parents[3]
        bundled = repo_root / "frontend" / "dist"
        static = bundled if bundled.is_dir() else None
    serve(pipeline, scene, lib, config, port=args.port, static_dir=static)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neuromanip",
        description="Simulated gaze-guided EMG prosthetic hand controller")
    parser.add_argument("--config", help="path to the run config JSON "
                        "(default: $NEUROMANIP_CONFIG or the packaged default)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write EMG recordings plus a manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--sigma", type=float, default=None,
                   help="fixed noise level (default: training mixture)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the dense classifier (and convert)")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=80)
    p.add_argument("--lr", type=float, default=3e-3)
    p.add_argument("--no-convert", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("convert", help="re-derive the spiking conversion")
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("calibrate", help="bisect noise to the target accuracy")
    p.add_argument("--target", type=float, default=0.83)
    p.add_argument("--tol", type=float, default=0.02)
    p.add_argument("--samples", type=int, default=6000)
    p.add_argument("--write", help="write the calibrated config here")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("eval", help="accuracy / lift / safety evaluation")
    p.add_argument("--restricted", action="store_true")
    p.add_argument("--backend", choices=["dense", "spiking"], default="dense")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--out")
    p.add_argument("--no-latency", action="store_true",
                   help="omit latency fields (byte-stable reports)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="classification latency benchmark")
    p.add_argument("--backends", default="dense,spiking")
    p.add_argument("-n", type=int, default=10000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("simulate", help="run a scripted end-to-end scenario")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("study-stats", help="aggregate study records or print "
                       "the reference table")
    p.add_argument("csv")
    p.set_defaults(func=cmd_study_stats)

    p = sub.add_parser("serve", help="run the local cockpit service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--static", help="directory of built UI assets")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except NeuromanipError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
