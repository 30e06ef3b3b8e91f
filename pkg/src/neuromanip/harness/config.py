"""Run configuration: one JSON document, strictly validated.

Paths left null fall back to the packaged defaults. NEUROMANIP_CONFIG
selects the file; NEUROMANIP_SEED overrides the seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Optional

from ..classify import GesturePipeline, load_model
from ..errors import ConfigError
from ..grasp import GraspLibrary, load_library
from ..scene import Scene, load_scene

ENV_CONFIG = "NEUROMANIP_CONFIG"
ENV_SEED = "NEUROMANIP_SEED"


@dataclass
class RunConfig:
    seed: int = 7
    train_samples_per_class: int = 400
    calib_samples: int = 600
    eval_samples: int = 6000
    noise_sigma: float = 0.0075          # calibrated: unrestricted accuracy 0.83 on the default model
    mains_amp: float = 0.02
    timesteps: int = 64
    k_max: int = 3
    confirm_windows: int = 5
    confirm_threshold: float = 0.6
    serve_port: int = 8765
    serve_noise_sigma: float = 0.002
    scene_path: Optional[str] = None
    library_path: Optional[str] = None
    model_path: Optional[str] = None

    def validate(self) -> None:
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        for name in ("train_samples_per_class", "calib_samples", "eval_samples",
                     "timesteps", "k_max", "confirm_windows", "serve_port"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.noise_sigma < 0 or self.serve_noise_sigma < 0 or self.mains_amp < 0:
            raise ConfigError("noise amplitudes must be nonnegative")
        if not (0.0 < self.confirm_threshold < 1.0):
            raise ConfigError("confirm_threshold must lie in (0, 1)")


def _data_path(name: str) -> Path:
    return Path(str(resources.files("neuromanip").joinpath("data", name)))


def load_config(path: Optional[str | Path] = None) -> RunConfig:
    """Read and validate a config; unknown keys are rejected outright."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        path = _data_path("default_config.json")
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    known = {f.name for f in fields(RunConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        config = RunConfig(**doc)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    env_seed = os.environ.get(ENV_SEED)
    if env_seed is not None:
        try:
            config.seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"{ENV_SEED} must be an integer") from exc
    config.validate()
    return config


def save_config(path: str | Path, config: RunConfig) -> None:
    config.validate()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(config), fh, indent=2)
        fh.write("\n")


def resolve_scene(config: RunConfig) -> Scene:
    return load_scene(config.scene_path or _data_path("default_scene.json"))


def resolve_library(config: RunConfig) -> GraspLibrary:
    return load_library(config.library_path or _data_path("default_library.json"),
                        k_max=config.k_max)


def resolve_model(config: RunConfig) -> GesturePipeline:
    return load_model(config.model_path or _data_path("pretrained_model.json"))


def reference_study_path() -> Path:
    return _data_path("reference_study.csv")
