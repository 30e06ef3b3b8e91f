import numpy as np
import pytest

from neuromanip.harness.config import (
    RunConfig,
    resolve_library,
    resolve_model,
    resolve_scene,
)


@pytest.fixture(scope="session")
def config():
    return RunConfig()


@pytest.fixture(scope="session")
def pipeline(config):
    return resolve_model(config)


@pytest.fixture(scope="session")
def scene(config):
    return resolve_scene(config)


@pytest.fixture(scope="session")
def library(config):
    return resolve_library(config)


@pytest.fixture(scope="session")
def small_eval_set(config, scene, library):
    from neuromanip.harness.datagen import make_eval_set
    return make_eval_set(600, config.noise_sigma, scene, library,
                         config.seed, config.mains_amp)


def rng(seed=0):
    return np.random.default_rng(seed)
