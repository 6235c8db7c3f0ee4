"""Shared fixtures for the gridwarp test suite."""

from pathlib import Path

import numpy as np
import pytest

from gridwarp.core.io import load_scene_config
from gridwarp.models.scene import SceneConfig

CONFIGS_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def rng():
    """Seeded generator so every test sees the same random inputs."""
    return np.random.default_rng(20240611)


@pytest.fixture
def default_cfg():
    """Desk-scale default scene: flat ground, no noise."""
    return SceneConfig.default()


@pytest.fixture
def configs_dir():
    return CONFIGS_DIR


@pytest.fixture
def flat_cfg():
    return load_scene_config(CONFIGS_DIR / "flat.json")


@pytest.fixture
def blocks_cfg():
    return load_scene_config(CONFIGS_DIR / "blocks.json")


@pytest.fixture
def parallax_cfg():
    return load_scene_config(CONFIGS_DIR / "parallax_shift.json")
