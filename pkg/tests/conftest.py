"""
Shared fixtures.
"""

from pathlib import Path

import numpy as np
import pytest

from src.config import SimConfig, TrainConfig
from src.core.detection import Box, GroundTruthInstance
from src.simulation.fewshot import SyntheticScene

FIXTURES = Path(__file__).resolve().parent.parent / "data" / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_sim_config() -> SimConfig:
    return SimConfig(num_scenes=30, num_fg_classes=3, seed=7)


@pytest.fixture
def quick_train_config() -> TrainConfig:
    return TrainConfig(steps=20, seed=3)


def make_scene(scene_id, *instances) -> SyntheticScene:
    """Scene from (box tuple, category, labeled) triples."""
    return SyntheticScene(
        scene_id=scene_id,
        instances=tuple(GroundTruthInstance(Box(*box), category, labeled) for box, category, labeled in instances),
    )


def fully_labeled_scenes(num_scenes: int, num_fg_classes: int, rng) -> list:
    """Every scene holds one labeled instance of every class, so every image mask is all ones."""
    scenes = []
    for scene_id in range(num_scenes):
        instances = []
        for c in range(num_fg_classes):
            x, y = rng.uniform(0.0, 0.7, size=2)
            w, h = rng.uniform(0.1, 0.3, size=2)
            instances.append(((float(x), float(y), float(x + w), float(y + h)), c, True))
        scenes.append(make_scene(scene_id, *instances))
    return scenes
