"""
Configuration Management for the Decoupling Classifier Lab

This module handles all configuration settings using environment variables
for flexibility and Pydantic models for validating experiment parameters.
"""

import os
from pathlib import Path
from typing import List, Literal, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigurationError

# Load environment variables
load_dotenv()


class Settings:
    """
    Application settings loaded from environment variables.

    Attributes:
        log_level: Logging level for the console handler
        debug: Enable debug mode (forces DEBUG logging)
        output_dir: Default directory for run manifests and CSV reports
        synthetic_data_dir: Directory for exported synthetic datasets
        n_jobs: Worker-pool size used when dispatching seeds
        default_seeds: Seeds used when the CLI is not given any
    """

    def __init__(self):
        # Application Settings
        self.debug = os.getenv("DCLAB_DEBUG", "False").lower() == "true"
        self.log_level = "DEBUG" if self.debug else os.getenv("DCLAB_LOG_LEVEL", "INFO")

        # Paths
        self.output_dir = os.getenv("DCLAB_OUTPUT_DIR", "./data/runs")
        self.synthetic_data_dir = os.getenv("DCLAB_SYNTHETIC_DATA_DIR", "./data/synthetic")

        # Execution
        self.n_jobs = int(os.getenv("DCLAB_N_JOBS", "1"))
        self.default_seeds = [
            int(s) for s in os.getenv("DCLAB_DEFAULT_SEEDS", "0,1,2,3,4,5,6,7,8,9").split(",") if s.strip()
        ]

    def ensure_directories(self):
        """Create necessary directories if they don't exist."""
        Path(self.output_dir).mkdir(parents=True, exist_ok=True)
        Path(self.synthetic_data_dir).mkdir(parents=True, exist_ok=True)


# Global settings instance
settings = Settings()


# ROI sampling (Faster R-CNN conventions)
SAMPLING_DEFAULTS = {
    "fg_threshold": 0.5,
    "batch_size": 128,
    "positive_fraction": 0.25,
}

# Synthetic scene generation
SIM_DEFAULTS = {
    "num_scenes": 200,
    "num_fg_classes": 5,
    "num_base_classes": 0,
    "instances_per_scene": (4, 6),
    "box_side_range": (0.1, 0.3),
    "prototype_scale": 4.0,
    "noise_scale": 1.0,
    "high_jitters": 4,
    "low_jitters": 4,
    "high_jitter_scale": 0.1,
    "low_jitter_range": (0.4, 0.8),
    "negatives_per_scene": 8,
    "seed": 0,
}

# Classifier fine-tuning
TRAIN_DEFAULTS = {
    "learning_rate": 0.5,
    "steps": 2000,
    "loss_kind": "decoupled",
    "images_per_step": 1,
    "momentum": 0.0,
    "weight_decay": 0.0,
    "init_scale": 0.01,
    "seed": 0,
}

# Gradient verification
GRAD_CHECK_DEFAULTS = {
    "cases": 200,
    "tolerance": 1e-6,
    "h": 1e-5,
    "max_classes": 10,
    "logit_scale": 3.0,
}

LOSS_KINDS = ("standard-ce", "decoupled")


class SimConfig(BaseModel):
    """Synthetic few-shot dataset parameters."""

    model_config = ConfigDict(frozen=True)

    num_scenes: int = Field(SIM_DEFAULTS["num_scenes"], ge=1)
    num_fg_classes: int = Field(SIM_DEFAULTS["num_fg_classes"], ge=2)
    num_base_classes: int = Field(SIM_DEFAULTS["num_base_classes"], ge=0)
    instances_per_scene: Tuple[int, int] = SIM_DEFAULTS["instances_per_scene"]
    box_side_range: Tuple[float, float] = SIM_DEFAULTS["box_side_range"]
    class_weights: Tuple[float, ...] = ()
    prototype_scale: float = Field(SIM_DEFAULTS["prototype_scale"], gt=0)
    noise_scale: float = Field(SIM_DEFAULTS["noise_scale"], ge=0)
    high_jitters: int = Field(SIM_DEFAULTS["high_jitters"], ge=0)
    low_jitters: int = Field(SIM_DEFAULTS["low_jitters"], ge=0)
    high_jitter_scale: float = Field(SIM_DEFAULTS["high_jitter_scale"], ge=0)
    low_jitter_range: Tuple[float, float] = SIM_DEFAULTS["low_jitter_range"]
    negatives_per_scene: int = Field(SIM_DEFAULTS["negatives_per_scene"], ge=1)
    seed: int = Field(SIM_DEFAULTS["seed"], ge=0)

    @model_validator(mode="after")
    def _check_ranges(self) -> "SimConfig":
        lo, hi = self.instances_per_scene
        if lo < 1 or hi < lo:
            raise ValueError(f"instances_per_scene must satisfy 1 <= lo <= hi, got {self.instances_per_scene}")
        s_lo, s_hi = self.box_side_range
        if not 0 < s_lo <= s_hi <= 1:
            raise ValueError(f"box_side_range must satisfy 0 < lo <= hi <= 1, got {self.box_side_range}")
        j_lo, j_hi = self.low_jitter_range
        if not 0 <= j_lo <= j_hi:
            raise ValueError(f"low_jitter_range must satisfy 0 <= lo <= hi, got {self.low_jitter_range}")
        if self.num_base_classes >= self.num_fg_classes:
            raise ValueError("num_base_classes must leave at least one novel class")
        if self.class_weights:
            if len(self.class_weights) != self.num_fg_classes:
                raise ValueError("class_weights needs one weight per foreground class")
            if min(self.class_weights) < 0 or sum(self.class_weights) <= 0:
                raise ValueError("class_weights must be non-negative with a positive sum")
        return self

    @property
    def feature_dim(self) -> int:
        return self.num_fg_classes + 1

    @property
    def base_classes(self) -> List[int]:
        return list(range(self.num_base_classes))

    @property
    def novel_classes(self) -> List[int]:
        return list(range(self.num_base_classes, self.num_fg_classes))


class TrainConfig(BaseModel):
    """Fine-tuning schedule for the linear ROI classifier."""

    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(TRAIN_DEFAULTS["learning_rate"], gt=0)
    steps: int = Field(TRAIN_DEFAULTS["steps"], ge=1)
    loss_kind: Literal["standard-ce", "decoupled"] = TRAIN_DEFAULTS["loss_kind"]
    images_per_step: int = Field(TRAIN_DEFAULTS["images_per_step"], ge=1)
    momentum: float = Field(TRAIN_DEFAULTS["momentum"], ge=0, lt=1)
    weight_decay: float = Field(TRAIN_DEFAULTS["weight_decay"], ge=0)
    init_scale: float = Field(TRAIN_DEFAULTS["init_scale"], ge=0)
    fg_threshold: float = Field(SAMPLING_DEFAULTS["fg_threshold"], gt=0, le=1)
    batch_size: int = Field(SAMPLING_DEFAULTS["batch_size"], ge=1)
    positive_fraction: float = Field(SAMPLING_DEFAULTS["positive_fraction"], gt=0, lt=1)
    seed: int = Field(TRAIN_DEFAULTS["seed"], ge=0)


def build_config(model_cls, **overrides):
    """
    Instantiate a config model, converting validation failures.

    Args:
        model_cls: SimConfig or TrainConfig
        **overrides: Field values; None values fall back to defaults

    Returns:
        Validated config instance
    """
    values = {k: v for k, v in overrides.items() if v is not None}
    try:
        return model_cls(**values)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid {model_cls.__name__}: {e}") from e


# Short CLI names of the loss kinds
LOSS_ALIASES = {
    "ce": "standard-ce",
    "dc": "decoupled",
}
LOSS_SHORT_NAMES = {v: k for k, v in LOSS_ALIASES.items()}

# Missing-rate scope choices: fsod counts novel classes, gfsod base + novel
SCOPE_CHOICES = ("fsod", "gfsod")


class ExperimentConfig(BaseModel):
    """Everything a simulate run needs, echoed into its manifest."""

    model_config = ConfigDict(frozen=True)

    seeds: List[int] = Field(min_length=1)
    shots: List[int] = Field(default_factory=lambda: [1], min_length=1)
    loss_kinds: List[Literal["standard-ce", "decoupled"]] = Field(
        default_factory=lambda: list(LOSS_KINDS), min_length=1
    )
    scopes: List[Literal["fsod", "gfsod"]] = Field(default_factory=lambda: ["fsod"], min_length=1)
    sim: SimConfig = Field(default_factory=SimConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    output_format: Literal["csv", "machine"] = "csv"

    @model_validator(mode="after")
    def _check_lists(self) -> "ExperimentConfig":
        if min(self.shots) < 1:
            raise ValueError(f"shots must all be >= 1, got {self.shots}")
        if min(self.seeds) < 0:
            raise ValueError(f"seeds must be non-negative, got {self.seeds}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        return self
