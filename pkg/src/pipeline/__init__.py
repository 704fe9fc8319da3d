"""
Per-seed experiment workflow.

Stages (plan / act / observe) run as nodes of a LangGraph StateGraph:
- SceneGenerationStage: synthetic dataset of a seed
- SplitBuilderStage: K-shot splits and their missing rates
- TrainingStage: paired classifiers on a shared batch stream
- EvaluationStage: Recall / mRecall on every ground-truth object
- ExperimentOrchestrator: the graph, plus joblib dispatch over seeds
"""

from .base_stage import BaseStage, StageState
from .scene_generation import SceneGenerationStage, scene_generation_stage
from .split_builder import SplitBuilderStage, split_builder_stage
from .training import TrainingStage, training_stage
from .evaluation import EvaluationStage, evaluation_stage
from .orchestrator import ExperimentOrchestrator, WorkflowState, orchestrator, run_experiment
from .manifest import RunManifest, aggregate, load_manifest, merge_manifests, report, write_run

__all__ = [
    # Base classes
    'BaseStage',
    'StageState',

    # Stage classes
    'SceneGenerationStage',
    'SplitBuilderStage',
    'TrainingStage',
    'EvaluationStage',
    'ExperimentOrchestrator',

    # Stage instances
    'scene_generation_stage',
    'split_builder_stage',
    'training_stage',
    'evaluation_stage',
    'orchestrator',

    # Workflow
    'WorkflowState',
    'run_experiment',

    # Manifests
    'RunManifest',
    'write_run',
    'load_manifest',
    'merge_manifests',
    'aggregate',
    'report',
]
