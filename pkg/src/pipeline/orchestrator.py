"""
Experiment Orchestrator using LangGraph

Runs the per-seed simulate workflow as a stateful graph:

generate_scenes → build_splits → train → evaluate → finalize

A conditional edge after build_splits ends the run early when a stage failed
or a split labels nothing. Seeds are independent runs of the graph and are
dispatched to a joblib worker pool by run_experiment.
"""

import operator
from datetime import datetime
from typing import Any, Dict, List, Optional, Tuple, TypedDict, Annotated

from joblib import Parallel, delayed
from langgraph.graph import END, StateGraph

from ..config import LOSS_SHORT_NAMES, ExperimentConfig, settings
from ..logger import get_logger
from .base_stage import BaseStage, StageState
from .evaluation import evaluation_stage
from .scene_generation import scene_generation_stage
from .split_builder import split_builder_stage
from .training import training_stage

logger = get_logger(__name__)


class WorkflowState(TypedDict):
    """
    State that flows through the per-seed graph.

    Nodes return partial updates; errors accumulate across nodes.
    """
    seed: int
    config: ExperimentConfig
    scenes: List[Any]
    feature_model: Any
    splits: Dict[int, Any]
    missing_rates: Dict[int, Dict[str, Optional[float]]]
    results: Dict[int, Dict[str, Any]]
    reports: Dict[int, Dict[str, Any]]
    rows: List[Dict[str, Any]]
    warnings: Annotated[List[str], operator.add]
    errors: Annotated[List[str], operator.add]
    stage: str
    metadata: Dict[str, Any]


def result_rows(seed: int, config: ExperimentConfig, missing_rates, reports, results) -> List[Dict[str, Any]]:
    """
    One row per (loss, K), ordered by (loss short name, K).

    The primary scope's rate fills missing_rate; further scopes get
    missing_rate_<scope> columns.
    """
    primary, *extra = config.scopes
    rows = []
    for kind in sorted(config.loss_kinds, key=lambda k: LOSS_SHORT_NAMES[k]):
        for k in sorted(reports):
            row = {
                "seed": seed,
                "loss": LOSS_SHORT_NAMES[kind],
                "shots": k,
                "scope": primary,
                "missing_rate": missing_rates[k][primary],
            }
            for name in extra:
                row[f"missing_rate_{name}"] = missing_rates[k][name]
            row.update(reports[k][kind].row())
            row["final_loss"] = results[k][kind].final_loss
            rows.append(row)
    return rows


class ExperimentOrchestrator(BaseStage):
    """
    Coordinates the simulate stages for one seed.

    Each stage is a node of a LangGraph StateGraph; exceptions inside a node
    are recorded in the state's errors and end the workflow early.
    """

    def __init__(self):
        super().__init__(
            name="ExperimentOrchestrator",
            description="Per-seed simulate workflow on a LangGraph StateGraph",
        )
        self.workflow = self._build_workflow()

    def plan(self, state: StageState) -> str:
        return "generate scenes → build splits → train paired classifiers → evaluate → finalize rows"

    def act(self, state: StageState) -> Dict[str, Any]:
        final_state = self.run_seed(state.context["config"], state.context["seed"])
        return {
            "action": "run_seed",
            "success": not final_state["errors"],
            "rows": final_state["rows"],
            "errors": final_state["errors"],
        }

    def _build_workflow(self):
        workflow = StateGraph(WorkflowState)

        workflow.add_node("generate_scenes", self._generate_scenes_node)
        workflow.add_node("build_splits", self._build_splits_node)
        workflow.add_node("train", self._train_node)
        workflow.add_node("evaluate", self._evaluate_node)
        workflow.add_node("finalize", self._finalize_node)

        workflow.set_entry_point("generate_scenes")
        workflow.add_edge("generate_scenes", "build_splits")

        # Conditional edge: only train when every split labels something
        workflow.add_conditional_edges(
            "build_splits",
            self._should_proceed_after_splits,
            {
                "proceed": "train",
                "end": END,
            },
        )

        workflow.add_edge("train", "evaluate")
        workflow.add_edge("evaluate", "finalize")
        workflow.add_edge("finalize", END)

        return workflow.compile()

    def _generate_scenes_node(self, state: WorkflowState) -> Dict[str, Any]:
        """Node 1: Scene Generation"""
        logger.info("Seed %d | Stage 1: Generating scenes", state["seed"])
        try:
            result = scene_generation_stage.execute({
                "seed": state["seed"],
                "sim_config": state["config"].sim,
            })
            logger.info("  ✓ %s", result["observation"])
            return {
                "stage": "scenes",
                "scenes": result["result"]["scenes"],
                "feature_model": result["result"]["feature_model"],
            }
        except Exception as e:
            error_msg = f"Scene generation exception: {e}"
            logger.error("  ✗ %s", error_msg)
            return {"stage": "scenes", "errors": [error_msg]}

    def _build_splits_node(self, state: WorkflowState) -> Dict[str, Any]:
        """Node 2: Split Construction"""
        logger.info("Seed %d | Stage 2: Building splits", state["seed"])
        if state["errors"]:
            return {"stage": "splits"}
        try:
            result = split_builder_stage.execute({
                "seed": state["seed"],
                "scenes": state["scenes"],
                "shots": state["config"].shots,
                "scopes": state["config"].scopes,
                "sim_config": state["config"].sim,
            })
            logger.info("  ✓ %s", result["observation"])
            return {
                "stage": "splits",
                "splits": result["result"]["splits"],
                "missing_rates": result["result"]["missing_rates"],
                "warnings": result["result"]["warnings"],
            }
        except Exception as e:
            error_msg = f"Split construction exception: {e}"
            logger.error("  ✗ %s", error_msg)
            return {"stage": "splits", "errors": [error_msg]}

    def _should_proceed_after_splits(self, state: WorkflowState) -> str:
        if state["errors"]:
            logger.warning("Seed %d: errors recorded - ending workflow early", state["seed"])
            return "end"
        empty = [k for k, split in state["splits"].items() if split.num_labeled == 0]
        if empty:
            logger.warning("Seed %d: no labeled instances for K=%s - ending workflow early", state["seed"], empty)
            return "end"
        return "proceed"

    def _train_node(self, state: WorkflowState) -> Dict[str, Any]:
        """Node 3: Paired Training"""
        logger.info("Seed %d | Stage 3: Training", state["seed"])
        config = state["config"]
        try:
            result = training_stage.execute({
                "scenes": state["scenes"],
                "splits": state["splits"],
                "loss_kinds": config.loss_kinds,
                "train_config": config.train.model_copy(update={"seed": state["seed"]}),
                "sim_config": config.sim,
                "feature_model": state["feature_model"],
            })
            logger.info("  ✓ %s", result["observation"])
            return {"stage": "training", "results": result["result"]["results"]}
        except Exception as e:
            error_msg = f"Training exception: {e}"
            logger.error("  ✗ %s", error_msg)
            return {"stage": "training", "errors": [error_msg]}

    def _evaluate_node(self, state: WorkflowState) -> Dict[str, Any]:
        """Node 4: Recall Evaluation"""
        logger.info("Seed %d | Stage 4: Evaluating", state["seed"])
        if state["errors"]:
            return {"stage": "evaluation"}
        try:
            result = evaluation_stage.execute({
                "seed": state["seed"],
                "scenes": state["scenes"],
                "feature_model": state["feature_model"],
                "results": state["results"],
            })
            logger.info("  ✓ %s", result["observation"])
            return {"stage": "evaluation", "reports": result["result"]["reports"]}
        except Exception as e:
            error_msg = f"Evaluation exception: {e}"
            logger.error("  ✗ %s", error_msg)
            return {"stage": "evaluation", "errors": [error_msg]}

    def _finalize_node(self, state: WorkflowState) -> Dict[str, Any]:
        """Node 5: Result Rows"""
        logger.info("Seed %d | Stage 5: Finalizing", state["seed"])
        if state["errors"]:
            return {"stage": "finalized"}
        rows = result_rows(
            state["seed"], state["config"], state["missing_rates"], state["reports"], state["results"]
        )
        logger.info("  ✓ %d rows", len(rows))
        return {"stage": "finalized", "rows": rows}

    def run_seed(self, config: ExperimentConfig, seed: int) -> WorkflowState:
        """
        Run the workflow for one seed.

        Args:
            config: Experiment configuration
            seed: Seed of this run

        Returns:
            Final workflow state (rows empty when the run ended early)
        """
        initial_state: WorkflowState = {
            "seed": seed,
            "config": config,
            "scenes": [],
            "feature_model": None,
            "splits": {},
            "missing_rates": {},
            "results": {},
            "reports": {},
            "rows": [],
            "warnings": [],
            "errors": [],
            "stage": "initiated",
            "metadata": {"started_at": datetime.now().isoformat()},
        }
        return self.workflow.invoke(initial_state)


# Global orchestrator instance
orchestrator = ExperimentOrchestrator()


def run_seed_job(config: ExperimentConfig, seed: int) -> Tuple[List[Dict[str, Any]], List[str], List[str]]:
    """Worker entry point: (rows, warnings, errors) of one seed."""
    final_state = orchestrator.run_seed(config, seed)
    return final_state["rows"], final_state["warnings"], final_state["errors"]


def run_experiment(config: ExperimentConfig, n_jobs: Optional[int] = None):
    """
    Run every seed of the configuration.

    Args:
        config: Experiment configuration
        n_jobs: Worker-pool size (settings.n_jobs by default)

    Returns:
        (rows sorted by (seed, loss, shots), warnings, errors)
    """
    n_jobs = n_jobs or settings.n_jobs
    outputs = Parallel(n_jobs=n_jobs)(delayed(run_seed_job)(config, seed) for seed in config.seeds)

    rows, warnings, errors = [], [], []
    for seed, (seed_rows, seed_warnings, seed_errors) in zip(config.seeds, outputs):
        rows.extend(seed_rows)
        warnings.extend(f"seed {seed}: {w}" for w in seed_warnings)
        errors.extend(f"seed {seed}: {e}" for e in seed_errors)
    rows.sort(key=lambda r: (r["seed"], r["loss"], r["shots"]))
    return rows, warnings, errors
