"""
Evaluation Stage

Scores every trained classifier on all ground-truth objects of the seed's
scenes, labeled or not. The evaluation features are drawn once per seed and
shared by every (K, loss kind) pair.
"""

from typing import Any, Dict

from ..simulation.fewshot import featurize_ground_truth
from ..training.metrics import evaluate_recall
from .base_stage import BaseStage, StageState
from .seeding import stream_rng


class EvaluationStage(BaseStage):

    def __init__(self):
        super().__init__(
            name="EvaluationStage",
            description="Computes Recall and mRecall of trained classifiers",
        )

    def plan(self, state: StageState) -> str:
        return f"Evaluate {sum(len(v) for v in state.context['results'].values())} classifier(s)"

    def act(self, state: StageState) -> Dict[str, Any]:
        ctx = state.context
        features, classes = featurize_ground_truth(
            ctx["scenes"], ctx["feature_model"], stream_rng(ctx["seed"], "eval")
        )
        reports = {
            k: {kind: evaluate_recall(result.classifier, features, classes) for kind, result in by_kind.items()}
            for k, by_kind in ctx["results"].items()
        }
        return {"action": "evaluate_recall", "success": True, "reports": reports, "num_objects": len(classes)}

    def observe(self, state: StageState, action_result: Dict[str, Any]) -> str:
        observation = "; ".join(
            f"K={k} " + ", ".join(f"{kind} mRecall {r.m_recall:.3f}" for kind, r in by_kind.items())
            for k, by_kind in action_result["reports"].items()
        )
        state.add_observation(observation)
        return observation


# Global instance
evaluation_stage = EvaluationStage()
