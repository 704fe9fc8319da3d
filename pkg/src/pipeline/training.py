"""
Training Stage

Fine-tunes one classifier per loss kind for every split. The classifiers of
a split share initialisation and batch stream.
"""

from typing import Any, Dict

from ..training.trainer import train_paired
from .base_stage import BaseStage, StageState


class TrainingStage(BaseStage):

    def __init__(self):
        super().__init__(
            name="TrainingStage",
            description="Trains paired classifiers on each K-shot split",
        )

    def plan(self, state: StageState) -> str:
        cfg = state.context["train_config"]
        return (
            f"Train {list(state.context['loss_kinds'])} for {cfg.steps} steps at lr {cfg.learning_rate} "
            f"on {len(state.context['splits'])} split(s)"
        )

    def act(self, state: StageState) -> Dict[str, Any]:
        ctx = state.context
        results = {
            k: train_paired(
                ctx["scenes"], split, ctx["train_config"], ctx["loss_kinds"],
                sim_cfg=ctx["sim_config"], feature_model=ctx["feature_model"],
            )
            for k, split in ctx["splits"].items()
        }
        return {"action": "train_paired", "success": True, "results": results}

    def observe(self, state: StageState, action_result: Dict[str, Any]) -> str:
        observation = "; ".join(
            f"K={k} " + ", ".join(f"{kind} loss {r.final_loss:.4f}" for kind, r in by_kind.items())
            for k, by_kind in action_result["results"].items()
        )
        state.add_observation(observation)
        return observation


# Global instance
training_stage = TrainingStage()
