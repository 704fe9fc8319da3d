"""
Scene Generation Stage

Draws the synthetic dataset of one seed and the feature model shared by
training and evaluation.
"""

from typing import Any, Dict

from ..config import SimConfig
from ..simulation.fewshot import FeatureModel, generate_scenes
from .base_stage import BaseStage, StageState
from .seeding import stream_rng


class SceneGenerationStage(BaseStage):
    """
    Capabilities:
    - Generates num_scenes multi-instance scenes from the seed's scene stream
    - Builds the prototype feature model of the configuration
    """

    def __init__(self):
        super().__init__(
            name="SceneGenerationStage",
            description="Generates the synthetic dataset of a seed",
        )

    def plan(self, state: StageState) -> str:
        cfg: SimConfig = state.context["sim_config"]
        lo, hi = cfg.instances_per_scene
        return (
            f"Generate {cfg.num_scenes} scenes with {lo}-{hi} instances over "
            f"{cfg.num_fg_classes} classes for seed {state.context['seed']}"
        )

    def act(self, state: StageState) -> Dict[str, Any]:
        cfg: SimConfig = state.context["sim_config"]
        scenes = generate_scenes(cfg, stream_rng(state.context["seed"], "scenes"))
        return {
            "action": "generate_scenes",
            "success": True,
            "scenes": scenes,
            "feature_model": FeatureModel.from_config(cfg),
            "num_instances": sum(len(s.instances) for s in scenes),
        }

    def observe(self, state: StageState, action_result: Dict[str, Any]) -> str:
        observation = (
            f"{len(action_result['scenes'])} scenes, {action_result['num_instances']} instances"
        )
        state.add_observation(observation)
        return observation


# Global instance
scene_generation_stage = SceneGenerationStage()
