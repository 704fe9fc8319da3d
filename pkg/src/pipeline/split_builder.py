"""
Split Builder Stage

Builds one K-shot split per requested K and measures its missing rate under
each requested scope. The split stream is re-seeded for every K, so splits of
a seed are nested across K.
"""

from typing import Any, Dict, List

from ..annotations.missing_rate import ClassScope
from ..config import SimConfig
from ..errors import UndefinedRateError
from ..logger import get_logger
from ..simulation.fewshot import make_fewshot_split, synthetic_missing_rate
from .base_stage import BaseStage, StageState
from .seeding import stream_rng

logger = get_logger(__name__)


def scope_for(name: str, cfg: SimConfig) -> ClassScope:
    """fsod counts novel classes only, gfsod base and novel."""
    kind = "novel-only" if name == "fsod" else "base-plus-novel"
    return ClassScope.build(kind, cfg.base_classes, cfg.novel_classes)


class SplitBuilderStage(BaseStage):
    """
    Capabilities:
    - Selects K labeled instances per class for every requested K
    - Computes the missing rate of each split per scope

    A scope without in-scope instances on the training scenes yields no rate
    and a warning instead of an error.
    """

    def __init__(self):
        super().__init__(
            name="SplitBuilderStage",
            description="Builds K-shot splits and their missing rates",
        )

    def plan(self, state: StageState) -> str:
        return f"Build {state.context['shots']}-shot splits, scopes {state.context['scopes']}"

    def act(self, state: StageState) -> Dict[str, Any]:
        ctx = state.context
        cfg: SimConfig = ctx["sim_config"]
        splits = {}
        missing_rates: Dict[int, Dict[str, float]] = {}
        warnings: List[str] = []

        for k in ctx["shots"]:
            split = make_fewshot_split(ctx["scenes"], k, stream_rng(ctx["seed"], "split"), cfg.num_fg_classes)
            splits[k] = split
            warnings.extend(split.warnings)
            missing_rates[k] = {}
            for name in ctx["scopes"]:
                try:
                    report = synthetic_missing_rate(ctx["scenes"], split, scope_for(name, cfg))
                    missing_rates[k][name] = report.rate
                except UndefinedRateError as e:
                    missing_rates[k][name] = None
                    warnings.append(f"{k}-shot {name}: {e}")
                    logger.warning("%d-shot %s: %s", k, name, e)

        return {
            "action": "build_splits",
            "success": True,
            "splits": splits,
            "missing_rates": missing_rates,
            "warnings": warnings,
        }

    def observe(self, state: StageState, action_result: Dict[str, Any]) -> str:
        parts = []
        for k, split in action_result["splits"].items():
            rates = ", ".join(
                f"{name} {rate:.3f}" if rate is not None else f"{name} n/a"
                for name, rate in action_result["missing_rates"][k].items()
            )
            parts.append(f"K={k}: {split.num_labeled} labeled ({rates})")
        observation = "; ".join(parts)
        state.add_observation(observation)
        return observation


# Global instance
split_builder_stage = SplitBuilderStage()
