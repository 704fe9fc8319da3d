"""
Base Stage Classes for the Experiment Workflow

Every stage of a per-seed experiment runs the same plan / act / observe loop:

1. Plan: describe what the stage is about to do with its context
2. Act: do the work and return a result dictionary
3. Observe: summarise the result into the stage trace

The trace (StageState) is kept for debugging and for the run manifest.
"""

from abc import ABC, abstractmethod
from datetime import datetime
from typing import Any, Dict

from ..logger import get_logger

logger = get_logger(__name__)


class StageState:
    """
    Trace of one stage execution.

    Attributes:
        context: Inputs handed to the stage
        observations: Summaries of action results
        plans: Planning notes
        actions: Actions taken with their results
        metadata: Creation time and action counter
    """

    def __init__(self, initial_context: Dict[str, Any] = None):
        self.context = initial_context or {}
        self.observations = []
        self.plans = []
        self.actions = []
        self.metadata = {
            "created_at": datetime.now().isoformat(),
            "stage_calls": 0,
        }

    def add_observation(self, observation: str, data: Any = None):
        self.observations.append({"observation": observation, "data": data})

    def add_plan(self, plan: str):
        self.plans.append(plan)

    def add_action(self, action: str, result: Any = None):
        self.actions.append({"action": action, "result": result})
        self.metadata["stage_calls"] += 1

    def get_summary(self) -> Dict[str, Any]:
        return {
            "num_observations": len(self.observations),
            "num_plans": len(self.plans),
            "num_actions": len(self.actions),
            "metadata": self.metadata,
        }


class BaseStage(ABC):
    """
    Abstract base class for all workflow stages.

    Subclasses implement plan() and act(); observe() has a default summary.
    """

    def __init__(self, name: str, description: str):
        self.name = name
        self.description = description
        self.state = None

    @abstractmethod
    def plan(self, state: StageState) -> str:
        """
        Describe the work for the given context.

        Args:
            state: Current stage state

        Returns:
            Planning note
        """

    @abstractmethod
    def act(self, state: StageState) -> Dict[str, Any]:
        """
        Do the stage's work.

        Args:
            state: Current stage state

        Returns:
            Result dictionary with at least an "action" key
        """

    def observe(self, state: StageState, action_result: Dict[str, Any]) -> str:
        observation = f"Action completed: {action_result.get('action', 'unknown')}"
        state.add_observation(observation)
        return observation

    def execute(self, context: Dict[str, Any]) -> Dict[str, Any]:
        """
        Run plan, act and observe on a fresh state.

        Args:
            context: Input context for the stage

        Returns:
            {"stage", "result", "observation", "plan", "state_summary"}
        """
        self.state = StageState(initial_context=context)

        plan = self.plan(self.state)
        self.state.add_plan(plan)
        logger.debug("%s plan: %s", self.name, plan)

        action_result = self.act(self.state)
        self.state.add_action(f"{self.name} action", action_result.get("action"))

        observation = self.observe(self.state, action_result)

        return {
            "stage": self.name,
            "result": action_result,
            "observation": observation,
            "plan": plan,
            "state_summary": self.state.get_summary(),
        }

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(name='{self.name}')"
