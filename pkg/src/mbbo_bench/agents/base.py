"""Agent template: the training and rollout loops shared by every agent."""
from __future__ import annotations

import math
import time
from typing import Callable

import numpy as np

from ..env import MetaEnv
from ..metrics import EPS, RunRecord
from ..optimizers import Optimizer


class Agent:
    """Base class for meta-level agents.

    Subclasses implement ``act``, ``to_action`` and at least one of
    ``store`` (per-step learning) or ``finish_episode`` (episodic learning),
    plus ``get_params`` / ``set_params`` for checkpointing.
    """

    kind = "agent"
    backbone_name = "de"

    def __init__(self, seed: int = 0, pop_size: int = 50):
        self.seed = seed
        self.pop_size = pop_size
        self.rng = np.random.default_rng(seed)
        self.learning_step = 0
        self.history: list[tuple[int, float]] = []

    # -- hooks -------------------------------------------------------------

    def make_backbone(self) -> Optimizer:
        from ..optimizers import BACKBONES

        return BACKBONES[self.backbone_name](pop_size=self.pop_size)

    def act(self, state: np.ndarray, explore: bool):
        """Return ``(action, memo)``; ``memo`` is passed back to ``store``."""
        raise NotImplementedError

    def to_action(self, action):
        """Map the agent's raw action onto the backbone's action type."""
        raise NotImplementedError

    def store(self, state, action, memo, reward, next_state, done) -> None:
        pass

    def finish_episode(self) -> None:
        pass

    def get_params(self) -> dict:
        raise NotImplementedError

    def set_params(self, params: dict) -> None:
        raise NotImplementedError

    # -- loops -------------------------------------------------------------

    def train_episode(self, env: MetaEnv, on_step: Callable[["Agent"], None] | None = None) -> float:
        """Run one training episode on a freshly reset ``env``; returns the undiscounted return."""
        state = env.state
        total = 0.0
        while not env.done:
            action, memo = self.act(state, explore=True)
            out = env.step(self.to_action(action))
            self.store(state, action, memo, out.reward, out.state, out.done)
            self.learning_step += 1
            total += out.reward
            state = out.state
            if on_step is not None:
                on_step(self)
        self.finish_episode()
        return total

    def run_greedy(self, env: MetaEnv, seed: int) -> float:
        """Reset ``env`` and run it with exploration off; no learning."""
        return self.run_episode(env, seed, explore=False)

    def run_episode(self, env: MetaEnv, seed: int, explore: bool = False) -> float:
        """Reset ``env`` and run one episode without learning; returns the undiscounted return."""
        state = env.reset(seed)
        total = 0.0
        while not env.done:
            action, _ = self.act(state, explore=explore)
            out = env.step(self.to_action(action))
            total += out.reward
            state = out.state
        return total

    def rollout_episode(self, env: MetaEnv, seed: int, run: int = 0) -> RunRecord:
        """Greedy episode on ``env`` (reset with ``seed``), reported as a :class:`RunRecord`."""
        start = env.clock()
        self.run_greedy(env, seed)
        t2 = env.clock() - start
        return record_from_evaluator(self.name, env.evaluator, run, t2)

    @property
    def name(self) -> str:
        return f"{self.kind}-{self.backbone_name}"


def record_from_evaluator(algorithm: str, evaluator, run: int, t2: float) -> RunRecord:
    problem = evaluator.problem
    if problem.f_star is not None:
        v_obj = max(evaluator.best - problem.f_star, 0.0) + EPS
    else:
        v_obj = math.nan  # filled in once every run on the instance is known
    return RunRecord(algorithm, problem.key, run, v_obj, float(evaluator.fes), evaluator.eval_time, t2,
                     tuple(evaluator.trace))
