"""Tabular Q-learning agent choosing DE strategy, F and CR each generation."""
from __future__ import annotations

import itertools

import numpy as np

from ..optimizers import DE_STRATEGIES, DEAction
from .base import Agent

F_CHOICES = (0.3, 0.5, 0.9)
CR_CHOICES = (0.3, 0.9)
ACTIONS: tuple[DEAction, ...] = tuple(
    DEAction(s, f, cr) for s, f, cr in itertools.product(DE_STRATEGIES, F_CHOICES, CR_CHOICES)
)
N_ACTIONS = len(ACTIONS)
BIN_EDGES = (1.0 / 3.0, 2.0 / 3.0)


def discretize(state: np.ndarray) -> int:
    """Three bins per feature, combined positionally (feature 0 is the lowest digit)."""
    bins = (np.asarray(state) >= BIN_EDGES[0]).astype(int) + (np.asarray(state) >= BIN_EDGES[1]).astype(int)
    return int(np.sum(bins * 3 ** np.arange(bins.shape[0])))


def epsilon_greedy(q_values: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Uniform action with probability ``epsilon``, else the lowest-index argmax."""
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(len(q_values)))
    return int(np.argmax(q_values))


def q_update(q: dict, s: int, a: int, r: float, s_next: int, alpha: float, gamma: float,
             terminal: bool = False, n_actions: int = N_ACTIONS) -> dict:
    """One-step Q-learning backup, in place; returns ``q``."""
    row = q.setdefault(s, np.zeros(n_actions))
    nxt = 0.0 if terminal else float(np.max(q.get(s_next, np.zeros(n_actions))))
    row[a] += alpha * (r + gamma * nxt - row[a])
    return q


class QAgent(Agent):
    kind = "qlearning"
    backbone_name = "de"

    def __init__(self, seed: int = 0, pop_size: int = 50, alpha: float = 0.1, gamma: float = 0.99,
                 epsilon: float = 0.1):
        super().__init__(seed, pop_size)
        self.alpha = alpha
        self.gamma = gamma
        self.epsilon = epsilon
        self.q: dict[int, np.ndarray] = {}

    def q_row(self, s: int) -> np.ndarray:
        return self.q.get(s, np.zeros(N_ACTIONS))

    def act(self, state, explore):
        s = discretize(state)
        return epsilon_greedy(self.q_row(s), self.epsilon if explore else 0.0, self.rng), s

    def to_action(self, action: int) -> DEAction:
        return ACTIONS[action]

    def store(self, state, action, memo, reward, next_state, done):
        q_update(self.q, memo, action, reward, discretize(next_state), self.alpha, self.gamma, terminal=done)

    def get_params(self):
        return {
            "alpha": self.alpha,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "q": {s: self.q[s].copy() for s in sorted(self.q)},
        }

    def set_params(self, params):
        self.alpha = float(params["alpha"])
        self.gamma = float(params["gamma"])
        self.epsilon = float(params["epsilon"])
        self.q = {int(s): np.array(v, dtype=float) for s, v in params["q"].items()}
