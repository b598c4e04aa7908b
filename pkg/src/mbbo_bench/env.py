"""Meta-level environment pairing one backbone optimizer with one problem.

An episode is one optimization run: ``reset`` evaluates the initial
population, every ``step(action)`` runs one backbone generation configured by
the action. Rewards are normalized improvements of the noiseless best cost,
so the undiscounted return of an episode lies in [0, 1] whenever the optimum
is known.
"""
from __future__ import annotations

import csv
import dataclasses
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, MutableMapping

import numpy as np

from .optimizers import Optimizer, optimizer_update
from .testsuite import Evaluator, Problem

N_FEATURES = 9
STAGNATION_WINDOW = 10
TARGET_ACCURACY = 1e-8

FEATURE_NAMES = (
    "budget_progress",
    "log_relative_best",
    "improvement_rate",
    "stagnation",
    "diversity",
    "cost_dispersion",
    "improvement_frequency",
    "survival_share",
    "bias",
)


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class StepOutcome:
    state: np.ndarray
    reward: float
    done: bool
    info: dict


def reward_of(prev_best: float, new_best: float, f_initial: float, f_reference: float) -> float:
    """Positive improvement normalized by the initial distance to the reference."""
    denom = f_initial - f_reference
    if not denom > 0:
        return 0.0
    return max(0.0, (prev_best - new_best) / denom)


def _mean_pairwise_distance(X: np.ndarray) -> float:
    n = X.shape[0]
    if n < 2:
        return 0.0
    diff = X[:, None, :] - X[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    return float(dist.sum() / (n * (n - 1)))


class MetaEnv:
    """Environment over ``(backbone, problem)``.

    ``reference_book`` maps problem keys to the best noiseless cost seen on
    that instance; it supplies the reward reference when the optimum is
    unknown and is updated in place.
    """

    def __init__(
        self,
        backbone: Optimizer,
        problem: Problem,
        max_fes: int | None = None,
        reference_book: MutableMapping[str, float] | None = None,
        accuracy: float = TARGET_ACCURACY,
        clock: Callable[[], float] = time.perf_counter,
    ):
        self.backbone = backbone
        self.problem = problem
        self.max_fes = int(max_fes if max_fes is not None else problem.max_fes)
        self.reference_book = reference_book if reference_book is not None else {}
        self.accuracy = accuracy
        self.clock = clock
        self.evaluator: Evaluator | None = None
        self.done = True
        self.state: np.ndarray | None = None
        self.trajectory: list[dict] = []

    # -- bookkeeping -------------------------------------------------------

    @property
    def f_reference(self) -> float:
        if self.problem.f_star is not None:
            return self.problem.f_star
        return min(self.reference_book.get(self.problem.key, math.inf), self.evaluator.best)

    @property
    def best_cost(self) -> float:
        return self.evaluator.best

    @property
    def fes(self) -> int:
        return self.evaluator.fes

    def _hit_target(self) -> bool:
        return self.problem.f_star is not None and self.evaluator.best - self.problem.f_star <= self.accuracy

    def _record_reference(self):
        if self.problem.f_star is None:
            key = self.problem.key
            self.reference_book[key] = min(self.reference_book.get(key, math.inf), self.evaluator.best)

    # -- features ----------------------------------------------------------

    def features(self) -> np.ndarray:
        ev = self.evaluator
        f_ref = self.f_reference
        out = np.zeros(N_FEATURES)
        out[0] = min(1.0, ev.fes / self.max_fes)
        span = abs(self.f_initial - f_ref)
        if span > 0:
            out[1] = math.log1p(min(1.0, max(0.0, (ev.best - f_ref) / span))) / math.log(2.0)
        prev_span = abs(self._prev_best - f_ref)
        if prev_span > 0 and math.isfinite(prev_span):
            out[2] = min(1.0, max(0.0, (self._prev_best - ev.best) / prev_span))
        out[3] = min(self._stagnation, STAGNATION_WINDOW) / STAGNATION_WINDOW
        state = self.backbone.state
        diag = float(np.linalg.norm(self.problem.upper - self.problem.lower))
        out[4] = min(1.0, _mean_pairwise_distance(state.positions) / diag)
        costs = np.asarray(state.costs, dtype=float) - f_ref
        mean = abs(float(np.mean(costs)))
        cv = float(np.std(costs)) / (mean + 1e-12)
        out[5] = cv / (1.0 + cv) if math.isfinite(cv) else 1.0
        recent = self._improvements[-STAGNATION_WINDOW:]
        out[6] = sum(recent) / STAGNATION_WINDOW
        if self._prev_positions is not None and self._prev_positions.shape == state.positions.shape:
            out[7] = float(np.mean(np.all(self._prev_positions == state.positions, axis=1)))
        out[8] = 1.0
        return out

    # -- gym-style API -----------------------------------------------------

    def reset(self, seed: int) -> np.ndarray:
        if self.max_fes < self.backbone.pop_size:
            raise ConfigurationError(
                f"max_fes={self.max_fes} is smaller than the population size {self.backbone.pop_size}"
            )
        noise_ss, opt_ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF).spawn(2)
        self.evaluator = Evaluator(self.problem, np.random.default_rng(noise_ss), self.clock)
        self.backbone.reset(self.evaluator, np.random.default_rng(opt_ss))
        self.f_initial = self.evaluator.best
        self._prev_best = self.evaluator.best
        self._stagnation = 0
        self._improvements: list[int] = []
        self._prev_positions = None
        self._record_reference()
        self.done = self.fes >= self.max_fes or self._hit_target()
        self.trajectory = []
        self.init_fes = self.fes
        self.state = self.features()
        return self.state

    def step(self, action) -> StepOutcome:
        if self.done:
            raise RuntimeError("step() called on a finished episode; call reset() first")
        prev = self.evaluator.best
        f_ref = self.f_reference
        self._prev_positions = np.array(self.backbone.state.positions, copy=True)
        report = optimizer_update(self.backbone, action, self.evaluator)
        new = self.evaluator.best
        if self.problem.f_star is None:
            f_ref = min(f_ref, new)
        reward = reward_of(prev, new, self.f_initial, f_ref)
        improved = new < prev
        self._stagnation = 0 if improved else self._stagnation + 1
        self._improvements.append(int(improved))
        self._prev_best = prev
        self._record_reference()
        self.done = self.fes >= self.max_fes or self._hit_target()
        info = {
            "fes": self.fes,
            "consumed": report.fes,
            "best_cost": new,
            "generation": self.backbone.state.generation,
        }
        row = {"step": len(self.trajectory) + 1, "consumed_fes": self.fes, "best_cost": new, "reward": reward}
        row.update({f"action_{k}": v for k, v in dataclasses.asdict(action).items()})
        self.trajectory.append(row)
        self.state = self.features()
        return StepOutcome(self.state, reward, self.done, info)

    def write_trajectory(self, path: str | Path) -> None:
        rows = self.trajectory
        fields = ["step", "consumed_fes", "best_cost", "reward"]
        for r in rows:
            fields += [k for k in r if k not in fields]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
