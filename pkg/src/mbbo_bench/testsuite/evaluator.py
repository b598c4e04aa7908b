"""Budget-counting evaluation wrapper shared by optimizers and environments."""
from __future__ import annotations

import math
import time
from typing import Callable

import numpy as np

from .problems import Problem, evaluate_noiseless
from .noise import apply_noise


class LogicalClock:
    """Deterministic stand-in for ``time.perf_counter``: each reading advances one tick.

    The default tick is a power of two so differences between readings are exact.
    """

    def __init__(self, tick: float = 2.0**-20):
        self.tick = tick
        self.count = 0

    def __call__(self) -> float:
        self.count += 1
        return self.count * self.tick


class Evaluator:
    """Evaluates batches on a problem and keeps the run's bookkeeping.

    Optimizers see the (possibly noisy) values returned by ``__call__``; the
    noiseless best is tracked separately in ``best`` and ``trace`` for
    reporting and termination.
    """

    def __init__(self, problem: Problem, rng: np.random.Generator, clock: Callable[[], float] = time.perf_counter):
        self.problem = problem
        self.rng = rng
        self.clock = clock
        self.fes = 0
        self.calls = 0
        self.eval_time = 0.0
        self.best = math.inf
        self.best_x: np.ndarray | None = None
        self.trace: list[tuple[int, float]] = []

    @property
    def lower(self) -> np.ndarray:
        return self.problem.lower

    @property
    def upper(self) -> np.ndarray:
        return self.problem.upper

    @property
    def dim(self) -> int:
        return self.problem.dim

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        t0 = self.clock()
        raw = np.atleast_1d(evaluate_noiseless(self.problem, X))
        if self.problem.noise.kind == "none":
            seen = raw
        else:
            seen = apply_noise(self.problem.noise, raw, self.problem.f_star, self.rng)
        self.eval_time += self.clock() - t0
        self.fes += X.shape[0]
        self.calls += 1
        i = int(np.argmin(raw))
        if raw[i] < self.best:
            self.best = float(raw[i])
            self.best_x = X[i].copy()
        self.trace.append((self.fes, self.best))
        return np.array(seen, dtype=float)

    def gap(self) -> float:
        """Noiseless best minus the known optimum (inf when the optimum is unknown)."""
        if self.problem.f_star is None:
            return math.inf
        return self.best - self.problem.f_star
