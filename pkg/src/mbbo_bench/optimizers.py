"""Low-level population-based optimizers.

Each ``*_step`` function advances one generation and consumes evaluations
through the :class:`~mbbo_bench.testsuite.Evaluator` it is given. The
classes at the bottom wrap them behind a common ``reset`` / ``step`` /
``update`` surface: classic baselines call ``step`` with their default
settings, and a meta-level agent drives the configurable backbones through
``update(action, evaluator)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

DE_STRATEGIES = ("rand/1", "best/1", "current-to-best/1")
F_RANGE = (1e-12, 2.0)
DEFAULT_POP_SIZE = 50


@dataclass(frozen=True)
class DEAction:
    strategy: str = "rand/1"
    F: float = 0.5
    CR: float = 0.9

    def clamped(self) -> "DEAction":
        if self.strategy not in DE_STRATEGIES:
            raise ValueError(f"unknown DE strategy {self.strategy!r}; expected one of {DE_STRATEGIES}")
        return DEAction(self.strategy, float(np.clip(self.F, *F_RANGE)), float(np.clip(self.CR, 0.0, 1.0)))


@dataclass(frozen=True)
class PSOAction:
    w: float = 0.729
    c1: float = 1.49445
    c2: float = 1.49445

    def clamped(self) -> "PSOAction":
        return PSOAction(float(np.clip(self.w, 0.0, 1.0)), max(0.0, float(self.c1)), max(0.0, float(self.c2)))


@dataclass
class Population:
    positions: np.ndarray
    costs: np.ndarray
    best_position: np.ndarray
    best_cost: float
    generation: int = 0

    @property
    def size(self) -> int:
        return self.positions.shape[0]


@dataclass
class Swarm(Population):
    velocities: np.ndarray = field(default=None)
    pbest_positions: np.ndarray = field(default=None)
    pbest_costs: np.ndarray = field(default=None)


def _best_of(positions, costs, prev_pos=None, prev_cost=math.inf):
    i = int(np.argmin(costs))
    if costs[i] < prev_cost:
        return positions[i].copy(), float(costs[i])
    return prev_pos, prev_cost


def init_population(evaluator, rng: np.random.Generator, pop_size: int = DEFAULT_POP_SIZE) -> Population:
    X = rng.uniform(evaluator.lower, evaluator.upper, (pop_size, evaluator.dim))
    costs = evaluator(X)
    best_pos, best_cost = _best_of(X, costs)
    return Population(X, costs, best_pos, best_cost)


# ---------------------------------------------------------------------------
# random search


def random_search_step(evaluator, rng: np.random.Generator, batch: int, pop: Population | None = None) -> Population:
    """Sample ``batch`` uniform points; the result carries the best-so-far."""
    if batch < 1:
        raise ValueError("batch must be >= 1")
    X = rng.uniform(evaluator.lower, evaluator.upper, (batch, evaluator.dim))
    costs = evaluator(X)
    if pop is None:
        best_pos, best_cost = _best_of(X, costs)
        return Population(X, costs, best_pos, best_cost)
    best_pos, best_cost = _best_of(X, costs, pop.best_position, pop.best_cost)
    return Population(X, costs, best_pos, best_cost, pop.generation + 1)


# ---------------------------------------------------------------------------
# differential evolution


def pick_donors(rng: np.random.Generator, pop_size: int, k: int = 3) -> np.ndarray:
    """``k`` distinct donor indices per target, none equal to the target."""
    keys = rng.random((pop_size, pop_size))
    np.fill_diagonal(keys, np.inf)
    return np.argsort(keys, axis=1)[:, :k]


def de_mutation(positions: np.ndarray, donors: np.ndarray, F: float, strategy: str, best_idx: int) -> np.ndarray:
    """Mutant vectors for every target; ``donors`` has shape (pop, 3)."""
    r1, r2, r3 = donors[:, 0], donors[:, 1], donors[:, 2]
    if strategy == "rand/1":
        return positions[r1] + F * (positions[r2] - positions[r3])
    if strategy == "best/1":
        return positions[best_idx] + F * (positions[r1] - positions[r2])
    if strategy == "current-to-best/1":
        return positions + F * (positions[best_idx] - positions) + F * (positions[r1] - positions[r2])
    raise ValueError(f"unknown DE strategy {strategy!r}")


def reflect(X: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    X = np.where(X < lower, 2 * lower - X, X)
    X = np.where(X > upper, 2 * upper - X, X)
    return np.clip(X, lower, upper)


def binomial_crossover(targets: np.ndarray, mutants: np.ndarray, CR: float, rng: np.random.Generator) -> np.ndarray:
    n, d = targets.shape
    mask = rng.random((n, d)) < CR
    mask[np.arange(n), rng.integers(0, d, n)] = True
    return np.where(mask, mutants, targets)


def de_step(pop: Population, action: DEAction, evaluator, rng: np.random.Generator) -> Population:
    n = pop.size
    if n < 4:
        raise RuntimeError(f"DE needs a population of at least 4, got {n}")
    donors = pick_donors(rng, n)
    best_idx = int(np.argmin(pop.costs))
    mutants = de_mutation(pop.positions, donors, action.F, action.strategy, best_idx)
    mutants = reflect(mutants, evaluator.lower, evaluator.upper)
    trials = binomial_crossover(pop.positions, mutants, action.CR, rng)
    trial_costs = evaluator(trials)
    better = trial_costs < pop.costs  # ties keep the incumbent
    X = np.where(better[:, None], trials, pop.positions)
    costs = np.where(better, trial_costs, pop.costs)
    best_pos, best_cost = _best_of(X, costs, pop.best_position, pop.best_cost)
    return Population(X, costs, best_pos, best_cost, pop.generation + 1)


# ---------------------------------------------------------------------------
# particle swarm


def init_swarm(evaluator, rng: np.random.Generator, pop_size: int = DEFAULT_POP_SIZE) -> Swarm:
    pop = init_population(evaluator, rng, pop_size)
    vmax = 0.2 * (evaluator.upper - evaluator.lower)
    v = rng.uniform(-vmax, vmax, pop.positions.shape)
    return Swarm(pop.positions, pop.costs, pop.best_position, pop.best_cost, 0, v,
                 pop.positions.copy(), pop.costs.copy())


def pso_step(swarm: Swarm, action: PSOAction, evaluator, rng: np.random.Generator) -> Swarm:
    X = swarm.positions
    u1 = rng.random(X.shape)
    u2 = rng.random(X.shape)
    v = (action.w * swarm.velocities
         + action.c1 * u1 * (swarm.pbest_positions - X)
         + action.c2 * u2 * (swarm.best_position - X))
    vmax = 0.2 * (evaluator.upper - evaluator.lower)
    v = np.clip(v, -vmax, vmax)
    X = np.clip(X + v, evaluator.lower, evaluator.upper)
    costs = evaluator(X)
    improved = costs < swarm.pbest_costs
    pbest = np.where(improved[:, None], X, swarm.pbest_positions)
    pbest_costs = np.where(improved, costs, swarm.pbest_costs)
    best_pos, best_cost = _best_of(X, costs, swarm.best_position, swarm.best_cost)
    return Swarm(X, costs, best_pos, best_cost, swarm.generation + 1, v, pbest, pbest_costs)


# ---------------------------------------------------------------------------
# CMA-ES


@dataclass
class CMAState:
    mean: np.ndarray
    sigma: float
    C: np.ndarray
    pc: np.ndarray
    ps: np.ndarray
    B: np.ndarray
    D: np.ndarray
    lam: int
    weights: np.ndarray
    mueff: float
    cc: float
    cs: float
    c1: float
    cmu: float
    damps: float
    chi_n: float
    best_position: np.ndarray | None = None
    best_cost: float = math.inf
    generation: int = 0


def cmaes_init(evaluator, rng: np.random.Generator, lam: int | None = None, sigma0: float | None = None) -> CMAState:
    n = evaluator.dim
    lam = lam or 4 + int(3 * math.log(n))
    mu = lam // 2
    w = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mueff = 1.0 / np.sum(w**2)
    cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
    cs = (mueff + 2) / (n + mueff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + cs
    chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))
    sigma0 = sigma0 if sigma0 is not None else 0.3 * float(np.mean(evaluator.upper - evaluator.lower))
    mean = rng.uniform(evaluator.lower, evaluator.upper)
    return CMAState(mean, sigma0, np.eye(n), np.zeros(n), np.zeros(n), np.eye(n), np.ones(n),
                    lam, w, mueff, cc, cs, c1, cmu, damps, chi_n)


def recombine(sorted_samples: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted mean of the best ``len(weights)`` samples (rows sorted best first)."""
    return weights @ sorted_samples[: len(weights)]


def _eigen(C: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    C = (C + C.T) / 2
    vals, B = np.linalg.eigh(C)
    if np.any(vals < 1e-14):
        vals = np.maximum(vals, 1e-14)
        C = (B * vals) @ B.T
    return C, B, np.sqrt(vals)


def cmaes_step(state: CMAState, evaluator, rng: np.random.Generator) -> CMAState:
    n = state.mean.shape[0]
    s = replace(state)
    z = rng.standard_normal((s.lam, n))
    X = s.mean + s.sigma * (z * s.D) @ s.B.T
    X = np.clip(X, evaluator.lower, evaluator.upper)
    costs = evaluator(X)
    order = np.argsort(costs, kind="stable")
    old_mean = s.mean
    s.mean = recombine(X[order], s.weights)
    step = (s.mean - old_mean) / s.sigma
    inv_sqrt = (s.B / s.D) @ s.B.T
    s.ps = (1 - s.cs) * s.ps + math.sqrt(s.cs * (2 - s.cs) * s.mueff) * inv_sqrt @ step
    ps_norm = float(np.linalg.norm(s.ps))
    hsig = ps_norm / math.sqrt(1 - (1 - s.cs) ** (2 * (s.generation + 1))) / s.chi_n < 1.4 + 2 / (n + 1)
    s.pc = (1 - s.cc) * s.pc + hsig * math.sqrt(s.cc * (2 - s.cc) * s.mueff) * step
    art = (X[order[: len(s.weights)]] - old_mean) / s.sigma
    s.C = ((1 - s.c1 - s.cmu) * s.C
           + s.c1 * (np.outer(s.pc, s.pc) + (1 - hsig) * s.cc * (2 - s.cc) * s.C)
           + s.cmu * (art.T * s.weights) @ art)
    s.sigma = s.sigma * math.exp(min(1.0, (s.cs / s.damps) * (ps_norm / s.chi_n - 1)))
    s.C, s.B, s.D = _eigen(s.C)
    s.best_position, s.best_cost = _best_of(X, costs, s.best_position, s.best_cost)
    s.generation += 1
    return s


# ---------------------------------------------------------------------------
# common optimizer surface


class StepReport(NamedTuple):
    best_cost: float
    fes: int
    improved: bool


class Optimizer:
    """One optimizer instance bound to a random stream; ``reset`` evaluates the initial population."""

    name = "optimizer"
    pop_size = DEFAULT_POP_SIZE

    def __init__(self, seed_rng: np.random.Generator | None = None):
        self.rng = seed_rng
        self.state = None

    def reset(self, evaluator, rng: np.random.Generator) -> StepReport:
        raise NotImplementedError

    def step(self, evaluator) -> StepReport:
        """One generation with the optimizer's own default settings."""
        raise NotImplementedError

    @property
    def best_cost(self) -> float:
        return self.state.best_cost

    def _report(self, evaluator, before_fes: int, before_best: float) -> StepReport:
        return StepReport(self.state.best_cost, evaluator.fes - before_fes, self.state.best_cost < before_best)


class RandomSearch(Optimizer):
    name = "random-search"

    def __init__(self, batch: int = DEFAULT_POP_SIZE):
        super().__init__()
        self.batch = batch
        self.pop_size = batch

    def reset(self, evaluator, rng):
        self.rng = rng
        fes = evaluator.fes
        self.state = random_search_step(evaluator, rng, self.batch)
        return StepReport(self.state.best_cost, evaluator.fes - fes, True)

    def step(self, evaluator):
        fes, best = evaluator.fes, self.state.best_cost
        self.state = random_search_step(evaluator, self.rng, self.batch, self.state)
        return self._report(evaluator, fes, best)


class DE(Optimizer):
    """DE whose per-generation strategy, F and CR can be set by an agent."""

    name = "de"
    action_type = DEAction

    def __init__(self, pop_size: int = DEFAULT_POP_SIZE, default: DEAction = DEAction()):
        super().__init__()
        self.pop_size = pop_size
        self.default = default

    def reset(self, evaluator, rng):
        self.rng = rng
        fes = evaluator.fes
        self.state = init_population(evaluator, rng, self.pop_size)
        return StepReport(self.state.best_cost, evaluator.fes - fes, True)

    def update(self, action: DEAction, evaluator) -> StepReport:
        if not isinstance(action, DEAction):
            raise ValueError(f"DE backbone expects a DEAction, got {type(action).__name__}")
        fes, best = evaluator.fes, self.state.best_cost
        self.state = de_step(self.state, action.clamped(), evaluator, self.rng)
        return self._report(evaluator, fes, best)

    def step(self, evaluator):
        return self.update(self.default, evaluator)


class PSO(Optimizer):
    """Global-best PSO whose inertia and acceleration coefficients can be set by an agent."""

    name = "pso"
    action_type = PSOAction

    def __init__(self, pop_size: int = DEFAULT_POP_SIZE, default: PSOAction = PSOAction()):
        super().__init__()
        self.pop_size = pop_size
        self.default = default

    def reset(self, evaluator, rng):
        self.rng = rng
        fes = evaluator.fes
        self.state = init_swarm(evaluator, rng, self.pop_size)
        return StepReport(self.state.best_cost, evaluator.fes - fes, True)

    def update(self, action: PSOAction, evaluator) -> StepReport:
        if not isinstance(action, PSOAction):
            raise ValueError(f"PSO backbone expects a PSOAction, got {type(action).__name__}")
        fes, best = evaluator.fes, self.state.best_cost
        self.state = pso_step(self.state, action.clamped(), evaluator, self.rng)
        return self._report(evaluator, fes, best)

    def step(self, evaluator):
        return self.update(self.default, evaluator)


class CMAES(Optimizer):
    name = "cma-es"

    def reset(self, evaluator, rng):
        # the initial mean is not evaluated; the first generation is
        self.rng = rng
        self.state = cmaes_init(evaluator, rng)
        self.pop_size = self.state.lam
        return self.step(evaluator)

    def step(self, evaluator):
        fes, best = evaluator.fes, self.state.best_cost
        self.state = cmaes_step(self.state, evaluator, self.rng)
        return self._report(evaluator, fes, best)


BACKBONES = {"de": DE, "pso": PSO}
CLASSIC = {"random-search": RandomSearch, "de": DE, "pso": PSO, "cma-es": CMAES}


def optimizer_update(backbone: Optimizer, action, evaluator) -> StepReport:
    """Clamp ``action`` and run exactly one generation of ``backbone``."""
    if not hasattr(backbone, "update"):
        raise ValueError(f"{backbone.name} is not a configurable backbone")
    return backbone.update(action, evaluator)


def make_optimizer(name: str, **kwargs) -> Optimizer:
    try:
        return CLASSIC[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown optimizer {name!r}; expected one of {sorted(CLASSIC)}") from None
