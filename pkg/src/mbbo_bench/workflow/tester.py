"""Test loop: every roster member on every test problem, ``N`` paired runs each."""
from __future__ import annotations

import dataclasses
import math
import time
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from ..agents import Agent, load_checkpoint, record_from_evaluator
from ..env import TARGET_ACCURACY, MetaEnv
from ..metrics import EPS, RunRecord
from ..optimizers import CLASSIC, make_optimizer
from ..testsuite import Evaluator, Problem
from .config import run_seed


class MissingCheckpointError(FileNotFoundError):
    pass


def run_classic(name: str, problem: Problem, seed: int, run: int = 0, max_fes: int | None = None,
                clock: Callable[[], float] = time.perf_counter, pop_size: int = 50) -> RunRecord:
    """Bare optimizer loop until the budget is spent or the optimum is hit.

    Streams are split exactly as in :meth:`MetaEnv.reset`, so a classic run and
    a learned run with the same seed see the same noise stream and initial
    population.
    """
    max_fes = int(max_fes if max_fes is not None else problem.max_fes)
    kwargs = {} if name == "cma-es" else ({"batch": pop_size} if name == "random-search" else {"pop_size": pop_size})
    opt = make_optimizer(name, **kwargs)
    noise_ss, opt_ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF).spawn(2)
    start = clock()
    ev = Evaluator(problem, np.random.default_rng(noise_ss), clock)
    opt.reset(ev, np.random.default_rng(opt_ss))
    while ev.fes < max_fes and not ev.gap() <= TARGET_ACCURACY:
        opt.step(ev)
    t2 = clock() - start
    return record_from_evaluator(name, ev, run, t2)


def run_learned(agent: Agent, problem: Problem, seed: int, run: int = 0, max_fes: int | None = None,
                clock: Callable[[], float] = time.perf_counter) -> RunRecord:
    env = MetaEnv(agent.make_backbone(), problem, max_fes, clock=clock)
    return agent.rollout_episode(env, seed, run)


def final_best(record: RunRecord) -> float:
    return record.trace[-1][1] if record.trace else math.nan


def fill_unknown_optima(records: list[RunRecord], problems: Sequence[Problem]) -> list[RunRecord]:
    """Score runs on problems without a known optimum against the best cost any run found there."""
    unknown = {p.key for p in problems if p.f_star is None}
    if not unknown:
        return records
    ref: dict[str, float] = {}
    for r in records:
        if r.problem in unknown:
            ref[r.problem] = min(ref.get(r.problem, math.inf), final_best(r))
    out = []
    for r in records:
        if r.problem in unknown:
            r = dataclasses.replace(r, v_obj_raw=max(final_best(r) - ref[r.problem], 0.0) + EPS)
        out.append(r)
    return out


def tester_test(
    roster: Sequence[str],
    problems: Sequence[Problem],
    runs: int,
    seed: int,
    max_fes: int | None = None,
    agents: Mapping[str, Agent | str | Path] | None = None,
    clock: Callable[[], float] = time.perf_counter,
    pop_size: int = 50,
) -> list[RunRecord]:
    """Records for every (algorithm, problem, run); classic names resolve to optimizers,
    anything else must be supplied in ``agents`` as an agent or a checkpoint path."""
    agents = dict(agents or {})
    resolved: dict[str, Agent] = {}
    for name in roster:
        if name in CLASSIC:
            continue
        src = agents.get(name)
        if src is None:
            raise MissingCheckpointError(f"no checkpoint for algorithm {name!r}")
        if isinstance(src, Agent):
            resolved[name] = src
        else:
            if not Path(src).is_file():
                raise MissingCheckpointError(f"checkpoint for algorithm {name!r} not found: {src}")
            resolved[name] = load_checkpoint(src)
    records = []
    for name in roster:
        for problem in problems:
            for n in range(runs):
                s = run_seed(seed, problem.key, n)
                if name in CLASSIC:
                    rec = run_classic(name, problem, s, n, max_fes, clock, pop_size)
                else:
                    rec = dataclasses.replace(run_learned(resolved[name], problem, s, n, max_fes, clock),
                                              algorithm=name)
                records.append(rec)
    return fill_unknown_optima(records, problems)
