"""Training loop: round-robin episodes over the train split with periodic checkpoints."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..agents import Agent, save_checkpoint
from ..env import MetaEnv
from ..testsuite import Problem
from .config import TRAIN_STREAM, VALIDATION_STREAM, derive_seed

VALIDATION_RUNS = 3
CHECKPOINT_POINTS = 20


def checkpoint_interval(max_steps: int) -> int:
    return max(1, max_steps // CHECKPOINT_POINTS)


def checkpoint_name(step: int) -> str:
    return f"step-{step}.ckpt"


@dataclass
class TrainingLog:
    episodes: list[tuple[int, str, float, int]] = field(default_factory=list)  # (episode, instance, return, step)
    checkpoints: list[tuple[int, float, str]] = field(default_factory=list)  # (step, validation return, path)

    @property
    def best_checkpoint(self) -> tuple[int, float, str]:
        """Highest validation return; earliest on ties."""
        if not self.checkpoints:
            raise ValueError("no checkpoints were written")
        best = max(r for _, r, _ in self.checkpoints)
        return next(c for c in self.checkpoints if c[1] == best)


def validation_return(agent: Agent, problem: Problem, seed: int, max_fes: int | None = None,
                      reference_book=None, clock: Callable[[], float] = time.perf_counter,
                      runs: int = VALIDATION_RUNS, explore: bool = False) -> float:
    """Mean return over ``runs`` fixed-seed episodes on ``problem``; greedy unless ``explore``."""
    total = 0.0
    for v in range(runs):
        env = MetaEnv(agent.make_backbone(), problem, max_fes, reference_book, clock=clock)
        total += agent.run_episode(env, derive_seed(seed, VALIDATION_STREAM, v), explore)
    return total / runs


def trainer_train(
    agent: Agent,
    problems: Sequence[Problem],
    max_steps: int,
    seed: int,
    max_fes: int | None = None,
    out_dir: str | Path | None = None,
    clock: Callable[[], float] = time.perf_counter,
    interval: int | None = None,
    validation_problem: Problem | None = None,
    stop_when: Callable[[float], bool] | None = None,
    validate_at_start: bool = False,
    log: TrainingLog | None = None,
) -> TrainingLog:
    """Train ``agent`` until its learning-step counter reaches ``max_steps``.

    A validation return is appended to ``agent.history`` and a checkpoint
    written every ``interval`` steps and once more at the end if the final
    step is not a multiple. ``stop_when(validation_return)`` can end training
    early (used for fine-tuning).
    """
    if not problems:
        raise ValueError("no training problems")
    interval = interval or checkpoint_interval(max_steps)
    val_problem = validation_problem if validation_problem is not None else problems[0]
    ckpt_dir = None
    if out_dir is not None:
        ckpt_dir = Path(out_dir) / "checkpoints"
        ckpt_dir.mkdir(parents=True, exist_ok=True)
    log = log if log is not None else TrainingLog()
    reference_book: dict[str, float] = {}
    stop = False

    def checkpoint(a: Agent):
        nonlocal stop
        ret = validation_return(a, val_problem, seed, max_fes, reference_book, clock)
        a.history.append((a.learning_step, ret))
        path = ""
        if ckpt_dir is not None:
            path = str(ckpt_dir / checkpoint_name(a.learning_step))
            save_checkpoint(a, path)
        log.checkpoints.append((a.learning_step, ret, path))
        if stop_when is not None and stop_when(ret):
            stop = True

    def on_step(a: Agent):
        if a.learning_step % interval == 0:
            checkpoint(a)

    if validate_at_start:
        checkpoint(agent)
    episode = len(log.episodes)
    while agent.learning_step < max_steps and not stop:
        problem = problems[episode % len(problems)]
        env = MetaEnv(agent.make_backbone(), problem, max_fes, reference_book, clock=clock)
        env.reset(derive_seed(seed, TRAIN_STREAM, episode))
        try:
            ret = agent.train_episode(env, on_step=on_step)
        except Exception as exc:
            raise RuntimeError(f"training failed on {problem.key} (episode {episode}): {exc}") from exc
        log.episodes.append((episode, problem.key, ret, agent.learning_step))
        episode += 1
    if not log.checkpoints or log.checkpoints[-1][0] != agent.learning_step:
        checkpoint(agent)
    if out_dir is not None:
        write_returns(Path(out_dir) / "returns.csv", log)
        write_validation(Path(out_dir) / "validation.csv", log)
    return log


def write_returns(path: Path, log: TrainingLog) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("episode", "instance", "return", "learning_step"))
        for ep, key, ret, step in log.episodes:
            w.writerow((ep, key, repr(float(ret)), step))


def write_validation(path: Path, log: TrainingLog) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("learning_step", "validation_return", "checkpoint"))
        for step, ret, ckpt in log.checkpoints:
            w.writerow((step, repr(float(ret)), Path(ckpt).name if ckpt else ""))


def read_validation(path: str | Path) -> list[tuple[int, float, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [(int(r["learning_step"]), float(r["validation_return"]), r["checkpoint"]) for r in csv.DictReader(fh)]
