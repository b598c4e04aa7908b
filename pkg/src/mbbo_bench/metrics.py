"""Benchmark metrics: aggregated evaluation indicator (AEI), generalization
decay (MGD), transfer efficiency (MTE) and the runtime-complexity timings.

AEI pipeline for one algorithm over K problems x N runs:

1. pre-process each run: ``obj = 1 / v_obj_raw``, ``fes = maxFEs / v_fes_raw``,
   ``com = T0 / (T2 - T1)`` so that larger is better for all three;
2. take logarithms;
3. z-score every log value against the Random Search runs of the same problem
   (population mean and standard deviation) and average over runs;
4. ``AEI = mean_k exp(Z_obj + Z_com + Z_fes)``.
"""
from __future__ import annotations

import csv
import math
import statistics
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

EPS = 1e-12
SIGMA_FLOOR = 1e-12
METRIC_KINDS = ("obj", "fes", "com")
RECORD_FIELDS = ("algorithm", "problem", "run", "v_obj_raw", "v_fes_raw", "t1_s", "t2_s")


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class RunRecord:
    """Raw outcome of one test run.

    ``v_obj_raw`` is the final distance to the reference cost plus ``EPS``;
    ``trace`` holds ``(fes, best_cost)`` pairs of the noiseless best cost.
    """

    algorithm: str
    problem: str
    run: int
    v_obj_raw: float
    v_fes_raw: float
    t1_s: float
    t2_s: float
    trace: tuple[tuple[int, float], ...] = field(default=(), compare=False, repr=False)


def preprocess(record: RunRecord, max_fes: int, t0: float) -> tuple[float, float, float]:
    if not record.v_obj_raw > 0:
        raise DataError(f"record {record.algorithm}/{record.problem}/{record.run}: v_obj_raw must be > 0")
    if not record.v_fes_raw > 0:
        raise DataError(f"record {record.algorithm}/{record.problem}/{record.run}: v_fes_raw must be > 0")
    if not t0 > 0:
        raise DataError("T0 must be positive")
    v_com_raw = max((record.t2_s - record.t1_s) / t0, EPS)
    return 1.0 / record.v_obj_raw, max_fes / record.v_fes_raw, 1.0 / v_com_raw


def log_values(records: Iterable[RunRecord], max_fes: int, t0: float) -> dict[str, dict[int, tuple[float, float, float]]]:
    """``{problem: {run: (log obj, log fes, log com)}}``."""
    out: dict[str, dict[int, tuple[float, float, float]]] = {}
    for r in records:
        vals = preprocess(r, max_fes, t0)
        out.setdefault(r.problem, {})[r.run] = tuple(math.log(v) for v in vals)
    return out


def _mean(values: Sequence[float]) -> float:
    if all(v == values[0] for v in values):
        return values[0]
    return math.fsum(values) / len(values)


def _pstd(values: Sequence[float], mu: float) -> float:
    return math.sqrt(math.fsum((v - mu) ** 2 for v in values) / len(values))


@dataclass(frozen=True)
class BaselineStats:
    mu: dict[str, tuple[float, float, float]]
    sigma: dict[str, tuple[float, float, float]]

    @classmethod
    def from_logs(cls, logs: dict[str, dict[int, tuple[float, float, float]]]) -> "BaselineStats":
        mu, sigma = {}, {}
        for k, runs in logs.items():
            cols = list(zip(*[runs[n] for n in sorted(runs)]))
            m = tuple(_mean(c) for c in cols)
            mu[k] = m
            sigma[k] = tuple(max(_pstd(c, mk), SIGMA_FLOOR) for c, mk in zip(cols, m))
        return cls(mu, sigma)


@dataclass(frozen=True)
class AEIResult:
    algorithm: str
    score: float
    z: dict[str, tuple[float, float, float]]  # per problem: (Z_obj, Z_fes, Z_com)
    per_problem: dict[str, float]

    @property
    def dispersion(self) -> float:
        """Population standard deviation of the per-problem scores."""
        vals = [self.per_problem[k] for k in sorted(self.per_problem)]
        if not vals:
            return 0.0
        if not all(math.isfinite(v) for v in vals):
            return math.inf
        mu = _mean(vals)
        try:
            return _pstd(vals, mu)
        except OverflowError:
            return math.inf


def _coverage(records: Iterable[RunRecord]) -> set[tuple[str, int]]:
    return {(r.problem, r.run) for r in records}


def aei(records: Sequence[RunRecord], rs_records: Sequence[RunRecord], max_fes: int, t0: float) -> AEIResult:
    """Aggregated evaluation indicator of ``records`` normalized by ``rs_records``."""
    have, want = _coverage(records), _coverage(rs_records)
    if have != want:
        missing = sorted(want - have)
        extra = sorted(have - want)
        raise ValueError(f"record coverage mismatch; missing (problem, run): {missing}; unmatched: {extra}")
    if not records:
        raise ValueError("no records to score")
    names = {r.algorithm for r in records}
    base = BaselineStats.from_logs(log_values(rs_records, max_fes, t0))
    logs = log_values(records, max_fes, t0)
    z, per_problem = {}, {}
    for k in sorted(logs):
        runs = logs[k]
        cols = list(zip(*[runs[n] for n in sorted(runs)]))
        zk = tuple((_mean(c) - base.mu[k][j]) / base.sigma[k][j] for j, c in enumerate(cols))
        z[k] = zk
        try:
            per_problem[k] = math.exp(sum(zk))
        except OverflowError:
            per_problem[k] = math.inf
    score = math.fsum(per_problem.values()) / len(per_problem)
    return AEIResult(",".join(sorted(names)), score, z, per_problem)


def mgd(aei_a: float, aei_b: float) -> float:
    """Percentage AEI lost when a model trained elsewhere is scored on B's test set."""
    if not aei_b > 0:
        raise ValueError(f"AEI_B must be positive, got {aei_b}")
    return 100.0 * (aei_b - aei_a) / aei_b


@dataclass(frozen=True)
class MTEResult:
    value: float
    t_scratch: int
    t_finetune: int | None
    transfer_failure: bool


def best_checkpoint_step(history: Sequence[tuple[int, float]]) -> int:
    """Learning step of the highest return; the earliest one on ties."""
    if not history:
        raise ValueError("return history is empty")
    best = max(ret for _, ret in history)
    return next(step for step, ret in history if ret == best)


def mte(scratch: Sequence[tuple[int, float]], finetune: Sequence[tuple[int, float]]) -> MTEResult:
    """Percentage of learning steps saved by fine-tuning instead of training from scratch."""
    if not scratch or not finetune:
        raise ValueError("both return histories must be non-empty")
    t_scratch = best_checkpoint_step(scratch)
    if t_scratch <= 0:
        raise ValueError("the scratch peak must lie at a positive learning step")
    peak = max(ret for _, ret in scratch)
    t_ft = next((step for step, ret in sorted(finetune) if ret >= peak), None)
    if t_ft is None:
        return MTEResult(0.0, t_scratch, None, True)
    return MTEResult(100.0 * (t_scratch - t_ft) / t_scratch, t_scratch, t_ft, False)


def measure_t0(iterations: int = 10**6, trials: int = 5, clock: Callable[[], float] = time.perf_counter) -> float:
    """Median time of a fixed scalar add/divide/log/exp workload."""
    times = []
    for _ in range(trials):
        acc = 0.55
        start = clock()
        for i in range(iterations):
            acc = acc + 1.0
            acc = acc / 2.0
            acc = math.log(acc + 1.0)
            acc = math.exp(acc) - 0.5
        times.append(clock() - start)
    t0 = statistics.median(times)
    mean = statistics.fmean(times)
    if len(times) > 1 and mean > 0 and statistics.pstdev(times) / mean >= 0.5:
        warnings.warn("reference timing is unstable (coefficient of variation >= 0.5)", RuntimeWarning)
    return t0


# ---------------------------------------------------------------------------
# record files


def write_records(path: str | Path, records: Iterable[RunRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([r.algorithm, r.problem, r.run, repr(r.v_obj_raw), repr(float(r.v_fes_raw)),
                        repr(r.t1_s), repr(r.t2_s)])


def read_records(path: str | Path) -> list[RunRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RECORD_FIELDS:
            raise DataError(f"{path}: expected header {','.join(RECORD_FIELDS)}")
        for row in reader:
            out.append(RunRecord(row["algorithm"], row["problem"], int(row["run"]), float(row["v_obj_raw"]),
                                 float(row["v_fes_raw"]), float(row["t1_s"]), float(row["t2_s"])))
    return out


def write_traces(path: str | Path, records: Iterable[RunRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("algorithm", "problem", "run", "fes", "best_cost"))
        for r in records:
            for fes, cost in r.trace:
                w.writerow([r.algorithm, r.problem, r.run, fes, repr(cost)])


def read_traces(path: str | Path) -> dict[tuple[str, str, int], tuple[tuple[int, float], ...]]:
    out: dict[tuple[str, str, int], list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.setdefault((row["algorithm"], row["problem"], int(row["run"])), []).append(
                (int(row["fes"]), float(row["best_cost"])))
    return {k: tuple(v) for k, v in out.items()}
