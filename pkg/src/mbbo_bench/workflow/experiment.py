"""``run_experiment``: train, test and log in one resumable call.

Layout under ``config.out``::

    config.snapshot
    train/returns.csv  train/validation.csv  train/checkpoints/step-<k>.ckpt
    test/records.csv   test/traces.csv       test/t0.txt
    reports/{aei.csv, perf_table.md, walltime.csv, cost_curves.csv}
    phases/<phase>.done   ERROR (only after a failure)
"""
from __future__ import annotations

import dataclasses
import logging
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

from ..agents import make_agent
from ..metrics import RunRecord, measure_t0, read_records, read_traces, write_records, write_traces
from ..testsuite import LogicalClock, split_dataset
from .config import AGENT_STREAM, ConfigError, ExperimentConfig, derive_seed
from .logger import logger_log
from .tester import tester_test
from .trainer import TrainingLog, read_validation, trainer_train

log = logging.getLogger(__name__)
PHASES = ("train", "test", "log")


@dataclass
class ExperimentLedger:
    config: ExperimentConfig
    out: Path
    training: TrainingLog = field(default_factory=TrainingLog)
    best_checkpoint: str | None = None
    records: list[RunRecord] = field(default_factory=list)
    reports: dict[str, Path] = field(default_factory=dict)
    t0: float | None = None


def make_clock(kind: str):
    """Wall clock, or a frozen logical clock that zeroes every timing.

    With zero timings every run gets the same complexity value, so the
    complexity term of AEI is neutral and reports become reproducible.
    """
    return LogicalClock(tick=0.0) if kind == "logical" else time.perf_counter


def reference_t0(kind: str) -> float:
    if kind == "logical":
        return measure_t0(iterations=1000, trials=5, clock=LogicalClock())
    return measure_t0()


def _done(out: Path, phase: str) -> bool:
    return (out / "phases" / f"{phase}.done").is_file()


def _mark(out: Path, phase: str) -> None:
    (out / "phases").mkdir(parents=True, exist_ok=True)
    (out / "phases" / f"{phase}.done").write_text("ok\n", encoding="utf-8")


def _check_snapshot(cfg: ExperimentConfig, out: Path) -> None:
    snap = out / "config.snapshot"
    text = cfg.to_text()
    if snap.is_file():
        if snap.read_text(encoding="utf-8") != text:
            raise ConfigError(f"{out} holds an experiment with a different configuration; use a fresh output directory")
    else:
        snap.write_text(text, encoding="utf-8")


def _load_records(out: Path) -> list[RunRecord]:
    records = read_records(out / "test" / "records.csv")
    traces = read_traces(out / "test" / "traces.csv")
    return [dataclasses.replace(r, trace=traces.get((r.algorithm, r.problem, r.run), ())) for r in records]


def run_experiment(config: ExperimentConfig, until: str = "log") -> ExperimentLedger:
    """Run the phases up to and including ``until``; completed phases are skipped."""
    if until not in PHASES:
        raise ValueError(f"until must be one of {PHASES}")
    cfg = config.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _check_snapshot(cfg, out)
    (out / "ERROR").unlink(missing_ok=True)
    ledger = ExperimentLedger(cfg, out)
    split = split_dataset(cfg.problem_type, cfg.dim, cfg.difficulty, cfg.instance_seed, cfg.max_fes)
    clock = make_clock(cfg.clock)
    phase = "setup"
    try:
        phase = "train"
        if cfg.agent is not None:
            if not _done(out, "train"):
                log.info("training %s for %d steps", cfg.agent_name, cfg.max_learning_steps)
                agent = make_agent(cfg.agent, seed=derive_seed(cfg.seed, AGENT_STREAM), pop_size=cfg.pop_size)
                ledger.training = trainer_train(agent, split.train, cfg.max_learning_steps, cfg.seed, cfg.max_fes,
                                                out / "train", clock)
                _mark(out, "train")
            else:
                ledger.training.checkpoints = [
                    (s, r, str(out / "train" / "checkpoints" / c)) for s, r, c in
                    read_validation(out / "train" / "validation.csv")]
            ledger.best_checkpoint = ledger.training.best_checkpoint[2]
        if until == "train":
            return ledger

        phase = "test"
        if not _done(out, "test"):
            log.info("testing %s on %d problems x %d runs", ",".join(cfg.roster), len(split.test), cfg.test_runs)
            agents = {cfg.agent_name: ledger.best_checkpoint} if cfg.agent is not None else {}
            records = tester_test(cfg.roster, split.test, cfg.test_runs, cfg.seed, cfg.max_fes, agents, clock,
                                  cfg.pop_size)
            (out / "test").mkdir(parents=True, exist_ok=True)
            write_records(out / "test" / "records.csv", records)
            write_traces(out / "test" / "traces.csv", records)
            (out / "test" / "t0.txt").write_text(repr(reference_t0(cfg.clock)) + "\n", encoding="utf-8")
            _mark(out, "test")
        ledger.records = _load_records(out)
        ledger.t0 = float((out / "test" / "t0.txt").read_text(encoding="utf-8"))
        if until == "test":
            return ledger

        phase = "log"
        ledger.reports = logger_log(ledger.records, cfg.roster, out / "reports", cfg.max_fes, ledger.t0,
                                    cfg.gap_reference, cfg.compute_aei)
        _mark(out, "log")
    except Exception as exc:
        (out / "ERROR").write_text(f"phase: {phase}\n{type(exc).__name__}: {exc}\n\n{traceback.format_exc()}",
                                   encoding="utf-8")
        raise
    return ledger
