"""Experiment configuration, its text snapshot, and derived seeds."""
from __future__ import annotations

import dataclasses
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..agents import AGENT_KINDS
from ..optimizers import CLASSIC
from ..testsuite.docking import DOCKING_DIM
from ..testsuite.problems import DEFAULT_MAX_FES, DIFFICULTIES, SUITES

DEFAULT_ROSTER = ("random-search", "de", "pso", "cma-es")
CLOCKS = ("wall", "logical")
AGENT_BACKBONE = {kind: cls.backbone_name for kind, cls in AGENT_KINDS.items()}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem_type: str = "synthetic"
    dim: int = 10
    difficulty: str = "easy"
    max_learning_steps: int = 1_500_000
    test_runs: int = 51
    max_fes: int | None = None
    seed: int = 0
    instance_seed: int = 0
    agent: str | None = "qlearning"
    backbone: str | None = None
    baselines: tuple[str, ...] = DEFAULT_ROSTER
    out: str = "runs/experiment"
    clock: str = "wall"
    gap_reference: str | None = None
    compute_aei: bool = True
    pop_size: int = 50

    def __post_init__(self):
        if self.max_fes is None:
            self.max_fes = DEFAULT_MAX_FES.get(self.problem_type, 20_000)
        if self.agent is not None and self.backbone is None:
            self.backbone = AGENT_BACKBONE.get(self.agent)
        if self.problem_type == "protein-docking":
            self.dim = DOCKING_DIM
        self.baselines = tuple(self.baselines)

    @property
    def agent_name(self) -> str | None:
        return None if self.agent is None else f"{self.agent}-{self.backbone}"

    @property
    def roster(self) -> tuple[str, ...]:
        names = tuple(self.baselines)
        return names + ((self.agent_name,) if self.agent is not None else ())

    def validate(self) -> "ExperimentConfig":
        if self.problem_type not in SUITES:
            raise ConfigError(f"problem-type must be one of {{{', '.join(SUITES)}}}, got {self.problem_type!r}")
        if self.difficulty not in DIFFICULTIES:
            raise ConfigError(f"difficulty must be one of {{{', '.join(DIFFICULTIES)}}}, got {self.difficulty!r}")
        if self.clock not in CLOCKS:
            raise ConfigError(f"clock must be one of {{{', '.join(CLOCKS)}}}, got {self.clock!r}")
        for name in ("max_learning_steps", "test_runs", "max_fes", "pop_size"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name.replace('_', '-')} must be >= 1")
        if self.dim < 2:
            raise ConfigError("dim must be >= 2")
        if self.max_fes < self.pop_size:
            raise ConfigError(f"max-fes={self.max_fes} is smaller than the population size {self.pop_size}")
        for b in self.baselines:
            if b not in CLASSIC:
                raise ConfigError(f"unknown baseline {b!r}; expected one of {sorted(CLASSIC)}")
        if len(set(self.baselines)) != len(self.baselines):
            raise ConfigError("baselines contain duplicates")
        if self.agent is not None:
            if self.agent not in AGENT_KINDS:
                raise ConfigError(f"agent must be one of {{{', '.join(sorted(AGENT_KINDS))}}} or none, got {self.agent!r}")
            if self.backbone != AGENT_BACKBONE[self.agent]:
                raise ConfigError(
                    f"agent {self.agent!r} drives the {AGENT_BACKBONE[self.agent]!r} backbone, not {self.backbone!r}")
        if not self.roster:
            raise ConfigError("the roster is empty; give at least one baseline or an agent")
        if self.compute_aei and "random-search" not in self.baselines:
            raise ConfigError("AEI is normalized by random-search; add it to the baselines or disable AEI")
        if self.gap_reference is not None and self.gap_reference not in self.roster:
            raise ConfigError(f"gap reference {self.gap_reference!r} is not in the roster")
        return self

    # -- text snapshot -------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif v is None:
                v = "none"
            lines.append(f"{f.name.replace('_', '-')} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> "ExperimentConfig":
        """Build from string values keyed by flag names (dashes or underscores)."""
        types = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for raw_key, raw in values.items():
            key = raw_key.strip().replace("-", "_")
            if key not in types:
                raise ConfigError(f"unknown config key {raw_key!r}")
            kwargs[key] = _coerce(key, str(raw).strip())
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls.from_mapping(parse_key_values(text))


_INT_KEYS = {"dim", "max_learning_steps", "test_runs", "max_fes", "seed", "instance_seed", "pop_size"}
_OPTIONAL = {"max_fes", "agent", "backbone", "gap_reference"}


def _coerce(key: str, raw: str):
    if key in _OPTIONAL and raw.lower() in ("none", ""):
        return None
    if key in _INT_KEYS:
        try:
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        except ValueError:
            raise ConfigError(f"{key.replace('_', '-')} must be an integer, got {raw!r}") from None
    if key == "baselines":
        return tuple(b.strip() for b in raw.split(",") if b.strip())
    if key == "compute_aei":
        if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"compute-aei must be true or false, got {raw!r}")
        return raw.lower() in ("true", "1", "yes")
    return raw


def parse_key_values(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_text(Path(path).read_text(encoding="utf-8"))


# -- seeds -------------------------------------------------------------------

# stream tags keep the derived seed families disjoint
TRAIN_STREAM, VALIDATION_STREAM, TEST_STREAM, AGENT_STREAM = 2, 3, 4, 5


def derive_seed(master: int, *path: int) -> int:
    """Deterministic 63-bit seed from the master seed and an integer path."""
    ss = np.random.SeedSequence([int(master) & 0xFFFFFFFF, *[int(p) & 0xFFFFFFFF for p in path]])
    return int(ss.generate_state(1, dtype=np.uint64)[0]) >> 1


def run_seed(master: int, problem_key: str, run: int) -> int:
    """Seed of test run ``run`` on ``problem_key``; the same for every algorithm."""
    return derive_seed(master, TEST_STREAM, zlib.crc32(problem_key.encode("utf-8")), run)
