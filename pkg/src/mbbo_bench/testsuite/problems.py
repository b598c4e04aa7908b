"""Problem instances, evaluation and train/test splits."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import docking
from .functions import NOISY, SCHWEFEL_OPT, LUNACEK_MU0, SYNTHETIC, FunctionSpec, boundary_penalty, conditioning
from .noise import NOISELESS, NoiseModel, apply_noise

SUITES = ("synthetic", "noisy-synthetic", "protein-docking")
DIFFICULTIES = ("easy", "difficult")
DEFAULT_MAX_FES = {"synthetic": 20_000, "noisy-synthetic": 20_000, "protein-docking": 1_000}

# the 25% portion of each suite
SMALL_PORTION = {
    "synthetic": frozenset({1, 5, 6, 10, 15, 20}),
    "noisy-synthetic": frozenset({1, 5, 15, 16, 17, 19, 20, 25}),
    "protein-docking": frozenset(range(211, 281)),
}
SUITE_SIZE = {"synthetic": 24, "noisy-synthetic": 30, "protein-docking": 280}


class UnknownFunctionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Problem:
    suite: str
    function_no: int
    dim: int
    seed: int
    name: str
    shift: np.ndarray
    rotation: np.ndarray
    f_star: float | None
    lower: np.ndarray
    upper: np.ndarray
    max_fes: int
    noise: NoiseModel = NOISELESS
    aux: Mapping[str, Any] = field(default_factory=dict, repr=False)

    @property
    def key(self) -> str:
        return f"{self.suite}/{self.function_no}/{self.dim}/{self.seed}"

    @property
    def spec(self) -> FunctionSpec | None:
        if self.suite == "synthetic":
            return SYNTHETIC[self.function_no]
        if self.suite == "noisy-synthetic":
            return SYNTHETIC[NOISY[self.function_no].base_no]
        return None

    def fingerprint(self) -> str:
        """Digest of every numeric field; equal digests mean bitwise-identical instances."""
        h = hashlib.sha256(self.key.encode())
        h.update(repr((self.f_star, self.max_fes, self.noise)).encode())
        for a in (self.shift, self.rotation, self.lower, self.upper):
            h.update(np.ascontiguousarray(a).tobytes())
        for k in sorted(self.aux):
            v = self.aux[k]
            if isinstance(v, np.ndarray):
                h.update(v.tobytes())
            elif isinstance(v, docking.DockingComplex):
                h.update(v.receptor.to_text().encode() + v.ligand.to_text().encode())
                h.update(v.start.tobytes() + v.modes.tobytes())
        return h.hexdigest()


def haar_rotation(rng: np.random.Generator, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def _frozen(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _gallagher_aux(rng, spec_aux, dim, shift, rotation):
    if spec_aux == "gallagher101":
        peaks, alpha1, span = 101, 1000.0, 5.0
        alphas = 1000.0 ** (2.0 * np.arange(100) / 99.0)
    else:
        peaks, alpha1, span = 21, 1000.0**2, 4.9
        alphas = 1000.0 ** (2.0 * np.arange(20) / 19.0)
    alphas = np.concatenate([[alpha1], rng.permutation(alphas)])
    cond = np.empty((peaks, dim))
    for i, a in enumerate(alphas):
        cond[i] = rng.permutation(conditioning(dim, a)) / a**0.25
    ys = rng.uniform(-span, span, (peaks - 1, dim))
    offsets = np.vstack([np.zeros(dim), (ys - shift) @ rotation.T])
    weights = np.concatenate([[10.0], 1.1 + 8.0 * np.arange(peaks - 1) / (peaks - 2)])
    return {"offsets": _frozen(offsets), "cond": _frozen(cond), "weights": _frozen(weights)}


def _synthetic_layout(spec: FunctionSpec, rng: np.random.Generator, dim: int):
    signs = np.where(rng.random(dim) < 0.5, -1.0, 1.0)
    if spec.shift == "slope":
        shift = 5.0 * signs
    elif spec.shift == "schwefel":
        shift = 0.5 * SCHWEFEL_OPT * signs
    elif spec.shift == "lunacek":
        shift = 0.5 * LUNACEK_MU0 * signs
    elif spec.shift == "gallagher21":
        shift = rng.uniform(-3.92, 3.92, dim)
    else:
        shift = rng.uniform(-4.0, 4.0, dim)
    if spec.rotation == "identity":
        rotation = np.eye(dim)
    elif spec.rotation == "sign":
        rotation = np.diag(signs)
    else:
        rotation = haar_rotation(rng, dim)
    aux = {}
    if spec.aux is not None:
        aux = _gallagher_aux(rng, spec.aux, dim, shift, rotation)
    return shift, rotation, aux


_SUITE_CODE = {"synthetic": 1, "noisy-synthetic": 2, "protein-docking": 3}


def make_instance(suite: str, function_no: int, dim: int, seed: int = 0, max_fes: int | None = None) -> Problem:
    """Build one problem instance; a pure function of its arguments."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    if int(dim) < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    dim = int(dim)
    max_fes = DEFAULT_MAX_FES[suite] if max_fes is None else int(max_fes)
    if max_fes < 1:
        raise ValueError("max_fes must be positive")
    seed64 = int(seed) & 0xFFFFFFFFFFFFFFFF

    if suite == "protein-docking":
        if not 1 <= function_no <= SUITE_SIZE[suite]:
            raise UnknownFunctionError(f"unknown function: protein-docking instance {function_no}")
        if dim != docking.DOCKING_DIM:
            raise ValueError(f"protein-docking problems have dim {docking.DOCKING_DIM}, got {dim}")
        cplx = docking.make_complex((function_no - 1) // 10, (function_no - 1) % 10, seed64)
        lower = np.array([-np.pi] * 3 + [-10.0] * 9)
        return Problem(
            suite, function_no, dim, seed, f"docking-{(function_no - 1) // 10}-{(function_no - 1) % 10}",
            _frozen(np.zeros(dim)), _frozen(np.eye(dim)), None, _frozen(lower), _frozen(-lower),
            max_fes, NOISELESS, {"complex": cplx},
        )

    catalogue = SYNTHETIC if suite == "synthetic" else NOISY
    if function_no not in catalogue:
        raise UnknownFunctionError(f"unknown function {function_no} for suite {suite!r}")
    entry = catalogue[function_no]
    spec = SYNTHETIC[entry.base_no] if suite == "noisy-synthetic" else entry
    if dim < spec.min_dim:
        raise ValueError(f"{spec.name} needs dim >= {spec.min_dim}, got {dim}")
    # the noisy suite shares the noiseless layout of its base function
    rng = np.random.default_rng([seed64, _SUITE_CODE["synthetic"], spec.no, dim])
    shift, rotation, aux = _synthetic_layout(spec, rng, dim)
    noise = NOISELESS
    if suite == "noisy-synthetic":
        noise = NoiseModel(entry.noise, entry.severity, dim)
    return Problem(
        suite, function_no, dim, seed, entry.name, _frozen(shift), _frozen(rotation), float(entry.f_star),
        _frozen(np.full(dim, -5.0)), _frozen(np.full(dim, 5.0)), max_fes, noise, aux,
    )


def problem_from_key(key: str, max_fes: int | None = None) -> Problem:
    """Resolve a ``suite/function-no/dim/seed`` registry key."""
    parts = key.split("/")
    if len(parts) != 4:
        raise ValueError(f"problem key must look like 'suite/function-no/dim/seed', got {key!r}")
    suite, no, dim, seed = parts
    return make_instance(suite, int(no), int(dim), int(seed), max_fes)


def _check_points(problem: Problem, x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim not in (1, 2) or arr.shape[-1] != problem.dim:
        raise ValueError(f"expected points of length {problem.dim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("objective inputs must be finite")
    return arr


def evaluate_noiseless(problem: Problem, x) -> np.ndarray | float:
    """Noiseless objective of one point (scalar) or a batch of points (array)."""
    arr = _check_points(problem, x)
    pts = np.atleast_2d(arr)
    if problem.suite == "protein-docking":
        vals = docking.docking_energy(pts, problem.aux["complex"])
    else:
        spec = problem.spec
        z = (pts - problem.shift) @ problem.rotation.T
        vals = spec.base(z, problem.aux) + problem.f_star
        coef = spec.penalty_coef(problem.dim)
        if coef:
            vals = vals + coef * boundary_penalty(pts)
    return float(vals[0]) if arr.ndim == 1 else vals


def evaluate(problem: Problem, x, rng: np.random.Generator | None = None):
    """Objective value(s) as seen by an optimizer, noise included."""
    raw = evaluate_noiseless(problem, x)
    if problem.noise.kind == "none":
        return raw
    if rng is None:
        raise ValueError("a random generator is required for noisy problems")
    return apply_noise(problem.noise, raw, problem.f_star, rng)


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[Problem, ...]
    test: tuple[Problem, ...]
    difficulty: str


def split_indices(suite: str, difficulty: str) -> tuple[list[int], list[int]]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    if difficulty not in DIFFICULTIES:
        raise ValueError(f"unknown difficulty {difficulty!r}; expected one of {DIFFICULTIES}")
    small = sorted(SMALL_PORTION[suite])
    large = [i for i in range(1, SUITE_SIZE[suite] + 1) if i not in SMALL_PORTION[suite]]
    return (large, small) if difficulty == "easy" else (small, large)


def split_dataset(suite: str, dim: int, difficulty: str, seed: int = 0, max_fes: int | None = None) -> DatasetSplit:
    """Easy mode trains on the 75% portion, difficult mode on the 25% portion."""
    train_ids, test_ids = split_indices(suite, difficulty)
    build = lambda ids: tuple(make_instance(suite, i, dim, seed, max_fes) for i in ids)  # noqa: E731
    return DatasetSplit(build(train_ids), build(test_ids), difficulty)
