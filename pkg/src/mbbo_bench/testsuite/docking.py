"""Protein-docking style objective over synthetic atom sets.

The energy between a ligand pose and a fixed receptor is the sum of pairwise
Coulomb + Lennard-Jones terms, tapered to zero between ``R_ON`` and ``R_OFF``
by a cubic switching function.

A 12-dimensional decision vector encodes the pose:

* ``x[0:3]``  Euler angles (z-y-x, radians) of a rigid rotation about the
  ligand centroid,
* ``x[3:6]``  translation in Angstrom, relative to the start pose,
* ``x[6:12]`` amplitudes of six fixed random displacement modes; each mode
  moves every ligand atom by ``MODE_SCALE`` Angstrom per unit amplitude.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

R_ON = 7.0
R_OFF = 9.0
MIN_DISTANCE = 1e-3
MODE_SCALE = 0.1
N_RECEPTOR = 50
N_LIGAND = 20
N_COMPLEXES = 28
STARTS_PER_COMPLEX = 10
DOCKING_DIM = 12


@dataclass(frozen=True, eq=False)
class AtomSet:
    positions: np.ndarray  # (n, 3), Angstrom
    charges: np.ndarray
    epsilon: np.ndarray
    radius: np.ndarray
    dielectric: float = 1.0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        n = pos.shape[0]
        arrays = {}
        for name in ("charges", "epsilon", "radius"):
            a = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if a.shape[0] != n:
                raise ValueError(f"{name} has {a.shape[0]} entries, expected {n}")
            arrays[name] = a
        if not np.all(np.isfinite(pos)):
            raise ValueError("atom positions must be finite")
        if np.any(arrays["epsilon"] < 0):
            raise ValueError("lj epsilon must be non-negative")
        if np.any(arrays["radius"] <= 0):
            raise ValueError("lj radius must be positive")
        object.__setattr__(self, "positions", pos)
        for name, a in arrays.items():
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        pos.setflags(write=False)

    def __len__(self):
        return self.positions.shape[0]

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# dielectric {self.dielectric!r}\n")
        for p, q, e, r in zip(self.positions, self.charges, self.epsilon, self.radius):
            buf.write(" ".join(repr(float(v)) for v in (*p, q, e, r)) + "\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "AtomSet":
        dielectric = 1.0
        rows = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "dielectric":
                    dielectric = float(parts[1])
                continue
            fields = line.split()
            if len(fields) != 6:
                raise ValueError(f"line {lineno}: expected 6 fields (x y z q epsilon radius), got {len(fields)}")
            rows.append([float(v) for v in fields])
        data = np.array(rows, dtype=float).reshape(-1, 6)
        return cls(data[:, :3], data[:, 3], data[:, 4], data[:, 5], dielectric)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "AtomSet":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def switching_factor(r):
    """Cubic taper, 1 at ``R_ON`` and 0 at ``R_OFF``."""
    r = np.asarray(r, dtype=float)
    out = (R_OFF - r) ** 2 * (R_OFF + 2.0 * r - 3.0 * R_ON) / (R_OFF - R_ON) ** 3
    return float(out) if out.ndim == 0 else out


def pair_energy(r, qi, qj, eps_i, eps_j, rad_i, rad_j, dielectric: float = 1.0):
    """Piecewise pair energy with the switching region, broadcasting over inputs."""
    r = np.maximum(np.asarray(r, dtype=float), MIN_DISTANCE)
    rij = 0.5 * (np.asarray(rad_i) + np.asarray(rad_j))
    ratio6 = (rij / r) ** 6
    raw = qi * qj / (dielectric * r) + np.sqrt(eps_i * eps_j) * (ratio6 * ratio6 - ratio6)
    sw = np.where(r < R_ON, 1.0, np.where(r > R_OFF, 0.0, switching_factor(np.clip(r, R_ON, R_OFF))))
    out = np.where(r > R_OFF, 0.0, sw * raw)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class DockingComplex:
    """Receptor, ligand (centred at its centroid), start pose and displacement modes."""

    receptor: AtomSet
    ligand: AtomSet
    start: np.ndarray  # ligand centroid position at x = 0
    modes: np.ndarray = field(repr=False)  # (6, n_ligand, 3)


def _blob(rng, n, radius):
    pts = rng.standard_normal((n, 3))
    pts *= radius * rng.random((n, 1)) ** (1 / 3) / np.linalg.norm(pts, axis=1, keepdims=True)
    return pts


def _atoms(rng, positions, dielectric):
    n = positions.shape[0]
    return AtomSet(
        positions,
        rng.uniform(-1.0, 1.0, n),
        rng.uniform(0.05, 0.2, n),
        rng.uniform(1.5, 2.5, n),
        dielectric,
    )


def make_complex(complex_id: int, start_id: int, seed: int) -> DockingComplex:
    """Deterministic synthetic complex; starts of one complex share receptor and ligand."""
    if not 0 <= complex_id < N_COMPLEXES or not 0 <= start_id < STARTS_PER_COMPLEX:
        raise ValueError(f"unknown function: docking complex {complex_id} start {start_id}")
    base_rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, 7919, complex_id])
    dielectric = 4.0
    receptor = _atoms(base_rng, _blob(base_rng, N_RECEPTOR, 9.0), dielectric)
    ligand = _atoms(base_rng, _blob(base_rng, N_LIGAND, 5.0), dielectric)
    centered = ligand.positions - ligand.positions.mean(axis=0)
    ligand = AtomSet(centered, ligand.charges, ligand.epsilon, ligand.radius, dielectric)
    modes = base_rng.standard_normal((6, N_LIGAND, 3))
    start_rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, 7919, complex_id, start_id])
    direction = start_rng.standard_normal(3)
    direction /= np.linalg.norm(direction)
    start = direction * start_rng.uniform(8.0, 11.0)
    return DockingComplex(receptor, ligand, start, modes)


def euler_matrix(angles: np.ndarray) -> np.ndarray:
    """Rotation matrices for a batch of z-y-x Euler angles, shape (n, 3, 3)."""
    a = np.atleast_2d(angles)
    cz, sz = np.cos(a[:, 0]), np.sin(a[:, 0])
    cy, sy = np.cos(a[:, 1]), np.sin(a[:, 1])
    cx, sx = np.cos(a[:, 2]), np.sin(a[:, 2])
    m = np.empty((a.shape[0], 3, 3))
    m[:, 0, 0] = cz * cy
    m[:, 0, 1] = cz * sy * sx - sz * cx
    m[:, 0, 2] = cz * sy * cx + sz * sx
    m[:, 1, 0] = sz * cy
    m[:, 1, 1] = sz * sy * sx + cz * cx
    m[:, 1, 2] = sz * sy * cx - cz * sx
    m[:, 2, 0] = -sy
    m[:, 2, 1] = cy * sx
    m[:, 2, 2] = cy * cx
    return m


def ligand_pose(x: np.ndarray, cplx: DockingComplex) -> np.ndarray:
    """Ligand atom positions for a batch of decision vectors, shape (n, n_ligand, 3)."""
    x = np.atleast_2d(x)
    local = cplx.ligand.positions[None] + MODE_SCALE * np.einsum("nk,kaj->naj", x[:, 6:12], cplx.modes)
    rot = euler_matrix(x[:, :3])
    return np.einsum("nij,naj->nai", rot, local) + (cplx.start + x[:, 3:6])[:, None, :]


def interaction_energy(ligand_positions: np.ndarray, ligand: AtomSet, receptor: AtomSet) -> np.ndarray:
    """Sum of pair energies for ligand poses of shape (n, n_ligand, 3)."""
    diff = ligand_positions[:, :, None, :] - receptor.positions[None, None, :, :]
    r = np.sqrt(np.sum(diff * diff, axis=-1))
    e = pair_energy(
        r,
        ligand.charges[:, None],
        receptor.charges[None, :],
        ligand.epsilon[:, None],
        receptor.epsilon[None, :],
        ligand.radius[:, None],
        receptor.radius[None, :],
        receptor.dielectric,
    )
    return np.sum(e, axis=(-1, -2))


def docking_energy(x, cplx: DockingComplex):
    """Interaction energy of the decoded pose(s); scalar in, scalar out."""
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != DOCKING_DIM:
        raise ValueError(f"docking decision vectors have length {DOCKING_DIM}, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("docking decision vector must be finite")
    e = interaction_energy(ligand_pose(arr, cplx), cplx.ligand, cplx.receptor)
    return float(e[0]) if arr.ndim == 1 else e
