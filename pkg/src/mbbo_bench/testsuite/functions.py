"""Base objective functions of the synthetic suites.

Every base function takes a batch ``z`` of shape ``(n, dim)`` that already has
the instance shift and outer rotation applied, i.e. ``z = R @ (x - shift)``.
The canonical inner transformations (oscillation, asymmetry, conditioning)
are applied here. Inner rotations of the canonical definitions are taken to
be the identity so that one orthogonal matrix per instance carries all of the
non-separability.

Boundary penalties are defined on the untransformed ``x`` and are added by
:func:`mbbo_bench.testsuite.problems.evaluate`, not here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np


# ---------------------------------------------------------------------------
# transformations


def index_ratio(dim: int) -> np.ndarray:
    """``(i - 1) / (dim - 1)`` for ``i = 1..dim``; zeros when ``dim == 1``."""
    if dim == 1:
        return np.zeros(1)
    return np.arange(dim) / (dim - 1)


def t_osz(x: np.ndarray) -> np.ndarray:
    """Oscillation transformation, elementwise."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    nz = x != 0
    xh = np.log(np.abs(x[nz]))
    pos = x[nz] > 0
    c1 = np.where(pos, 10.0, 5.5)
    c2 = np.where(pos, 7.9, 3.1)
    out[nz] = np.sign(x[nz]) * np.exp(xh + 0.049 * (np.sin(c1 * xh) + np.sin(c2 * xh)))
    return out


def t_asy(z: np.ndarray, beta: float) -> np.ndarray:
    """Asymmetry transformation applied along the last axis."""
    ratio = index_ratio(z.shape[-1])
    out = z.copy()
    pos = z > 0
    expo = 1.0 + beta * ratio * np.sqrt(np.where(pos, z, 0.0))
    out[pos] = np.power(z, expo)[pos]
    return out


def conditioning(dim: int, alpha: float) -> np.ndarray:
    """Diagonal of the conditioning matrix ``alpha ** (0.5 * (i-1)/(dim-1))``."""
    return alpha ** (0.5 * index_ratio(dim))


def boundary_penalty(x: np.ndarray, bound: float = 5.0) -> np.ndarray:
    return np.sum(np.maximum(0.0, np.abs(x) - bound) ** 2, axis=-1)


def _rastrigin_core(z: np.ndarray) -> np.ndarray:
    d = z.shape[-1]
    return 10.0 * (d - np.sum(np.cos(2 * np.pi * z), axis=-1)) + np.sum(z * z, axis=-1)


def _rosenbrock_core(z: np.ndarray) -> np.ndarray:
    a, b = z[:, :-1], z[:, 1:]
    return np.sum(100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2, axis=-1)


# ---------------------------------------------------------------------------
# base functions (z -> g(z))


def sphere(z, aux=None):
    return np.sum(z * z, axis=-1)


def ellipsoidal(z, aux=None):
    w = 10.0 ** (6 * index_ratio(z.shape[-1]))
    return np.sum(w * t_osz(z) ** 2, axis=-1)


def rastrigin(z, aux=None):
    d = z.shape[-1]
    zz = conditioning(d, 10.0) * t_asy(t_osz(z), 0.2)
    return _rastrigin_core(zz)


def buche_rastrigin(z, aux=None):
    d = z.shape[-1]
    zo = t_osz(z)
    s = 10.0 ** (0.5 * index_ratio(d))
    odd = (np.arange(d) % 2) == 0  # 1-based odd coordinates
    s = np.where((zo > 0) & odd, 10.0 * s, s)
    return _rastrigin_core(s * zo)


def linear_slope(z, aux=None):
    # z = sign(x_opt) * (x - x_opt); x_opt sits on the boundary corner
    c = 10.0 ** index_ratio(z.shape[-1])
    return np.sum(c * np.maximum(0.0, -z), axis=-1)


def attractive_sector(z, aux=None):
    d = z.shape[-1]
    zz = conditioning(d, 10.0) * z
    s = np.where(zz > 0, 100.0, 1.0)
    return t_osz(np.sum((s * zz) ** 2, axis=-1)) ** 0.9


def step_ellipsoidal(z, aux=None):
    d = z.shape[-1]
    zh = conditioning(d, 10.0) * z
    zt = np.where(np.abs(zh) > 0.5, np.floor(0.5 + zh), np.floor(0.5 + 10.0 * zh) / 10.0)
    w = 10.0 ** (2 * index_ratio(d))
    return 0.1 * np.maximum(np.abs(zh[:, 0]) / 1e4, np.sum(w * zt * zt, axis=-1))


def rosenbrock(z, aux=None):
    d = z.shape[-1]
    return _rosenbrock_core(max(1.0, math.sqrt(d) / 8.0) * z + 1.0)


def ellipsoidal_hc(z, aux=None):
    return ellipsoidal(z)


def discus(z, aux=None):
    zo = t_osz(z)
    return 1e6 * zo[:, 0] ** 2 + np.sum(zo[:, 1:] ** 2, axis=-1)


def bent_cigar(z, aux=None):
    za = t_asy(z, 0.5)
    return za[:, 0] ** 2 + 1e6 * np.sum(za[:, 1:] ** 2, axis=-1)


def sharp_ridge(z, aux=None):
    zz = conditioning(z.shape[-1], 10.0) * z
    return zz[:, 0] ** 2 + 100.0 * np.sqrt(np.sum(zz[:, 1:] ** 2, axis=-1))


def different_powers(z, aux=None):
    expo = 2.0 + 4.0 * index_ratio(z.shape[-1])
    return np.sqrt(np.sum(np.abs(z) ** expo, axis=-1))


_WEIERSTRASS_K = np.arange(12)
_WEIERSTRASS_F0 = float(np.sum(0.5**_WEIERSTRASS_K * np.cos(np.pi * 3.0**_WEIERSTRASS_K)))


def weierstrass(z, aux=None):
    d = z.shape[-1]
    zz = conditioning(d, 0.01) * t_osz(z)
    a = 0.5**_WEIERSTRASS_K
    b = 3.0**_WEIERSTRASS_K
    terms = a * np.cos(2 * np.pi * b * (zz[..., None] + 0.5))
    inner = np.sum(terms, axis=(-1, -2)) / d - _WEIERSTRASS_F0
    return 10.0 * inner**3


def _schaffers(z, alpha):
    d = z.shape[-1]
    zz = conditioning(d, alpha) * t_asy(z, 0.5)
    s = np.sqrt(zz[:, :-1] ** 2 + zz[:, 1:] ** 2)
    terms = np.sqrt(s) + np.sqrt(s) * np.sin(50.0 * s**0.2) ** 2
    return (np.sum(terms, axis=-1) / (d - 1)) ** 2


def schaffers_f7(z, aux=None):
    return _schaffers(z, 10.0)


def schaffers_f7_ill(z, aux=None):
    return _schaffers(z, 1000.0)


def griewank_rosenbrock(z, aux=None):
    d = z.shape[-1]
    zz = max(1.0, math.sqrt(d) / 8.0) * z + 1.0
    a, b = zz[:, :-1], zz[:, 1:]
    s = 100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2
    return 10.0 / (d - 1) * np.sum(s / 4000.0 - np.cos(s), axis=-1) + 10.0


SCHWEFEL_OPT = 4.2096874633
_SCHWEFEL_CONST = 4.189828872724339


def schwefel(z, aux=None):
    # z = sign(x_opt) * (x - x_opt) with |x_opt| = SCHWEFEL_OPT / 2
    d = z.shape[-1]
    v = 2.0 * z
    v[:, 1:] += 0.5 * z[:, :-1]
    zz = 100.0 * (conditioning(d, 10.0) * v + SCHWEFEL_OPT)
    val = -np.sum(zz * np.sin(np.sqrt(np.abs(zz))), axis=-1) / (100.0 * d) + _SCHWEFEL_CONST
    return val + 100.0 * boundary_penalty(zz / 100.0)


def gallagher(z, aux):
    offsets = aux["offsets"]  # (peaks, dim)
    cond = aux["cond"]  # (peaks, dim)
    weights = aux["weights"]  # (peaks,)
    d = z.shape[-1]
    diff = z[:, None, :] - offsets[None, :, :]
    quad = np.sum(cond[None] * diff * diff, axis=-1)
    peak = np.max(weights[None] * np.exp(-quad / (2.0 * d)), axis=-1)
    return t_osz(10.0 - peak) ** 2


def katsuura(z, aux=None):
    d = z.shape[-1]
    zz = conditioning(d, 100.0) * z
    pw = 2.0 ** np.arange(1, 33)
    scaled = zz[..., None] * pw
    inner = np.sum(np.abs(scaled - np.round(scaled)) / pw, axis=-1)
    i = np.arange(1, d + 1)
    prod = np.prod((1.0 + i * inner) ** (10.0 / d**1.2), axis=-1)
    return 10.0 / d**2 * prod - 10.0 / d**2


LUNACEK_MU0 = 2.5


def lunacek(z, aux=None):
    # z = sign(x_opt) * (x - x_opt) with |x_opt| = LUNACEK_MU0 / 2
    d = z.shape[-1]
    s = 1.0 - 1.0 / (2.0 * math.sqrt(d + 20.0) - 8.2)
    mu1 = -math.sqrt((LUNACEK_MU0**2 - 1.0) / s)
    xh = 2.0 * z + LUNACEK_MU0
    first = np.sum((xh - LUNACEK_MU0) ** 2, axis=-1)
    second = d + s * np.sum((xh - mu1) ** 2, axis=-1)
    zz = conditioning(d, 100.0) * (2.0 * z)
    return np.minimum(first, second) + 10.0 * (d - np.sum(np.cos(2 * np.pi * zz), axis=-1))


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class FunctionSpec:
    """Catalogue entry for one synthetic function.

    ``rotation`` is ``"identity"``, ``"haar"`` or ``"sign"`` (a diagonal of
    the optimum's signs). ``shift`` names the rule used to place the optimum.
    ``penalty`` is the coefficient of the boundary penalty on ``x``; a
    callable receives the dimension.
    """

    no: int
    name: str
    f_star: float
    base: Callable[..., np.ndarray]
    rotation: str = "haar"
    shift: str = "interior"
    penalty: float | Callable[[int], float] = 0.0
    min_dim: int = 1
    aux: str | None = None

    def penalty_coef(self, dim: int) -> float:
        return self.penalty(dim) if callable(self.penalty) else float(self.penalty)


SYNTHETIC: Mapping[int, FunctionSpec] = {
    s.no: s
    for s in [
        FunctionSpec(1, "Sphere", 700.0, sphere, rotation="identity"),
        FunctionSpec(2, "Ellipsoidal", 1900.0, ellipsoidal, rotation="identity"),
        FunctionSpec(3, "Rastrigin", 100.0, rastrigin, rotation="identity"),
        FunctionSpec(4, "Buche-Rastrigin", 1000.0, buche_rastrigin, rotation="identity", penalty=100.0),
        FunctionSpec(5, "Linear Slope", 2000.0, linear_slope, rotation="sign", shift="slope"),
        FunctionSpec(6, "Attractive Sector", 400.0, attractive_sector),
        FunctionSpec(7, "Step Ellipsoidal", 300.0, step_ellipsoidal, penalty=1.0),
        FunctionSpec(8, "Rosenbrock original", 1300.0, rosenbrock, rotation="identity", min_dim=2),
        FunctionSpec(9, "Rosenbrock rotated", 1300.0, rosenbrock, min_dim=2),
        FunctionSpec(10, "Ellipsoidal rotated", 600.0, ellipsoidal_hc),
        FunctionSpec(11, "Discus", 900.0, discus),
        FunctionSpec(12, "Bent Cigar", 2000.0, bent_cigar),
        FunctionSpec(13, "Sharp Ridge", 2400.0, sharp_ridge),
        FunctionSpec(14, "Different Powers", 1500.0, different_powers),
        FunctionSpec(15, "Rastrigin rotated", 1700.0, rastrigin),
        FunctionSpec(16, "Weierstrass", 1400.0, weierstrass, penalty=lambda d: 10.0 / d),
        FunctionSpec(17, "Schaffers F7", 200.0, schaffers_f7, penalty=10.0, min_dim=2),
        FunctionSpec(18, "Schaffers F7 ill-conditioned", 700.0, schaffers_f7_ill, penalty=10.0, min_dim=2),
        FunctionSpec(19, "Composite Griewank-Rosenbrock", 1700.0, griewank_rosenbrock, min_dim=2),
        FunctionSpec(20, "Schwefel", 2100.0, schwefel, rotation="sign", shift="schwefel"),
        FunctionSpec(21, "Gallagher 101 peaks", 700.0, gallagher, penalty=1.0, aux="gallagher101"),
        FunctionSpec(22, "Gallagher 21 peaks", 2400.0, gallagher, penalty=1.0, shift="gallagher21", aux="gallagher21"),
        FunctionSpec(23, "Katsuura", 600.0, katsuura, penalty=1.0),
        FunctionSpec(24, "Lunacek bi-Rastrigin", 1200.0, lunacek, rotation="sign", shift="lunacek", penalty=1e4),
    ]
}


@dataclass(frozen=True)
class NoisySpec:
    no: int
    name: str
    f_star: float
    base_no: int
    noise: str
    severity: str


def _noisy_catalogue() -> dict[int, NoisySpec]:
    f_stars = [700, 1900, 100, 1000, 2000, 400, 100, 2000, 2000, 500, 400, 700,
               1900, 800, 2300, 200, 100, 200, 500, 1600, 1000, 2400, 1400, 2400,
               2200, 400, 2500, 1000, 600, 2100]
    groups = [
        ("Sphere", 1, "moderate"), ("Rosenbrock", 8, "moderate"),
        ("Sphere", 1, "severe"), ("Rosenbrock", 8, "severe"),
        ("Step Ellipsoidal", 7, "severe"), ("Ellipsoidal", 10, "severe"),
        ("Different Powers", 14, "severe"), ("Schaffers F7", 17, "severe"),
        ("Composite Griewank-Rosenbrock", 19, "severe"), ("Gallagher 101 peaks", 21, "severe"),
    ]
    out = {}
    no = 1
    for name, base, severity in groups:
        for noise in ("gaussian", "uniform", "cauchy"):
            out[no] = NoisySpec(no, f"{name} {severity} {noise}", float(f_stars[no - 1]), base, noise, severity)
            no += 1
    return out


NOISY: Mapping[int, NoisySpec] = _noisy_catalogue()
