"""Noise models of the noisy synthetic suite.

Noise acts on the excess ``f - f_star`` only. With ``e`` the excess:

* gaussian: ``e * exp(beta * N(0, 1))``; beta is 0.01 (moderate) or 1 (severe).
* uniform: ``e * U^beta * max(1, (1e9 / (e + 1e-99)) ** (alpha * U'))`` with
  ``(alpha, beta) = (0.01 * (0.49 + 1/dim), 0.01)`` (moderate) or
  ``(0.49 + 1/dim, 1)`` (severe); ``U, U'`` independent uniforms on (0, 1).
* cauchy (seldom): ``e + alpha * max(0, 1000 + [U < p] * N / (|N'| + 1e-199))``
  with ``(alpha, p) = (0.01, 0.05)`` (moderate) or ``(1, 0.2)`` (severe).

An excess below ``1e-8`` is returned untouched; otherwise ``1.01e-8`` is added
to the noisy excess so that the target accuracy can only be hit through the
noiseless branch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NOISE_KINDS = ("none", "gaussian", "uniform", "cauchy")
SEVERITIES = ("moderate", "severe")
NOISE_FLOOR = 1e-8


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "none"
    severity: str = "moderate"
    dim: int = 1

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.severity not in SEVERITIES:
            raise ValueError(f"unknown noise severity {self.severity!r}; expected one of {SEVERITIES}")

    @property
    def params(self) -> tuple[float, float]:
        moderate = self.severity == "moderate"
        if self.kind == "gaussian":
            return (0.01, 0.0) if moderate else (1.0, 0.0)
        if self.kind == "uniform":
            a = 0.49 + 1.0 / self.dim
            return (0.01 * a, 0.01) if moderate else (a, 1.0)
        if self.kind == "cauchy":
            return (0.01, 0.05) if moderate else (1.0, 0.2)
        return (0.0, 0.0)


NOISELESS = NoiseModel()


def apply_noise(model: NoiseModel, raw, f_star: float, rng: np.random.Generator | None):
    """Apply ``model`` to the objective value(s) ``raw``.

    Accepts a scalar or a 1-D array and returns the same shape. Random draws
    are taken for every entry, in a fixed order, so results only depend on
    the generator state.
    """
    if model.kind == "none":
        return raw
    scalar = np.ndim(raw) == 0
    f = np.atleast_1d(np.asarray(raw, dtype=float))
    e = f - f_star
    n = e.shape[0]
    if model.kind == "gaussian":
        beta, _ = model.params
        noisy = e * np.exp(beta * rng.standard_normal(n))
    elif model.kind == "uniform":
        alpha, beta = model.params
        u1 = rng.random(n)
        u2 = rng.random(n)
        with np.errstate(over="ignore", divide="ignore"):
            amp = np.maximum(1.0, (1e9 / (e + 1e-99)) ** (alpha * u2))
        noisy = e * u1**beta * amp
    else:
        alpha, p = model.params
        u = rng.random(n)
        g1 = rng.standard_normal(n)
        g2 = rng.standard_normal(n)
        jump = np.where(u < p, g1 / (np.abs(g2) + 1e-199), 0.0)
        noisy = e + alpha * np.maximum(0.0, 1000.0 + jump)
    out = np.where(e >= NOISE_FLOOR, noisy + 1.01e-8 + f_star, f)
    return float(out[0]) if scalar else out
