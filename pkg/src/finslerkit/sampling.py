"""Deterministic direction sequences and sample plans.

All verification routines draw directions from fixed low-discrepancy
sequences so that reports are reproducible byte-for-byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm as _normal
from scipy.stats import qmc

__all__ = ["sphere_sequence", "SamplePlan"]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def sphere_sequence(n: int, count: int) -> np.ndarray:
    """`count` unit vectors in R^n from a deterministic low-discrepancy sequence."""
    if n < 1 or count < 1:
        raise ValueError("need n >= 1 and count >= 1")
    if n == 1:
        return np.array([[1.0 if i % 2 == 0 else -1.0] for i in range(count)])
    if n == 2:
        angles = 2.0 * math.pi * ((np.arange(count) * _GOLDEN + 0.05) % 1.0)
        return np.column_stack([np.cos(angles), np.sin(angles)])
    if n == 3:
        i = np.arange(count)
        z = 1.0 - (2.0 * i + 1.0) / count
        phi = 2.0 * math.pi * ((i * _GOLDEN) % 1.0)
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    sampler = qmc.Halton(d=n, scramble=False)
    sampler.fast_forward(1)  # skip the degenerate first point
    pts = _normal.ppf(sampler.random(count))
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    norms[norms < 1e-12] = 1.0
    return pts / norms


@dataclass
class SamplePlan:
    """Deterministic evaluation plan: base points with per-point directions."""

    points: list
    directions_per_point: int
    seed_label: str = "golden-sphere"
    scale: float = 1.0

    def directions(self, n: int) -> np.ndarray:
        return self.scale * sphere_sequence(n, self.directions_per_point)

    def pairs(self, n: int):
        dirs = self.directions(n)
        for p in self.points:
            for y in dirs:
                yield np.asarray(p, dtype=float), y

    def describe(self) -> str:
        return (
            f"{len(self.points)} points x {self.directions_per_point} directions "
            f"({self.seed_label})"
        )
