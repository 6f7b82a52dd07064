"""Problem data for the single-phase interface model."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .mesh import FractureSegmentSpec

Coefficient = Union[float, Callable]

SIGMA_NAMES = {"sipg": -1, "nipg": 1, "iipg": 0}


@dataclass
class ProblemSpec:
    """Coefficients, sources, boundary data and penalties for one solve.

    Scalar coefficients may be numbers, callables f(x, y), or callables
    f(x, y, cx, cy) marked with `basis.piecewise` that receive the owning
    cell's centroid (used by piecewise-defined data evaluated on interface
    edges).  `km` may additionally be a constant 2x2 SPD tensor or a callable
    returning one.
    """

    km: Coefficient = 1.0
    segments: Sequence[FractureSegmentSpec] = field(default_factory=list)
    q: Coefficient = 0.0
    qf: Coefficient = 0.0
    g_d: Coefficient = 0.0
    g_n: Coefficient = 0.0
    sigma: int = -1
    alpha0: float = 10.0
    alpha_tilde0: float = 10.0

    def __post_init__(self):
        if isinstance(self.sigma, str):
            self.sigma = SIGMA_NAMES[self.sigma.lower()]
        if self.sigma not in (-1, 0, 1):
            raise ValueError("sigma must be -1 (SIPG), 1 (NIPG) or 0 (IIPG)")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if not self.alpha_tilde0 > 0:
            raise ValueError("alpha_tilde0 must be positive")

    @property
    def symmetric(self) -> bool:
        return self.sigma == -1


def km_values(km: Coefficient, x, y, cx=None, cy=None) -> np.ndarray:
    """Permeability tensor values, shaped (..., 2, 2)."""
    shape = np.shape(x)
    eye = np.eye(2)
    if np.isscalar(km):
        return float(km) * np.broadcast_to(eye, shape + (2, 2))
    if isinstance(km, np.ndarray):
        if km.shape != (2, 2):
            raise ValueError("constant km must be a 2x2 tensor")
        return np.broadcast_to(km, shape + (2, 2))
    if getattr(km, "needs_cell", False):
        vals = np.asarray(km(x, y, cx, cy), dtype=float)
    else:
        vals = np.asarray(km(x, y), dtype=float)
    if vals.shape == shape + (2, 2):
        return vals
    return vals[..., None, None] * eye
