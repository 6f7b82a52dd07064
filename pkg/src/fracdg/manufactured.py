"""Closed-form solutions on the unit square with a single vertical interface.

Both cases place the thin feature on x = 1/2 with unit matrix permeability
and Dirichlet data taken from the exact solution on all four sides.  The
conductive case has a * k_f = 1 and zero channel source; the blocking case
has k_b / a = 1, so the pressure jumps by exactly the normal flux across
the interface.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import piecewise
from .mesh import FractureSegmentSpec
from .problem import ProblemSpec

S_HALF = np.sin(0.5)
C_HALF = np.cos(0.5)


@dataclass
class ManufacturedCase:
    name: str
    spec: ProblemSpec
    p: Callable        # piecewise exact pressure, f(x, y, cx, cy)
    grad_p: Callable   # piecewise exact gradient, (..., 2)


def _left(cx):
    return np.asarray(cx) < 0.5


def case_conductive(sigma: int = -1, alpha0: float = 10.0, alpha_tilde0: float = 10.0) -> ManufacturedCase:
    """Conductive vertical fracture, aperture 1e-4, permeability 1e4."""

    @piecewise
    def p(x, y, cx, cy):
        base = np.sin(x) * np.sin(y)
        return np.where(_left(cx), base, base + S_HALF * (x - 0.5) * np.sin(y))

    @piecewise
    def grad_p(x, y, cx, cy):
        gx = np.cos(x) * np.sin(y)
        gy = np.sin(x) * np.cos(y)
        left = _left(cx)
        gx = np.where(left, gx, gx + S_HALF * np.sin(y))
        gy = np.where(left, gy, gy + S_HALF * (x - 0.5) * np.cos(y))
        return np.stack([gx, gy], axis=-1)

    @piecewise
    def q(x, y, cx, cy):
        base = 2.0 * np.sin(x) * np.sin(y)
        return np.where(_left(cx), base, base + S_HALF * (x - 0.5) * np.sin(y))

    seg = FractureSegmentSpec(0.5, 0.0, 0.5, 1.0, "conductive", 1e-4, 1e4)
    spec = ProblemSpec(
        km=1.0,
        segments=[seg],
        q=q,
        qf=0.0,
        g_d=p,
        sigma=sigma,
        alpha0=alpha0,
        alpha_tilde0=alpha_tilde0,
    )
    return ManufacturedCase("fracture-5.1a", spec, p, grad_p)


def case_barrier(sigma: int = -1, alpha0: float = 10.0, alpha_tilde0: float = 10.0) -> ManufacturedCase:
    """Blocking vertical barrier, aperture 1e-4, permeability 1e-4."""

    @piecewise
    def p(x, y, cx, cy):
        base = np.sin(x) * np.sin(y)
        return np.where(_left(cx), base, base + C_HALF * np.sin(y))

    @piecewise
    def grad_p(x, y, cx, cy):
        gx = np.cos(x) * np.sin(y)
        gy = np.sin(x) * np.cos(y)
        gy = np.where(_left(cx), gy, gy + C_HALF * np.cos(y))
        return np.stack([gx, gy], axis=-1)

    @piecewise
    def q(x, y, cx, cy):
        base = 2.0 * np.sin(x) * np.sin(y)
        return np.where(_left(cx), base, base + C_HALF * np.sin(y))

    seg = FractureSegmentSpec(0.5, 0.0, 0.5, 1.0, "blocking", 1e-4, 1e-4)
    spec = ProblemSpec(
        km=1.0,
        segments=[seg],
        q=q,
        g_d=p,
        sigma=sigma,
        alpha0=alpha0,
        alpha_tilde0=alpha_tilde0,
    )
    return ManufacturedCase("barrier-5.1b", spec, p, grad_p)


CASES = {
    "fracture-5.1a": case_conductive,
    "barrier-5.1b": case_barrier,
}


def get_case(name: str, sigma: int = -1, **penalties) -> ManufacturedCase:
    try:
        factory = CASES[name]
    except KeyError:
        raise KeyError(f"unknown manufactured case {name!r}; have {sorted(CASES)}")
    return factory(sigma=sigma, **penalties)
