"""Linear solvers for the assembled systems.

Thin wrapper around scipy.sparse: direct sparse LU by default at desk scale,
preconditioned CG / BiCGStab above, with explicit convergence reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assemble import SparseSystem

DIRECT_SIZE_LIMIT = 200_000


class SolverError(Exception):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


@dataclass
class SolverConfig:
    method: str = "auto"     # auto | direct | cg | bicgstab
    tol: float = 1e-12       # relative residual
    max_iterations: int = 20000
    preconditioner: str = "none"  # none | diagonal | ilu

    def __post_init__(self):
        if self.method not in ("direct", "cg", "bicgstab", "auto"):
            raise ValueError(f"unknown solver method {self.method!r}")
        if not 0.0 < self.tol < 1.0:
            raise ValueError("tolerance must be in (0, 1)")
        if self.preconditioner not in ("none", "diagonal", "ilu"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass
class SolveReport:
    method: str
    iterations: int
    residual: float
    history: list = field(default_factory=list)


def _preconditioner(A: sp.csr_matrix, kind: str) -> Optional[spla.LinearOperator]:
    if kind == "none":
        return None
    if kind == "diagonal":
        d = A.diagonal()
        if np.any(d == 0):
            raise SolverError("zero diagonal entry; diagonal preconditioner unusable")
        inv = 1.0 / d
        return spla.LinearOperator(A.shape, matvec=lambda x: inv * x)
    # incomplete LU; scipy's ILUTP stands in for a zero-fill factorization
    ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=10.0)
    return spla.LinearOperator(A.shape, matvec=ilu.solve)


def solve(system: SparseSystem, cfg: Optional[SolverConfig] = None):
    """Solve the system; returns (x, SolveReport).

    Raises SolverError on breakdown or when the iteration budget runs out;
    the exception carries the residual history.
    """
    cfg = cfg or SolverConfig()
    A, b = system.matrix, system.rhs
    method = cfg.method
    if method == "auto":
        if A.shape[0] <= DIRECT_SIZE_LIMIT:
            method = "direct"
        else:
            method = "cg" if system.symmetric else "bicgstab"

    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), SolveReport(method, 0, 0.0)

    if method == "direct":
        lu = spla.splu(A.tocsc())
        x = lu.solve(b)
        res = float(np.linalg.norm(A @ x - b) / bnorm)
        return x, SolveReport("direct", 0, res)

    if method == "cg" and not system.symmetric:
        raise SolverError("conjugate gradient requested on an unsymmetric system")

    M = _preconditioner(A, cfg.preconditioner)
    history: list[float] = []

    def callback(xk):
        history.append(float(np.linalg.norm(A @ xk - b) / bnorm))

    fn = spla.cg if method == "cg" else spla.bicgstab
    x, info = fn(
        A,
        b,
        rtol=cfg.tol,
        atol=0.0,
        maxiter=cfg.max_iterations,
        M=M,
        callback=callback,
    )
    res = float(np.linalg.norm(A @ x - b) / bnorm)
    if info > 0:
        raise SolverError(
            f"{method} did not converge within {cfg.max_iterations} iterations "
            f"(residual {res:.3e})",
            history,
        )
    if info < 0:
        raise SolverError(f"{method} breakdown (info={info})", history)
    return x, SolveReport(method, len(history), res, history)


def export_matrix_market(system: SparseSystem, path) -> None:
    """Write the operator in matrix-market coordinate format."""
    from scipy.io import mmwrite

    mmwrite(str(path), system.matrix.tocoo())
