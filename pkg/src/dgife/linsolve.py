"""Sparse linear solves for the per-step systems (M + theta dt A) u = rhs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import InvalidArgument, InvalidConfiguration, SolverError

METHODS = ("auto", "cg", "bicgstab", "dense", "splu")
DENSE_LIMIT = 2000


@dataclass
class SolverConfig:
    method: str = "auto"
    tol: float = 1e-10
    max_iter: int | None = None  # default 10 * N
    jacobi: bool = True
    symmetric: bool | None = None  # hint used by "auto"

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgument(f"unknown solver {self.method!r}; choose from {METHODS}")
        if not 0.0 < self.tol < 1.0:
            raise InvalidArgument(f"tolerance must lie in (0, 1), got {self.tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise InvalidArgument("max_iter must be at least 1")

    @classmethod
    def for_epsilon(cls, epsilon: int, **kw) -> "SolverConfig":
        return cls(symmetric=(epsilon == -1), **kw)


@dataclass
class SolveReport:
    method: str
    iterations: int
    residual: float
    history: list = field(default_factory=list)


def is_symmetric(A, tol=1e-8) -> bool:
    d = abs(A - A.T)
    scale = abs(A).max()
    return d.max() <= tol * scale if scale > 0 else True


class Solver:
    """Solver bound to one matrix; a sparse LU factorization is kept for reuse."""

    def __init__(self, A, config: SolverConfig | None = None):
        self.config = config or SolverConfig()
        A = sp.csr_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise InvalidArgument(f"matrix must be square, got {A.shape}")
        self.A = A
        method = self.config.method
        if method == "auto":
            symmetric = self.config.symmetric
            if symmetric is None:
                symmetric = is_symmetric(A)
            method = "cg" if symmetric else "bicgstab"
        if method == "cg" and not is_symmetric(A):
            raise InvalidConfiguration("conjugate gradients needs a symmetric matrix")
        self.method = method
        self._lu = None
        self._dense = None
        if method == "splu":
            self._lu = spla.splu(A.tocsc())
        elif method == "dense":
            self._dense = A.toarray()
        diag = A.diagonal()
        self._precond = None
        if self.config.jacobi and method in ("cg", "bicgstab"):
            if np.any(diag == 0):
                raise InvalidConfiguration("Jacobi preconditioning needs a nonzero diagonal")
            inv = 1.0 / diag
            self._precond = spla.LinearOperator(A.shape, matvec=lambda x: inv * x, dtype=float)

    def solve(self, rhs, x0=None) -> tuple[np.ndarray, SolveReport]:
        A = self.A
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (A.shape[0],):
            raise InvalidArgument(f"right-hand side has shape {rhs.shape}, expected {(A.shape[0],)}")
        bnorm = np.linalg.norm(rhs)
        if bnorm == 0.0:
            return np.zeros_like(rhs), SolveReport(self.method, 0, 0.0)
        tol = self.config.tol

        if self.method in ("splu", "dense"):
            x = self._lu.solve(rhs) if self._lu is not None else np.linalg.solve(self._dense, rhs)
            res = np.linalg.norm(A @ x - rhs) / bnorm
            if not res <= tol:
                raise SolverError(f"direct solve residual {res:.3e} exceeds {tol:.1e}", [res])
            return x, SolveReport(self.method, 1, res, [res])

        history = []

        def record(xk):
            history.append(np.linalg.norm(A @ xk - rhs) / bnorm)

        maxiter = self.config.max_iter or 10 * A.shape[0]
        solver = spla.cg if self.method == "cg" else spla.bicgstab
        x, info = solver(
            A, rhs, x0=x0, rtol=tol, atol=0.0, maxiter=maxiter, M=self._precond, callback=record
        )
        res = np.linalg.norm(A @ x - rhs) / bnorm
        if info != 0 or not res <= tol:
            raise SolverError(
                f"{self.method} stopped after {len(history)} iterations with relative residual {res:.3e}",
                history,
            )
        return x, SolveReport(self.method, len(history), res, history)


def solve(A, rhs, config: SolverConfig | None = None, x0=None):
    """Solve ``A x = rhs``; returns ``(x, report)``."""
    return Solver(A, config).solve(rhs, x0)
