"""The fully discrete theta-scheme and its initial data."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .assembly import DgSystem, LoadOperator
from .exceptions import InvalidArgument, SolverError
from .ife import IfeSpace
from .linsolve import Solver, SolverConfig


@dataclass(frozen=True)
class TimeLadder:
    T: float
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 1:
            raise InvalidArgument("need at least one time step")
        if not self.T > 0:
            raise InvalidArgument("final time must be positive")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    def time(self, n: int) -> float:
        return n * self.dt

    @classmethod
    def from_ratio(cls, T: float, h: float, ratio: float) -> "TimeLadder":
        """Uniform steps with dt as close to ``ratio * h`` as divides T."""
        return cls(T, max(1, int(round(T / (ratio * h)))))


@dataclass
class SolutionHistory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    reports: list = field(default_factory=list)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return self.times[-1]


def initial_interpolant(u0: Callable, space: IfeSpace) -> np.ndarray:
    """Nodal values of ``u0(x, y)`` on every element (the local IFE interpolant)."""
    V = space.mesh.element_vertices()
    return np.asarray(u0(V[..., 0], V[..., 1]), dtype=float).ravel()


def interpolant(problem, space: IfeSpace, t: float) -> np.ndarray:
    return initial_interpolant(lambda x, y: problem.u(x, y, t), space)


def projection_rhs(problem, system: DgSystem, t: float) -> np.ndarray:
    """r_i = a_eps(u(., t), phi_i) for the exact solution ``u``.

    Interior jumps of the exact solution vanish; on the boundary its trace
    enters through the symmetry and penalty terms.
    """
    space = system.space
    d = space.d
    r = np.zeros(space.n_dof)
    for b in system.vquad:
        fx, fy = problem.flux(b.x, b.y, t)
        local = np.einsum("nq,nqi->ni", b.w * fx, b.grads[..., 0]) + np.einsum(
            "nq,nqi->ni", b.w * fy, b.grads[..., 1]
        )
        np.add.at(r, space.dofmap.dofs(b.elems), local)
    eps, sigma = system.epsilon, system.sigma
    for b in system.equad:
        fx, fy = problem.flux(b.x, b.y, t)
        fn = fx * b.normal[:, 0, None] + fy * b.normal[:, 1, None]
        local = -np.einsum("nq,nqi->ni", b.w * fn, b.jumps())
        bnd = b.boundary
        if bnd.any():
            u = problem.u(b.x[bnd], b.y[bnd], t)
            flux1 = b.beta1[bnd][..., None] * np.sum(
                b.grads1[bnd] * b.normal[bnd][:, None, None, :], axis=-1
            )
            kern = eps * flux1 + sigma / b.length[bnd][:, None, None] * b.vals1[bnd]
            local[bnd, :d] += np.einsum("nq,nqi->ni", b.w[bnd] * u, kern)
        np.add.at(r, b.dofs(d), local)
    return r


def elliptic_projection(problem, system: DgSystem, t: float, config: SolverConfig | None = None):
    """Coefficients of P_h u(., t): a_eps(u - P_h u, v) = 0 for all discrete v."""
    config = config or SolverConfig.for_epsilon(system.epsilon)
    x, _ = Solver(system.stiffness, config).solve(projection_rhs(problem, system, t))
    return x


def run_theta_scheme(
    system: DgSystem,
    ladder: TimeLadder,
    theta: float,
    initial: np.ndarray,
    load: Callable[[float], np.ndarray],
    config: SolverConfig | None = None,
    keep_all: bool = False,
    checkpoint: Callable[[int, float, np.ndarray], None] | None = None,
) -> SolutionHistory:
    """March (M + theta dt A) u^n = (M - (1 - theta) dt A) u^{n-1} + dt L^{n,theta}.

    ``load(t)`` returns the assembled load vector at time ``t``.
    """
    if not 0.0 <= theta <= 1.0:
        raise InvalidArgument(f"theta must lie in [0, 1], got {theta}")
    dt = ladder.dt
    A, M = system.stiffness, system.mass
    lhs = (M + theta * dt * A).tocsr()
    explicit = (M - (1.0 - theta) * dt * A).tocsr()
    if config is None:
        config = SolverConfig.for_epsilon(system.epsilon)
    solver = Solver(lhs, config)

    u = np.asarray(initial, dtype=float).copy()
    hist = SolutionHistory([0.0], [u.copy()])
    b_prev = load(0.0) if theta < 1.0 else None
    for n in range(1, ladder.n_steps + 1):
        t = ladder.time(n)
        b_now = load(t)
        b = b_now if theta == 1.0 else theta * b_now + (1.0 - theta) * b_prev
        rhs = explicit @ u + dt * b
        try:
            u, report = solver.solve(rhs, x0=u)
        except SolverError as exc:
            exc.step = n
            raise
        b_prev = b_now
        hist.reports.append(report)
        if keep_all or n == ladder.n_steps:
            hist.times.append(t)
            hist.states.append(u.copy())
        if checkpoint is not None:
            checkpoint(n, t, u)
    return hist


def problem_load(problem, system: DgSystem) -> Callable[[float], np.ndarray]:
    op = LoadOperator(system.space, system.sigma, system.epsilon, system.vquad, system.equad)
    return lambda t: op.at_time(problem, t)


# checkpoint layout: little-endian int64 n_dof, int64 step, float64 time, then n_dof float64
_HEADER = struct.Struct("<qqd")


def save_checkpoint(path, u: np.ndarray, step: int, t: float) -> None:
    u = np.ascontiguousarray(u, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(len(u), step, t))
        fh.write(u.tobytes())


def load_checkpoint(path):
    """Returns ``(u, step, t)``."""
    data = Path(path).read_bytes()
    n, step, t = _HEADER.unpack_from(data)
    u = np.frombuffer(data, dtype="<f8", count=n, offset=_HEADER.size).copy()
    return u, step, t
