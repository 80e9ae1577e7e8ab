"""Errors of discrete solutions against exact ones, and convergence rates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import DgSystem, edge_quadrature, volume_quadrature
from .exceptions import InvalidArgument
from .ife import IfeSpace
from .quadrature import VOLUME_ORDER

# sample grid per element for the max-norm error
LINF_SAMPLES = 5


@dataclass
class ErrorReport:
    ns: int
    h: float
    dt: float
    err_inf: float
    err_l2: float
    err_h1: float
    err_energy: float | None = None
    theta: float | None = None
    epsilon: int | None = None
    sigma: float | None = None
    beta_minus: float | None = None
    beta_plus: float | None = None


def _discrete(u_h, space, batch):
    coef = u_h[space.dofmap.dofs(batch.elems)]  # (n, d)
    val = np.einsum("nqd,nd->nq", batch.vals, coef)
    grad = np.einsum("nqdk,nd->nqk", batch.grads, coef)
    return val, grad


def l2_h1_errors(
    u_h, problem, space: IfeSpace, t: float, vquad=None, order=VOLUME_ORDER, resolve_curve=0
):
    """(L2 error, broken H1-seminorm error, beta-weighted gradient error squared).

    The discrete function uses the chord-side piece at each quadrature point,
    the exact solution the side given by its own level set.  ``resolve_curve``
    additionally splits cut pieces along the true curve.
    """
    if vquad is None:
        vquad = volume_quadrature(space, order, resolve_curve)
    l2 = h1 = bh1 = 0.0
    for b in vquad:
        val, grad = _discrete(u_h, space, b)
        ex = problem.u(b.x, b.y, t)
        gx, gy = problem.grad_u(b.x, b.y, t)
        beta = problem.beta(b.x, b.y)
        dg2 = (grad[..., 0] - gx) ** 2 + (grad[..., 1] - gy) ** 2
        l2 += float(np.sum(b.w * (val - ex) ** 2))
        h1 += float(np.sum(b.w * dg2))
        bh1 += float(np.sum(b.w * beta * dg2))
    return math.sqrt(l2), math.sqrt(h1), bh1


def linf_error(u_h, problem, space: IfeSpace, t: float, samples: int = LINF_SAMPLES) -> float:
    """max |u_h - u| over a ``samples`` x ``samples`` grid in every element."""
    mesh = space.mesh
    s = np.linspace(0.0, 1.0, samples)
    XI, ETA = np.meshgrid(s, s, indexing="ij")
    XI, ETA = XI.ravel(), ETA.ravel()
    elems = np.arange(mesh.n_elements)
    o = mesh.elem_origin
    x = o[:, 0, None] + mesh.hx * XI[None, :]
    y = o[:, 1, None] + mesh.hy * ETA[None, :]
    mask = np.ones_like(x, dtype=bool)
    if mesh.simplex:
        lower = (elems % 2 == 0)[:, None]
        mask = np.where(lower, ETA[None, :] <= XI[None, :], ETA[None, :] >= XI[None, :])
    vals, _, _ = space.evaluate(elems, x, y)
    coef = u_h[space.dofmap.dofs(elems)]
    uh = np.einsum("nqd,nd->nq", vals, coef)
    diff = np.abs(uh - problem.u(x, y, t))
    return float(diff[mask].max())


def jump_penalty_error(u_h, problem, space: IfeSpace, t: float, equad=None) -> float:
    """sum_e |e|^-1 int_e [u_h - u]^2 (exact interior jumps vanish)."""
    equad = equad if equad is not None else edge_quadrature(space)
    total = 0.0
    for b in equad:
        dofs = b.dofs(space.d)
        coef = u_h[dofs]
        jump = np.einsum("nqi,ni->nq", b.jumps(), coef)
        bnd = b.boundary
        if bnd.any():
            jump[bnd] -= problem.u(b.x[bnd], b.y[bnd], t)
        total += float(np.sum(b.w / b.length[:, None] * jump**2))
    return total


def energy_error(u_h, problem, system: DgSystem, t: float) -> float:
    """Mesh-dependent energy norm of u - u_h."""
    _, _, bh1 = l2_h1_errors(u_h, problem, system.space, t, system.vquad)
    pen = jump_penalty_error(u_h, problem, system.space, t, system.equad)
    return math.sqrt(bh1 + system.sigma * pen)


def error_norms(
    u_h,
    problem,
    space: IfeSpace,
    t: float,
    ns: int | None = None,
    dt: float = 0.0,
    order: int = VOLUME_ORDER,
    vquad=None,
    system: DgSystem | None = None,
    resolve_curve: int = 0,
) -> ErrorReport:
    u_h = np.asarray(u_h, dtype=float)
    l2, h1, _ = l2_h1_errors(u_h, problem, space, t, vquad, order, resolve_curve)
    inf = linf_error(u_h, problem, space, t)
    energy = energy_error(u_h, problem, system, t) if system is not None else None
    mesh = space.mesh
    return ErrorReport(
        ns=ns if ns is not None else mesh.ns, h=mesh.h, dt=dt,
        err_inf=inf, err_l2=l2, err_h1=h1, err_energy=energy,
        beta_minus=space.beta_minus, beta_plus=space.beta_plus,
    )


NORMS = ("inf", "l2", "h1")


def rate(e_coarse: float, e_fine: float) -> float:
    return math.log2(e_coarse / e_fine)


def rates(reports: list[ErrorReport]) -> list[dict]:
    """Rows of errors with log2 rates against the previous (coarser) entry."""
    for a, b in zip(reports, reports[1:]):
        if b.ns != 2 * a.ns:
            raise InvalidArgument(f"refinement ladder must double Ns, got {a.ns} -> {b.ns}")
    rows = []
    prev = None
    for r in reports:
        row = {"report": r}
        for name in NORMS:
            e = getattr(r, f"err_{name}")
            row[f"rate_{name}"] = rate(getattr(prev, f"err_{name}"), e) if prev else None
        rows.append(row)
        prev = r
    return rows
