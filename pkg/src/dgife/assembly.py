"""Global DG-IFE operators: stiffness, mass and load vectors.

Quadrature data are evaluated once per space into padded batches
(``VolumeBatch`` per group of elements, ``EdgeBatch`` per group of edges) and
reused by every operator.  Padding points carry zero weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .exceptions import InvalidArgument
from .ife import PLUS, IfeSpace
from .mesh import INTERFACE
from .quadrature import (
    EDGE_ORDER,
    VOLUME_ORDER,
    CutElementRule,
    cut_rule,
    curve_resolved_rule,
    gauss_rect,
    gauss_segment,
    gauss_tri,
    split_edge_rule,
)


@dataclass(eq=False)
class VolumeBatch:
    elems: np.ndarray  # (n,)
    x: np.ndarray  # (n, q)
    y: np.ndarray
    w: np.ndarray
    vals: np.ndarray  # (n, q, d)
    grads: np.ndarray  # (n, q, d, 2)
    piece: np.ndarray  # (n, q) piece of the discrete function at each point
    beta: np.ndarray  # (n, q) coefficient of that piece


@dataclass(eq=False)
class EdgeBatch:
    edges: np.ndarray
    k1: np.ndarray
    k2: np.ndarray  # -1 on boundary edges
    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    normal: np.ndarray  # (n, 2)
    length: np.ndarray  # (n,)
    vals1: np.ndarray
    grads1: np.ndarray
    beta1: np.ndarray
    vals2: np.ndarray
    grads2: np.ndarray
    beta2: np.ndarray

    @property
    def boundary(self) -> np.ndarray:
        return self.k2 < 0

    def jumps(self):
        """[phi_i] for the 2d local test functions, shape (n, q, 2d)."""
        return np.concatenate([self.vals1, -self.vals2], axis=-1)

    def flux_averages(self):
        """{beta grad phi_i . n}, shape (n, q, 2d)."""
        n = self.normal[:, None, None, :]
        f1 = self.beta1[..., None] * np.sum(self.grads1 * n, axis=-1)
        f2 = self.beta2[..., None] * np.sum(self.grads2 * n, axis=-1)
        half = np.where(self.boundary, 1.0, 0.5)[:, None, None]
        return np.concatenate([half * f1, half * f2], axis=-1)

    def dofs(self, d):
        k2 = np.where(self.k2 < 0, self.k1, self.k2)
        return np.concatenate(
            [self.k1[:, None] * d + np.arange(d), k2[:, None] * d + np.arange(d)], axis=1
        )


def _pad(arrays, fill=0.0):
    q = max(len(a) for a in arrays)
    out = np.full((len(arrays), q) + arrays[0].shape[1:], fill, dtype=np.result_type(*arrays))
    for i, a in enumerate(arrays):
        out[i, : len(a)] = a
    return out


def _volume_batch(space, elems, x, y, w, piece):
    vals, grads, chosen = space.evaluate(elems, x, y, piece)
    return VolumeBatch(elems, x, y, w, vals, grads, chosen, space.beta(chosen))


def volume_quadrature(
    space: IfeSpace, order: int = VOLUME_ORDER, resolve_curve: int = 0
) -> list[VolumeBatch]:
    """Batched volume quadrature; cut pieces are integrated separately.

    With ``resolve_curve > 0`` each piece is further split along the true
    interface (see ``curve_resolved_rule``), for integrands of the exact
    solution.
    """
    mesh = space.mesh
    tags = space.tags
    batches = []
    regular = np.flatnonzero(tags != INTERFACE)
    if regular.size:
        if mesh.simplex:
            ref = gauss_tri(order)
            V = mesh.element_vertices(regular)
            a, b, c = V[:, 0], V[:, 1], V[:, 2]
            pts = (
                a[:, None, :]
                + ref.points[None, :, 0, None] * (b - a)[:, None, :]
                + ref.points[None, :, 1, None] * (c - a)[:, None, :]
            )
            det = np.abs(
                (b - a)[:, 0] * (c - a)[:, 1] - (b - a)[:, 1] * (c - a)[:, 0]
            )
            w = det[:, None] * ref.weights[None, :]
        else:
            ref = gauss_rect(order)
            o = mesh.elem_origin[regular]
            pts = o[:, None, :] + ref.points[None] * np.array([mesh.hx, mesh.hy])
            w = np.broadcast_to(ref.weights * mesh.hx * mesh.hy, (len(regular), len(ref.weights))).copy()
        piece = np.broadcast_to(np.where(tags[regular] > 0, PLUS, 0)[:, None], w.shape)
        batches.append(_volume_batch(space, regular, pts[..., 0], pts[..., 1], w, piece))

    cut = np.flatnonzero(tags == INTERFACE)
    if cut.size:
        P, W, S = [], [], []
        for k in cut:
            c = space.classification.cuts[int(k)]
            if resolve_curve:
                r = CutElementRule(
                    curve_resolved_rule(c.minus, space.curve, order, resolve_curve),
                    curve_resolved_rule(c.plus, space.curve, order, resolve_curve),
                )
            else:
                r = cut_rule(c, order)
            P.append(np.concatenate([r.minus.points, r.plus.points]))
            W.append(np.concatenate([r.minus.weights, r.plus.weights]))
            S.append(np.concatenate([np.zeros(len(r.minus.weights), int), np.ones(len(r.plus.weights), int)]))
        P = _pad(P)
        # padding points sit on a vertex with zero weight
        for i, p in enumerate(P):
            n = len(W[i])
            P[i, n:] = p[0]
        W, S = _pad(W), _pad(S)
        batches.append(_volume_batch(space, cut, P[..., 0], P[..., 1], W, S))
    return batches


def _edge_batch(space, edges, x, y, w, tags):
    mesh = space.mesh
    k1 = mesh.edge_elems[edges, 0]
    k2 = mesh.edge_elems[edges, 1]

    def side(k):
        if tags is None:
            return None
        interface = (space.tags[k] == INTERFACE)[:, None]
        return np.where(interface, (tags > 0).astype(int), -1)

    v1, g1, p1 = space.evaluate(k1, x, y, side(k1))
    bnd = k2 < 0
    k2s = np.where(bnd, k1, k2)
    v2, g2, p2 = space.evaluate(k2s, x, y, side(k2s))
    v2[bnd] = 0.0
    g2[bnd] = 0.0
    return EdgeBatch(
        edges, k1, k2, x, y, w, mesh.edge_normals[edges], mesh.edge_lengths[edges],
        v1, g1, space.beta(p1), v2, g2, space.beta(p2),
    )


def edge_quadrature(space: IfeSpace, order: int = EDGE_ORDER) -> list[EdgeBatch]:
    mesh = space.mesh
    crossings = space.classification.edge_crossings
    split = np.array(sorted(crossings), dtype=np.int64)
    plain = np.setdiff1d(np.arange(mesh.n_edges), split)
    batches = []
    if plain.size:
        ref = gauss_segment(order)
        p = mesh.nodes[mesh.edge_nodes[plain]]
        pts = p[:, 0, None, :] + ref.points[None, :, None] * (p[:, 1] - p[:, 0])[:, None, :]
        w = mesh.edge_lengths[plain, None] * ref.weights[None, :]
        batches.append(_edge_batch(space, plain, pts[..., 0], pts[..., 1], w, None))
    if split.size:
        P, W, T = [], [], []
        for e in split:
            a, b = mesh.nodes[mesh.edge_nodes[e]]
            r = split_edge_rule(a, b, space.curve, order, crossing=crossings[int(e)])
            P.append(r.points)
            W.append(r.weights)
            T.append(r.tags)
        P, W, T = _pad(P), _pad(W), _pad(T)
        batches.append(_edge_batch(space, split, P[..., 0], P[..., 1], W, T))
    return batches


def _scatter(n, rows, cols, vals):
    m = sp.coo_matrix(
        (vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)
    ).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def _volume_matrix(space, batches, kernel):
    rows, cols, vals = [], [], []
    for b in batches:
        local = kernel(b)  # (n, d, d), test index first
        dofs = space.dofmap.dofs(b.elems)
        rows.append(np.broadcast_to(dofs[:, :, None], local.shape))
        cols.append(np.broadcast_to(dofs[:, None, :], local.shape))
        vals.append(local)
    return _scatter(
        space.n_dof,
        np.concatenate([r.ravel() for r in rows]),
        np.concatenate([c.ravel() for c in cols]),
        np.concatenate([v.ravel() for v in vals]),
    )


def _edge_matrix(space, batches, kernel):
    rows, cols, vals = [], [], []
    for b in batches:
        local = kernel(b)  # (n, 2d, 2d)
        d = space.d
        local[b.boundary, d:, :] = 0.0
        local[b.boundary, :, d:] = 0.0
        dofs = b.dofs(d)
        rows.append(np.broadcast_to(dofs[:, :, None], local.shape).ravel())
        cols.append(np.broadcast_to(dofs[:, None, :], local.shape).ravel())
        vals.append(local.ravel())
    m = _scatter(space.n_dof, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))
    m.eliminate_zeros()
    return m


def assemble_mass(space: IfeSpace, vquad=None) -> sp.csr_matrix:
    vquad = vquad if vquad is not None else volume_quadrature(space)
    return _volume_matrix(
        space, vquad, lambda b: np.einsum("nq,nqi,nqj->nij", b.w, b.vals, b.vals)
    )


def volume_stiffness(space, vquad):
    return _volume_matrix(
        space,
        vquad,
        lambda b: np.einsum("nq,nqik,nqjk->nij", b.w * b.beta, b.grads, b.grads),
    )


def consistency_matrix(space, equad):
    """Entries -int_e {beta grad phi_j . n}[phi_i] (row i = test)."""
    return _edge_matrix(
        space, equad,
        lambda b: -np.einsum("nq,nqi,nqj->nij", b.w, b.jumps(), b.flux_averages()),
    )


def penalty_matrix(space, equad):
    """Entries int_e [phi_j][phi_i] / |e|, i.e. the penalty for sigma = 1."""
    def kernel(b):
        J = b.jumps()
        return np.einsum("nq,nqi,nqj->nij", b.w / b.length[:, None], J, J)

    return _edge_matrix(space, equad, kernel)


@dataclass(eq=False)
class DgSystem:
    """Assembled DG-IFE operators for one space and one (sigma, epsilon) pair."""

    space: IfeSpace
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    sigma: float
    epsilon: int
    volume: sp.csr_matrix
    consistency: sp.csr_matrix
    penalty: sp.csr_matrix  # unit-sigma penalty
    vquad: list = field(repr=False, default_factory=list)
    equad: list = field(repr=False, default_factory=list)

    @property
    def n_dof(self) -> int:
        return self.space.n_dof

    @property
    def energy(self) -> sp.csr_matrix:
        """Gram matrix of the mesh-dependent energy norm."""
        return (self.volume + self.sigma * self.penalty).tocsr()


def _check_params(sigma, epsilon):
    if epsilon not in (-1, 0, 1):
        raise InvalidArgument(f"epsilon must be -1, 0 or 1, got {epsilon}")
    if not sigma >= 0:
        raise InvalidArgument(f"penalty must be nonnegative, got {sigma}")


def assemble_stiffness(space: IfeSpace, sigma: float, epsilon: int, vquad=None, equad=None):
    """The interior-penalty bilinear form as a sparse matrix (rows = test functions)."""
    _check_params(sigma, epsilon)
    vquad = vquad if vquad is not None else volume_quadrature(space)
    equad = equad if equad is not None else edge_quadrature(space)
    C = consistency_matrix(space, equad)
    A = volume_stiffness(space, vquad) + C - epsilon * C.T + sigma * penalty_matrix(space, equad)
    return A.tocsr()


def assemble_system(
    space: IfeSpace,
    sigma: float,
    epsilon: int,
    volume_order: int = VOLUME_ORDER,
    edge_order: int = EDGE_ORDER,
) -> DgSystem:
    _check_params(sigma, epsilon)
    vquad = volume_quadrature(space, volume_order)
    equad = edge_quadrature(space, edge_order)
    V = volume_stiffness(space, vquad)
    C = consistency_matrix(space, equad)
    P = penalty_matrix(space, equad)
    A = (V + C - epsilon * C.T + sigma * P).tocsr()
    A.sort_indices()
    return DgSystem(
        space, A, assemble_mass(space, vquad), float(sigma), int(epsilon), V, C, P, vquad, equad
    )


class LoadOperator:
    """Linear map (f, g) -> load vector, with quadrature points frozen.

    ``b_i = int f phi_i + sum_{boundary e} int_e (eps beta grad phi_i . n
    + sigma/|e| phi_i) g``.
    """

    def __init__(self, space: IfeSpace, sigma: float, epsilon: int, vquad, equad):
        _check_params(sigma, epsilon)
        n = space.n_dof
        d = space.d
        xs, ys, rows, cols, vals = [], [], [], [], []
        offset = 0
        for b in vquad:
            npts = b.w.size
            idx = offset + np.arange(npts).reshape(b.w.shape)
            dofs = space.dofmap.dofs(b.elems)
            rows.append(np.broadcast_to(dofs[:, None, :], b.vals.shape).ravel())
            cols.append(np.broadcast_to(idx[..., None], b.vals.shape).ravel())
            vals.append((b.w[..., None] * b.vals).ravel())
            xs.append(b.x.ravel())
            ys.append(b.y.ravel())
            offset += npts
        self.volume_x = np.concatenate(xs)
        self.volume_y = np.concatenate(ys)
        self.volume_op = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, offset),
        )

        xs, ys, rows, cols, vals = [], [], [], [], []
        offset = 0
        for b in equad:
            sel = np.flatnonzero(b.boundary)
            if not sel.size:
                continue
            w = b.w[sel]
            npts = w.size
            idx = offset + np.arange(npts).reshape(w.shape)
            dofs = space.dofmap.dofs(b.k1[sel])
            flux = b.beta1[sel][..., None] * np.sum(
                b.grads1[sel] * b.normal[sel][:, None, None, :], axis=-1
            )
            kernel = epsilon * flux + sigma / b.length[sel][:, None, None] * b.vals1[sel]
            rows.append(np.broadcast_to(dofs[:, None, :], kernel.shape).ravel())
            cols.append(np.broadcast_to(idx[..., None], kernel.shape).ravel())
            vals.append((w[..., None] * kernel).ravel())
            xs.append(b.x[sel].ravel())
            ys.append(b.y[sel].ravel())
            offset += npts
        if offset:
            self.boundary_x = np.concatenate(xs)
            self.boundary_y = np.concatenate(ys)
            self.boundary_op = sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(n, offset),
            )
        else:
            self.boundary_x = self.boundary_y = np.empty(0)
            self.boundary_op = sp.csr_matrix((n, 0))

    def __call__(self, f, g) -> np.ndarray:
        """Load vector for spatial callables ``f(x, y)`` and ``g(x, y)``."""
        b = self.volume_op @ np.broadcast_to(f(self.volume_x, self.volume_y), self.volume_x.shape)
        if self.boundary_x.size:
            b = b + self.boundary_op @ np.broadcast_to(
                g(self.boundary_x, self.boundary_y), self.boundary_x.shape
            )
        return b

    def at_time(self, problem, t: float) -> np.ndarray:
        return self(lambda x, y: problem.f(x, y, t), lambda x, y: problem.g(x, y, t))


def assemble_load(space: IfeSpace, f, g, sigma: float, epsilon: int, vquad=None, equad=None):
    vquad = vquad if vquad is not None else volume_quadrature(space)
    equad = equad if equad is not None else edge_quadrature(space)
    return LoadOperator(space, sigma, epsilon, vquad, equad)(f, g)


def assemble_theta_load(load_n, load_nm1, theta: float) -> np.ndarray:
    if not 0.0 <= theta <= 1.0:
        raise InvalidArgument(f"theta must lie in [0, 1], got {theta}")
    return theta * np.asarray(load_n) + (1.0 - theta) * np.asarray(load_nm1)


def dump_matrix_market(system: DgSystem, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name, m in (("stiffness", system.stiffness), ("mass", system.mass)):
        path = directory / f"{name}.mtx"
        scipy.io.mmwrite(str(path), m)
        out.append(path)
    return out
