"""Local finite element spaces: standard nodal bases and IFE bases on cut elements.

Every local function is stored as two polynomial pieces (minus, plus) in the
reference coordinates of its parent cell, xi = (x - x_K) / hx and
eta = (y - y_K) / hy, over the monomials (1, xi, eta, xi*eta).  Linear
(triangle) bases keep the xi*eta coefficient at zero.  A chord function
``line`` picks the piece: points with ``line(xi, eta) > 0`` use the plus piece.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import IfeConstructionError, InvalidArgument
from .mesh import INTERFACE, CartesianMesh, Classification, CutGeometry, InterfaceCurve

MINUS, PLUS = 0, 1
COND_LIMIT = 1e12


def monomials(xi, eta):
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return np.stack([np.ones_like(xi), xi, eta, xi * eta], axis=-1)


def monomial_gradients(xi, eta):
    """Reference-coordinate gradients, shape (..., 4, 2)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    z, o = np.zeros_like(xi), np.ones_like(xi)
    dxi = np.stack([z, o, z, eta], axis=-1)
    deta = np.stack([z, z, o, xi], axis=-1)
    return np.stack([dxi, deta], axis=-1)


def evaluate(coef, line, xi, eta, hx, hy, piece=None):
    """Values and physical gradients of a batch of local bases.

    ``coef`` is (n, 2, d, 4), ``line`` is (n, 3) and ``xi``/``eta`` are (n, q).
    ``piece`` overrides the chord-side selection where it is >= 0.
    Returns values (n, q, d), gradients (n, q, d, 2) and the piece used (n, q).
    """
    n = coef.shape[0]
    s = line[:, 0, None] * xi + line[:, 1, None] * eta + line[:, 2, None]
    chosen = (s > 0).astype(np.int64)
    if piece is not None:
        chosen = np.where(piece >= 0, piece, chosen)
    C = coef[np.arange(n)[:, None], chosen]  # (n, q, d, 4)
    vals = np.einsum("nqdm,nqm->nqd", C, monomials(xi, eta))
    g = np.einsum("nqdm,nqmk->nqdk", C, monomial_gradients(xi, eta))
    g = g / np.array([hx, hy])
    return vals, g, chosen


def _nodal_coefficients(local_vertices):
    nv = len(local_vertices)
    V = monomials(local_vertices[:, 0], local_vertices[:, 1])[:, :nv]
    coef = np.zeros((nv, 4))
    coef[:, :nv] = np.linalg.inv(V).T
    return coef


@dataclass(eq=False)
class IfeLocalBasis:
    element: int
    coef: np.ndarray  # (2, d, 4)
    line: np.ndarray  # (3,) chord function in reference coordinates
    origin: np.ndarray
    hx: float
    hy: float
    cut: CutGeometry | None = None

    @property
    def d(self) -> int:
        return self.coef.shape[1]

    @property
    def is_interface(self) -> bool:
        return self.cut is not None

    def eval(self, points, side_hint=None):
        return eval_basis(self, points, side_hint)


def build_standard_basis(vertices, origin=(0.0, 0.0), hx=1.0, hy=1.0, side=-1, element=-1):
    """Nodal (bi)linear basis on a noninterface element."""
    V = np.asarray(vertices, dtype=float)
    local = (V - np.asarray(origin)) / np.array([hx, hy])
    c = _nodal_coefficients(local)
    line = np.array([0.0, 0.0, 1.0 if side > 0 else -1.0])
    return IfeLocalBasis(element, np.stack([c, c]), line, np.asarray(origin, float), hx, hy)


def build_ife_basis(
    vertices, cut: CutGeometry, beta_minus, beta_plus, origin=(0.0, 0.0), hx=1.0, hy=1.0
) -> IfeLocalBasis:
    """Piecewise (bi)linear basis satisfying the interface conditions across DE.

    Each basis function is continuous at D and E, shares the xi*eta coefficient
    between pieces (rectangles) and has zero mean flux jump over DE.
    """
    if not (beta_minus > 0 and beta_plus > 0):
        raise InvalidArgument("diffusion coefficients must be positive")
    V = np.asarray(vertices, dtype=float)
    origin = np.asarray(origin, dtype=float)
    scale = np.array([hx, hy])
    nv = len(V)
    m = 4 if nv == 4 else 3  # monomials per piece
    local = (V - origin) / scale
    Dl = (cut.D - origin) / scale
    El = (cut.E - origin) / scale

    n_glob = cut.normal
    # chord function in reference coordinates, negative on the minus side
    t = El - Dl
    nl = np.array([t[1], -t[0]])
    nl /= np.linalg.norm(nl)
    Cp = (np.mean(cut.plus, axis=0) - origin) / scale
    if np.dot(nl, Cp - Dl) < 0:
        nl = -nl
    line = np.array([nl[0], nl[1], -np.dot(nl, Dl)])

    vertex_piece = (local @ line[:2] + line[2] > 0).astype(int)
    S = np.zeros((2 * m, 2 * m))
    R = np.zeros((2 * m, nv))
    mon = monomials(local[:, 0], local[:, 1])[:, :m]
    for j in range(nv):
        blk = vertex_piece[j] * m
        S[j, blk : blk + m] = mon[j]
        R[j, j] = 1.0
    row = nv
    for P in (Dl, El):
        mp = monomials(*P)[:m]
        S[row, :m] = mp
        S[row, m:] = -mp
        row += 1
    if m == 4:
        S[row, 3] = 1.0
        S[row, 7] = -1.0
        row += 1
    # gradients are affine on each piece, so the mean over DE is the midpoint value
    M = 0.5 * (Dl + El)
    G = monomial_gradients(*M)[:m] / scale  # (m, 2)
    flux = G @ n_glob
    bmax = max(beta_minus, beta_plus)
    S[row, :m] = -beta_minus * flux / bmax
    S[row, m:] = beta_plus * flux / bmax

    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IfeConstructionError(
            f"singular IFE system on element {cut.element} (condition {cond:.3e})",
            element=cut.element,
            cut=cut,
        )
    X = np.linalg.solve(S, R)  # (2m, nv)
    coef = np.zeros((2, nv, 4))
    coef[MINUS, :, :m] = X[:m].T
    coef[PLUS, :, :m] = X[m:].T
    return IfeLocalBasis(cut.element, coef, line, origin, hx, hy, cut)


def eval_basis(basis: IfeLocalBasis, points, side_hint=None):
    """Values (n, d) and gradients (n, d, 2) of a local basis at points.

    ``side_hint`` (-1/+1) forces the piece; use it for points on the chord.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    local = (P - basis.origin) / np.array([basis.hx, basis.hy])
    slack = 1e-12
    if (local < -slack).any() or (local > 1 + slack).any():
        raise InvalidArgument("point outside the element")
    piece = None
    if side_hint is not None:
        piece = np.full((1, len(P)), PLUS if side_hint > 0 else MINUS)
    vals, grads, _ = evaluate(
        basis.coef[None], basis.line[None], local[None, :, 0], local[None, :, 1],
        basis.hx, basis.hy, piece,
    )
    return vals[0], grads[0]


@dataclass(frozen=True)
class DgDofMap:
    n_elements: int
    d: int

    @property
    def n_dof(self) -> int:
        return self.n_elements * self.d

    def dofs(self, k):
        k = np.asarray(k)
        return k[..., None] * self.d + np.arange(self.d)


@dataclass(eq=False)
class IfeSpace:
    """Discontinuous IFE space over a classified mesh."""

    mesh: CartesianMesh
    classification: Classification
    curve: InterfaceCurve
    beta_minus: float
    beta_plus: float
    coef: np.ndarray  # (n_elem, 2, d, 4)
    line: np.ndarray  # (n_elem, 3)
    dofmap: DgDofMap

    @property
    def d(self) -> int:
        return self.dofmap.d

    @property
    def n_dof(self) -> int:
        return self.dofmap.n_dof

    @property
    def tags(self) -> np.ndarray:
        return self.classification.tags

    def beta(self, piece):
        return np.where(piece == PLUS, self.beta_plus, self.beta_minus)

    def basis(self, k) -> IfeLocalBasis:
        return IfeLocalBasis(
            int(k), self.coef[k], self.line[k], self.mesh.elem_origin[k],
            self.mesh.hx, self.mesh.hy, self.classification.cuts.get(int(k)),
        )

    def evaluate(self, elems, x, y, piece=None):
        """Evaluate bases of ``elems`` (n,) at global points ``x``, ``y`` (n, q)."""
        elems = np.asarray(elems)
        o = self.mesh.elem_origin[elems]
        xi = (x - o[:, 0, None]) / self.mesh.hx
        eta = (y - o[:, 1, None]) / self.mesh.hy
        return evaluate(self.coef[elems], self.line[elems], xi, eta, self.mesh.hx, self.mesh.hy, piece)

    def with_coefficients(self, beta_minus, beta_plus) -> "IfeSpace":
        return build_space(self.mesh, self.classification, self.curve, beta_minus, beta_plus)


def build_space(
    mesh: CartesianMesh,
    classification: Classification,
    curve: InterfaceCurve,
    beta_minus: float,
    beta_plus: float,
) -> IfeSpace:
    nv = mesh.n_vertices_per_element
    verts = mesh.element_vertices()
    local = (verts - mesh.elem_origin[:, None, :]) / np.array([mesh.hx, mesh.hy])
    coef = np.empty((mesh.n_elements, 2, nv, 4))
    line = np.zeros((mesh.n_elements, 3))
    # reference nodal bases: one pattern for rectangles, two for triangles
    patterns = {}
    for k in range(min(mesh.n_elements, 2)):
        patterns[k % 2] = _nodal_coefficients(local[k])
    parity = np.arange(mesh.n_elements) % 2 if mesh.simplex else np.zeros(mesh.n_elements, int)
    for p, c in patterns.items():
        coef[parity == p] = c
    line[:, 2] = np.where(classification.tags > 0, 1.0, -1.0)
    for k in np.flatnonzero(classification.tags == INTERFACE):
        b = build_ife_basis(
            verts[k], classification.cuts[int(k)], beta_minus, beta_plus,
            mesh.elem_origin[k], mesh.hx, mesh.hy,
        )
        coef[k] = b.coef
        line[k] = b.line
    return IfeSpace(
        mesh, classification, curve, float(beta_minus), float(beta_plus), coef, line,
        DgDofMap(mesh.n_elements, nv),
    )
