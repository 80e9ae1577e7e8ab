"""Cartesian meshes, implicit interface curves and cut-element geometry.

Elements are axis-aligned rectangles (or each rectangle split into two right
triangles along its lower-left/upper-right diagonal).  Vertices of every
element are stored counterclockwise, and local edge ``i`` joins local vertex
``i`` to vertex ``i + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .exceptions import DegenerateCut, HypothesisViolation, InvalidArgument

# |L| at or below this is treated as lying in the minus subdomain
SNAP_TOL = 1e-12
# sample points per edge when looking for hidden double crossings
EDGE_SAMPLES = 16

NONINTERFACE_MINUS = -1
INTERFACE = 0
NONINTERFACE_PLUS = 1


@dataclass(frozen=True)
class Domain:
    xmin: float = 0.0
    xmax: float = 1.0
    ymin: float = 0.0
    ymax: float = 1.0

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise InvalidArgument(f"empty domain {self}")

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)


@dataclass(frozen=True)
class InterfaceCurve:
    """Zero set of a level-set function; negative values are the minus side."""

    level_set: Callable[[np.ndarray, np.ndarray], np.ndarray]
    gradient: Callable | None = None
    scale: float = 1.0

    def __call__(self, x, y):
        return self.level_set(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def side(self, x, y) -> np.ndarray:
        """-1 / +1 per point, with near-zero values snapped to -1."""
        return np.where(self(x, y) > SNAP_TOL * self.scale, 1, -1)


def constant_curve(value: float) -> InterfaceCurve:
    """A level set with no zero set (every point on one side)."""
    return InterfaceCurve(lambda x, y: np.full(np.broadcast(x, y).shape, float(value)))


@dataclass(eq=False)
class CartesianMesh:
    domain: Domain
    ns: int
    simplex: bool
    nodes: np.ndarray  # (n_nodes, 2)
    elem_nodes: np.ndarray  # (n_elem, n_vert) counterclockwise
    elem_edges: np.ndarray  # (n_elem, n_vert) edge i joins vertex i and i+1
    elem_origin: np.ndarray  # (n_elem, 2) lower-left corner of the parent cell
    edge_nodes: np.ndarray  # (n_edge, 2)
    edge_elems: np.ndarray  # (n_edge, 2) K_e1, K_e2; K_e2 == -1 on the boundary
    edge_normals: np.ndarray  # (n_edge, 2)
    edge_lengths: np.ndarray  # (n_edge,)
    hx: float
    hy: float

    @property
    def h(self) -> float:
        return self.hx

    @property
    def n_elements(self) -> int:
        return len(self.elem_nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edge_nodes)

    @property
    def n_vertices_per_element(self) -> int:
        return self.elem_nodes.shape[1]

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_elems[:, 1] < 0)

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_elems[:, 1] >= 0)

    def element_vertices(self, k=None) -> np.ndarray:
        if k is None:
            return self.nodes[self.elem_nodes]
        return self.nodes[self.elem_nodes[k]]

    def element_areas(self) -> np.ndarray:
        return np.array([polygon_area(v) for v in self.element_vertices()])

    def element_centroids(self) -> np.ndarray:
        return self.element_vertices().mean(axis=1)

    def to_local(self, k, x, y):
        """Map global coordinates into the unit reference cell of element ``k``."""
        o = self.elem_origin[k]
        return (x - o[..., 0]) / self.hx, (y - o[..., 1]) / self.hy


def build_mesh(domain: Domain, ns: int, simplex: bool = False) -> CartesianMesh:
    """Uniform ``ns`` x ``ns`` Cartesian mesh of ``domain``."""
    if int(ns) != ns or ns < 2:
        raise InvalidArgument(f"need at least 2 subdivisions per axis, got {ns}")
    ns = int(ns)
    hx = (domain.xmax - domain.xmin) / ns
    hy = (domain.ymax - domain.ymin) / ns

    xs = domain.xmin + hx * np.arange(ns + 1)
    ys = domain.ymin + hy * np.arange(ns + 1)
    X, Y = np.meshgrid(xs, ys)  # node (i, j) -> j * (ns + 1) + i
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def node(i, j):
        return j * (ns + 1) + i

    n_vert_edges = ns * (ns + 1)

    def vedge(i, j):  # x = xs[i], spanning row j
        return j * (ns + 1) + i

    def hedge(i, j):  # y = ys[j], spanning column i
        return n_vert_edges + j * ns + i

    ii, jj = np.meshgrid(np.arange(ns), np.arange(ns))
    ii, jj = ii.ravel(), jj.ravel()  # cell c = j * ns + i
    n_cells = ns * ns
    cell_origin = np.column_stack([xs[ii], ys[jj]])

    # vertical then horizontal edges
    vi, vj = np.meshgrid(np.arange(ns + 1), np.arange(ns))
    vi, vj = vi.ravel(), vj.ravel()
    hi, hj = np.meshgrid(np.arange(ns), np.arange(ns + 1))
    hi, hj = hi.ravel(), hj.ravel()
    edge_nodes = np.concatenate(
        [
            np.column_stack([node(vi, vj), node(vi, vj + 1)]),
            np.column_stack([node(hi, hj), node(hi + 1, hj)]),
        ]
    )
    normals = np.concatenate(
        [np.tile([1.0, 0.0], (len(vi), 1)), np.tile([0.0, 1.0], (len(hi), 1))]
    )
    edge_elems = np.full((len(edge_nodes), 2), -1, dtype=np.int64)

    if not simplex:
        cell = lambda i, j: j * ns + i  # noqa: E731
        elem_nodes = np.column_stack(
            [node(ii, jj), node(ii + 1, jj), node(ii + 1, jj + 1), node(ii, jj + 1)]
        )
        elem_edges = np.column_stack(
            [hedge(ii, jj), vedge(ii + 1, jj), hedge(ii, jj + 1), vedge(ii, jj)]
        )
        elem_origin = cell_origin
        left = np.where(vi > 0, cell(vi - 1, vj), -1)
        right = np.where(vi < ns, cell(vi, vj), -1)
        below = np.where(hj > 0, cell(hi, hj - 1), -1)
        above = np.where(hj < ns, cell(hi, hj), -1)
        extra_edges = np.empty((0, 2), dtype=np.int64)
        extra_normals = np.empty((0, 2))
        extra_elems = np.empty((0, 2), dtype=np.int64)
    else:
        lower = lambda i, j: 2 * (j * ns + i)  # noqa: E731
        upper = lambda i, j: 2 * (j * ns + i) + 1  # noqa: E731
        n_base = len(edge_nodes)
        diag = n_base + np.arange(n_cells)
        elem_nodes = np.empty((2 * n_cells, 3), dtype=np.int64)
        elem_edges = np.empty((2 * n_cells, 3), dtype=np.int64)
        elem_nodes[0::2] = np.column_stack([node(ii, jj), node(ii + 1, jj), node(ii + 1, jj + 1)])
        elem_edges[0::2] = np.column_stack([hedge(ii, jj), vedge(ii + 1, jj), diag])
        elem_nodes[1::2] = np.column_stack([node(ii, jj), node(ii + 1, jj + 1), node(ii, jj + 1)])
        elem_edges[1::2] = np.column_stack([diag, hedge(ii, jj + 1), vedge(ii, jj)])
        elem_origin = np.repeat(cell_origin, 2, axis=0)
        left = np.where(vi > 0, lower(vi - 1, vj), -1)
        right = np.where(vi < ns, upper(vi, vj), -1)
        below = np.where(hj > 0, upper(hi, hj - 1), -1)
        above = np.where(hj < ns, lower(hi, hj), -1)
        extra_edges = np.column_stack([node(ii, jj), node(ii + 1, jj + 1)])
        d = np.array([-hy, hx]) / np.hypot(hx, hy)
        extra_normals = np.tile(d, (n_cells, 1))
        extra_elems = np.column_stack([lower(ii, jj), upper(ii, jj)])

    nv = len(vi)
    edge_elems[:nv, 0] = left
    edge_elems[:nv, 1] = right
    edge_elems[nv:, 0] = below
    edge_elems[nv:, 1] = above
    edge_nodes = np.concatenate([edge_nodes, extra_edges]).astype(np.int64)
    normals = np.concatenate([normals, extra_normals])
    edge_elems = np.concatenate([edge_elems, extra_elems])

    # boundary edges: the single neighbour goes in slot 0, normal points outward
    only_second = edge_elems[:, 0] < 0
    normals[only_second] *= -1.0
    edge_elems[only_second, 0] = edge_elems[only_second, 1]
    edge_elems[only_second, 1] = -1

    p = nodes[edge_nodes]
    lengths = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    return CartesianMesh(
        domain=domain,
        ns=ns,
        simplex=bool(simplex),
        nodes=nodes,
        elem_nodes=elem_nodes.astype(np.int64),
        elem_edges=elem_edges.astype(np.int64),
        elem_origin=elem_origin,
        edge_nodes=edge_nodes,
        edge_elems=edge_elems,
        edge_normals=normals,
        edge_lengths=lengths,
        hx=hx,
        hy=hy,
    )


def polygon_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(vertices) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)


def edge_intersection(p0, p1, curve: InterfaceCurve, tol: float = 1e-14) -> np.ndarray:
    """Point where ``curve`` crosses the segment p0-p1 (Brent's method)."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    l0 = float(curve(*p0))
    l1 = float(curve(*p1))
    if not l0 * l1 < 0:
        raise InvalidArgument(
            f"level set does not change sign on segment {p0.tolist()}-{p1.tolist()}"
        )
    d = p1 - p0

    def along(s):
        return float(curve(*(p0 + s * d)))

    s = brentq(along, 0.0, 1.0, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
    return p0 + s * d


def _crossing(p0, p1, l0, l1, curve):
    # endpoints snapped to the minus side count as the crossing itself
    if abs(l0) <= SNAP_TOL * curve.scale:
        return np.asarray(p0, dtype=float)
    if abs(l1) <= SNAP_TOL * curve.scale:
        return np.asarray(p1, dtype=float)
    return edge_intersection(p0, p1, curve)


def _on_segment(p, a, b, tol):
    ab = b - a
    ap = p - a
    L = np.linalg.norm(ab)
    cross = abs(ab[0] * ap[1] - ab[1] * ap[0]) / L
    s = np.dot(ap, ab) / (L * L)
    return cross <= tol and -tol <= s <= 1 + tol


def subpolygons(vertices, D, E, curve: InterfaceCurve, edges=None):
    """Split a convex element along the chord DE into (minus, plus) polygons.

    Both polygons are returned counterclockwise.  ``edges`` gives the local
    edge indices holding D and E when already known.
    """
    V = np.asarray(vertices, dtype=float)
    D = np.asarray(D, dtype=float)
    E = np.asarray(E, dtype=float)
    nv = len(V)
    diam = np.max(np.linalg.norm(V - V.mean(axis=0), axis=1))
    if np.linalg.norm(E - D) < 1e-10 * diam:
        raise DegenerateCut(f"chord endpoints coincide: D={D.tolist()}, E={E.tolist()}")

    if edges is None:
        tol = 1e-12 * diam
        on = [
            [i for i in range(nv) if _on_segment(P, V[i], V[(i + 1) % nv], tol)]
            for P in (D, E)
        ]
        if not on[0] or not on[1]:
            raise InvalidArgument("chord endpoints must lie on the element boundary")
        choice = [(a, b) for a in on[0] for b in on[1] if a != b]
        if not choice:
            raise HypothesisViolation("H2", "interface enters and leaves through one edge")
        edges = choice[0]
    iD, iE = edges
    if iD == iE:
        raise HypothesisViolation("H2", "interface enters and leaves through one edge")

    # walk the boundary counterclockwise inserting D and E after their edge's start
    ring = []
    for i in range(nv):
        ring.append((V[i], True))
        if i == iD:
            ring.append((D, False))
        if i == iE:
            ring.append((E, False))
    start = next(j for j, (p, is_vertex) in enumerate(ring) if p is D)
    ring = ring[start:] + ring[:start]
    stop = next(j for j, (p, is_vertex) in enumerate(ring) if p is E)
    first = ring[: stop + 1]
    second = ring[stop:] + ring[:1]

    def clean(chain):
        pts = [p for p, _ in chain]
        out = [pts[0]]
        for p in pts[1:]:
            if np.linalg.norm(p - out[-1]) > 1e-14 * diam:
                out.append(p)
        if len(out) > 1 and np.linalg.norm(out[0] - out[-1]) <= 1e-14 * diam:
            out.pop()
        return np.array(out)

    def chain_side(chain):
        verts = np.array([p for p, is_vertex in chain if is_vertex])
        sides = curve.side(verts[:, 0], verts[:, 1]) if len(verts) else np.array([])
        if len(sides) == 0:
            return None
        # a vertex on the curve is snapped minus; let strictly-signed ones decide
        vals = curve(verts[:, 0], verts[:, 1])
        strict = np.abs(vals) > SNAP_TOL * curve.scale
        if strict.any():
            return int(np.sign(vals[strict][0]))
        return int(sides[0])

    s1 = chain_side(first)
    s2 = chain_side(second)
    if s1 is None:
        s1 = -s2
    if s2 is None:
        s2 = -s1
    if s1 == s2:
        # both chains on one side: pick by the chord midpoint offset towards each chain
        mid = 0.5 * (D + E)
        c1 = polygon_centroid(clean(first))
        s1 = int(np.sign(float(curve(*(mid + 1e-3 * (c1 - mid))))) or -1)
        s2 = -s1
    p1, p2 = clean(first), clean(second)
    return (p1, p2) if s1 < 0 else (p2, p1)


@dataclass(eq=False)
class CutGeometry:
    element: int
    D: np.ndarray
    E: np.ndarray
    edges: tuple  # local edge indices holding D and E
    minus: np.ndarray  # counterclockwise polygon K-
    plus: np.ndarray  # counterclockwise polygon K+

    @property
    def area_minus(self) -> float:
        return polygon_area(self.minus)

    @property
    def area_plus(self) -> float:
        return polygon_area(self.plus)

    @property
    def chord_length(self) -> float:
        return float(np.linalg.norm(self.E - self.D))

    @property
    def normal(self) -> np.ndarray:
        """Unit normal of DE pointing from K- into K+."""
        t = (self.E - self.D) / self.chord_length
        n = np.array([t[1], -t[0]])
        if np.dot(n, polygon_centroid(self.plus) - self.D) < 0:
            n = -n
        return n


@dataclass(eq=False)
class Classification:
    tags: np.ndarray  # per element: -1, 0 (interface), +1
    cuts: dict = field(default_factory=dict)  # element -> CutGeometry
    edge_crossings: dict = field(default_factory=dict)  # edge -> crossing point

    @property
    def interface_elements(self) -> np.ndarray:
        return np.flatnonzero(self.tags == INTERFACE)

    def is_interface_edge(self, e) -> bool:
        return e in self.edge_crossings


def classify_elements(mesh: CartesianMesh, curve: InterfaceCurve) -> Classification:
    """Tag elements as noninterface-/+ or interface and build their cut geometry."""
    nodes = mesh.nodes
    lv = curve(nodes[:, 0], nodes[:, 1])
    node_side = np.where(lv > SNAP_TOL * curve.scale, 1, -1)

    # H1: no edge may cross the interface more than once
    p = nodes[mesh.edge_nodes]
    s = np.linspace(0.0, 1.0, EDGE_SAMPLES + 1)
    samples = p[:, 0, None, :] + s[None, :, None] * (p[:, 1] - p[:, 0])[:, None, :]
    ls = curve(samples[..., 0], samples[..., 1])
    ss = np.where(ls > SNAP_TOL * curve.scale, 1, -1)
    changes = np.count_nonzero(np.diff(ss, axis=1), axis=1)
    bad = np.flatnonzero(changes >= 2)
    if bad.size:
        e = int(bad[0])
        raise HypothesisViolation(
            "H1", f"edge {e} meets the interface at {changes[e]} points", edge=e
        )

    en = mesh.edge_nodes
    crossing_edges = np.flatnonzero(node_side[en[:, 0]] != node_side[en[:, 1]])
    edge_crossings = {
        int(e): _crossing(nodes[en[e, 0]], nodes[en[e, 1]], lv[en[e, 0]], lv[en[e, 1]], curve)
        for e in crossing_edges
    }

    elem_sides = node_side[mesh.elem_nodes]
    tags = np.where(
        (elem_sides < 0).all(axis=1),
        NONINTERFACE_MINUS,
        np.where((elem_sides > 0).all(axis=1), NONINTERFACE_PLUS, INTERFACE),
    )
    cuts = {}
    hmin2 = min(mesh.hx, mesh.hy) ** 2
    for k in np.flatnonzero(tags == INTERFACE):
        k = int(k)
        local = [i for i, e in enumerate(mesh.elem_edges[k]) if int(e) in edge_crossings]
        if len(local) != 2:
            raise HypothesisViolation(
                "H2", f"element {k} meets the interface at {len(local)} points", element=k
            )
        iD, iE = local
        D = edge_crossings[int(mesh.elem_edges[k, iD])]
        E = edge_crossings[int(mesh.elem_edges[k, iE])]
        verts = mesh.element_vertices(k)
        try:
            minus, plus = subpolygons(verts, D, E, curve, edges=(iD, iE))
        except DegenerateCut:
            minus_wins = (elem_sides[k] < 0).sum() * 2 >= len(verts)
        else:
            cut = CutGeometry(k, D, E, (iD, iE), minus, plus)
            if min(cut.area_minus, cut.area_plus) >= 1e-12 * hmin2:
                cuts[k] = cut
                continue
            minus_wins = cut.area_minus >= cut.area_plus
        tags[k] = NONINTERFACE_MINUS if minus_wins else NONINTERFACE_PLUS
    return Classification(tags=tags, cuts=cuts, edge_crossings=edge_crossings)
