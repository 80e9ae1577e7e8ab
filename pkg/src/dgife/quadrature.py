"""Gauss rules on segments, rectangles, triangles and cut elements.

Reference domains are [0, 1], [0, 1]^2 and the triangle (0,0), (1,0), (0,1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .exceptions import DegenerateCut, InvalidArgument
from .mesh import SNAP_TOL, CutGeometry, InterfaceCurve, _crossing, polygon_area

MAX_ORDER = 10

VOLUME_ORDER = 3
EDGE_ORDER = 4


@dataclass(frozen=True, eq=False)
class QuadRule:
    points: np.ndarray  # (n, dim)
    weights: np.ndarray  # (n,)
    degree: int
    tags: np.ndarray | None = None  # optional -1/+1 side per point

    def integrate(self, f) -> float:
        pts = self.points
        vals = f(*pts.T) if pts.ndim == 2 else f(pts)
        return float(np.dot(self.weights, vals))


@dataclass(frozen=True, eq=False)
class CutElementRule:
    minus: QuadRule
    plus: QuadRule

    def integrate(self, f_minus, f_plus=None) -> float:
        return self.minus.integrate(f_minus) + self.plus.integrate(f_plus or f_minus)


def _check_order(order):
    if int(order) != order or not 1 <= order <= MAX_ORDER:
        raise InvalidArgument(f"quadrature order must be in 1..{MAX_ORDER}, got {order}")
    return int(order)


@lru_cache(maxsize=None)
def _legendre01(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_segment(order: int) -> QuadRule:
    """Gauss-Legendre on [0, 1]; exact to degree 2*order - 1."""
    order = _check_order(order)
    x, w = _legendre01(order)
    return QuadRule(x.copy(), w.copy(), 2 * order - 1)


def gauss_rect(order: int) -> QuadRule:
    """Tensor Gauss rule on [0, 1]^2, exact to degree 2*order - 1 per variable."""
    order = _check_order(order)
    x, w = _legendre01(order)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    return QuadRule(np.column_stack([X.ravel(), Y.ravel()]), W.ravel(), 2 * order - 1)


@lru_cache(maxsize=None)
def _collapsed_tri(order):
    # Duffy collapse: x = u, y = v (1 - u); Gauss-Jacobi(1, 0) absorbs the Jacobian
    z, wz = roots_jacobi(order, 1.0, 0.0)
    u = 0.5 * (z + 1.0)
    wu = wz / 4.0
    v, wv = _legendre01(order)
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    pts = np.column_stack([U.ravel(), (V * (1.0 - U)).ravel()])
    return pts, W.ravel()


def gauss_tri(order: int) -> QuadRule:
    """Collapsed Gauss rule on the reference triangle, exact to total degree 2*order - 1."""
    order = _check_order(order)
    pts, w = _collapsed_tri(order)
    return QuadRule(pts.copy(), w.copy(), 2 * order - 1)


def map_segment(rule: QuadRule, p0, p1) -> QuadRule:
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    L = float(np.linalg.norm(p1 - p0))
    pts = p0 + rule.points[:, None] * (p1 - p0)
    return QuadRule(pts, rule.weights * L, rule.degree)


def map_triangle(rule: QuadRule, a, b, c) -> QuadRule:
    a, b, c = (np.asarray(p, dtype=float) for p in (a, b, c))
    J = np.column_stack([b - a, c - a])
    det = float(np.linalg.det(J))
    pts = a + rule.points @ J.T
    return QuadRule(pts, rule.weights * abs(det), rule.degree)


def polygon_rule(polygon, order: int) -> QuadRule:
    """Fan triangulation from the first vertex; valid for convex polygons."""
    P = np.asarray(polygon, dtype=float)
    if len(P) < 3:
        raise DegenerateCut(f"polygon with {len(P)} vertices")
    area = polygon_area(P)
    if not area > 0:
        raise DegenerateCut(f"polygon with non-positive area {area}")
    ref = gauss_tri(order)
    pts, wts = [], []
    for i in range(1, len(P) - 1):
        r = map_triangle(ref, P[0], P[i], P[i + 1])
        pts.append(r.points)
        wts.append(r.weights)
    return QuadRule(np.concatenate(pts), np.concatenate(wts), ref.degree)


def _subdivide(tris, m):
    """Split triangles (t, 3, 2) uniformly into m*m congruent children."""
    a, b, c = tris[:, 0, None], tris[:, 1, None], tris[:, 2, None]
    up, down = [], []
    for i in range(m):
        for j in range(m - i):
            up.append([(i, j), (i + 1, j), (i, j + 1)])
            if j < m - i - 1:
                down.append([(i + 1, j), (i + 1, j + 1), (i, j + 1)])
    bary = np.array(up + down, dtype=float) / m  # (m*m, 3, 2)
    s, t = bary[None, ..., 0, None], bary[None, ..., 1, None]
    kids = a[:, None] + s * (b - a)[:, None] + t * (c - a)[:, None]
    return kids.reshape(-1, 3, 2)


def _zero_on_edges(p, q, lp, lq, curve, sweeps=3):
    """Secant refinement of the level-set root on segments p-q (vectorized)."""
    s0, s1 = np.zeros(len(p)), np.ones(len(p))
    f0, f1 = lp.copy(), lq.copy()
    s = f0 / (f0 - f1)
    for _ in range(sweeps):
        x = p + s[:, None] * (q - p)
        fs = curve(x[:, 0], x[:, 1])
        left = np.sign(fs) == np.sign(f0)
        s0, f0 = np.where(left, s, s0), np.where(left, fs, f0)
        s1, f1 = np.where(left, s1, s), np.where(left, f1, fs)
        den = f0 - f1
        s = np.where(den != 0, s0 + f0 * (s1 - s0) / np.where(den != 0, den, 1.0), s)
    return p + s[:, None] * (q - p)


def curve_resolved_rule(polygon, curve: InterfaceCurve, order: int, subdivisions: int) -> QuadRule:
    """Composite rule on a convex polygon whose cells do not straddle ``curve``.

    The fan triangles are subdivided uniformly and every child the level set
    crosses is cut along the secant of its zero set.  Use it for integrands
    that jump across the curve itself rather than across a chord.
    """
    P = np.asarray(polygon, dtype=float)
    tris = np.stack([np.stack([P[0], P[i], P[i + 1]]) for i in range(1, len(P) - 1)])
    tris = _subdivide(tris, subdivisions)
    L = curve(tris[..., 0], tris[..., 1])
    pos = L > SNAP_TOL * curve.scale
    npos = pos.sum(axis=1)
    mixed = (npos == 1) | (npos == 2)
    pieces = [tris[~mixed]]
    if mixed.any():
        T, S, Lm = tris[mixed], pos[mixed], L[mixed]
        # the vertex alone on its side goes first, orientation is irrelevant here
        lone = np.where(S.sum(axis=1) == 1, np.argmax(S, axis=1), np.argmin(S, axis=1))
        idx = (lone[:, None] + np.arange(3)) % 3
        T = np.take_along_axis(T, idx[..., None], axis=1)
        Lm = np.take_along_axis(Lm, idx, axis=1)
        A, B, C = T[:, 0], T[:, 1], T[:, 2]
        X = _zero_on_edges(A, B, Lm[:, 0], Lm[:, 1], curve)
        Y = _zero_on_edges(A, C, Lm[:, 0], Lm[:, 2], curve)
        pieces += [np.stack([A, X, Y], 1), np.stack([X, B, C], 1), np.stack([X, C, Y], 1)]
    tris = np.concatenate(pieces)
    ref = gauss_tri(order)
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    e1, e2 = b - a, c - a
    det = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    keep = det > 0  # a zero set through a vertex leaves empty slivers
    a, e1, e2, det = a[keep], e1[keep], e2[keep], det[keep]
    pts = a[:, None] + ref.points[None, :, 0, None] * e1[:, None] + ref.points[None, :, 1, None] * e2[:, None]
    w = det[:, None] * ref.weights[None]
    return QuadRule(pts.reshape(-1, 2), w.ravel(), ref.degree)


def cut_rule(cut: CutGeometry, order: int = VOLUME_ORDER) -> CutElementRule:
    return CutElementRule(polygon_rule(cut.minus, order), polygon_rule(cut.plus, order))


def split_edge_rule(
    p0, p1, curve: InterfaceCurve, order: int = EDGE_ORDER, crossing=None
) -> QuadRule:
    """Gauss rule on the segment p0-p1, split at the interface if it crosses.

    Each point is tagged with the side of the sub-segment it belongs to.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    ref = gauss_segment(order)
    if crossing is None:
        l0, l1 = float(curve(*p0)), float(curve(*p1))
        tol = SNAP_TOL * curve.scale
        s0 = 1 if l0 > tol else -1
        s1 = 1 if l1 > tol else -1
        if s0 != s1:
            crossing = _crossing(p0, p1, l0, l1, curve)
    if crossing is None:
        r = map_segment(ref, p0, p1)
        tags = curve.side(*r.points.T)
        return QuadRule(r.points, r.weights, r.degree, tags)
    crossing = np.asarray(crossing, dtype=float)
    parts = [(p0, crossing), (crossing, p1)]
    pts, wts, tags = [], [], []
    for a, b in parts:
        if np.linalg.norm(b - a) == 0.0:
            continue
        r = map_segment(ref, a, b)
        side = int(curve.side(*(0.5 * (a + b))))
        pts.append(r.points)
        wts.append(r.weights)
        tags.append(np.full(len(r.weights), side))
    return QuadRule(np.concatenate(pts), np.concatenate(wts), ref.degree, np.concatenate(tags))
