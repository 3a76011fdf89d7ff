"""Compact convex curves as polylines with per-node tangent data.

A curve is assembled from *pieces* (straight segments and smooth arcs). Smooth
arcs are sampled at build time; every node keeps its incoming and outgoing
tangent angle, so a node where the two differ is a corner (an atom of the
turning measure) and a node where they agree is a sampling node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BasePointOutside,
    CurveError,
    DegenerateCurve,
    NotConvex,
    StartPointOffCurve,
)

TWO_PI = 2.0 * np.pi

#: Relative tolerance for all geometric predicates (fraction of the diameter).
GEOM_TOL = 1e-12
#: Absolute tolerance on tangent angles, in radians.
ANGLE_TOL = 1e-9
#: Total number of nodes spread over the smooth pieces of a curve.
DEFAULT_RESOLUTION = 4096


def wrap_angle(a):
    """Map angles to the half-open interval (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    return np.pi - np.mod(np.pi - a, TWO_PI)


# ---------------------------------------------------------------------------
# pieces


@dataclass(frozen=True)
class Segment:
    start: np.ndarray
    end: np.ndarray

    smooth = False

    @property
    def angle(self) -> float:
        d = np.asarray(self.end) - np.asarray(self.start)
        return float(np.arctan2(d[1], d[0]))


class SmoothPiece:
    """A smooth convex arc, parametrized over ``u`` in [0, 1].

    Subclasses provide ``point(u)`` returning an ``(m, 2)`` array and
    ``tangent(u)`` returning direction vectors (any positive length).
    """

    smooth = True
    fixed_samples: np.ndarray | None = None

    def point(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def tangent(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def start(self) -> np.ndarray:
        return self.point(np.array([0.0]))[0]

    @property
    def end(self) -> np.ndarray:
        return self.point(np.array([1.0]))[0]

    def approx_length(self, n: int = 512) -> float:
        p = self.point(np.linspace(0.0, 1.0, n + 1))
        return float(np.sum(np.hypot(*np.diff(p, axis=0).T)))

    def sample(self, n_edges: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``n_edges + 1`` points and their tangent angles."""
        u = np.linspace(0.0, 1.0, n_edges + 1)
        p = self.point(u)
        d = self.tangent(u)
        return p, np.arctan2(d[:, 1], d[:, 0])


class CircleArc(SmoothPiece):
    def __init__(self, center, radius: float, start_angle: float, span: float):
        if radius <= 0 or span <= 0:
            raise CurveError("circle arc needs positive radius and span")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.start_angle = float(start_angle)
        self.span = float(span)

    def point(self, u):
        a = self.start_angle + self.span * np.asarray(u, dtype=float)
        return self.center + self.radius * np.column_stack([np.cos(a), np.sin(a)])

    def tangent(self, u):
        a = self.start_angle + self.span * np.asarray(u, dtype=float)
        return np.column_stack([-np.sin(a), np.cos(a)])


class EllipticArc(SmoothPiece):
    """Image of a circular arc under ``x -> center + matrix @ x``."""

    def __init__(self, center, matrix, start_angle: float, span: float):
        self.center = np.asarray(center, dtype=float)
        self.matrix = np.asarray(matrix, dtype=float).reshape(2, 2)
        if np.linalg.det(self.matrix) <= 0 or span <= 0:
            raise CurveError("elliptic arc needs an orientation-preserving matrix and positive span")
        self.start_angle = float(start_angle)
        self.span = float(span)

    def point(self, u):
        a = self.start_angle + self.span * np.asarray(u, dtype=float)
        return self.center + np.column_stack([np.cos(a), np.sin(a)]) @ self.matrix.T

    def tangent(self, u):
        a = self.start_angle + self.span * np.asarray(u, dtype=float)
        return np.column_stack([-np.sin(a), np.cos(a)]) @ self.matrix.T


class ParametricArc(SmoothPiece):
    """Arc given by vectorized callables for the point and its derivative."""

    def __init__(self, point: Callable, derivative: Callable):
        self._point = point
        self._derivative = derivative

    def point(self, u):
        return np.asarray(self._point(np.asarray(u, dtype=float)), dtype=float).reshape(-1, 2)

    def tangent(self, u):
        return np.asarray(self._derivative(np.asarray(u, dtype=float)), dtype=float).reshape(-1, 2)


class SampledArc(SmoothPiece):
    """Arc known only through samples; tangents follow the adjacent chords.

    Interior samples get the bisector of the two adjacent chord directions,
    the two end samples the direction of their single chord.
    """

    def __init__(self, samples):
        s = np.asarray(samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != 2 or len(s) < 2:
            raise CurveError("sampled arc needs at least two [x, y] samples")
        self.fixed_samples = s

    def point(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        s = self.fixed_samples
        x = u * (len(s) - 1)
        k = np.clip(np.floor(x).astype(int), 0, len(s) - 2)
        f = (x - k)[:, None]
        return s[k] * (1 - f) + s[k + 1] * f

    def sample(self, n_edges: int):
        s = self.fixed_samples
        chords = np.diff(s, axis=0)
        ang = np.arctan2(chords[:, 1], chords[:, 0])
        out = np.empty(len(s))
        out[0], out[-1] = ang[0], ang[-1]
        out[1:-1] = ang[:-1] + 0.5 * wrap_angle(ang[1:] - ang[:-1])
        return s.copy(), out


# ---------------------------------------------------------------------------
# the curve


@dataclass(frozen=True, eq=False)
class ConvexCurve:
    """A validated compact convex curve sampled as a closed polyline.

    Node ``i`` sits at ``points[i]``; edge ``i`` joins node ``i`` to node
    ``i + 1`` (cyclically). ``theta_l``/``theta_r`` are the absolute incoming
    and outgoing tangent angles at each node and ``curved[i]`` tells whether
    edge ``i`` samples a smooth arc (tangent interpolated along it) or is a
    genuine straight segment.
    """

    points: np.ndarray
    theta_l: np.ndarray
    theta_r: np.ndarray
    curved: np.ndarray
    x0: np.ndarray
    x1: np.ndarray
    pieces: tuple = field(repr=False, default=())
    resolution: int = DEFAULT_RESOLUTION

    @property
    def n_nodes(self) -> int:
        return len(self.points)

    @property
    def vertices(self) -> np.ndarray:
        return self.points

    @property
    def corner(self) -> np.ndarray:
        return wrap_angle(self.theta_r - self.theta_l) > ANGLE_TOL

    @cached_property
    def diameter(self) -> float:
        return polygon_diameter(self.points)

    @property
    def area(self) -> float:
        x, y = self.points.T
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    @property
    def perimeter(self) -> float:
        return float(np.sum(np.hypot(*(np.roll(self.points, -1, axis=0) - self.points).T)))

    def transformed(self, matrix, offset=(0.0, 0.0), resolution: int | None = None) -> "ConvexCurve":
        """Image of the curve under ``x -> matrix @ x + offset`` (det > 0)."""
        m = np.asarray(matrix, dtype=float).reshape(2, 2)
        b = np.asarray(offset, dtype=float)
        if np.linalg.det(m) <= 0:
            raise CurveError("only orientation-preserving maps keep the curve counterclockwise")
        pieces = [_transform_piece(p, m, b) for p in self.pieces]
        return curve_from_pieces(
            pieces,
            x0=m @ self.x0 + b,
            x1=m @ self.x1 + b,
            resolution=resolution or self.resolution,
        )


def _transform_piece(piece, m, b):
    if isinstance(piece, Segment):
        return Segment(m @ piece.start + b, m @ piece.end + b)
    if isinstance(piece, SampledArc):
        return SampledArc(piece.fixed_samples @ m.T + b)
    return ParametricArc(lambda u, p=piece: p.point(u) @ m.T + b, lambda u, p=piece: p.tangent(u) @ m.T)


def polygon_diameter(points: np.ndarray) -> float:
    """Diameter of a convex polygon (counterclockwise) by rotating calipers."""
    p = np.asarray(points, dtype=float)
    n = len(p)
    if n <= 3:
        d = p[:, None, :] - p[None, :, :]
        return float(np.sqrt((d**2).sum(-1).max()))
    xs, ys = p[:, 0].tolist(), p[:, 1].tolist()

    def area2(i, j, k):
        return abs((xs[j] - xs[i]) * (ys[k] - ys[i]) - (ys[j] - ys[i]) * (xs[k] - xs[i]))

    best = 0.0
    j = 1
    for i in range(n):
        i1 = (i + 1) % n
        while area2(i, i1, (j + 1) % n) > area2(i, i1, j):
            j = (j + 1) % n
        for a in (i, i1):
            d = (xs[a] - xs[j]) ** 2 + (ys[a] - ys[j]) ** 2
            if d > best:
                best = d
    return float(np.sqrt(best))


def _allocate(pieces, resolution: int) -> list[int]:
    lengths = [p.approx_length() if p.smooth and p.fixed_samples is None else 0.0 for p in pieces]
    total = sum(lengths)
    out = []
    for p, length in zip(pieces, lengths):
        if not p.smooth:
            out.append(1)
        elif p.fixed_samples is not None:
            out.append(len(p.fixed_samples) - 1)
        else:
            out.append(max(2, int(round(resolution * length / total))))
    return out


def curve_from_pieces(
    pieces: Sequence,
    x0=None,
    x1=None,
    resolution: int = DEFAULT_RESOLUTION,
) -> ConvexCurve:
    """Sample and validate a closed chain of pieces.

    Each piece must start where the previous one ends; the chain closes
    back on the start of the first piece.
    """
    pieces = list(pieces)
    if not pieces:
        raise DegenerateCurve("no pieces")
    counts = _allocate(pieces, resolution)
    pts, th_r, th_l, curved = [], [], [], []
    last_angles = []
    for piece, m in zip(pieces, counts):
        if piece.smooth:
            p, a = piece.sample(m)
        else:
            p = np.vstack([piece.start, piece.end]).astype(float)
            a = np.full(2, piece.angle)
        pts.append(p[:-1])
        th_r.append(a[:-1])
        th_l.append(a[1:-1])
        curved.append(np.full(len(p) - 1, bool(piece.smooth)))
        last_angles.append((p[-1], a[-1]))
    points = np.vstack(pts)
    scale = float(np.max(np.ptp(points, axis=0))) if len(points) > 1 else 0.0
    if scale <= 0:
        raise DegenerateCurve("curve has zero extent")
    for k in range(len(pieces)):
        end_pt = last_angles[k - 1][0]
        if np.hypot(*(end_pt - pts[k][0])) > 1e-9 * scale:
            raise CurveError(f"piece {k} does not start where piece {(k - 1) % len(pieces)} ends")
    theta_l = np.concatenate(
        [np.concatenate([[last_angles[k - 1][1]], th_l[k]]) for k in range(len(pieces))]
    )
    theta_r = np.concatenate(th_r)
    curved = np.concatenate(curved)
    return _finish(points, theta_l, theta_r, curved, x0, x1, tuple(pieces), resolution)


def _finish(points, theta_l, theta_r, curved, x0, x1, pieces, resolution) -> ConvexCurve:
    n = len(points)
    if n < 3:
        raise DegenerateCurve("fewer than 3 distinct vertices")
    diam = polygon_diameter(points)
    tol = GEOM_TOL * diam
    nxt = np.roll(points, -1, axis=0)
    edges = nxt - points
    elen = np.hypot(edges[:, 0], edges[:, 1])
    if np.any(elen <= tol):
        raise DegenerateCurve("two consecutive vertices coincide")

    prev_e = np.roll(edges, 1, axis=0)
    cross = prev_e[:, 0] * edges[:, 1] - prev_e[:, 1] * edges[:, 0]
    base = np.hypot(*(nxt - np.roll(points, 1, axis=0)).T)
    height = np.where(base > 0, cross / np.where(base > 0, base, 1.0), -np.inf)
    if np.any(height < -tol):
        i = int(np.argmin(height))
        raise NotConvex(f"reflex vertex at node {i} (height {height[i]:.3e})")
    if np.count_nonzero(height > tol) < 3:
        raise DegenerateCurve("fewer than three strictly convex vertices (zero enclosed area)")

    jumps = wrap_angle(theta_r - theta_l)
    inc = np.where(curved, wrap_angle(np.roll(theta_l, -1) - theta_r), 0.0)
    if np.any(jumps < -ANGLE_TOL) or np.any(inc < -ANGLE_TOL):
        raise NotConvex("tangent direction turns clockwise somewhere")
    total = float(jumps.sum() + inc.sum())
    if abs(total - 2 * np.pi) > 1e-6:
        raise NotConvex(f"total turning is {total:.6f}, expected 2*pi (counterclockwise, simple)")

    if x0 is None:
        x0 = points.mean(axis=0)
    x0 = np.asarray(x0, dtype=float)
    rel = x0 - points
    signed = (edges[:, 0] * rel[:, 1] - edges[:, 1] * rel[:, 0]) / elen
    if signed.min() <= tol:
        raise BasePointOutside("base point x0 is not strictly inside the curve")

    if x1 is not None:
        points, theta_l, theta_r, curved = _move_start(points, theta_l, theta_r, curved, x1, diam)
    x1 = points[0].copy()
    return ConvexCurve(
        points=points,
        theta_l=np.mod(theta_l, 2 * np.pi),
        theta_r=np.mod(theta_r, 2 * np.pi),
        curved=curved,
        x0=x0,
        x1=x1,
        pieces=pieces,
        resolution=int(resolution),
    )


def _move_start(points, theta_l, theta_r, curved, x1, diam):
    x1 = np.asarray(x1, dtype=float)
    d = np.hypot(*(points - x1).T)
    i = int(np.argmin(d))
    if d[i] > 1e-9 * diam:
        nxt = np.roll(points, -1, axis=0)
        e = nxt - points
        s = np.clip(np.einsum("ij,ij->i", x1 - points, e) / np.einsum("ij,ij->i", e, e), 0, 1)
        proj = points + s[:, None] * e
        dist = np.hypot(*(proj - x1).T)
        k = int(np.argmin(dist))
        if dist[k] > 1e-6 * diam:
            raise StartPointOffCurve("start point x1 is not on the curve")
        if curved[k]:
            a = theta_r[k] + s[k] * wrap_angle(theta_l[(k + 1) % len(points)] - theta_r[k])
        else:
            a = theta_r[k]
        points = np.insert(points, k + 1, proj[k], axis=0)
        theta_l = np.insert(theta_l, k + 1, a)
        theta_r = np.insert(theta_r, k + 1, a)
        curved = np.insert(curved, k + 1, curved[k])
        i = k + 1
    roll = lambda a: np.roll(a, -i, axis=0)  # noqa: E731
    return roll(points), roll(theta_l), roll(theta_r), roll(curved)


def _piece_from_descriptor(desc, v0, v1) -> object:
    if desc is None:
        return Segment(np.asarray(v0, float), np.asarray(v1, float))
    if isinstance(desc, (Segment, SmoothPiece)):
        return desc
    kind = desc.get("kind")
    if kind == "circle":
        c = np.asarray(desc["center"], dtype=float)
        r = float(desc["radius"])
        a0 = float(desc.get("start_angle", np.arctan2(v0[1] - c[1], v0[0] - c[0])))
        span = desc.get("span")
        if span is None:
            a1 = np.arctan2(v1[1] - c[1], v1[0] - c[0])
            span = np.mod(a1 - a0, 2 * np.pi) or 2 * np.pi
        return CircleArc(c, r, a0, float(span))
    if kind == "ellipse":
        c = np.asarray(desc["center"], dtype=float)
        if "matrix" in desc:
            m = np.asarray(desc["matrix"], dtype=float)
        else:
            a, b = desc["axes"]
            rot = float(desc.get("rotation", 0.0))
            cr, sr = np.cos(rot), np.sin(rot)
            m = np.array([[cr, -sr], [sr, cr]]) @ np.diag([a, b])
        w = np.linalg.solve(m, np.asarray(v0, float) - c)
        a0 = float(np.arctan2(w[1], w[0]))
        span = desc.get("span")
        if span is None:
            w1 = np.linalg.solve(m, np.asarray(v1, float) - c)
            span = np.mod(np.arctan2(w1[1], w1[0]) - a0, 2 * np.pi) or 2 * np.pi
        return EllipticArc(c, m, a0, float(span))
    if kind == "parametric":
        inner = np.asarray(desc["samples"], dtype=float).reshape(-1, 2)
        return SampledArc(np.vstack([v0, inner, v1]))
    raise CurveError(f"unknown arc descriptor kind {kind!r}")


def build_curve(
    vertices,
    arc_descriptors=None,
    x0=None,
    x1=None,
    resolution: int = DEFAULT_RESOLUTION,
) -> ConvexCurve:
    """Build and validate a convex curve from vertices and optional arcs.

    Parameters
    ----------
    vertices : array_like, shape (n, 2)
        Counterclockwise vertices; the chain is closed automatically.
    arc_descriptors : sequence, optional
        One entry per edge ``vertices[i] -> vertices[i + 1]``: ``None`` for a
        straight edge, a piece object, or a mapping with ``kind`` in
        ``{"circle", "ellipse", "parametric"}``.
    x0 : array_like, optional
        Interior base point, defaults to the vertex centroid.
    x1 : array_like, optional
        Boundary point where the arclength parameter starts.
    resolution : int
        Total number of nodes spread over the smooth pieces.

    Raises
    ------
    NotConvex, DegenerateCurve, BasePointOutside
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise CurveError("vertices must be an (n, 2) array")
    if len(v) < 3:
        raise DegenerateCurve("fewer than 3 vertices")
    descs = list(arc_descriptors) if arc_descriptors is not None else [None] * len(v)
    if len(descs) != len(v):
        raise CurveError("need one arc descriptor (or None) per edge")
    scale = float(np.hypot(*np.ptp(v, axis=0)))
    pieces = []
    for i, desc in enumerate(descs):
        v0, v1 = v[i], v[(i + 1) % len(v)]
        if desc is None and np.hypot(*(v1 - v0)) <= GEOM_TOL * scale:
            raise DegenerateCurve(f"vertices {i} and {(i + 1) % len(v)} coincide")
        piece = _piece_from_descriptor(desc, v0, v1)
        for label, want, got in (("start", v0, piece.start), ("end", v1, piece.end)):
            if np.hypot(*(np.asarray(got) - want)) > 1e-9 * max(scale, 1e-300):
                raise CurveError(f"arc on edge {i} does not {label} at its vertex")
        pieces.append(piece)
    return curve_from_pieces(pieces, x0=x0, x1=x1, resolution=resolution)


def ray_hit(curve: ConvexCurve, e, x0=None) -> np.ndarray:
    """Boundary point ``x0 + T(e) e`` hit by the ray from ``x0`` along ``e``."""
    x0 = curve.x0 if x0 is None else np.asarray(x0, dtype=float)
    e = np.asarray(e, dtype=float)
    if abs(np.hypot(*e) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    p = curve.points
    d = np.roll(p, -1, axis=0) - p
    elen = np.hypot(d[:, 0], d[:, 1])
    r = p - x0
    signed = (d[:, 0] * (-r[:, 1]) - d[:, 1] * (-r[:, 0])) / elen
    if signed.min() <= GEOM_TOL * curve.diameter:
        raise BasePointOutside("ray origin is not strictly inside the curve")
    den = e[0] * d[:, 1] - e[1] * d[:, 0]
    with np.errstate(all="ignore"):
        T = (r[:, 0] * d[:, 1] - r[:, 1] * d[:, 0]) / den
        u = (r[:, 0] * e[1] - r[:, 1] * e[0]) / den
    ok = (np.abs(den) > 0) & (u >= -1e-12) & (u <= 1 + 1e-12) & (T > 0)
    return x0 + T[ok].max() * e


def angular_point(curve: ConvexCurve, angle: float) -> np.ndarray:
    """Boundary point seen from ``x0`` at ``angle`` counterclockwise past ``x1``."""
    v = curve.x1 - curve.x0
    v = v / np.hypot(*v)
    c, s = np.cos(angle), np.sin(angle)
    return ray_hit(curve, np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]]))
