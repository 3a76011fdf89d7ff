"""Named generators for test curves.

Every generator returns a validated :class:`~affinecurve.curve.ConvexCurve`;
``generate_family`` turns a list of ``{"generator": ..., "params": ...}``
specs into a deterministic list of curves.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull

from .curve import (
    DEFAULT_RESOLUTION,
    CircleArc,
    ConvexCurve,
    EllipticArc,
    ParametricArc,
    Segment,
    curve_from_pieces,
)
from .errors import ConfigError


def circle(r: float = 1.0, n: int = DEFAULT_RESOLUTION, center=(0.0, 0.0)) -> ConvexCurve:
    c = np.asarray(center, dtype=float)
    arcs = [CircleArc(c, r, k * np.pi / 2, np.pi / 2) for k in range(4)]
    return curve_from_pieces(arcs, x0=c, resolution=n)


def ellipse(a: float = 2.0, b: float = 1.0, n: int = DEFAULT_RESOLUTION, rotation: float = 0.0) -> ConvexCurve:
    cr, sr = np.cos(rotation), np.sin(rotation)
    m = np.array([[cr, -sr], [sr, cr]]) @ np.diag([a, b])
    arcs = [EllipticArc((0.0, 0.0), m, k * np.pi / 2, np.pi / 2) for k in range(4)]
    return curve_from_pieces(arcs, x0=(0.0, 0.0), resolution=n)


def superellipse(m: float = 4.0, r: float = 1.0, n: int = DEFAULT_RESOLUTION) -> ConvexCurve:
    """The curve ``|x|**m + |y|**m = r**m`` sampled evenly in polar angle."""
    if m < 2:
        raise ConfigError("superellipse exponent must be >= 2 for a smooth convex curve")

    def quadrant(k):
        a0 = k * np.pi / 2

        def point(u):
            a = a0 + u * np.pi / 2
            c, s = np.cos(a), np.sin(a)
            rho = r * (np.abs(c) ** m + np.abs(s) ** m) ** (-1.0 / m)
            return np.column_stack([rho * c, rho * s])

        def derivative(u):
            p = point(u)
            gx = np.sign(p[:, 0]) * np.abs(p[:, 0]) ** (m - 1)
            gy = np.sign(p[:, 1]) * np.abs(p[:, 1]) ** (m - 1)
            return np.column_stack([-gy, gx])

        return ParametricArc(point, derivative)

    return curve_from_pieces([quadrant(k) for k in range(4)], x0=(0.0, 0.0), resolution=n)


def regular_ngon(n: int = 64, r: float = 1.0, rotation: float = 0.0) -> ConvexCurve:
    a = rotation + 2 * np.pi * np.arange(n) / n
    v = r * np.column_stack([np.cos(a), np.sin(a)])
    return curve_from_pieces([Segment(v[i], v[(i + 1) % n]) for i in range(n)], x0=(0.0, 0.0))


def stadium(r: float = 1.0, flat: float = 2.0, n: int = DEFAULT_RESOLUTION) -> ConvexCurve:
    """Two semicircles of radius ``r`` joined by horizontal edges of length ``flat``."""
    h = flat / 2
    pieces = [
        Segment(np.array([-h, -r]), np.array([h, -r])),
        CircleArc((h, 0.0), r, -np.pi / 2, np.pi),
        Segment(np.array([h, r]), np.array([-h, r])),
        CircleArc((-h, 0.0), r, np.pi / 2, np.pi),
    ]
    return curve_from_pieces(pieces, x0=(0.0, 0.0), resolution=n)


def random_convex_polygon(n: int = 20, seed: int = 0) -> ConvexCurve:
    """Convex hull of ``n`` uniform points in the unit square."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(n, 2))
    hull = ConvexHull(pts)
    v = pts[hull.vertices]  # counterclockwise for 2-D hulls
    k = len(v)
    return curve_from_pieces([Segment(v[i], v[(i + 1) % k]) for i in range(k)])


def parabola_cap(half_width: float = 1.0, n: int = DEFAULT_RESOLUTION) -> ConvexCurve:
    """Region above ``y = x**2 / 2`` and below ``y = half_width**2 / 2``."""
    w = half_width

    def point(u):
        x = -w + 2 * w * u
        return np.column_stack([x, 0.5 * x**2])

    def derivative(u):
        x = -w + 2 * w * u
        return np.column_stack([np.ones_like(x), x])

    top = 0.5 * w**2
    pieces = [ParametricArc(point, derivative), Segment(np.array([w, top]), np.array([-w, top]))]
    return curve_from_pieces(pieces, x0=(0.0, top / 2), x1=(0.0, 0.0), resolution=n)


GENERATORS = {
    "circle": circle,
    "ellipse": ellipse,
    "superellipse": superellipse,
    "regular_ngon": regular_ngon,
    "stadium": stadium,
    "random_convex_polygon": random_convex_polygon,
    "parabola_cap": parabola_cap,
}

#: The five curves used by the comparability and restriction checks.
STANDARD_FAMILY = [
    {"id": "circle", "generator": "circle", "params": {"r": 1.0}},
    {"id": "ellipse_2_1", "generator": "ellipse", "params": {"a": 2.0, "b": 1.0}},
    {"id": "superellipse_4", "generator": "superellipse", "params": {"m": 4.0}},
    {"id": "ngon_64", "generator": "regular_ngon", "params": {"n": 64}},
    {"id": "stadium", "generator": "stadium", "params": {"r": 1.0, "flat": 2.0}},
]

_RESOLUTION_KEY = {"circle": "n", "ellipse": "n", "superellipse": "n", "stadium": "n", "parabola_cap": "n"}


def generate_family(spec, seed: int = 0, resolution: int | None = None) -> list[tuple[str, ConvexCurve]]:
    """Build ``(id, curve)`` pairs from a family spec.

    ``resolution``, when given, sets the node count of smooth generators that
    do not fix it themselves; ``seed`` feeds ``random_convex_polygon`` entries
    without an explicit seed. An entry ``{"id": ..., "file": path}`` loads a
    curve file instead (see :mod:`affinecurve.curve_io`).
    """
    out = []
    for i, entry in enumerate(spec):
        if "file" in entry:
            unknown = set(entry) - {"id", "file"}
            if unknown:
                raise ConfigError(f"unknown keys in curve spec: {sorted(unknown)}")
            from .curve_io import load_curve

            out.append((entry.get("id") or f"file_{i}", load_curve(entry["file"])))
            continue
        name = entry.get("generator")
        if name not in GENERATORS:
            raise ConfigError(f"unknown curve generator {name!r}")
        unknown = set(entry) - {"id", "generator", "params"}
        if unknown:
            raise ConfigError(f"unknown keys in curve spec: {sorted(unknown)}")
        params = dict(entry.get("params", {}))
        if name == "random_convex_polygon":
            params.setdefault("seed", seed + i)
        key = _RESOLUTION_KEY.get(name)
        if key and resolution is not None:
            params.setdefault(key, resolution)
        try:
            curve = GENERATORS[name](**params)
        except TypeError as exc:
            raise ConfigError(f"bad parameters for {name}: {exc}") from None
        out.append((entry.get("id") or f"{name}_{i}", curve))
    return out
