"""Reading and writing curve files.

A curve file is a JSON object::

    {
      "vertices": [[x, y], ...],            # counterclockwise, at least 3
      "arc_descriptors": [null | {...}, ...],  # optional, one per edge
      "x0": [x, y],                          # optional interior point
      "x1": [x, y],                          # optional start point
      "resolution": 4096                     # optional node budget
    }

Edge ``i`` joins ``vertices[i]`` to ``vertices[i + 1]`` (cyclically). An arc
descriptor replaces the straight edge by one of

* ``{"kind": "circle", "center": [x, y], "radius": r, "span": a}``
  (``span`` in radians, counterclockwise; optional, inferred from the vertices),
* ``{"kind": "ellipse", "center": [x, y], "axes": [a, b], "rotation": t}``
  or with ``"matrix": [[m11, m12], [m21, m22]]`` instead of axes and rotation,
* ``{"kind": "parametric", "samples": [[x, y], ...]}`` listing interior
  points of the arc strictly between its two vertices.

Unknown keys are rejected. Numbers are written with ``repr`` so a curve
survives a round trip bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

from .curve import DEFAULT_RESOLUTION, ConvexCurve, build_curve
from .errors import ConfigError

_TOP_KEYS = {"vertices", "arc_descriptors", "x0", "x1", "resolution"}
_ARC_KEYS = {
    "circle": {"kind", "center", "radius", "start_angle", "span"},
    "ellipse": {"kind", "center", "axes", "rotation", "matrix", "span"},
    "parametric": {"kind", "samples"},
}


def curve_from_mapping(data: dict) -> ConvexCurve:
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys in curve file: {sorted(unknown)}")
    if "vertices" not in data:
        raise ConfigError("curve file needs 'vertices'")
    descs = data.get("arc_descriptors")
    for d in descs or []:
        if d is None:
            continue
        kind = d.get("kind")
        if kind not in _ARC_KEYS:
            raise ConfigError(f"unknown arc kind {kind!r}")
        extra = set(d) - _ARC_KEYS[kind]
        if extra:
            raise ConfigError(f"unknown keys in {kind} descriptor: {sorted(extra)}")
    return build_curve(
        data["vertices"],
        descs,
        x0=data.get("x0"),
        x1=data.get("x1"),
        resolution=int(data.get("resolution", DEFAULT_RESOLUTION)),
    )


def load_curve(path) -> ConvexCurve:
    with open(path, encoding="utf-8") as fh:
        return curve_from_mapping(json.load(fh))


def save_polygon(path, vertices, x0=None, x1=None) -> None:
    """Write a polygonal curve file."""
    data = {"vertices": [[float(x), float(y)] for x, y in vertices]}
    if x0 is not None:
        data["x0"] = [float(v) for v in x0]
    if x1 is not None:
        data["x1"] = [float(v) for v in x1]
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
