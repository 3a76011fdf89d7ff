"""Arclength chart, tangent angles, turning measure and curvature density.

Angles on a chart are kept *unwrapped* and relative to the outgoing tangent
at ``z(0)``: ``theta_r(0) = 0`` and both angle functions increase to ``2*pi``
over ``J = [0, length)``. Along a curved edge the tangent angle is interpolated
linearly in arclength, so the curvature is constant per edge and the turning
measure splits exactly into a piecewise-constant density plus corner atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve import ANGLE_TOL, ConvexCurve, curve_from_pieces, wrap_angle
from .errors import ParameterOutOfRange, SingularPoint

TWO_PI = 2.0 * np.pi
_KINDS = ("[]", "[)", "(]", "()")


@dataclass(frozen=True, eq=False)
class ArclengthChart:
    """Counterclockwise arclength parametrization ``z: [0, length) -> curve``.

    Arrays of length ``n + 1`` include the closing node at ``t = length``,
    which repeats node 0 with both angles advanced by ``2*pi``.
    """

    t: np.ndarray
    points: np.ndarray
    theta_l: np.ndarray
    theta_r: np.ndarray
    curved: np.ndarray
    corner: np.ndarray
    theta_offset: float
    diameter: float
    edge_turning: np.ndarray

    @property
    def total_length(self) -> float:
        return float(self.t[-1])

    @property
    def nodes(self) -> np.ndarray:
        return self.t[:-1]

    @property
    def n_nodes(self) -> int:
        return len(self.t) - 1

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.t)

    @property
    def jumps(self) -> np.ndarray:
        """Corner atoms ``theta_r - theta_l`` at nodes ``0..n-1``."""
        return self.theta_r[:-1] - self.theta_l[:-1]

    @property
    def increments(self) -> np.ndarray:
        """Absolutely continuous turning along each edge (exactly zero on straight edges)."""
        return self.edge_turning

    # -- evaluation ---------------------------------------------------------

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        L = self.total_length
        slack = 1e-12 * L
        if np.any(t < -slack) or np.any(t > L + slack) or np.any(~np.isfinite(t)):
            raise ParameterOutOfRange(f"parameter outside [0, {L}]")
        t = np.clip(t, 0.0, L)
        n = self.n_nodes
        k = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, n)
        at_node = t == self.t[k]
        ke = np.minimum(k, n - 1)
        frac = np.where(at_node & (k == n), 1.0, (t - self.t[ke]) / self.spacing[ke])
        return t, k, ke, at_node, frac

    def z(self, t) -> np.ndarray:
        _, _, ke, _, frac = self._locate(t)
        p = self.points
        return p[ke] + frac[..., None] * (p[ke + 1] - p[ke])

    def angles(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Unwrapped relative ``(theta_l(t), theta_r(t))``."""
        _, k, ke, at_node, frac = self._locate(t)
        inner = self.theta_r[ke] + frac * self.increments[ke]
        return (
            np.where(at_node, self.theta_l[k], inner),
            np.where(at_node, self.theta_r[k], inner),
        )

    def is_corner(self, t) -> np.ndarray:
        _, k, _, at_node, _ = self._locate(t)
        return at_node & self.corner[np.mod(k, self.n_nodes)]

    def ac_turning(self, t) -> np.ndarray:
        """Absolutely continuous part of the turning, extended periodically."""
        t = np.asarray(t, dtype=float)
        L = self.total_length
        wraps = np.floor(t / L)
        local = t - wraps * L
        cum = np.concatenate([[0.0], np.cumsum(self.increments)])
        n = self.n_nodes
        k = np.clip(np.searchsorted(self.t, local, side="right") - 1, 0, n - 1)
        frac = np.clip((local - self.t[k]) / self.spacing[k], 0.0, 1.0)
        return wraps * cum[-1] + cum[k] + frac * self.increments[k]

    def parameter_of(self, point) -> float:
        """Arclength parameter of the chart point closest to ``point``."""
        x = np.asarray(point, dtype=float)
        p = self.points[:-1]
        e = self.points[1:] - p
        s = np.clip(np.einsum("ij,ij->i", x - p, e) / np.einsum("ij,ij->i", e, e), 0.0, 1.0)
        d = np.hypot(*(p + s[:, None] * e - x).T)
        k = int(np.argmin(d))
        return float(self.t[k] + s[k] * self.spacing[k])


def arclength_chart(curve: ConvexCurve, resolution: int | None = None) -> ArclengthChart:
    """Arclength chart of ``curve``, optionally resampling its smooth pieces.

    The length is that of the inscribed polyline through the nodes, which
    increases towards the true length as nodes are added.
    """
    if resolution is not None and resolution != curve.resolution and curve.pieces:
        curve = curve_from_pieces(curve.pieces, x0=curve.x0, x1=curve.x1, resolution=resolution)
    pts = curve.points
    n = len(pts)
    closed = np.vstack([pts, pts[:1]])
    dt = np.hypot(*np.diff(closed, axis=0).T)
    t = np.concatenate([[0.0], np.cumsum(dt)])

    jumps = np.maximum(wrap_angle(curve.theta_r - curve.theta_l), 0.0)
    jumps[~curve.corner] = 0.0
    inc = np.where(curve.curved, np.maximum(wrap_angle(np.roll(curve.theta_l, -1) - curve.theta_r), 0.0), 0.0)

    # accumulate jump, increment, jump, ... in order so that a straight edge
    # has theta_l[k+1] == theta_r[k] exactly
    steps = np.empty(2 * n)
    steps[0::2] = np.concatenate([[0.0], jumps[1:]])
    steps[1::2] = inc
    acc = np.cumsum(steps)
    th_r = np.empty(n + 1)
    th_l = np.empty(n + 1)
    th_r[:n] = acc[0::2]
    th_l[1 : n + 1] = acc[1::2]
    th_l[0] = -jumps[0]
    th_l[n] = th_l[0] + TWO_PI
    th_r[n] = TWO_PI
    return ArclengthChart(
        t=t,
        points=closed,
        theta_l=th_l,
        theta_r=th_r,
        curved=curve.curved.copy(),
        corner=curve.corner.copy(),
        theta_offset=float(curve.theta_r[0]),
        diameter=curve.diameter,
        edge_turning=inc,
    )


def tangents_at(chart: ArclengthChart, t, relative: bool = False):
    """Left and right tangent angles at ``t``, reduced to ``[0, 2*pi)``.

    By default the angles are absolute directions of ``z'``; with
    ``relative=True`` they are measured from the outgoing tangent at ``z(0)``.
    """
    th_l, th_r = chart.angles(t)
    off = 0.0 if relative else chart.theta_offset
    return _reduce(th_l + off), _reduce(th_r + off)


def _reduce(a):
    a = np.mod(a, TWO_PI)
    # np.mod(-tiny, 2 pi) rounds up to 2 pi
    return np.where(a >= TWO_PI, 0.0, a)


def turning_measure(chart: ArclengthChart, a: float, b: float, kind: str = "[]") -> float:
    """Turning mass of an interval with endpoints ``a <= b``.

    ``kind`` is one of ``"[]"``, ``"[)"``, ``"(]"`` and ``"()"``.
    """
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}")
    if a > b:
        raise ParameterOutOfRange("interval endpoints out of order")
    la, ra = chart.angles(a)
    lb, rb = chart.angles(b)
    if kind == "()":
        return float(max(0.0, lb - ra))
    if kind == "(]":
        return float(rb - ra)
    if kind == "[)":
        return float(lb - la)
    return float(rb - la)


def curvature_density(chart: ArclengthChart, t, fd_step: float | None = None):
    """Curvature ``kappa(t)`` as a symmetric difference quotient.

    Only the absolutely continuous part of the turning enters, so corners
    never leak into neighbouring values. Raises :class:`SingularPoint` at a
    corner node. The default step is ``max(1e-4, 2 * local node spacing)``.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(chart.is_corner(t_arr)):
        raise SingularPoint("curvature density is undefined at a corner")
    if fd_step is None:
        _, k, ke, at_node, _ = chart._locate(t_arr)
        here = chart.spacing[ke]
        before = chart.spacing[np.mod(k - 1, chart.n_nodes)]
        local = np.where(at_node, np.maximum(here, before), here)
        h = np.maximum(1e-4, 2.0 * local)
    else:
        if fd_step <= 0:
            raise ValueError("fd_step must be positive")
        h = fd_step
    kappa = (chart.ac_turning(t_arr + h) - chart.ac_turning(t_arr - h)) / (2.0 * h)
    return float(kappa) if kappa.ndim == 0 else kappa


@dataclass(frozen=True, eq=False)
class CurveMeasure:
    """Measure on ``J``: piecewise-constant density on chart cells plus atoms."""

    knots: np.ndarray
    density: np.ndarray
    atom_t: np.ndarray
    atom_mass: np.ndarray

    def __post_init__(self):
        if np.any(self.density < 0) or np.any(self.atom_mass <= 0):
            raise ValueError("densities must be nonnegative and atoms positive")

    @property
    def cell_mass(self) -> np.ndarray:
        return self.density * np.diff(self.knots)

    @property
    def total(self) -> float:
        return float(self.cell_mass.sum() + self.atom_mass.sum())

    def _ac(self, t: float) -> float:
        cum = np.concatenate([[0.0], np.cumsum(self.cell_mass)])
        k = int(np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, len(self.density) - 1))
        return float(cum[k] + self.density[k] * (t - self.knots[k]))

    def mass(self, a: float, b: float, kind: str = "[]") -> float:
        if kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")
        if a > b:
            raise ParameterOutOfRange("interval endpoints out of order")
        # an atom at t = 0 repeats at t = length, where the curve closes
        start = self.atom_t == self.knots[0]
        at = np.concatenate([self.atom_t, self.atom_t[start] + self.knots[-1]])
        am = np.concatenate([self.atom_mass, self.atom_mass[start]])
        lo = np.searchsorted(at, a, side="left" if kind[0] == "[" else "right")
        hi = np.searchsorted(at, b, side="right" if kind[1] == "]" else "left")
        atoms = float(am[lo:hi].sum()) if hi > lo else 0.0
        return self._ac(b) - self._ac(a) + atoms

    def nodal_weights(self) -> np.ndarray:
        """Trapezoid weights at the ``n`` chart nodes for the density part."""
        m = self.cell_mass
        return 0.5 * (m + np.roll(m, 1))


def sigma_measure(chart: ArclengthChart) -> CurveMeasure:
    keep = chart.jumps > 0
    return CurveMeasure(
        knots=chart.t,
        density=chart.increments / chart.spacing,
        atom_t=chart.nodes[keep],
        atom_mass=chart.jumps[keep],
    )


def nu_measure(chart: ArclengthChart) -> CurveMeasure:
    """Affine arclength measure: density ``kappa**(1/3)``, no atoms."""
    return CurveMeasure(
        knots=chart.t,
        density=np.cbrt(chart.increments / chart.spacing),
        atom_t=np.empty(0),
        atom_mass=np.empty(0),
    )


def arclength_measure(chart: ArclengthChart) -> CurveMeasure:
    """Plain arclength on ``J``."""
    return CurveMeasure(
        knots=chart.t,
        density=np.ones(chart.n_nodes),
        atom_t=np.empty(0),
        atom_mass=np.empty(0),
    )


def smooth_mask(chart: ArclengthChart) -> np.ndarray:
    """Nodes where the left and right tangents agree."""
    return ~chart.corner


__all__ = [
    "ANGLE_TOL",
    "ArclengthChart",
    "CurveMeasure",
    "arclength_chart",
    "arclength_measure",
    "curvature_density",
    "nu_measure",
    "sigma_measure",
    "smooth_mask",
    "tangents_at",
    "turning_measure",
]
