"""Affine arclength, rectangle coverings and the comparability constants.

The upper bound for the affine measure comes from coverings by the
rectangles ``R(I)`` sitting on the chord of a sub-arc ``z(I)``; the lower
bound is ``A * nu`` with ``A`` assembled from its three ingredients by
:func:`comparability_constants`.

Intervals are pairs ``(a, b)`` with ``0 <= a < b <= length`` on the chart;
intervals wrapping around ``z(0)`` are not supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .chart import ArclengthChart, nu_measure, turning_measure
from .curve import wrap_angle
from .errors import ParameterOutOfRange, ResolutionExhausted, TurningTooLarge

HALF_PI = 0.5 * np.pi
_SIGMA_SLACK = 1e-12


# -- constants --------------------------------------------------------------


@dataclass(frozen=True)
class ComparabilityConstants:
    """Constants of ``A * nu <= mu <= B * nu`` and the ingredients behind ``A``.

    Attributes
    ----------
    beta_integral : float
        ``int_c^d ((d-u)(u-c))**(-1/2) du``, independent of ``c < d``.
    angle_factor : float
        Lower bound for ``cos`` of a tangent turn of at most ``pi/4``.
    sumset_factor : float
        Ratio of the area of ``R + R`` to the area of ``R``.
    """

    beta_integral: float
    angle_factor: float
    sumset_factor: float
    B: float = 1.0

    @property
    def A(self) -> float:
        return 1.0 / (self.beta_integral ** (2.0 / 3.0) * (self.sumset_factor / self.angle_factor) ** (1.0 / 3.0))


@lru_cache(maxsize=1)
def comparability_constants() -> ComparabilityConstants:
    """Recompute the comparability constants numerically.

    The three ingredients are evaluated rather than typed in: the Beta-type
    integral by algebraic-weight quadrature on ``[0, 1]``, the angle factor
    as the smallest value of ``cos`` over ``[0, pi/4]`` rounded down to the
    bound actually used (``1/2``), and the sum-set factor as the area of the
    Minkowski sum of a unit rectangle with itself.
    """
    beta, _ = integrate.quad(lambda u: 1.0, 0.0, 1.0, weight="alg", wvar=(-0.5, -0.5))
    cos_min = float(np.cos(np.linspace(0.0, np.pi / 4, 257)).min())
    angle = 0.5
    if cos_min < angle:  # the bound used must be valid
        raise AssertionError("angle bound invalid")
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    sums = (corners[:, None, :] + corners[None, :, :]).reshape(-1, 2)
    from scipy.spatial import ConvexHull

    sumset = ConvexHull(sums).volume  # 2-D "volume" is the area
    return ComparabilityConstants(beta_integral=float(beta), angle_factor=angle, sumset_factor=float(sumset))


# -- nu ---------------------------------------------------------------------


def _check_interval(chart: ArclengthChart, interval) -> tuple[float, float]:
    a, b = float(interval[0]), float(interval[1])
    L = chart.total_length
    slack = 1e-12 * L
    if not (-slack <= a <= b <= L + slack):
        raise ParameterOutOfRange(f"interval {interval!r} not inside [0, {L}]")
    return max(a, 0.0), min(b, L)


def nu_mass(chart: ArclengthChart, interval) -> float:
    """``nu(interval)``: integral of ``kappa**(1/3)`` over the interval.

    The chart density is constant per edge, so the integral is exact for
    the chart; corners carry no mass.
    """
    a, b = _check_interval(chart, interval)
    return nu_measure(chart).mass(a, b)


# -- rectangles -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Rect:
    """Rectangle with one side on the segment ``corner_a -> corner_b``.

    The rectangle extends a distance ``height`` to the right of that side,
    which is the outside of a counterclockwise curve. ``phi`` and ``psi`` are
    the angles between the chord and the outgoing tangent at the start and
    the incoming tangent at the end.
    """

    corner_a: np.ndarray
    corner_b: np.ndarray
    height: float
    interval: tuple[float, float] = (math.nan, math.nan)
    turning: float = math.nan
    phi: float = math.nan
    psi: float = math.nan

    @property
    def breadth(self) -> float:
        return float(math.hypot(*(self.corner_b - self.corner_a)))

    @property
    def area(self) -> float:
        return self.breadth * self.height

    @property
    def diameter(self) -> float:
        return math.hypot(self.breadth, self.height)

    @property
    def arc_length(self) -> float:
        return self.interval[1] - self.interval[0]

    @property
    def direction(self) -> np.ndarray:
        return (self.corner_b - self.corner_a) / self.breadth

    @property
    def outward_normal(self) -> np.ndarray:
        u = self.direction
        return np.array([u[1], -u[0]])

    def corners(self) -> np.ndarray:
        off = self.height * self.outward_normal
        return np.array([self.corner_a, self.corner_b, self.corner_b + off, self.corner_a + off])

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        """Closed-rectangle membership, ``tol`` relative to the diameter."""
        p = np.atleast_2d(np.asarray(points, dtype=float)) - self.corner_a
        along = p @ self.direction
        across = p @ self.outward_normal
        eps = tol * max(self.diameter, 1.0)
        return (along >= -eps) & (along <= self.breadth + eps) & (across >= -eps) & (across <= self.height + eps)

    def to_dict(self) -> dict:
        return {
            "corner_a": [float(x) for x in self.corner_a],
            "corner_b": [float(x) for x in self.corner_b],
            "height": float(self.height),
            "interval": [float(x) for x in self.interval],
        }


def _interior_slice(chart: ArclengthChart, a: float, b: float) -> slice:
    return slice(int(np.searchsorted(chart.t, a, side="right")), int(np.searchsorted(chart.t, b, side="left")))


@dataclass(frozen=True, eq=False)
class _PieceBatch:
    """Geometry of many disjoint, sorted pieces evaluated at once."""

    lo: np.ndarray
    hi: np.ndarray
    za: np.ndarray
    zb: np.ndarray
    height: np.ndarray
    turning: np.ndarray
    ra: np.ndarray
    lb: np.ndarray

    @property
    def breadth(self) -> np.ndarray:
        return np.hypot(*(self.zb - self.za).T)

    @property
    def diameter(self) -> np.ndarray:
        return np.hypot(self.breadth, self.height)

    @property
    def cost(self) -> np.ndarray:
        return np.cbrt(self.breadth * self.height)

    def rect(self, chart: ArclengthChart, i: int) -> Rect:
        chord = self.zb[i] - self.za[i]
        chord_angle = math.atan2(chord[1], chord[0]) - chart.theta_offset
        return Rect(
            corner_a=self.za[i],
            corner_b=self.zb[i],
            height=float(self.height[i]),
            interval=(float(self.lo[i]), float(self.hi[i])),
            turning=float(self.turning[i]),
            phi=float(wrap_angle(chord_angle - self.ra[i])),
            psi=float(wrap_angle(self.lb[i] - chord_angle)),
        )


def _evaluate(chart: ArclengthChart, lo, hi) -> _PieceBatch:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    _, ra = chart.angles(lo)
    lb, _ = chart.angles(hi)
    sig = np.maximum(lb - ra, 0.0)
    za = chart.z(lo)
    zb = chart.z(hi)
    chord = zb - za
    blen = np.hypot(*chord.T)
    closed = blen == 0.0  # a full loop: no chord, never feasible
    u = chord / np.where(closed, 1.0, blen)[:, None]
    start = np.searchsorted(chart.t, lo, side="right")
    stop = np.searchsorted(chart.t, hi, side="left")
    counts = np.where(sig > 0.0, np.maximum(stop - start, 0), 0)
    h = np.zeros(len(lo))
    nonempty = np.nonzero(counts)[0]
    if len(nonempty):
        c = counts[nonempty]
        owner = np.repeat(nonempty, c)
        offsets = np.concatenate([[0], np.cumsum(c)[:-1]])
        node = start[owner] + np.arange(c.sum()) - np.repeat(offsets, c)
        d = chart.points[node] - za[owner]
        dist = u[owner, 1] * d[:, 0] - u[owner, 0] * d[:, 1]
        h[nonempty] = np.maximum(np.maximum.reduceat(dist, offsets), 0.0)
    h[closed] = np.inf
    return _PieceBatch(lo, hi, za, zb, h, sig, ra, lb)


def _rect(chart: ArclengthChart, a: float, b: float) -> Rect:
    if np.array_equal(*chart.z(np.array([a, b]))):
        raise ParameterOutOfRange("interval has coincident endpoints")
    return _evaluate(chart, [a], [b]).rect(chart, 0)


def rect_over_interval(chart: ArclengthChart, interval) -> Rect:
    """The rectangle ``R(I)`` over the chord of ``z(I)``.

    The height is the largest distance of a chart node of the open interval
    from the chord. It is exactly zero when the tangent does not turn inside
    the interval.

    Raises
    ------
    TurningTooLarge
        If the turning of the open interval exceeds ``pi/2``.
    """
    a, b = _check_interval(chart, interval)
    if not b > a:
        raise ParameterOutOfRange("interval must be nondegenerate")
    sig = turning_measure(chart, a, b, "()")
    if sig > HALF_PI + _SIGMA_SLACK:
        raise TurningTooLarge(f"turning {sig:.6g} exceeds pi/2")
    return _rect(chart, a, b)


# -- coverings --------------------------------------------------------------


@dataclass(frozen=True)
class RefinementPolicy:
    """Controls :func:`mu_upper`.

    Attributes
    ----------
    merge : bool
        Run one greedy left-to-right merge sweep after bisection.
    max_depth : int
        Bisection depth after which :class:`ResolutionExhausted` is raised.
    min_edges_per_delta : float
        ``delta`` must be at least this multiple of the longest curved chart
        edge in the interval, so every rectangle height is measured on
        several nodes.
    """

    merge: bool = True
    max_depth: int = 48
    min_edges_per_delta: float = 8.0


@dataclass(frozen=True, eq=False)
class Covering:
    rects: tuple[Rect, ...]
    delta: float

    @property
    def cost(self) -> float:
        return float(sum(np.cbrt(r.area) for r in self.rects))

    @property
    def pieces(self) -> list[tuple[float, float]]:
        return [r.interval for r in self.rects]

    @property
    def max_diameter(self) -> float:
        return max((r.diameter for r in self.rects), default=0.0)

    def __len__(self) -> int:
        return len(self.rects)


def covering_is_valid(chart: ArclengthChart, covering: Covering, interval, tol: float = 1e-9) -> bool:
    """Diameters at most ``delta`` and every chart node of the arc inside some rectangle."""
    if covering.max_diameter > covering.delta * (1 + 1e-12):
        return False
    a, b = _check_interval(chart, interval)
    pieces = sorted(covering.pieces)
    if abs(pieces[0][0] - a) > tol or abs(pieces[-1][1] - b) > tol:
        return False
    if any(abs(p[1] - q[0]) > tol for p, q in zip(pieces, pieces[1:])):
        return False
    for r in covering.rects:
        lo, hi = r.interval
        sl = _interior_slice(chart, lo, hi)
        pts = np.vstack([r.corner_a, chart.points[sl], r.corner_b])
        if not np.all(r.contains(pts, tol)):
            return False
    return True


def mu_upper(chart: ArclengthChart, interval, delta: float, policy: RefinementPolicy | None = None) -> Covering:
    """A covering of ``z(interval)`` by rectangles ``R(I)`` of diameter at most ``delta``.

    The interval is first cut at corners strictly inside it, then each piece
    is bisected in arclength until its open turning is at most ``pi/2`` and
    its rectangle has diameter at most ``delta``. An optional sweep merges
    neighbours whenever that strictly lowers the cost.

    Raises
    ------
    ResolutionExhausted
        If ``delta`` is too small for the chart's node spacing, or bisection
        exceeds ``policy.max_depth``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    policy = policy or RefinementPolicy()
    a, b = _check_interval(chart, interval)
    if not b > a:
        raise ParameterOutOfRange("interval must be nondegenerate")

    first = max(int(np.searchsorted(chart.t, a, side="right")) - 1, 0)
    edges = slice(first, int(np.searchsorted(chart.t, b, side="left")))
    curved_sp = chart.spacing[edges][chart.increments[edges] > 0]
    if len(curved_sp) and delta < policy.min_edges_per_delta * curved_sp.max():
        raise ResolutionExhausted(
            f"delta={delta:.3g} below {policy.min_edges_per_delta:g} x longest curved edge {curved_sp.max():.3g}"
        )

    corners = chart.nodes[chart.corner]
    cuts = np.concatenate([[a], corners[(corners > a) & (corners < b)], [b]])
    lo, hi = cuts[:-1], cuts[1:]
    done_lo, done_hi = [], []
    for _ in range(policy.max_depth + 1):
        batch = _evaluate(chart, lo, hi)
        ok = (batch.turning <= HALF_PI + _SIGMA_SLACK) & (batch.diameter <= delta)
        done_lo.append(lo[ok])
        done_hi.append(hi[ok])
        lo, hi = lo[~ok], hi[~ok]
        if not len(lo):
            break
        mid = 0.5 * (lo + hi)
        lo, hi = np.column_stack([lo, mid]).ravel(), np.column_stack([mid, hi]).ravel()
    else:
        raise ResolutionExhausted("bisection depth exhausted")

    lo = np.concatenate(done_lo)
    order = np.argsort(lo, kind="stable")
    leaves = _evaluate(chart, lo[order], np.concatenate(done_hi)[order])
    if policy.merge and len(leaves.lo) > 1:
        rects = _merge_sweep(chart, leaves, delta)
    else:
        rects = [leaves.rect(chart, i) for i in range(len(leaves.lo))]
    return Covering(rects=tuple(rects), delta=float(delta))


def _merge_sweep(chart, leaves: _PieceBatch, delta: float) -> list[Rect]:
    cost = leaves.cost
    out = []
    cur = leaves.rect(chart, 0)
    cur_cost = float(cost[0])
    for i in range(1, len(leaves.lo)):
        lo, hi = cur.interval[0], float(leaves.hi[i])
        old = cur_cost + float(cost[i])
        merged = None
        if old > 0.0 and math.hypot(*(leaves.zb[i] - cur.corner_a)) <= delta:
            cand = _evaluate(chart, [lo], [hi])
            if (
                cand.turning[0] <= HALF_PI + _SIGMA_SLACK
                and cand.diameter[0] <= delta
                and cand.cost[0] < old * (1 - 1e-12)
            ):
                merged = cand
        if merged is None:
            out.append(cur)
            cur = leaves.rect(chart, i)
            cur_cost = float(cost[i])
        else:
            cur = merged.rect(chart, 0)
            cur_cost = float(merged.cost[0])
    out.append(cur)
    return out


def mu_lower(chart: ArclengthChart, interval) -> float:
    """Lower bound ``A * nu(interval)`` for the affine measure."""
    return comparability_constants().A * nu_mass(chart, interval)


# -- sum-set integral -------------------------------------------------------


@dataclass(frozen=True)
class SumsetBound:
    area: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.area <= self.bound + 1e-9


def sumset_integral(chart: ArclengthChart, interval) -> float:
    """``int int_{a<t<s<b} det(z'(t), z'(s)) ds dt`` for the chart curve.

    On the chart ``z'`` is the unit direction of the current edge, so the
    integrand is ``sin(phi_m - phi_k)`` for edges ``k < m`` and the double
    integral collapses to ``sum_m det(z_m - z(a), z_{m+1} - z_m)``, which is
    twice the area enclosed by the arc and its chord.
    """
    a, b = _check_interval(chart, interval)
    sl = _interior_slice(chart, a, b)
    za, zb = chart.z(np.array([a, b]))
    pts = np.vstack([za, chart.points[sl], zb]) - za
    cross = pts[:-1, 0] * pts[1:, 1] - pts[:-1, 1] * pts[1:, 0]
    return float(math.fsum(cross))


def sumset_area(chart: ArclengthChart, interval) -> SumsetBound:
    """Sum-set integral together with the bound ``4 |R(I)|`` it must respect."""
    rect = rect_over_interval(chart, interval)
    return SumsetBound(area=sumset_integral(chart, interval), bound=4.0 * rect.area)


# -- comparability report ---------------------------------------------------


def default_partition(chart: ArclengthChart, n_pieces: int = 8) -> list[tuple[float, float]]:
    """Split ``J`` into ``n_pieces`` pieces of equal turning.

    Extra cuts are placed where a straight run of edges meets a curved one,
    so flat pieces never share a row with curved ones.
    """
    L = chart.total_length
    th_r, th_l, t = chart.theta_r, chart.theta_l, chart.t
    curved = chart.increments > 0
    junctions = np.array([t[j] for j in np.nonzero(curved != np.roll(curved, 1))[0] if j > 0])
    cuts = {0.0, L, *map(float, junctions)}
    for k in range(1, n_pieces):
        target = k * 2 * np.pi / n_pieces - 1e-12
        i = int(np.searchsorted(th_r, target, side="left"))
        if i > 0 and th_l[i] > target and chart.increments[i - 1] > 0 and th_r[i - 1] < target:
            frac = (target - th_r[i - 1]) / chart.increments[i - 1]
            c = float(t[i - 1] + frac * chart.spacing[i - 1])
        else:
            c = float(t[i])
        # a cut next to a junction would leave a sliver of the other kind
        if not len(junctions) or np.min(np.abs(junctions - c)) > 1e-9 * L:
            cuts.add(c)
    cuts = sorted(cuts)
    keep = [cuts[0]]
    for c in cuts[1:]:
        if c - keep[-1] > 1e-12 * L:
            keep.append(c)
    keep[-1] = L
    return list(zip(keep, keep[1:]))


@dataclass(frozen=True, eq=False)
class ComparabilityRow:
    interval_start: float
    interval_end: float
    nu: float
    mu_upper_cost: float
    lower_bound: float
    delta: float
    n_rects: int
    status: str = "ok"
    covering: Covering | None = field(default=None, repr=False)

    @property
    def ratio_upper(self) -> float:
        """``mu_upper_cost / nu``; NaN when ``nu`` vanishes."""
        return self.mu_upper_cost / self.nu if self.nu > 0 else math.nan

    @property
    def ratio_lower(self) -> float:
        """``lower_bound / mu_upper_cost``; NaN when the cost vanishes."""
        return self.lower_bound / self.mu_upper_cost if self.mu_upper_cost > 0 else math.nan

    def sandwich_holds(self, B: float = 1.0, tol: float = 1e-6) -> bool:
        if self.status != "ok":
            return False
        return self.lower_bound <= self.mu_upper_cost + 1e-15 and self.mu_upper_cost <= B * self.nu + tol


@dataclass(frozen=True, eq=False)
class ComparabilityReport:
    rows: tuple[ComparabilityRow, ...]
    A: float
    B: float

    def finest(self) -> list[ComparabilityRow]:
        d = min(r.delta for r in self.rows)
        return [r for r in self.rows if r.delta == d]

    def flagged(self) -> list[ComparabilityRow]:
        """Rows whose covering failed or violate the sandwich."""
        return [r for r in self.rows if not r.sandwich_holds(self.B)]


def default_delta_schedule(chart: ArclengthChart, kmin: int = 2, kmax: int = 10) -> list[float]:
    return [chart.diameter * 2.0**-k for k in range(kmin, kmax + 1)]


def comparability_report(
    chart: ArclengthChart,
    partition=None,
    delta_schedule=None,
    policy: RefinementPolicy | None = None,
) -> ComparabilityReport:
    """Per-interval ``A nu``, covering cost and ``nu`` over a schedule of ``delta``.

    A row whose covering fails carries the error class name in ``status``
    and NaN cost instead of aborting the report.
    """
    const = comparability_constants()
    partition = default_partition(chart) if partition is None else partition
    deltas = default_delta_schedule(chart) if delta_schedule is None else list(delta_schedule)
    rows = []
    for a, b in partition:
        nu = nu_mass(chart, (a, b))
        lower = const.A * nu
        for delta in deltas:
            try:
                cov = mu_upper(chart, (a, b), delta, policy)
            except (ResolutionExhausted, TurningTooLarge) as exc:
                rows.append(ComparabilityRow(a, b, nu, math.nan, lower, delta, 0, type(exc).__name__))
                continue
            rows.append(ComparabilityRow(a, b, nu, cov.cost, lower, delta, len(cov), "ok", cov))
    return ComparabilityReport(rows=tuple(rows), A=const.A, B=const.B)
