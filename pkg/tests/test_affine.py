import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from affinecurve import families
from affinecurve.affine import (
    RefinementPolicy,
    comparability_constants,
    comparability_report,
    covering_is_valid,
    default_delta_schedule,
    default_partition,
    mu_lower,
    mu_upper,
    nu_mass,
    rect_over_interval,
    sumset_area,
    sumset_integral,
)
from affinecurve.chart import arclength_chart, turning_measure
from affinecurve.errors import ParameterOutOfRange, ResolutionExhausted, TurningTooLarge

SHEAR = np.array([[1.0, 0.7], [0.0, 1.0]])


@pytest.fixture(scope="module")
def circle16k():
    return arclength_chart(families.circle(n=2**14))


def test_constant_A_from_ingredients():
    c = comparability_constants()
    assert c.beta_integral == pytest.approx(np.pi, rel=1e-13)
    assert c.sumset_factor == pytest.approx(4.0, rel=1e-15)
    assert c.angle_factor == 0.5
    assert c.A == pytest.approx(1 / (2 * np.pi ** (2 / 3)), rel=1e-12)
    assert c.A == pytest.approx(0.2331, abs=1e-4)
    assert c.B == 1.0


@pytest.mark.parametrize("r, phi", [(1.0, 1.0), (2.0, np.pi / 3), (0.5, 2.5)])
def test_nu_of_circular_arc(r, phi):
    chart = arclength_chart(families.circle(r=r, n=4096))
    t = phi * chart.total_length / (2 * np.pi)
    oracle, _ = quad(lambda s: r ** (-1 / 3), 0, r * phi)
    assert oracle == pytest.approx(phi * r ** (2 / 3), rel=1e-14)
    assert nu_mass(chart, (0.0, t)) == pytest.approx(oracle, rel=1e-6)


@given(st.integers(0, 1000), st.floats(0, 1), st.floats(0, 1))
def test_nu_vanishes_on_polygons(seed, u, v):
    chart = arclength_chart(families.random_convex_polygon(12, seed=seed))
    a, b = sorted([u, v])
    assert nu_mass(chart, (a * chart.total_length, b * chart.total_length)) == 0.0


def test_nu_unimodular_ellipse():
    chart = arclength_chart(families.ellipse(2.0, 0.5, n=8192))
    assert nu_mass(chart, (0.0, chart.total_length)) == pytest.approx(2 * np.pi, abs=1e-4)


def test_nu_interval_validation(circle_chart):
    with pytest.raises(ParameterOutOfRange):
        nu_mass(circle_chart, (-1.0, 1.0))
    with pytest.raises(ParameterOutOfRange):
        nu_mass(circle_chart, (0.0, 100.0))


@pytest.mark.parametrize("frac", [1 / 16, 1 / 8, 1 / 4])
def test_rect_over_circular_arc(circle16k, frac):
    n = circle16k.n_nodes
    k = int(n * frac)
    phi = 2 * np.pi * frac
    r = rect_over_interval(circle16k, (0.0, float(circle16k.t[k])))
    assert r.breadth == pytest.approx(2 * np.sin(phi / 2), rel=1e-12)
    assert r.height == pytest.approx(1 - np.cos(phi / 2), rel=1e-9)
    if frac == 1 / 4:
        assert r.breadth == pytest.approx(np.sqrt(2), rel=1e-12)
        assert r.height == pytest.approx(1 - np.sqrt(2) / 2, rel=1e-9)
        assert np.cbrt(r.area) == pytest.approx((np.sqrt(2) * (1 - np.sqrt(2) / 2)) ** (1 / 3), rel=1e-9)
        assert np.cbrt(r.area) == pytest.approx(0.7454, abs=1e-4)


def test_rect_over_polygon_edge(square_chart):
    r = rect_over_interval(square_chart, (0.0, 2.0))
    assert r.height == 0.0 and r.breadth == 2.0 and r.area == 0.0


def test_rect_turning_too_large(circle_chart):
    with pytest.raises(TurningTooLarge):
        rect_over_interval(circle_chart, (0.0, 0.3 * circle_chart.total_length))
    with pytest.raises(ParameterOutOfRange):
        rect_over_interval(circle_chart, (1.0, 1.0))


def test_rect_contains_its_arc(circle16k):
    b = float(circle16k.t[3000])
    r = rect_over_interval(circle16k, (0.0, b))
    assert np.all(r.contains(circle16k.points[:3001]))
    assert not np.any(r.contains(circle16k.points[3100:3200]))


def test_circle_cost_converges_to_half_nu(circle16k):
    cov = mu_upper(circle16k, (0.0, circle16k.total_length), circle16k.diameter * 2.0**-8)
    assert covering_is_valid(circle16k, cov, (0.0, circle16k.total_length))
    assert cov.cost == pytest.approx(np.pi, rel=0.02)


def test_square_costs_nothing(square_chart):
    for delta in (4.0, 0.5, 0.01):
        cov = mu_upper(square_chart, (0.0, 8.0), delta)
        assert cov.cost == 0.0
        assert cov.max_diameter <= delta
        assert covering_is_valid(square_chart, cov, (0.0, 8.0))


def test_single_quarter_arc_rect(circle16k):
    b = float(circle16k.t[circle16k.n_nodes // 4])
    cov = mu_upper(circle16k, (0.0, b), 10.0)
    assert len(cov) == 1
    assert cov.cost == pytest.approx((np.sqrt(2) * (1 - np.sqrt(2) / 2)) ** (1 / 3), rel=1e-9)


def test_resolution_exhausted(circle_chart):
    with pytest.raises(ResolutionExhausted):
        mu_upper(circle_chart, (0.0, 1.0), 1e-4)


def test_mu_upper_is_deterministic(circle_chart):
    a = mu_upper(circle_chart, (0.5, 3.0), 0.05)
    b = mu_upper(circle_chart, (0.5, 3.0), 0.05)
    assert a.cost == b.cost and a.pieces == b.pieces


def test_merge_only_lowers_cost(ellipse_chart):
    iv = (0.0, 3.0)
    merged = mu_upper(ellipse_chart, iv, 0.2)
    plain = mu_upper(ellipse_chart, iv, 0.2, RefinementPolicy(merge=False))
    assert merged.cost <= plain.cost + 1e-15
    assert len(merged) <= len(plain)


_CHARTS = {}


def _chart(name):
    if name not in _CHARTS:
        _CHARTS[name] = arclength_chart(families.GENERATORS[name]() if name == "regular_ngon" else families.GENERATORS[name](n=2048))
    return _CHARTS[name]


@given(
    st.sampled_from(["circle", "ellipse", "superellipse", "stadium", "regular_ngon"]),
    st.floats(0, 1),
    st.floats(0.01, 1),
    st.integers(2, 6),
)
def test_coverings_are_valid_and_satisfy_height_bound(name, u, w, k):
    chart = _chart(name)
    L = chart.total_length
    a = u * L * (1 - w)
    iv = (a, a + w * L)
    delta = chart.diameter * 2.0**-k
    cov = mu_upper(chart, iv, delta)
    assert covering_is_valid(chart, cov, iv)
    for r in cov.rects:
        assert r.diameter <= delta * (1 + 1e-12)
        if r.breadth > 0:
            sig = turning_measure(chart, *r.interval, "()")
            assert r.height / r.arc_length <= sig + 1e-9
    assert cov.cost <= nu_mass(chart, iv) + 1e-6 or k < 4


def test_mu_lower_examples(circle_chart, square_chart):
    full = (0.0, circle_chart.total_length)
    lower = mu_lower(circle_chart, full)
    assert lower == pytest.approx(0.2331 * 2 * np.pi, rel=1e-3)
    assert lower <= mu_upper(circle_chart, full, circle_chart.diameter * 2.0**-6).cost
    assert mu_lower(square_chart, (0.0, 8.0)) == 0.0


def test_sumset_examples(square_chart, circle16k):
    assert sumset_integral(square_chart, (0.1, 1.9)) == 0.0
    for frac in (1 / 16, 1 / 8, 1 / 4):
        phi = 2 * np.pi * frac
        b = float(circle16k.t[int(circle16k.n_nodes * frac)])
        # closed-form oracle for the analytic arc; the chart is its inscribed polygon
        oracle, _ = quad(lambda t: quad(lambda s: np.sin(s - t), t, phi)[0], 0, phi)
        assert oracle == pytest.approx(phi - np.sin(phi), rel=1e-10)
        assert sumset_integral(circle16k, (0.0, b)) == pytest.approx(oracle, rel=1e-6)
    b = float(circle16k.t[circle16k.n_nodes // 4])
    sb = sumset_area(circle16k, (0.0, b))
    assert sb.area == pytest.approx(np.pi / 2 - 1, rel=1e-6)
    assert sb.bound == pytest.approx(4 * np.sqrt(2) * (1 - np.sqrt(2) / 2), rel=1e-9)
    assert sb.holds


@given(st.sampled_from(["circle", "ellipse", "superellipse", "stadium"]), st.floats(0, 1), st.floats(1e-3, 1))
def test_sumset_bound_random_intervals(name, u, w):
    chart = _chart(name)
    L = chart.total_length
    a = u * L
    # grow the interval up to a quarter turn
    th = chart.ac_turning(a)
    lim = min(L, a + w * L)
    cand = np.linspace(a, lim, 64)[1:]
    ok = cand[chart.ac_turning(cand) - th <= np.pi / 2 - 1e-9]
    if not len(ok) or ok[-1] <= a:
        return
    sb = sumset_area(chart, (a, float(ok[-1])))
    assert sb.area <= sb.bound + 1e-9


def test_comparability_circle_rows():
    chart = arclength_chart(families.circle(n=2**14))
    rep = comparability_report(chart, delta_schedule=[chart.diameter * 2.0**-8])
    assert len(rep.rows) == 8
    for row in rep.rows:
        assert row.status == "ok"
        assert row.nu == pytest.approx(np.pi / 4, rel=1e-6)
        assert rep.A * row.nu <= row.mu_upper_cost <= row.nu
        assert row.ratio_upper == pytest.approx(0.5, abs=0.01)
        assert row.sandwich_holds()
    assert not rep.flagged()


def test_comparability_square_rows(square_chart):
    rep = comparability_report(square_chart)
    assert all(r.nu == 0 and r.mu_upper_cost == 0 and r.lower_bound == 0 for r in rep.rows)
    assert all(math.isnan(r.ratio_upper) and math.isnan(r.ratio_lower) for r in rep.rows)


def test_comparability_stadium_rows():
    chart = arclength_chart(families.stadium(n=2**14))
    rep = comparability_report(chart, delta_schedule=[chart.diameter * 2.0**-8])
    flat = [r for r in rep.rows if r.nu == 0]
    curved = [r for r in rep.rows if r.nu > 0]
    assert len(flat) == 2 and len(curved) == 8
    assert all(r.mu_upper_cost == 0 for r in flat)
    assert all(r.ratio_upper == pytest.approx(0.5, abs=0.01) for r in curved)


def test_default_partition_covers_J(ellipse_chart):
    parts = default_partition(ellipse_chart)
    assert parts[0][0] == 0.0 and parts[-1][1] == ellipse_chart.total_length
    assert all(p[1] == q[0] for p, q in zip(parts, parts[1:]))
    for a, b in parts:
        assert turning_measure(ellipse_chart, a, b, "()") <= np.pi / 4 + 1e-9


def test_delta_schedule_default(circle_chart):
    d = default_delta_schedule(circle_chart)
    assert len(d) == 9 and d[0] == pytest.approx(circle_chart.diameter / 4)


def test_report_flags_resolution_limited_rows(circle_chart):
    rep = comparability_report(circle_chart, delta_schedule=[1e-5])
    assert all(r.status == "ResolutionExhausted" for r in rep.rows)
    assert len(rep.flagged()) == len(rep.rows)


def test_affine_invariance_of_nu_and_cost():
    ell = families.ellipse(2.0, 1.0, n=8192)
    base = arclength_chart(ell)
    image = arclength_chart(ell.transformed(SHEAR))
    assert nu_mass(image, (0, image.total_length)) == pytest.approx(nu_mass(base, (0, base.total_length)), rel=1e-3)
    # match a sub-arc through its end points
    a, b = 0.7, 2.9
    ia = image.parameter_of(SHEAR @ base.z(a))
    ib = image.parameter_of(SHEAR @ base.z(b))
    assert nu_mass(image, (ia, ib)) == pytest.approx(nu_mass(base, (a, b)), rel=1e-3)
    k = 7
    c0 = mu_upper(base, (a, b), base.diameter * 2.0**-k).cost
    c1 = mu_upper(image, (ia, ib), image.diameter * 2.0**-k).cost
    assert c1 == pytest.approx(c0, rel=0.02)
