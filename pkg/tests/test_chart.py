import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from affinecurve import families
from affinecurve.chart import (
    arclength_chart,
    arclength_measure,
    curvature_density,
    nu_measure,
    sigma_measure,
    smooth_mask,
    tangents_at,
    turning_measure,
)
from affinecurve.curve import build_curve
from affinecurve.errors import ParameterOutOfRange, SingularPoint

from conftest import SQUARE

TWO_PI = 2 * np.pi


@pytest.mark.parametrize("k", [4, 6, 8, 10, 12])
def test_circle_length_inscribed_polygon(k):
    n = 2**k
    chart = arclength_chart(families.circle(n=n))
    assert chart.total_length == pytest.approx(2 * n * np.sin(np.pi / n), rel=1e-13)
    assert TWO_PI - chart.total_length <= 2 * np.pi**3 / (3 * 4**k)


def test_square_length_is_exact(square_chart):
    assert square_chart.total_length == 8.0


def test_ellipse_length_matches_quadrature():
    oracle, _ = quad(lambda u: np.hypot(2 * np.sin(u), np.cos(u)), 0, TWO_PI, epsabs=1e-13, limit=200)
    chart = arclength_chart(families.ellipse(2.0, 1.0, n=2**17))
    assert abs(chart.total_length - oracle) <= 1e-8


def test_length_never_decreases_under_refinement():
    lengths = [arclength_chart(families.circle(n=2**k)).total_length for k in range(3, 14)]
    assert np.all(np.diff(lengths) > 0)


def test_circle_tangents(circle_chart):
    t = np.linspace(0, circle_chart.total_length, 17)[:-1]
    th_l, th_r = tangents_at(circle_chart, t)
    # the chart is the inscribed polygon, so parameter t sits at angle t * 2 pi / length
    expected = np.mod(t * TWO_PI / circle_chart.total_length + np.pi / 2, TWO_PI)
    for th in (th_l, th_r):
        assert np.all((th >= 0) & (th < TWO_PI))
        np.testing.assert_allclose(np.angle(np.exp(1j * (th - expected))), 0.0, atol=1e-9)


def test_square_corner_jump(square_chart):
    # node 1 is the corner (1, -1)
    t = square_chart.t[1]
    th_l, th_r = tangents_at(square_chart, t, relative=True)
    assert th_r - th_l == pytest.approx(np.pi / 2, abs=1e-15)


def test_ellipse_smooth_nodes_have_equal_tangents(ellipse_chart):
    th_l, th_r = tangents_at(ellipse_chart, ellipse_chart.nodes[::97])
    assert np.max(np.abs(th_l - th_r)) <= 1e-10


def test_tangents_out_of_range(circle_chart):
    with pytest.raises(ParameterOutOfRange):
        tangents_at(circle_chart, -0.1)


def test_turning_examples(circle_chart, square_chart):
    assert turning_measure(circle_chart, 0.0, circle_chart.total_length) == pytest.approx(TWO_PI, abs=1e-12)
    c = square_chart.t[1]
    assert turning_measure(square_chart, c - 0.5, c + 0.5, "[]") == pytest.approx(np.pi / 2, abs=1e-15)
    assert turning_measure(square_chart, c, c, "[]") == pytest.approx(np.pi / 2, abs=1e-15)
    assert turning_measure(square_chart, c, c + 1, "(]") == 0.0
    assert turning_measure(square_chart, 0.1, 0.9, "()") == 0.0


def test_turning_measure_rejects_bad_kind(square_chart):
    with pytest.raises(ValueError):
        turning_measure(square_chart, 0.0, 1.0, "<>")
    with pytest.raises(ParameterOutOfRange):
        turning_measure(square_chart, 1.0, 0.0)


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
def test_circle_curvature(r):
    chart = arclength_chart(families.circle(r=r, n=2048))
    kappa = curvature_density(chart, chart.nodes[::61])
    # an inscribed polygon turns 2 pi over a slightly short length
    np.testing.assert_allclose(kappa, TWO_PI / chart.total_length, rtol=1e-12)
    np.testing.assert_allclose(kappa, 1 / r, rtol=1e-5)


def test_square_edge_curvature_and_corner(square_chart):
    assert curvature_density(square_chart, 0.5) == 0.0
    with pytest.raises(SingularPoint):
        curvature_density(square_chart, square_chart.t[2])


@pytest.mark.parametrize("x", [-0.8, -0.3, 0.0, 0.45, 0.9])
def test_parabola_curvature(x):
    chart = arclength_chart(families.parabola_cap(1.0, n=4096))
    t = chart.parameter_of((x, 0.5 * x**2))
    assert curvature_density(chart, t) == pytest.approx((1 + x * x) ** -1.5, abs=1e-4)


def test_ellipse_curvature_converges_in_step(ellipse_chart):
    # kappa at the end of the major axis is a / b**2 = 2
    t0 = ellipse_chart.t[0]
    errs = [abs(curvature_density(ellipse_chart, t0 + 1.0, fd_step=h) - curvature_density(ellipse_chart, t0 + 1.0, fd_step=h / 2)) for h in (0.2, 0.1)]
    assert errs[1] < errs[0] / 3
    assert curvature_density(ellipse_chart, 0.0, fd_step=1e-3) == pytest.approx(2.0, rel=1e-5)


def test_measures_total(circle_chart, square_chart):
    assert sigma_measure(circle_chart).total == pytest.approx(TWO_PI, abs=1e-12)
    assert sigma_measure(square_chart).total == TWO_PI
    assert nu_measure(square_chart).total == 0.0
    assert arclength_measure(square_chart).total == 8.0
    assert smooth_mask(square_chart).sum() == 0


def _polygon_chart(seed):
    return arclength_chart(families.random_convex_polygon(15, seed=seed))


@given(st.integers(0, 10_000), st.lists(st.floats(0, 1, exclude_max=True), min_size=2, max_size=12))
def test_monotone_turning(seed, fracs):
    chart = _polygon_chart(seed)
    t = np.unique(np.asarray(fracs)) * chart.total_length
    th_l, th_r = chart.angles(t)
    seq = np.column_stack([th_l, th_r]).ravel()
    assert np.all(np.diff(seq) >= -1e-15)


@given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_sigma_additivity(seed, u, v, w):
    chart = _polygon_chart(seed)
    a, m, b = np.sort([u, v, w]) * chart.total_length
    whole = turning_measure(chart, a, b, "[]")
    parts = turning_measure(chart, a, m, "[)") + turning_measure(chart, m, b, "[]")
    assert whole == pytest.approx(parts, abs=1e-12)
    parts2 = turning_measure(chart, a, m, "[]") + turning_measure(chart, m, b, "(]")
    assert whole == pytest.approx(parts2, abs=1e-12)
    mu = sigma_measure(chart)
    assert mu.mass(a, b, "[]") == pytest.approx(whole, abs=1e-12)


@given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 1))
def test_chord_arc(seed, u, v):
    chart = _polygon_chart(seed)
    s, t = np.sort([u, v]) * chart.total_length
    chord = np.hypot(*(chart.z(t) - chart.z(s)))
    assert chord <= (t - s) * (1 + 1e-12) + 1e-15
    k_s = np.searchsorted(chart.t, s, side="right")
    k_t = np.searchsorted(chart.t, t, side="left")
    if k_s >= k_t:  # same edge: equality
        assert chord == pytest.approx(t - s, abs=1e-12)


@given(st.integers(0, 10_000))
def test_total_turning_of_polygons_is_exact(seed):
    chart = _polygon_chart(seed)
    assert float(chart.theta_r[-1] - chart.theta_r[0]) == TWO_PI
    assert sigma_measure(chart).total == pytest.approx(TWO_PI, abs=1e-13)


@pytest.mark.parametrize("name", ["circle", "ellipse", "superellipse", "stadium", "parabola_cap"])
def test_total_turning_of_smooth_curves(name):
    chart = arclength_chart(families.GENERATORS[name](n=1024))
    assert sigma_measure(chart).total == pytest.approx(TWO_PI, abs=1e-9)


def test_square_as_regular_4gon():
    c = families.regular_ngon(4, r=np.sqrt(2), rotation=np.pi / 4)
    np.testing.assert_allclose(np.sort(np.abs(c.points), axis=0), np.ones((4, 2)), atol=1e-15)
    assert c.area == pytest.approx(4.0, rel=1e-15)


def test_sq_build_matches(square_chart):
    c = build_curve(SQUARE)
    assert arclength_chart(c).total_length == square_chart.total_length
