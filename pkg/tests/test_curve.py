import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from affinecurve import families
from affinecurve.curve import (
    CircleArc,
    Segment,
    angular_point,
    build_curve,
    curve_from_pieces,
    polygon_diameter,
    ray_hit,
    wrap_angle,
)
from affinecurve.errors import BasePointOutside, CurveError, DegenerateCurve, NotConvex, StartPointOffCurve

from conftest import SQUARE


def test_square_is_valid_with_area_four():
    c = build_curve(SQUARE, x0=(0.0, 0.0))
    assert c.area == pytest.approx(4.0, abs=1e-15)
    assert c.perimeter == 8.0
    assert c.corner.sum() == 4


def test_reflex_hexagon_is_rejected():
    L = [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]
    with pytest.raises(NotConvex):
        build_curve(L)


def test_clockwise_polygon_is_rejected():
    with pytest.raises(NotConvex):
        build_curve(SQUARE[::-1])


@pytest.mark.parametrize(
    "verts",
    [
        [[0, 0], [1, 0]],
        [[0, 0], [1, 0], [2, 0]],
        [[0, 0], [1, 0], [1, 0], [0, 0]],
    ],
)
def test_degenerate_inputs(verts):
    with pytest.raises(DegenerateCurve):
        build_curve(verts)


def test_base_point_outside():
    with pytest.raises(BasePointOutside):
        build_curve(SQUARE, x0=(2.0, 0.0))
    with pytest.raises(BasePointOutside):
        build_curve(SQUARE, x0=(1.0, 0.0))


def test_start_point_must_be_on_curve():
    with pytest.raises(StartPointOffCurve):
        build_curve(SQUARE, x1=(0.0, 0.0))


def test_start_point_moves_first_node():
    c = build_curve(SQUARE, x1=(1.0, 0.0))
    np.testing.assert_allclose(c.points[0], [1.0, 0.0])
    assert not c.corner[0]
    assert c.perimeter == pytest.approx(8.0, abs=1e-14)


def test_64gon_perimeter_matches_closed_form():
    c = families.regular_ngon(64)
    assert c.perimeter == pytest.approx(128 * np.sin(np.pi / 64), rel=1e-14)


def test_ray_hit_examples():
    circle = families.circle(n=4096)
    np.testing.assert_allclose(ray_hit(circle, (1.0, 0.0)), [1.0, 0.0], atol=1e-12)
    sq = build_curve(SQUARE)
    e = np.array([1.0, 1.0]) / np.sqrt(2)
    np.testing.assert_allclose(ray_hit(sq, e), [1.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(ray_hit(sq, (-1.0, 0.0), x0=(0.5, 0.0)), [-1.0, 0.0], atol=1e-15)


def test_ray_hit_rejects_outside_origin_and_non_unit_direction():
    sq = build_curve(SQUARE)
    with pytest.raises(BasePointOutside):
        ray_hit(sq, (1.0, 0.0), x0=(3.0, 0.0))
    with pytest.raises(ValueError):
        ray_hit(sq, (2.0, 0.0))


@given(st.floats(0, 2 * np.pi, exclude_max=True))
def test_ray_hit_lies_on_square_boundary(angle):
    sq = build_curve(SQUARE)
    p = ray_hit(sq, (np.cos(angle), np.sin(angle)), x0=(0.2, -0.3))
    assert np.max(np.abs(p)) == pytest.approx(1.0, abs=1e-12)
    # the hit point is along the ray
    d = p - np.array([0.2, -0.3])
    assert d @ np.array([np.cos(angle), np.sin(angle)]) > 0


def test_angular_point_starts_at_x1():
    c = families.circle(n=1024)
    np.testing.assert_allclose(angular_point(c, 0.0), c.x1, atol=1e-12)
    np.testing.assert_allclose(angular_point(c, np.pi / 2), [0.0, 1.0], atol=1e-5)


def test_mixed_curve_flags_smooth_junctions():
    st_ = families.stadium(n=512)
    # semicircles meet the flat edges tangentially: no corners anywhere
    assert not st_.corner.any()
    assert st_.curved.sum() > 0 and (~st_.curved).sum() == 2


def test_polygon_diameter_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(5):
        c = families.random_convex_polygon(30, seed=int(rng.integers(1000)))
        p = c.points
        brute = np.max(np.hypot(*(p[:, None, :] - p[None, :, :]).transpose(2, 0, 1)))
        assert polygon_diameter(p) == pytest.approx(brute, rel=1e-14)


def test_transformed_curve_is_valid_and_area_scales():
    c = families.ellipse(2.0, 1.0, n=1024)
    m = np.array([[1.0, 0.5], [0.0, 1.0]])
    # the image is resampled, so polygon areas agree to the sampling error
    assert c.transformed(m).area == pytest.approx(np.pi * 2.0, rel=1e-5)
    assert c.transformed(2 * np.eye(2)).area == pytest.approx(4 * c.area, rel=1e-12)


def test_wrap_angle_range():
    a = wrap_angle(np.array([-1e-300, 0.0, np.pi, -np.pi, 2 * np.pi, 7.0, -7.0]))
    assert np.all((a > -np.pi) & (a <= np.pi))
    np.testing.assert_allclose(a[[2, 3, 5]], [np.pi, np.pi, 7.0 - 2 * np.pi], atol=1e-15)


def test_curve_from_pieces_rejects_gaps():
    pieces = [CircleArc((0, 0), 1.0, 0.0, np.pi), Segment(np.array([-1.0, 0.0]), np.array([0.9, 0.0]))]
    with pytest.raises(CurveError, match="piece 0 does not start where piece 1 ends"):
        curve_from_pieces(pieces)
