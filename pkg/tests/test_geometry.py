import numpy as np
import pytest

from carebot.geometry import (
    clamp_to_polygon,
    contains_point,
    convex_hull,
    edge_normals_inward,
    polygon_area,
    rectangle,
)


def test_hull_of_square_with_interior_points():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.2, 0.7]])
    hull = convex_hull(pts)
    assert len(hull) == 4
    assert polygon_area(hull) == pytest.approx(1.0)


def test_hull_is_ccw():
    rng = np.random.default_rng(0)
    hull = convex_hull(rng.normal(size=(30, 2)))
    assert polygon_area(hull) > 0


def test_rectangle_contains_center_and_respects_yaw():
    rect = rectangle(1.0, 2.0, 0.22, 0.13, yaw=0.5)
    assert contains_point(rect, (1.0, 2.0))
    assert polygon_area(convex_hull(rect)) == pytest.approx(0.22 * 0.13)


def test_contains_boundary_and_outside():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    assert contains_point(sq, (0.5, 0.5))
    assert contains_point(sq, (1.0, 0.5))
    assert not contains_point(sq, (1.0001, 0.5))


def test_clamp_inside_is_identity():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    np.testing.assert_allclose(clamp_to_polygon(sq, (0.3, 0.4)), [0.3, 0.4])


def test_clamp_projects_to_nearest_boundary():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    np.testing.assert_allclose(clamp_to_polygon(sq, (2.0, 0.5)), [1.0, 0.5])
    np.testing.assert_allclose(clamp_to_polygon(sq, (2.0, 2.0)), [1.0, 1.0])


def test_clamp_empty_polygon_raises():
    with pytest.raises(ValueError):
        clamp_to_polygon(np.zeros((0, 2)), (0, 0))


def test_clamped_point_is_closest_against_grid_search():
    rng = np.random.default_rng(4)
    poly = convex_hull(rng.normal(size=(12, 2)))
    # dense boundary sampling as the brute-force oracle
    samples = []
    for i in range(len(poly)):
        a, b = poly[i], poly[(i + 1) % len(poly)]
        ts = np.linspace(0, 1, 2001)[:, None]
        samples.append(a + ts * (b - a))
    boundary = np.vstack(samples)
    for _ in range(20):
        pt = rng.normal(size=2) * 3
        clamped = clamp_to_polygon(poly, pt)
        if contains_point(poly, pt):
            np.testing.assert_allclose(clamped, pt)
        else:
            best = boundary[np.argmin(np.linalg.norm(boundary - pt, axis=1))]
            assert np.linalg.norm(clamped - pt) <= np.linalg.norm(best - pt) + 1e-6


def test_edge_normals_point_inward():
    sq = np.array([[0, 0], [2, 0], [2, 2], [0, 2]], float)
    normals, offsets = edge_normals_inward(sq)
    center = np.array([1.0, 1.0])
    assert np.all(normals @ center - offsets > 0)
