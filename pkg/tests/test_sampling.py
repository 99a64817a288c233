from __future__ import annotations

import numpy as np
import pytest

from algapprox import SamplerConfig, make_presentation, sample_on_sphere
from algapprox.errors import EmptyAtRadius
from algapprox.presentation import SetDescription
from algapprox.sampling import PointCloud, _accept, dedup, newton_project, numeric_forms, projected_distances

SMALL = SamplerConfig(samples_per_radius=300)


def test_x_axis_cloud_is_two_points(line):
    cloud = sample_on_sphere(line, 0.5, SMALL)
    assert isinstance(cloud, PointCloud) and cloud.radius == 0.5
    for p in cloud.points:
        assert min(np.linalg.norm(p - [0.5, 0]), np.linalg.norm(p + [0.5, 0])) <= 1e-8


def test_quadrant_cloud(quadrant):
    cloud = sample_on_sphere(quadrant, 0.1, SMALL)
    P = cloud.points
    assert len(P) > 50
    assert np.all(np.abs(P[:, 2]) <= SMALL.on_set_tol)
    assert np.all(P[:, :2] >= -SMALL.on_set_tol)
    np.testing.assert_allclose(np.linalg.norm(P, axis=1), 0.1, atol=SMALL.newton_tol * 10)


def test_origin_only_set_is_empty_at_radius():
    with pytest.raises(EmptyAtRadius):
        sample_on_sphere(make_presentation(["x", "y"], ["x^2 + y^2"]), 0.1, SMALL)


def test_radius_range():
    with pytest.raises(ValueError):
        sample_on_sphere(make_presentation(["x", "y"], ["y"]), 1.0, SMALL)


def test_union_samples_every_piece():
    left = make_presentation(["x", "y"], ["y"], ["-x"])
    right = make_presentation(["x", "y"], ["y"], ["x"])
    cloud = sample_on_sphere(SetDescription((left, right)), 0.2, SMALL)
    xs = sorted({round(float(v), 6) for v in cloud.points[:, 0]})
    assert xs == [-0.2, 0.2]


def test_sampling_is_deterministic(quadrant):
    a = sample_on_sphere(quadrant, 0.05, SMALL.replace(seed=11)).points
    from algapprox.sampling import clear_caches
    clear_caches()
    b = sample_on_sphere(quadrant, 0.05, SMALL.replace(seed=11)).points
    assert np.array_equal(a, b)


def test_dedup_resolution():
    P = np.array([[0.0, 0.0], [1e-9, 0.0], [1.0, 0.0]])
    assert len(dedup(P, 1e-6)) == 2


def test_nested_surface_reaches_sliver_tips():
    # the quadrant approximant (z^2 - x^5)^2 = y^7 at r = 0.1: the sheet over
    # y > 0 pinches to the curve z^2 = x^5 near y = 0; samples must reach
    # points with y close to the maximum allowed by the sphere
    p = make_presentation(["x", "y", "z"], ["(z^2 - x^5)^2 - y^7"])
    pts = sample_on_sphere(p, 0.1, SMALL).points
    f = p.equations[0]
    assert np.all(np.abs(f.evaluate(pts)) <= SMALL.on_set_tol)
    assert pts[:, 1].max() > 0.09
    assert pts[:, 0].max() > 0.09


def test_branch_forms_for_nested_equation():
    p = make_presentation(["x", "y", "z"], ["(z^2 - x^5)^2 - y^7"])
    forms = numeric_forms(p)
    assert len(forms) > 1
    # every accepted landing of every form lies on the original zero set
    rng = np.random.default_rng(0)
    f = p.equations[0]
    X0 = rng.normal(size=(200, 3))
    X0 *= 0.1 / np.linalg.norm(X0, axis=1, keepdims=True)
    landed = 0
    for eq, ineq in forms:
        X, res, dist = newton_project(X0, eq, 0.1, SMALL.newton_tol, SMALL.newton_max_iter)
        ok = _accept(ineq, X, res, dist, 0.1, SMALL)
        landed += int(ok.sum())
        assert np.all(np.abs(f.evaluate(X[ok])) <= SMALL.on_set_tol)
    assert landed > 100


def test_projected_distance_to_line():
    line = SetDescription((make_presentation(["x", "y"], ["y"]),))
    P = np.array([[0.3, 0.4], [0.0, -0.2]])
    d = projected_distances(P, line, None, SMALL)
    np.testing.assert_allclose(d, [0.4, 0.2], atol=1e-9)
