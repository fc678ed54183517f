import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lbs import geometry
from lbs.geometry import EPS, Cuboid, GeometryError, PlacedShape, Space, Sphere
from oracles import sampled_sphere_distance

coord = st.floats(-20, 20, allow_nan=False)
radius = st.floats(0.05, 5.0)
scale = st.floats(0.1, 4.0)
points = st.tuples(coord, coord, coord)


def ball(c, r, s=1.0):
    return PlacedShape(Sphere(r), c, s)


@given(points, radius, scale, points, radius, scale)
def test_min_distance_is_symmetric_and_non_negative(c1, r1, s1, c2, r2, s2):
    a, b = ball(c1, r1, s1), ball(c2, r2, s2)
    d = geometry.min_distance(a, b)
    assert d >= 0
    assert d == geometry.min_distance(b, a)


@given(points, radius, scale, points, radius, scale, points)
def test_min_distance_is_translation_invariant(c1, r1, s1, c2, r2, s2, v):
    a, b = ball(c1, r1, s1), ball(c2, r2, s2)
    at = ball(geometry.translate(c1, v), r1, s1)
    bt = ball(geometry.translate(c2, v), r2, s2)
    assert math.isclose(geometry.min_distance(a, b), geometry.min_distance(at, bt), abs_tol=1e-9)


@given(points, radius, points, radius, st.floats(0.1, 5.0))
def test_scaling_both_shapes_about_the_origin_scales_the_distance(c1, r1, c2, r2, k):
    d = geometry.min_distance(ball(c1, r1), ball(c2, r2))
    ck1 = tuple(k * x for x in c1)
    ck2 = tuple(k * x for x in c2)
    dk = geometry.min_distance(ball(ck1, r1, k), ball(ck2, r2, k))
    assert math.isclose(dk, k * d, rel_tol=1e-9, abs_tol=1e-9)


def test_min_distance_against_sampling_oracle():
    rng = np.random.default_rng(5)
    for _ in range(50):
        c1, c2 = rng.uniform(-3, 3, size=(2, 3))
        r1, r2 = rng.uniform(0.2, 1.5, size=2)
        d = geometry.min_distance(ball(tuple(c1), r1), ball(tuple(c2), r2))
        assert abs(d - sampled_sphere_distance(c1, r1, c2, r2)) < 1e-6


def test_overlap_allows_tangency():
    a = ball((0.0, 0.0, 0.0), 1.0)
    assert not geometry.overlaps(a, ball((2.0, 0.0, 0.0), 1.0))
    assert not geometry.overlaps(a, ball((2.0 - EPS / 2, 0.0, 0.0), 1.0))
    assert geometry.overlaps(a, ball((2.0 - 1e-6, 0.0, 0.0), 1.0))
    assert geometry.min_distance(a, ball((2.0, 0.0, 0.0), 1.0)) == 0.0


def test_cuboid_space_containment():
    space = Space(Cuboid(10.0, 10.0, 10.0), (0.0, 0.0, 0.0))
    assert space.lower == (0.0, 0.0, 0.0) and space.upper == (10.0, 10.0, 10.0)
    assert geometry.contains(space, ball((1.0, 5.0, 5.0), 1.0))
    assert geometry.contains(space, ball((1.0 - EPS / 2, 5.0, 5.0), 1.0))
    assert not geometry.contains(space, ball((1.0 - 1e-6, 5.0, 5.0), 1.0))
    assert not geometry.contains(space, ball((5.0, 5.0, 5.0), 1.0, 5.5))
    assert geometry.contains(None, ball((1e6, 0.0, 0.0), 1.0))


def test_sphere_space_containment():
    space = Space(Sphere(5.0), (1.0, 1.0, 1.0))
    assert geometry.contains(space, ball((1.0, 1.0, 5.0), 1.0))
    assert not geometry.contains(space, ball((1.0, 1.0, 5.1), 1.0))
    assert space.contains_point((1.0, 6.0, 1.0))


@given(st.floats(0.0, 10.0), st.integers(0, 2**32 - 1))
def test_rand_point_has_the_requested_length(length, seed):
    p = geometry.rand_point(length, np.random.default_rng(seed))
    assert math.isclose(geometry.distance(p, (0.0, 0.0, 0.0)), length, rel_tol=1e-12, abs_tol=1e-12)


def test_rand_point_direction_is_uniform():
    rng = np.random.default_rng(8)
    pts = np.array([geometry.rand_point(1.0, rng) for _ in range(20_000)])
    assert np.all(np.abs(pts.mean(axis=0)) < 0.02)
    # uniform on the sphere: each coordinate is uniform on [-1, 1]
    for k in range(3):
        hist, _ = np.histogram(pts[:, k], bins=4, range=(-1, 1))
        assert np.all(np.abs(hist / len(pts) - 0.25) < 0.015)


def test_rand_point_rejects_bad_lengths():
    rng = np.random.default_rng(0)
    for bad in (-1.0, math.inf, math.nan):
        with pytest.raises(GeometryError):
            geometry.rand_point(bad, rng)


def test_glue_point():
    p = geometry.glue_point((5.0, 0.0, 0.0), (1.0, 0.0, 0.0), 2.0)
    assert p == (3.0, 0.0, 0.0)
    with pytest.raises(GeometryError):
        geometry.glue_point((1.0, 1.0, 1.0), (1.0, 1.0, 1.0), 2.0)


@given(st.integers(0, 2**32 - 1))
def test_sample_in_space_fits(seed):
    rng = np.random.default_rng(seed)
    for space in (Space(Cuboid(4.0, 6.0, 8.0), (1.0, 2.0, 3.0)), Space(Sphere(3.0), (0.0, 0.0, 0.0))):
        c = geometry.sample_in_space(space, 1.0, rng)
        assert geometry.contains(space, ball(c, 1.0))


def test_invalid_shapes():
    with pytest.raises(GeometryError):
        Sphere(0.0)
    with pytest.raises(GeometryError):
        Cuboid(1.0, -1.0, 1.0)
    with pytest.raises(GeometryError):
        PlacedShape(Sphere(1.0), (0.0, 0.0, 0.0), 0.0)
    with pytest.raises(GeometryError):
        geometry.sample_in_space(Space(Sphere(1.0), (0.0, 0.0, 0.0)), 2.0, np.random.default_rng())
