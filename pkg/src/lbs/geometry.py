"""Analytic 3D shapes, distances, confinement tests and random translation.

Points are plain ``(x, y, z)`` tuples of floats. Shapes are barycentre
relative; a :class:`Space` additionally carries an anchor (bottom-left
vertex for cuboids, centre for spheres) so it can be used as a
confinement region.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

Point = tuple[float, float, float]

# Boundary tolerance, in world length units, for contact/containment tests.
EPS = 1e-9

ORIGIN: Point = (0.0, 0.0, 0.0)


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Sphere:
    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise GeometryError(f"sphere radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class Cuboid:
    width: float
    height: float
    depth: float

    def __post_init__(self):
        for d in (self.width, self.height, self.depth):
            if not (d > 0 and math.isfinite(d)):
                raise GeometryError(f"cuboid dimensions must be positive, got {d}")

    @property
    def dims(self) -> Point:
        return (self.width, self.height, self.depth)


Shape = Union[Sphere, Cuboid]


@dataclass(frozen=True)
class Space:
    """A confinement region: a shape pinned at an anchor point."""

    shape: Shape
    anchor: Point

    @property
    def lower(self) -> Point:
        if isinstance(self.shape, Cuboid):
            return self.anchor
        r = self.shape.radius
        return tuple(a - r for a in self.anchor)

    @property
    def upper(self) -> Point:
        if isinstance(self.shape, Cuboid):
            return tuple(a + d for a, d in zip(self.anchor, self.shape.dims))
        r = self.shape.radius
        return tuple(a + r for a in self.anchor)

    def contains_point(self, p) -> bool:
        if isinstance(self.shape, Cuboid):
            return all(lo - EPS <= x <= hi + EPS for x, lo, hi in zip(p, self.lower, self.upper))
        return _norm(_sub(p, self.anchor)) <= self.shape.radius + EPS


@dataclass(frozen=True)
class PlacedShape:
    """The point set ``{centre + scale * q | q in shape}``."""

    shape: Shape
    centre: Point
    scale: float = 1.0

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise GeometryError(f"scale must be positive, got {self.scale}")
        if not all(math.isfinite(c) for c in self.centre):
            raise GeometryError(f"non-finite centre {self.centre}")

    @property
    def radius(self) -> float:
        """Bounding radius (exact radius for spheres)."""
        if isinstance(self.shape, Sphere):
            return self.scale * self.shape.radius
        return self.scale * 0.5 * math.sqrt(sum(d * d for d in self.shape.dims))

    @property
    def half_extents(self) -> Point:
        if isinstance(self.shape, Sphere):
            r = self.radius
            return (r, r, r)
        return tuple(0.5 * self.scale * d for d in self.shape.dims)


def _sub(p, q) -> Point:
    return (p[0] - q[0], p[1] - q[1], p[2] - q[2])


def _norm(v) -> float:
    return math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def distance(p, q) -> float:
    return _norm(_sub(p, q))


def _box_gap(c1, h1, c2, h2) -> float:
    """Euclidean gap between two axis-aligned boxes (0 if they meet)."""
    gaps = [max(0.0, abs(a - b) - (x + y)) for a, b, x, y in zip(c1, c2, h1, h2)]
    return _norm(gaps)


def _point_box_distance(p, c, h) -> float:
    gaps = [max(0.0, abs(a - b) - x) for a, b, x in zip(p, c, h)]
    return _norm(gaps)


def _box_penetration(c1, h1, c2, h2) -> float:
    """Smallest per-axis overlap depth; positive iff interiors intersect."""
    return min((x + y) - abs(a - b) for a, b, x, y in zip(c1, c2, h1, h2))


def min_distance(a: PlacedShape, b: PlacedShape) -> float:
    """Minimum Euclidean distance between the point sets of ``a`` and ``b``."""
    sa, sb = isinstance(a.shape, Sphere), isinstance(b.shape, Sphere)
    if sa and sb:
        return max(0.0, distance(a.centre, b.centre) - (a.radius + b.radius))
    if sa or sb:
        sph, box = (a, b) if sa else (b, a)
        d = _point_box_distance(sph.centre, box.centre, box.half_extents)
        return max(0.0, d - sph.radius)
    return _box_gap(a.centre, a.half_extents, b.centre, b.half_extents)


def overlaps(a: PlacedShape, b: PlacedShape) -> bool:
    """True iff the interiors intersect; tangent shapes do not overlap."""
    sa, sb = isinstance(a.shape, Sphere), isinstance(b.shape, Sphere)
    if sa and sb:
        return distance(a.centre, b.centre) < a.radius + b.radius - EPS
    if sa or sb:
        sph, box = (a, b) if sa else (b, a)
        h = box.half_extents
        if all(abs(x - c) <= e for x, c, e in zip(sph.centre, box.centre, h)):
            return True
        return _point_box_distance(sph.centre, box.centre, h) < sph.radius - EPS
    return _box_penetration(a.centre, a.half_extents, b.centre, b.half_extents) > EPS


def contains(space: Space | None, e: PlacedShape) -> bool:
    """True iff every point of ``e`` lies inside ``space`` (None is unbounded)."""
    if space is None:
        return True
    if isinstance(space.shape, Cuboid):
        h = e.half_extents
        if isinstance(e.shape, Sphere):
            h = (e.radius,) * 3
        return all(
            lo - EPS <= c - x and c + x <= hi + EPS
            for c, x, lo, hi in zip(e.centre, h, space.lower, space.upper)
        )
    R = space.shape.radius
    if isinstance(e.shape, Sphere):
        return distance(e.centre, space.anchor) + e.radius <= R + EPS
    # farthest box corner from the sphere centre
    far = [abs(c - a) + x for c, a, x in zip(e.centre, space.anchor, e.half_extents)]
    return _norm(far) <= R + EPS


def rand_point(length: float, rng: np.random.Generator) -> Point:
    """A point at distance ``length`` from the origin in a uniform direction."""
    if length < 0 or not math.isfinite(length):
        raise GeometryError(f"random translation length must be finite and >= 0, got {length}")
    if length == 0:
        return ORIGIN
    while True:
        v = rng.standard_normal(3)
        n = math.sqrt(float(v @ v))
        if n > 1e-12:
            break
    return (float(v[0] / n * length), float(v[1] / n * length), float(v[2] / n * length))


def glue_point(p, q, contact_distance: float) -> Point:
    """Point at ``contact_distance`` from ``q`` in the direction of ``p``."""
    d = _sub(p, q)
    n = _norm(d)
    if n == 0.0:
        raise GeometryError("degenerate glue direction")
    k = contact_distance / n
    return (q[0] + k * d[0], q[1] + k * d[1], q[2] + k * d[2])


def translate(p, v) -> Point:
    return (p[0] + v[0], p[1] + v[1], p[2] + v[2])


def sample_in_space(space: Space, radius: float, rng: np.random.Generator) -> Point:
    """Uniform barycentre such that a sphere of ``radius`` fits in ``space``."""
    if isinstance(space.shape, Cuboid):
        lo = np.asarray(space.lower) + radius
        hi = np.asarray(space.upper) - radius
        if np.any(hi < lo):
            raise GeometryError("shape does not fit in space")
        return tuple(float(x) for x in rng.uniform(lo, hi))
    free = space.shape.radius - radius
    if free < 0:
        raise GeometryError("shape does not fit in space")
    u = rng.random() ** (1.0 / 3.0) * free
    return translate(space.anchor, rand_point(u, rng))
