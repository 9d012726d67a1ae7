"""Inclusion boundary curves and their spectral quadrature data.

Shapes are closed analytic curves parametrized counterclockwise on [0, 2*pi)
with the outward normal convention.  Three families are supported: disks,
ellipses, and trigonometric star shapes r(theta) = 1 + m*cos(w*theta).
"""

from dataclasses import dataclass

import numpy as np

_KINDS = ("disk", "ellipse", "smooth-star")


@dataclass(frozen=True)
class ShapeSpec:
    """Reference inclusion shape, dimensionless, origin strictly inside.

    kind        one of "disk", "ellipse", "smooth-star"
    radius      disk radius (disk only)
    a, b        semi-axes (ellipse only)
    amplitude   radial modulation m (smooth-star only)
    wave_number integer lobe count w (smooth-star only); m*w < 1 keeps the
                curve simple and free of self-intersections
    """

    kind: str
    radius: float = 1.0
    a: float = 1.0
    b: float = 1.0
    amplitude: float = 0.0
    wave_number: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "disk":
            if not self.radius > 0:
                raise ValueError("disk radius must be positive")
        elif self.kind == "ellipse":
            if not (self.a > 0 and self.b > 0):
                raise ValueError("ellipse semi-axes must be positive")
        else:
            m, w = self.amplitude, self.wave_number
            if not (0 < m < 1):
                raise ValueError("star amplitude must lie in (0, 1)")
            if int(w) != w or w < 1:
                raise ValueError("star wave number must be a positive integer")
            if m * w >= 1:
                raise ValueError(
                    f"star with amplitude {m} and wave number {w} self-intersects "
                    "(requires amplitude * wave_number < 1)")

    @classmethod
    def disk(cls, radius=1.0):
        return cls("disk", radius=radius)

    @classmethod
    def ellipse(cls, a, b):
        return cls("ellipse", a=a, b=b)

    @classmethod
    def star(cls, amplitude, wave_number):
        return cls("smooth-star", amplitude=amplitude, wave_number=int(wave_number))

    def curve(self, t):
        """Position, first and second parameter derivatives at angles t."""
        t = np.asarray(t, float)
        c, s = np.cos(t), np.sin(t)
        if self.kind == "disk":
            r = self.radius
            x = r * np.stack([c, s], axis=-1)
            d1 = r * np.stack([-s, c], axis=-1)
            d2 = -x
        elif self.kind == "ellipse":
            x = np.stack([self.a * c, self.b * s], axis=-1)
            d1 = np.stack([-self.a * s, self.b * c], axis=-1)
            d2 = -x
        else:
            m, w = self.amplitude, self.wave_number
            r = 1 + m * np.cos(w * t)
            r1 = -m * w * np.sin(w * t)
            r2 = -m * w * w * np.cos(w * t)
            x = np.stack([r * c, r * s], axis=-1)
            d1 = np.stack([r1 * c - r * s, r1 * s + r * c], axis=-1)
            d2 = np.stack([(r2 - r) * c - 2 * r1 * s, (r2 - r) * s + 2 * r1 * c], axis=-1)
        return x, d1, d2

    def polar_radius(self, theta):
        """Boundary radius in direction theta (all families are star-shaped)."""
        theta = np.asarray(theta, float)
        if self.kind == "disk":
            return np.full_like(theta, self.radius)
        if self.kind == "ellipse":
            c, s = np.cos(theta), np.sin(theta)
            return 1.0 / np.sqrt((c / self.a) ** 2 + (s / self.b) ** 2)
        return 1 + self.amplitude * np.cos(self.wave_number * theta)


@dataclass(frozen=True)
class PlacedInclusion:
    """Scaled and translated copy center + scale * shape inside the unit cell."""

    shape: ShapeSpec
    center: tuple
    scale: float

    def __post_init__(self):
        cx, cy = self.center
        if not (0 < cx < 1 and 0 < cy < 1):
            raise ValueError("inclusion center must lie inside the open unit cell")
        if not self.scale >= 1e-3:
            raise ValueError("inclusion scale below the supported minimum 1e-3")


@dataclass(frozen=True, eq=False)
class BoundaryDiscretization:
    """Equispaced-parameter trapezoid grid on a closed boundary curve.

    nodes trace the curve counterclockwise, normals point outward, and
    weights are parameter speed times the uniform spacing 2*pi/N so that
    sum(weights) approximates the curve length spectrally.
    """

    shape: ShapeSpec
    center: tuple
    scale: float
    n_nodes: int
    offset: float
    t: np.ndarray
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    speed: np.ndarray
    curvature: np.ndarray

    @property
    def spacing(self):
        return 2 * np.pi / self.n_nodes

    def length(self):
        return float(self.weights.sum())


def _freeze(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def discretize(shape, n_nodes, offset=0.0):
    """Quadrature nodes, outward normals, weights and curvature for a shape.

    n_nodes must be even and at least 16 (the logarithmic-kernel product
    quadrature pairs nodes).  offset shifts the parameter grid by
    offset * spacing, which is how off-node checkpoint grids are built.
    """
    n_nodes = int(n_nodes)
    if n_nodes < 16 or n_nodes % 2:
        raise ValueError("node count must be an even integer >= 16")
    h = 2 * np.pi / n_nodes
    t = (np.arange(n_nodes) + offset) * h
    x, d1, d2 = shape.curve(t)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    normals = np.stack([d1[:, 1], -d1[:, 0]], axis=-1) / speed[:, None]
    curvature = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
    return BoundaryDiscretization(
        shape=shape, center=(0.0, 0.0), scale=1.0, n_nodes=n_nodes, offset=float(offset),
        t=_freeze(t), nodes=_freeze(x), normals=_freeze(normals),
        weights=_freeze(h * speed), speed=_freeze(speed), curvature=_freeze(curvature))


def place(disc, center, scale):
    """Map a discretization through x -> center + scale * x.

    Weights scale by the factor, curvature by its inverse, normals are
    unchanged.  Rejected if the scaled curve is not strictly inside the
    open unit cell ]0,1[^2.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    center = (float(center[0]), float(center[1]))
    nodes = np.asarray(center) + scale * disc.nodes
    if nodes.min() <= 0.0 or nodes.max() >= 1.0:
        raise ValueError(
            f"inclusion at center {center} with scale {scale} touches or exits "
            "the unit cell")
    return BoundaryDiscretization(
        shape=disc.shape, center=center, scale=scale * disc.scale,
        n_nodes=disc.n_nodes, offset=disc.offset,
        t=disc.t, nodes=_freeze(nodes), normals=disc.normals,
        weights=_freeze(scale * disc.weights), speed=_freeze(scale * disc.speed),
        curvature=_freeze(disc.curvature / scale))


def shape_measure(disc):
    """Enclosed area (1/n) * integral of x . nu over the boundary, n = 2."""
    return float(0.5 * np.sum(disc.weights * np.sum(disc.nodes * disc.normals, axis=1)))
