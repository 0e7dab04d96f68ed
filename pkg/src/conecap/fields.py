"""Radial-graph fields over the spherical cap of a circular cone.

A field stores a positive radius rho per node of a geodesic-polar grid
(theta, s) on the cap of angular radius phi; the apex direction is a single
pole node. The drop functionals are discretized so that they are exactly
homogeneous under rho -> k * rho: volume scales as k^3 and both areas as
k^2, which lets the solver restore a volume constraint by an exact
homothety.

Node quadrature weights partition the cap exactly (they telescope to
2*pi*(1 - cos(phi))), so a constant field reproduces the solid-angle volume
formula to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cones import CircularCone


@dataclass(frozen=True)
class RadialGraphField:
    """Positive radius function on a polar grid over the cap of radius phi.

    ``rho`` has shape (n_s, n_theta) for the rings s_i = phi * i / n_s,
    i = 1..n_s; ``rho_pole`` is the single value at the apex direction. Ring
    n_s is the boundary ring on the cone wall.
    """

    phi: float
    rho_pole: float
    rho: np.ndarray

    def __post_init__(self):
        if not (0.0 < self.phi < math.pi / 2):
            raise ValueError("phi must lie in (0, pi/2)")
        r = np.ascontiguousarray(np.asarray(self.rho, dtype=float))
        if r.ndim != 2 or r.shape[0] < 3 or r.shape[1] < 3:
            raise ValueError("rho must be (n_s >= 3, n_theta >= 3)")
        if not np.all(np.isfinite(r)) or np.any(r <= 0) or not self.rho_pole > 0:
            raise ValueError("rho must be positive and finite everywhere")
        object.__setattr__(self, "rho", r)
        r.setflags(write=False)

    @property
    def n_s(self) -> int:
        return self.rho.shape[0]

    @property
    def n_theta(self) -> int:
        return self.rho.shape[1]

    @property
    def delta_s(self) -> float:
        return self.phi / self.n_s

    @property
    def s(self) -> np.ndarray:
        return self.phi * np.arange(1, self.n_s + 1) / self.n_s

    @property
    def theta(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_theta) / self.n_theta

    @cached_property
    def directions(self) -> np.ndarray:
        """Unit ray directions, pole first, then rings in (s, theta) order."""
        s = self.s[:, None]
        th = self.theta[None, :]
        grid = np.stack(
            [
                np.sin(s) * np.cos(th),
                np.sin(s) * np.sin(th),
                np.broadcast_to(np.cos(s), (self.n_s, self.n_theta)),
            ],
            axis=2,
        ).reshape(-1, 3)
        return np.vstack([[0.0, 0.0, 1.0], grid])

    def values(self) -> np.ndarray:
        """Nodal rho as a flat vector matching ``directions`` ordering."""
        return np.concatenate([[self.rho_pole], self.rho.ravel()])

    def positions(self) -> np.ndarray:
        return self.values()[:, None] * self.directions

    @cached_property
    def node_weights(self) -> np.ndarray:
        """Spherical cell areas per node; they sum exactly to the cap area."""
        ds = self.delta_s
        s = self.s
        w = np.empty(1 + self.n_s * self.n_theta)
        w[0] = 2.0 * math.pi * (1.0 - math.cos(ds / 2.0))
        dtheta = 2.0 * math.pi / self.n_theta
        ring = dtheta * (np.cos(s - ds / 2.0) - np.cos(np.minimum(s + ds / 2.0, self.phi)))
        w[1:] = np.repeat(ring, self.n_theta)
        return w

    @property
    def boundary_slice(self) -> slice:
        start = 1 + (self.n_s - 1) * self.n_theta
        return slice(start, start + self.n_theta)

    @property
    def boundary_arc_weights(self) -> np.ndarray:
        dtheta = 2.0 * math.pi / self.n_theta
        return np.full(self.n_theta, math.sin(self.phi) * dtheta)

    def scaled(self, ratio: float) -> "RadialGraphField":
        if ratio <= 0:
            raise ValueError("scale ratio must be positive")
        return RadialGraphField(self.phi, ratio * self.rho_pole, ratio * self.rho)

    def boundary_contact_angles(self) -> np.ndarray:
        """Contact angle along the boundary ring, cos(gamma) = <N, N_C> with
        the drop-facing graph normal; uses second-order one-sided differences
        for the radial slope."""
        ds = self.delta_s
        r = self.rho
        rho_b = r[-1]
        drho_ds = (3.0 * r[-1] - 4.0 * r[-2] + r[-3]) / (2.0 * ds)
        dtheta = 2.0 * math.pi / self.n_theta
        drho_dt = (np.roll(rho_b, -1) - np.roll(rho_b, 1)) / (2.0 * dtheta)
        grad2 = drho_ds**2 + (drho_dt / math.sin(self.phi)) ** 2
        w = np.sqrt(1.0 + grad2 / rho_b**2)
        cosg = -(drho_ds / rho_b) / w
        return np.arccos(np.clip(cosg, -1.0, 1.0))


def constant_field(phi: float, n_s: int, n_theta: int, rho: float) -> RadialGraphField:
    return RadialGraphField(phi, rho, np.full((n_s, n_theta), float(rho)))


def field_for_volume(phi: float, n_s: int, n_theta: int, volume: float) -> RadialGraphField:
    """Constant field whose discrete drop volume equals ``volume`` exactly."""
    omega = 2.0 * math.pi * (1.0 - math.cos(phi))
    rho = (3.0 * volume / omega) ** (1.0 / 3.0)
    return constant_field(phi, n_s, n_theta, rho)


def flat_disc_field(phi: float, n_s: int, n_theta: int, height: float) -> RadialGraphField:
    """Sampled field of the horizontal disc z = height."""
    s = phi * np.arange(1, n_s + 1) / n_s
    rho = np.repeat((height / np.cos(s))[:, None], n_theta, axis=1)
    return RadialGraphField(phi, height, rho)


def field_from_function(phi: float, n_s: int, n_theta: int, fn) -> RadialGraphField:
    """Sample an axisymmetric radial profile rho(s) onto the grid."""
    s = phi * np.arange(1, n_s + 1) / n_s
    vals = np.repeat(np.asarray(fn(s), dtype=float)[:, None], n_theta, axis=1)
    return RadialGraphField(phi, float(fn(np.array(0.0))), vals)


@dataclass(frozen=True)
class DropMeasures:
    """Surface area of the interface, wetted wall area and drop volume."""

    area: float
    wetted_area: float
    volume: float


def drop_measures(field: RadialGraphField, cone: CircularCone | None = None) -> DropMeasures:
    """Area, wetted area and volume of the radial-graph drop.

    volume = (1/3) sum rho^3 * cell area, wetted = (1/2) sum rho_b^2 * arc
    length, area = triangulated graph area. If a cone is passed its half
    angle must match the field's.
    """
    if cone is not None and abs(cone.half_angle - field.phi) > 1e-12:
        raise ValueError("cone half angle does not match the field")
    vals = field.values()
    volume = float(vals**3 @ field.node_weights) / 3.0
    rho_b = vals[field.boundary_slice]
    wetted = 0.5 * float(rho_b**2 @ field.boundary_arc_weights)
    area = float(triangle_areas(field.positions(), graph_triangles(field.n_s, field.n_theta)).sum())
    return DropMeasures(area=area, wetted_area=wetted, volume=volume)


def graph_triangles(n_s: int, n_theta: int) -> np.ndarray:
    """Fan plus quad-strip connectivity of the polar grid (pole node 0).

    Faces wind counterclockwise in (s, theta), i.e. with normals on the
    outward side of the graph; reverse for drop-facing normals.
    """
    nid = lambda i, j: 1 + (i - 1) * n_theta + (j % n_theta)
    faces = []
    for j in range(n_theta):
        faces.append((0, nid(1, j), nid(1, j + 1)))
    for i in range(1, n_s):
        for j in range(n_theta):
            a, b = nid(i, j), nid(i, j + 1)
            c, d = nid(i + 1, j), nid(i + 1, j + 1)
            faces.append((a, c, d))
            faces.append((a, d, b))
    return np.array(faces, dtype=np.int64)


def triangle_areas(positions: np.ndarray, faces: np.ndarray) -> np.ndarray:
    p = positions[faces]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def write_field_csv(field: RadialGraphField, path) -> None:
    """CSV export with header theta,s,rho; pole row first, then rings in
    (s, theta) order. Output is byte-stable for identical fields."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("theta,s,rho\n")
        fh.write(f"0.0,0.0,{float(field.rho_pole)!r}\n")
        s = field.s
        th = field.theta
        for i in range(field.n_s):
            for j in range(field.n_theta):
                fh.write(f"{float(th[j])!r},{float(s[i])!r},{float(field.rho[i, j])!r}\n")
