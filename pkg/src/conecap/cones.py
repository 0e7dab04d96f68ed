"""Cone geometry, contact angles and spherical-cap configurations.

Circular cones have apex at the origin and axis +z; the half-angle phi is the
polar angle of the wall. General cones are polyhedral: their wall is the fan
of planar triangles O-G_i-G_{i+1} over a closed spherical polyline G, which
makes wedge normals and membership tests exact on the discrete model.

Contact angles follow the normal-vector convention cos(gamma) = <N, N_C>,
where N is the surface normal toward the drop and N_C the cone-wall normal
toward the cone interior. Under this convention the flat horizontal disc
meets the wall at gamma = pi/2 + phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linprog

from .inversion import SurfaceJet, as_vec3, unit

ANGLE_TOL = 1e-9


class CapCase(str, Enum):
    CONCAVE_A = "ConcaveA"
    CONVEX_B = "ConvexB"
    TWO_CAPS_C = "TwoCapsC"
    FLAT_D = "FlatD"


class HSign(str, Enum):
    POSITIVE = "Positive"
    ZERO = "Zero"
    NEGATIVE = "Negative"


class RayLocation(str, Enum):
    INSIDE = "Inside"
    ON_BOUNDARY = "OnBoundary"
    OUTSIDE = "Outside"


@dataclass(frozen=True)
class CircularCone:
    """Circular cone of half-angle ``half_angle`` about the +z axis."""

    half_angle: float

    def __post_init__(self):
        if not (0.0 < self.half_angle < math.pi / 2):
            raise ValueError(
                f"half angle must lie in (0, pi/2), got {self.half_angle}"
            )

    @property
    def solid_angle(self) -> float:
        """Solid angle of the spherical domain D."""
        return 2.0 * math.pi * (1.0 - math.cos(self.half_angle))

    def polar_angle(self, p) -> float:
        p = as_vec3(p)
        r = np.linalg.norm(p)
        if r == 0.0:
            raise ValueError("polar angle undefined at the apex")
        return math.acos(np.clip(p[2] / r, -1.0, 1.0))


def _arc_contains(a, b, x, tol=1e-12) -> bool:
    # x assumed on the great circle through a, b; test membership in the
    # minor arc from a to b.
    n = np.cross(a, b)
    return float(np.dot(np.cross(a, x), n)) >= -tol and float(
        np.dot(np.cross(x, b), n)
    ) >= -tol


def _arcs_cross(a, b, c, d) -> bool:
    n1 = np.cross(a, b)
    n2 = np.cross(c, d)
    t = np.cross(n1, n2)
    nt = np.linalg.norm(t)
    if nt < 1e-14:
        # coplanar arcs: overlap only if an endpoint sits inside the other arc
        return (
            _arc_contains(a, b, c, -1e-9)
            or _arc_contains(a, b, d, -1e-9)
            or _arc_contains(c, d, a, -1e-9)
            or _arc_contains(c, d, b, -1e-9)
        )
    t = t / nt
    for x in (t, -t):
        if _arc_contains(a, b, x) and _arc_contains(c, d, x):
            return True
    return False


@dataclass(frozen=True)
class GeneralCone:
    """Polyhedral cone over a closed spherical polyline.

    ``curve`` holds the ordered unit vertices of the polyline; ``interior_marker``
    is a unit direction strictly inside the spherical domain D.
    """

    curve: np.ndarray
    interior_marker: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.curve, dtype=float)
        if c.ndim != 2 or c.shape[1] != 3 or c.shape[0] < 3:
            raise ValueError("curve must be an (n>=3, 3) array of unit vectors")
        norms = np.linalg.norm(c, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("curve points must be unit vectors")
        c = c / norms[:, None]
        m = unit(self.interior_marker)
        object.__setattr__(self, "curve", c)
        object.__setattr__(self, "interior_marker", m)
        self.curve.setflags(write=False)
        self.interior_marker.setflags(write=False)
        self._validate_hemisphere()
        self._validate_simple()

    def _validate_hemisphere(self):
        # exists h with <G_i, h> >= t > 0: small LP, variables (h, t)
        n = self.curve.shape[0]
        a_ub = np.hstack([-self.curve, np.ones((n, 1))])
        res = linprog(
            c=[0.0, 0.0, 0.0, -1.0],
            A_ub=a_ub,
            b_ub=np.zeros(n),
            bounds=[(-1, 1), (-1, 1), (-1, 1), (None, None)],
            method="highs",
        )
        if not res.success or -res.fun <= 1e-9:
            raise ValueError("curve is not contained in an open hemisphere")

    def _validate_simple(self):
        n = self.curve.shape[0]
        for i in range(n):
            a, b = self.curve[i], self.curve[(i + 1) % n]
            if np.linalg.norm(a - b) < 1e-12:
                raise ValueError("curve has a repeated vertex")
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                cc, dd = self.curve[j], self.curve[(j + 1) % n]
                if _arcs_cross(a, b, cc, dd):
                    raise ValueError("spherical polyline is self-intersecting")

    def edges(self):
        n = self.curve.shape[0]
        return [(self.curve[i], self.curve[(i + 1) % n]) for i in range(n)]


Cone = CircularCone | GeneralCone


def contact_angle(n_surface, n_cone) -> float:
    """Angle in [0, pi] between two unit normals, arccos of their dot."""
    a = unit(n_surface)
    b = unit(n_cone)
    return math.acos(float(np.clip(a @ b, -1.0, 1.0)))


def classify_configuration(gamma: float, phi: float) -> CapCase:
    """Configuration taxonomy of spherical-cap and disc interfaces.

    Thresholds sit at pi/2 +- phi; the flat case is an exact boundary and is
    resolved within ANGLE_TOL.
    """
    _check_angles(gamma, phi)
    upper = math.pi / 2 + phi
    lower = math.pi / 2 - phi
    if abs(gamma - upper) <= ANGLE_TOL:
        return CapCase.FLAT_D
    if gamma > upper:
        return CapCase.CONCAVE_A
    if gamma >= lower - ANGLE_TOL:
        return CapCase.CONVEX_B
    return CapCase.TWO_CAPS_C


def sign_of_H(gamma: float, phi: float) -> HSign:
    """Sign of the mean curvature predicted by the umbilical-family argument,
    with its threshold at (pi + phi)/2."""
    _check_angles(gamma, phi)
    thr = 0.5 * (math.pi + phi)
    if abs(gamma - thr) <= ANGLE_TOL:
        return HSign.ZERO
    return HSign.POSITIVE if gamma < thr else HSign.NEGATIVE


def _check_angles(gamma, phi):
    if not (0.0 < phi < math.pi / 2):
        raise ValueError(f"phi must lie in (0, pi/2), got {phi}")
    if not (0.0 <= gamma <= math.pi):
        raise ValueError(f"gamma must lie in [0, pi], got {gamma}")


def inward_cone_normal(p, cone: Cone, tol: float = 1e-7) -> np.ndarray:
    """Unit normal of the cone wall at p, pointing into the cone interior.

    Rejects points that are not on the wall within ``tol`` (an angular
    tolerance for circular cones, a chordal one for general cones).
    """
    p = as_vec3(p)
    r = np.linalg.norm(p)
    if r < 1e-12:
        raise ValueError("cone normal undefined at the apex")
    if isinstance(cone, CircularCone):
        phi = cone.half_angle
        if abs(cone.polar_angle(p) - phi) > tol:
            raise ValueError("point is not on the cone wall")
        theta = math.atan2(p[1], p[0])
        return np.array(
            [
                -math.cos(phi) * math.cos(theta),
                -math.cos(phi) * math.sin(theta),
                math.sin(phi),
            ]
        )
    u = p / r
    for a, b in cone.edges():
        nrm = np.cross(a, b)
        nn = np.linalg.norm(nrm)
        if nn < 1e-14:
            continue
        nrm = nrm / nn
        if abs(float(u @ nrm)) > tol:
            continue
        # in-wedge test: u = x a + y b with x, y >= 0
        g = float(a @ b)
        det = 1.0 - g * g
        x = (float(u @ a) - g * float(u @ b)) / det
        y = (float(u @ b) - g * float(u @ a)) / det
        if x >= -tol and y >= -tol:
            # orient toward the interior of D, probing from the edge midpoint
            mid = unit(a + b)
            probe = unit(mid + 1e-4 * nrm)
            if ray_through(probe, cone) != RayLocation.INSIDE:
                nrm = -nrm
            return nrm
    raise ValueError("point is not on the cone wall")


def ray_through(u, cone: Cone, tol: float = 1e-9) -> RayLocation:
    """Classify a ray direction against the cone's spherical domain D."""
    u = unit(u)
    if isinstance(cone, CircularCone):
        polar = math.acos(float(np.clip(u[2], -1.0, 1.0)))
        if abs(polar - cone.half_angle) <= tol:
            return RayLocation.ON_BOUNDARY
        return RayLocation.INSIDE if polar < cone.half_angle else RayLocation.OUTSIDE
    for a, b in cone.edges():
        nrm = np.cross(a, b)
        nrm = nrm / np.linalg.norm(nrm)
        if abs(float(u @ nrm)) <= tol and _arc_contains(a, b, u, tol):
            return RayLocation.ON_BOUNDARY
    crossings = 0
    m = cone.interior_marker
    for a, b in cone.edges():
        if _arcs_cross(m, u, a, b):
            crossings += 1
    return RayLocation.INSIDE if crossings % 2 == 0 else RayLocation.OUTSIDE


# --------------------------------------------------------------------------
# spherical-cap configurations


@dataclass(frozen=True)
class Sphere:
    """Sphere with center (0, 0, center_z) and positive radius."""

    center_z: float
    radius: float

    def __post_init__(self):
        if not (self.radius > 0.0):
            raise ValueError("sphere radius must be positive")


@dataclass(frozen=True)
class Plane:
    """Horizontal plane z = height > 0."""

    height: float

    def __post_init__(self):
        if not (self.height > 0.0):
            raise ValueError("plane height must be positive")


@dataclass(frozen=True)
class CapConfiguration:
    """A classified spherical-cap or flat capillary interface in a circular
    cone.

    ``portion`` records which side of the sphere the cap lives on ("north" for
    the piece around the upper pole, "south" for the lower one) and
    ``normal_toward_center`` fixes the orientation used for the stored mean
    curvature: the curvature is taken with respect to the unit normal pointing
    toward the drop.
    """

    phi: float
    gamma: float
    case: CapCase
    surface: Sphere | Plane
    mean_curvature: float
    boundary_distance: float
    portion: str | None = None
    normal_toward_center: bool | None = None
    far_cap: bool = False

    def __post_init__(self):
        if classify_configuration(self.gamma, self.phi) != self.case:
            raise ValueError("case does not match the (gamma, phi) taxonomy")
        measured = self.sampled_contact_angle()
        if abs(measured - self.gamma) > ANGLE_TOL:
            raise ValueError(
                f"stored surface meets the cone at {measured}, expected {self.gamma}"
            )

    def sampled_contact_angle(self, theta: float = 0.0) -> float:
        cone = CircularCone(self.phi)
        b = self.boundary_point(theta)
        return contact_angle(self.surface_normal(b), inward_cone_normal(b, cone))

    def boundary_point(self, theta: float) -> np.ndarray:
        d, phi = self.boundary_distance, self.phi
        return d * np.array(
            [
                math.sin(phi) * math.cos(theta),
                math.sin(phi) * math.sin(theta),
                math.cos(phi),
            ]
        )

    def surface_normal(self, p) -> np.ndarray:
        """Unit normal at a surface point, oriented toward the drop."""
        p = as_vec3(p)
        if isinstance(self.surface, Plane):
            return np.array([0.0, 0.0, -1.0])
        c = np.array([0.0, 0.0, self.surface.center_z])
        v = (c - p) / self.surface.radius
        return v if self.normal_toward_center else -v

    def jet(self, p) -> SurfaceJet:
        """Analytic jet at a surface point with the drop-facing normal."""
        if isinstance(self.surface, Plane):
            return SurfaceJet(as_vec3(p), np.array([0.0, 0.0, -1.0]), 0.0, 0.0)
        lam = (1.0 if self.normal_toward_center else -1.0) / self.surface.radius
        return SurfaceJet(as_vec3(p), self.surface_normal(p), lam, lam)

    def radial_function(self):
        """Radius of the cap along the ray at polar angle u, as a callable.

        Only meaningful for configurations that are radial graphs over D,
        which is every case here except the far two-caps piece taken alone
        near tangency; the formula below is exact wherever the discriminant
        is nonnegative.
        """
        if isinstance(self.surface, Plane):
            h = self.surface.height
            return lambda u: h / np.cos(u)
        a, r = self.surface.center_z, self.surface.radius
        sgn = 1.0 if self.portion == "north" else -1.0

        def rho(u):
            u = np.asarray(u, dtype=float)
            disc = r * r - (a * np.sin(u)) ** 2
            if np.any(disc < -1e-12):
                raise ValueError("ray misses the sphere")
            return a * np.cos(u) + sgn * np.sqrt(np.maximum(disc, 0.0))

        return rho

    def drop_volume(self, n: int = 4096) -> float:
        """Volume of the radial-graph drop under the cap (Simpson rule)."""
        rho = self.radial_function()
        u = np.linspace(0.0, self.phi, 2 * n + 1)
        f = rho(u) ** 3 * np.sin(u)
        h = u[1] - u[0]
        simpson = (h / 3.0) * (f[0] + f[-1] + 4 * f[1::2].sum() + 2 * f[2:-1:2].sum())
        return (2.0 * math.pi / 3.0) * simpson


def _sampled_gamma(a: float, phi: float, toward_center: bool) -> float:
    # angle oracle at unit boundary distance, boundary point at theta = 0
    b = np.array([math.sin(phi), 0.0, math.cos(phi)])
    c = np.array([0.0, 0.0, a])
    rad = np.linalg.norm(b - c)
    n_surface = (c - b) / rad if toward_center else (b - c) / rad
    n_cone = np.array([-math.cos(phi), 0.0, math.sin(phi)])
    return math.acos(float(np.clip(n_surface @ n_cone, -1.0, 1.0)))


def _bisect_offset(f, target: float, lo: float = 1e-12, hi: float = 1.0 - 1e-12):
    """Bisection for the axis-offset parameter against the sampled angle.

    ``f`` maps a parameter u in (0, 1) to the sampled contact angle; it must
    be monotone over the bracket, which is asserted on a coarse scan before
    refining (the taxonomy guarantees it, but only numerically).
    """
    us = np.linspace(lo, hi, 33)
    gs = np.array([f(u) for u in us])
    d = np.diff(gs)
    if not (np.all(d >= -1e-12) or np.all(d <= 1e-12)):
        raise RuntimeError("sampled contact angle is not monotone over the bracket")
    increasing = gs[-1] > gs[0]
    glo, ghi = gs[0], gs[-1]
    if not (min(glo, ghi) - 2e-9 <= target <= max(glo, ghi) + 2e-9):
        raise ValueError(f"target angle {target} outside bracket [{glo}, {ghi}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = f(mid)
        if abs(gm - target) <= 1e-13 or hi - lo <= 1e-16:
            return mid
        if (gm < target) == increasing:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def construct_cap(
    cone: CircularCone,
    gamma: float,
    boundary_distance: float,
    far_cap: bool = False,
) -> CapConfiguration:
    """Build the spherical cap (or disc) meeting the cone at angle ``gamma``
    with its boundary circle at slant distance ``boundary_distance`` from O.

    The sphere's axis offset is found by bisection on the sampled contact
    angle at unit distance and then scaled, so homothety equivariance of the
    output is exact. In the two-caps regime the apex-side cap is returned by
    default; ``far_cap=True`` selects the other piece.
    """
    phi = cone.half_angle
    d = boundary_distance
    if not (d > 0.0):
        raise ValueError("boundary distance must be positive")
    if gamma <= ANGLE_TOL:
        raise ValueError("gamma = 0 is a degenerate tangency")
    case = classify_configuration(gamma, phi)

    if case == CapCase.FLAT_D:
        return CapConfiguration(
            phi=phi,
            gamma=math.pi / 2 + phi,
            case=case,
            surface=Plane(d * math.cos(phi)),
            mean_curvature=0.0,
            boundary_distance=d,
        )

    a0 = 1.0 / math.cos(phi)
    if case == CapCase.CONCAVE_A:
        f = lambda u: _sampled_gamma(a0 / u, phi, toward_center=False)
        u = _bisect_offset(f, gamma)
        a, toward, portion = a0 / u, False, "south"
    elif case == CapCase.TWO_CAPS_C and not far_cap:
        f = lambda u: _sampled_gamma(a0 / u, phi, toward_center=True)
        u = _bisect_offset(f, gamma)
        a, toward, portion = a0 / u, True, "south"
    else:
        # convex caps, and the far piece of the two-caps regime
        f = lambda u: _sampled_gamma(a0 - (1.0 - u) / u, phi, toward_center=True)
        u = _bisect_offset(f, gamma)
        a, toward, portion = a0 - (1.0 - u) / u, True, "north"

    radius = float(np.linalg.norm(np.array([math.sin(phi), 0.0, math.cos(phi) - a])))
    h = (1.0 if toward else -1.0) / (radius * d)
    return CapConfiguration(
        phi=phi,
        gamma=gamma,
        case=case,
        surface=Sphere(center_z=a * d, radius=radius * d),
        mean_curvature=h,
        boundary_distance=d,
        portion=portion,
        normal_toward_center=toward,
        far_cap=far_cap and case == CapCase.TWO_CAPS_C,
    )
