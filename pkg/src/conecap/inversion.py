"""Pointwise algebra of sphere inversions acting on second-order surface data.

Inversions are always taken about spheres centered at the origin (the cone
apex). For other centers, translate the data first.

Sign convention used throughout: the shape operator is -dN, so a sphere of
radius R whose unit normal points toward its center has principal curvatures
lambda1 = lambda2 = +1/R.

All functions are pure; jets and spheres are immutable values and can be
shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORIGIN_TOL = 1e-12
UNIT_TOL = 1e-9


def as_vec3(v) -> np.ndarray:
    """Coerce to a float64 length-3 vector and check finiteness."""
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"vector has non-finite components: {a}")
    return a


def unit(v) -> np.ndarray:
    """Normalize a vector, rejecting near-zero input."""
    a = as_vec3(v)
    n = np.linalg.norm(a)
    if n < ORIGIN_TOL:
        raise ValueError("cannot normalize a (near-)zero vector")
    return a / n


def _check_unit(n) -> np.ndarray:
    a = as_vec3(n)
    nn = np.linalg.norm(a)
    if abs(nn - 1.0) > UNIT_TOL:
        raise ValueError(f"expected a unit vector, got norm {nn!r}")
    return a / nn


def _reject_origin(p: np.ndarray) -> None:
    if np.linalg.norm(p) < ORIGIN_TOL:
        raise ValueError("inversion is undefined at the center O")


@dataclass(frozen=True)
class InversionSphere:
    """Sphere of inversion, centered at the origin."""

    radius: float

    def __post_init__(self):
        if not (self.radius > 0.0 and np.isfinite(self.radius)):
            raise ValueError(f"inversion radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class SurfaceJet:
    """Second-order surface data at a point: position, unit normal, principal
    curvatures. The mean curvature ``h`` is always (lam1 + lam2)/2 of the
    stored values."""

    p: np.ndarray
    n: np.ndarray
    lam1: float
    lam2: float

    def __post_init__(self):
        object.__setattr__(self, "p", as_vec3(self.p))
        object.__setattr__(self, "n", _check_unit(self.n))
        self.p.setflags(write=False)
        self.n.setflags(write=False)
        for lam in (self.lam1, self.lam2):
            if not np.isfinite(lam):
                raise ValueError("principal curvatures must be finite")

    @property
    def h(self) -> float:
        return 0.5 * (self.lam1 + self.lam2)


def jet_on_sphere(p, center, radius: float, inward: bool = True) -> SurfaceJet:
    """Analytic jet of a round sphere at a point on it.

    ``inward=True`` picks the normal toward the center (curvatures +1/R).
    """
    p = as_vec3(p)
    c = as_vec3(center)
    r = (c - p) / radius
    if inward:
        return SurfaceJet(p, r, 1.0 / radius, 1.0 / radius)
    return SurfaceJet(p, -r, -1.0 / radius, -1.0 / radius)


def jet_on_plane(p, normal) -> SurfaceJet:
    """Analytic jet of a plane (zero curvature) at a point on it."""
    return SurfaceJet(as_vec3(p), _check_unit(normal), 0.0, 0.0)


def invert_point(p, sphere: InversionSphere) -> np.ndarray:
    """Image r^2 p / |p|^2 of a point under the inversion about ``sphere``."""
    p = as_vec3(p)
    _reject_origin(p)
    return (sphere.radius**2 / float(p @ p)) * p


def invert_normal(jet: SurfaceJet, sphere: InversionSphere | None = None) -> np.ndarray:
    """Gauss map of the inverted surface at the image point.

    N_hat = N - 2 <N, p> p / |p|^2.  Does not depend on the inversion
    radius; ``sphere`` is accepted only for signature symmetry.
    """
    p = jet.p
    _reject_origin(p)
    return jet.n - (2.0 * float(jet.n @ p) / float(p @ p)) * p


def invert_jet(jet: SurfaceJet, sphere: InversionSphere) -> SurfaceJet:
    """Full second-order transform of a jet under inversion.

    Position and normal go through ``invert_point`` / ``invert_normal``;
    each principal curvature maps to (lam |p|^2 + 2<N,p>) / r^2.
    """
    p = jet.p
    _reject_origin(p)
    p2 = float(p @ p)
    f = float(jet.n @ p)
    r2 = sphere.radius**2
    lam1 = (jet.lam1 * p2 + 2.0 * f) / r2
    lam2 = (jet.lam2 * p2 + 2.0 * f) / r2
    return SurfaceJet(invert_point(p, sphere), invert_normal(jet), lam1, lam2)


def support_function(jet: SurfaceJet) -> float:
    """Support function f(p) = <N(p), p>."""
    return float(jet.n @ jet.p)


def inversion_invariance_residual(jet: SurfaceJet, sphere: InversionSphere) -> float:
    """Residual |p|^2 H + 2 <N,p> - H r^2.

    Vanishes identically on oriented CMC data that is invariant under the
    inversion (e.g. spheres orthogonal to the inversion sphere with inward
    normal, or planes through O). Caveat: a surface can be setwise invariant
    while its normal flips pointwise, in which case this oriented residual
    does not vanish; the inversion sphere itself is the standard example.
    """
    p = jet.p
    _reject_origin(p)
    h = jet.h
    return float(p @ p) * h + 2.0 * support_function(jet) - h * sphere.radius**2


def homothety_jet(jet: SurfaceJet, ratio: float) -> SurfaceJet:
    """Scale a jet about the origin: position by ``ratio``, curvatures by
    1/ratio, normal unchanged."""
    if not (ratio > 0.0 and np.isfinite(ratio)):
        raise ValueError(f"homothety ratio must be positive, got {ratio}")
    return SurfaceJet(ratio * jet.p, jet.n, jet.lam1 / ratio, jet.lam2 / ratio)
