"""Executable reflection diagnostics: the spherical reflection sweep with
touching-point classification, the support-sign and boundedness checks, and
the vertical-plane symmetry scan.

The sweep reflects the part of the drop boundary beyond radius r (the free
surface plus the wetted wall strip) about the sphere of radius r and tests,
ray by ray, that the reflected points stay radially inside the drop. For a
radial graph both reflected-point radius and graph radius live on the same
ray, so the containment test is algebraic: a reflected sample at radius
r^2/|q| is compared against the graph radius along q's ray. Comparisons of
the wall against its own ray segments are excluded; the wall is a union of
rays through the boundary curve and is radially invariant under the
inversion, so it cannot act as a barrier against itself.

All reductions run in fixed order over precomputed sample arrays, so reports
are reproducible bit for bit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .cones import CircularCone, Cone, RayLocation, ray_through
from .inversion import SurfaceJet, support_function
from .meshing import TriangleMesh, discrete_jets, is_radial_graph

SWEEP_CLEARANCE_TOL = 1e-9
CONTACT_TOL = 1e-6


@dataclass(frozen=True)
class TouchingPoint:
    kind: str  # "T1" | "T2" | "T3" | "T4"
    p0: np.ndarray
    q0: np.ndarray


@dataclass(frozen=True)
class SweepReport:
    """Outcome of the spherical reflection sweep."""

    r0: float
    r1: float
    terminal: str  # "ReachedZero" | "Stalled"
    touching: TouchingPoint | None
    min_residual: float
    passing_is_interval: bool = True

    def __post_init__(self):
        if not (0.0 <= self.r1 <= self.r0):
            raise ValueError("sweep radii must satisfy 0 <= r1 <= r0")
        if self.terminal == "ReachedZero" and self.touching is not None:
            raise ValueError("a sweep that reached zero has no touching point")

    def to_json_dict(self) -> dict:
        touching = None
        if self.touching is not None:
            touching = {
                "class": self.touching.kind,
                "p0": [float(x) for x in self.touching.p0],
                "q0": [float(x) for x in self.touching.q0],
            }
        return {
            "r0": float(self.r0),
            "r1": float(self.r1),
            "terminal": self.terminal,
            "touching": touching,
            "minResidual": float(self.min_residual),
        }


def classify_touching(on_boundary: bool, p0_radius: float, r1: float, scale: float) -> str:
    """Touching taxonomy: interior vs boundary point, and whether the contact
    sits on the reflection sphere itself (|p0| = r1 within 1e-6 * scale)."""
    at_sphere = abs(p0_radius - r1) <= CONTACT_TOL * scale
    if not on_boundary:
        return "T2" if at_sphere else "T1"
    return "T4" if at_sphere else "T3"


def _check_boundary_on_cone(mesh: TriangleMesh, cone: Cone, tol: float = 1e-6):
    if not mesh.boundary_loops:
        raise ValueError("mesh has no boundary; the sweep needs a capillary patch")
    bverts = mesh.vertices[mesh.boundary_vertices]
    if isinstance(cone, CircularCone):
        polar = np.arccos(np.clip(bverts[:, 2] / np.linalg.norm(bverts, axis=1), -1, 1))
        if np.any(np.abs(polar - cone.half_angle) > tol):
            raise ValueError("mesh boundary is not on the cone wall")
    else:
        for v in bverts:
            if ray_through(v / np.linalg.norm(v), cone, tol=tol) != RayLocation.ON_BOUNDARY:
                raise ValueError("mesh boundary is not on the cone wall")


def _check_directions_in_cone(dirs: np.ndarray, cone: Cone, tol: float = 1e-6):
    if isinstance(cone, CircularCone):
        polar = np.arccos(np.clip(dirs[:, 2], -1, 1))
        if np.any(polar > cone.half_angle + tol):
            raise ValueError("mesh extends outside the cone")
    else:
        for d in dirs:
            if ray_through(d, cone, tol=tol) == RayLocation.OUTSIDE:
                raise ValueError("mesh extends outside the cone")


def spherical_sweep(mesh: TriangleMesh, cone: Cone, samples: int = 64) -> SweepReport:
    """Run the decreasing-radius spherical reflection sweep on a radial-graph
    drop boundary.

    Samples are the mesh vertices and face barycenters plus wall points
    between the boundary circle and the reflection sphere. At each radius r
    the portion beyond r is reflected and each reflected sample is required
    to stay radially at or below the drop boundary along its own ray; r1 is
    the smallest radius passing for the whole tail [r1, r0], refined by
    bisection. A strictly positive r1 is reported as Stalled together with a
    classified touching point.
    """
    if samples < 2:
        raise ValueError("need at least 2 sweep samples")
    graph = is_radial_graph(mesh)
    if not graph:
        raise ValueError("not a radial graph (spherical sweep containment is per-ray)")
    _check_boundary_on_cone(mesh, cone)

    verts = mesh.vertices
    bary = verts[mesh.faces].mean(axis=1)
    surf = np.vstack([verts, bary])
    surf_radius = np.linalg.norm(surf, axis=1)
    boundary_flag = np.zeros(len(surf), dtype=bool)
    boundary_flag[mesh.boundary_vertices] = True
    dirs = surf / surf_radius[:, None]
    _check_directions_in_cone(dirs, cone)

    bpts = verts[mesh.boundary_vertices]
    wall_extent = np.linalg.norm(bpts, axis=1)
    r0 = float(surf_radius.max())
    tol = SWEEP_CLEARANCE_TOL * r0

    def min_clearance(r: float) -> tuple[float, int]:
        """Smallest radial clearance over reflected samples; index of the
        worst surface sample (or -1 when the wall strip is the worst)."""
        best = math.inf
        worst = -1
        sel = surf_radius > r
        if np.any(sel):
            clear = surf_radius[sel] - r * r / surf_radius[sel]
            i = int(np.argmin(clear))
            best = float(clear[i])
            worst = int(np.flatnonzero(sel)[i])
        wsel = wall_extent > r
        if np.any(wsel):
            # wall strip between the sphere of radius r and the contact circle
            for frac in (1.0 / 3.0, 2.0 / 3.0, 1.0):
                t = r + (wall_extent[wsel] - r) * frac
                clear = wall_extent[wsel] - r * r / t
                j = int(np.argmin(clear))
                if float(clear[j]) < best:
                    best = float(clear[j])
                    worst = -1 - int(np.flatnonzero(wsel)[j])
        return best, worst

    rs = r0 * np.arange(1, samples + 1) / samples
    clearances = np.empty(samples)
    passing = np.empty(samples, dtype=bool)
    for i, r in enumerate(rs):
        c, _ = min_clearance(float(r))
        clearances[i] = c
        passing[i] = c >= -tol
    finite = clearances[np.isfinite(clearances)]
    min_residual = float(finite.min()) if len(finite) else math.inf

    if bool(passing.all()):
        return SweepReport(r0=r0, r1=0.0, terminal="ReachedZero", touching=None,
                           min_residual=min_residual)

    fail_idx = int(np.flatnonzero(~passing).max())
    # the passing radii should form the interval [r1, r0]: nothing below the
    # largest failing radius may pass
    passing_is_interval = bool((~passing[: fail_idx + 1]).all())
    lo = float(rs[fail_idx])
    hi = float(rs[fail_idx + 1]) if fail_idx + 1 < samples else r0
    while hi - lo > 1e-6 * r0:
        mid = 0.5 * (lo + hi)
        c, _ = min_clearance(mid)
        if c >= -tol:
            hi = mid
        else:
            lo = mid
    r1 = hi
    _, worst = min_clearance(lo)
    if worst >= 0:
        q0 = surf[worst]
        u = dirs[worst]
        p0 = surf_radius[worst] * u  # the surface point on the contact ray
        on_boundary = bool(boundary_flag[worst])
    else:
        b = -1 - worst
        p0 = bpts[b]
        q0 = p0  # contact traced back to the wall strip under this boundary ray
        on_boundary = True
    kind = classify_touching(on_boundary, float(np.linalg.norm(p0)), r1, r0)
    return SweepReport(
        r0=r0,
        r1=r1,
        terminal="Stalled",
        touching=TouchingPoint(kind, p0.copy(), q0.copy()),
        min_residual=min_residual,
        passing_is_interval=passing_is_interval,
    )


# --------------------------------------------------------------------------
# support sign and boundedness


def _as_jets(mesh: TriangleMesh, jets) -> list[SurfaceJet]:
    if jets is None:
        return list(discrete_jets(mesh))
    return list(jets)


def support_sign_check(mesh: TriangleMesh, r: float, jets=None) -> bool:
    """True iff the support function <N, p> is negative at every interior
    vertex with |p| > r."""
    for jet in _as_jets(mesh, jets):
        if float(np.linalg.norm(jet.p)) > r and support_function(jet) >= 0.0:
            return False
    return True


@dataclass(frozen=True)
class BoundednessReport:
    max_excess: float
    n_tested: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.n_tested == 0 or self.max_excess <= self.tol


def boundedness_check(
    mesh: TriangleMesh, h: float, r: float, jets=None, tol: float = 1e-6
) -> BoundednessReport:
    """Check the reflected-curvature bound H_hat <= H for a nonpositive-H
    surface at sweep radius r.

    H_hat is evaluated as (|q|^2 H + 2 <N,q>) / r^2 at points with |q| >= r
    and negative support; the report carries max(H_hat - H), which should not
    exceed discretization error.
    """
    if h > 0.0:
        raise ValueError("boundedness is asserted only for H <= 0")
    if r <= 0.0:
        raise ValueError("sweep radius must be positive")
    excess = []
    for jet in _as_jets(mesh, jets):
        q = jet.p
        radius = float(np.linalg.norm(q))
        f = support_function(jet)
        if radius >= r and f < 0.0:
            h_hat = (radius**2 * h + 2.0 * f) / r**2
            excess.append(h_hat - h)
    max_excess = max(excess) if excess else -math.inf
    return BoundednessReport(max_excess=float(max_excess), n_tested=len(excess), tol=tol)


# --------------------------------------------------------------------------
# vertical symmetry planes Q(t): cos(t) x + sin(t) y = 0


@dataclass(frozen=True)
class SymmetryReport:
    found: bool
    plane: float | None
    deviation: float
    half_cone_ok: bool = True

    def to_json_dict(self) -> dict:
        return {
            "found": bool(self.found),
            "plane": None if self.plane is None else float(self.plane),
            "deviation": float(self.deviation),
        }


def _point_triangle_distance(p: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Distances from one point to each triangle in ``tri`` (n, 3, 3)."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    closest = np.empty_like(a)
    done = np.zeros(len(tri), dtype=bool)

    def put(mask, pts):
        m = mask & ~done
        closest[m] = pts[m]
        done[m] = True

    put((d1 <= 0) & (d2 <= 0), a)
    put((d3 >= 0) & (d4 <= d3), b)
    put((d6 >= 0) & (d5 <= d6), c)

    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = np.where(d1 - d3 != 0, d1 / (d1 - d3), 0.0)
    put((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + np.clip(v_ab, 0, 1)[:, None] * ab)

    vb = d5 * d2 - d1 * d6
    with np.errstate(divide="ignore", invalid="ignore"):
        w_ac = np.where(d2 - d6 != 0, d2 / (d2 - d6), 0.0)
    put((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + np.clip(w_ac, 0, 1)[:, None] * ac)

    va = d3 * d6 - d5 * d4
    denom_bc = (d4 - d3) + (d5 - d6)
    with np.errstate(divide="ignore", invalid="ignore"):
        w_bc = np.where(denom_bc != 0, (d4 - d3) / denom_bc, 0.0)
    put((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0),
        b + np.clip(w_bc, 0, 1)[:, None] * (c - b))

    denom = va + vb + vc
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(denom != 0, vb / denom, 0.0)
        w = np.where(denom != 0, vc / denom, 0.0)
    inner = a + v[:, None] * ab + w[:, None] * ac
    closest[~done] = inner[~done]
    return np.linalg.norm(p - closest, axis=1)


def _boundary_in_half_cone(mesh: TriangleMesh) -> bool:
    if not mesh.boundary_loops:
        return False
    b = mesh.vertices[mesh.boundary_vertices]
    ang = np.sort(np.arctan2(b[:, 1], b[:, 0]))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
    return float(gaps.max()) > math.pi


def _golden_min(f, lo: float, hi: float, tol: float = 1e-12):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    t = 0.5 * (a + b)
    return t, f(t)


def planar_symmetry_detect(
    mesh: TriangleMesh,
    cone: CircularCone,
    coarse: int = 64,
    tol_scale: float = 1e-6,
    refine_top: int = 32,
) -> SymmetryReport:
    """Scan the pencil of vertical planes Q(t) = {cos(t) x + sin(t) y = 0}
    for a reflection symmetry of the mesh.

    The deviation at each t is a sampled Hausdorff distance between the mesh
    and its reflection: reflected vertices and barycenters are measured
    against the original surface via nearest-sample distances, with the worst
    offenders refined to exact point-triangle distances. Found means the
    optimal deviation is below 1e-6 times the bounding radius.
    """
    half_ok = _boundary_in_half_cone(mesh)
    if not half_ok:
        warnings.warn("mesh boundary is not confined to an open half-cone; "
                      "the symmetry argument's hypothesis fails", stacklevel=2)
    verts = mesh.vertices
    bary = verts[mesh.faces].mean(axis=1)
    cloud = np.vstack([verts, bary])
    tree = cKDTree(cloud)
    r0 = float(np.linalg.norm(verts, axis=1).max())
    tri = verts[mesh.faces]

    # faces incident to each vertex, for the exact refinement step
    incident: list[list[int]] = [[] for _ in range(len(verts))]
    for fi, f in enumerate(mesh.faces):
        for v in f:
            incident[int(v)].append(fi)
    vtree = cKDTree(verts)

    samples = cloud

    def deviation(t: float) -> float:
        n = np.array([math.cos(t), math.sin(t), 0.0])
        refl = samples - 2.0 * (samples @ n)[:, None] * n
        d_cloud, _ = tree.query(refl, k=1)
        if refine_top <= 0:
            return float(d_cloud.max())
        order = np.argsort(d_cloud)[::-1][:refine_top]
        refined = d_cloud.copy()
        for idx in order:
            p = refl[idx]
            _, nearest = vtree.query(p, k=min(6, len(verts)))
            cand = sorted({fi for v in np.atleast_1d(nearest) for fi in incident[int(v)]})
            if cand:
                refined[idx] = float(_point_triangle_distance(p, tri[cand]).min())
        return float(refined.max())

    ts = math.pi * np.arange(coarse) / coarse
    devs = np.array([deviation(float(t)) for t in ts])
    i0 = int(np.argmin(devs))
    step = math.pi / coarse
    t_opt, dev_opt = _golden_min(lambda t: deviation(t % math.pi),
                                 ts[i0] - step, ts[i0] + step)
    t_opt = t_opt % math.pi
    found = dev_opt <= tol_scale * r0
    return SymmetryReport(
        found=bool(found),
        plane=float(t_opt) if found else None,
        deviation=float(dev_opt),
        half_cone_ok=half_ok,
    )
