"""Discrete surfaces: triangulations of caps and radial graphs, discrete
curvature, mesh inversion and the radial-graph test.

Meshes are immutable after construction (vertex and face arrays are marked
read-only); all operations here allocate fresh outputs, so shared meshes can
be processed concurrently.

Discrete mean curvature follows the cotangent scheme with mixed Voronoi
areas. With the mean-curvature vector

    L(v) = sum over neighbors u of (cot a + cot b) (p_v - p_u)

the signed mean curvature with respect to a unit vertex normal n is
H = -<L, n> / (4 A_mixed); on the unit sphere with inward normals this gives
H = +1, matching the jet sign convention of :mod:`conecap.inversion`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cones import CapConfiguration, Cone, Plane
from .fields import graph_triangles
from .inversion import InversionSphere, SurfaceJet

MIN_VERTEX_RADIUS = 1e-12
BARY_EPS = 1e-12


@dataclass(frozen=True)
class TriangleMesh:
    """Oriented triangle mesh, manifold with boundary, no vertex at O."""

    vertices: np.ndarray
    faces: np.ndarray
    validate: bool = True

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must be (V, 3)")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError("faces must be (F, 3)")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        v.setflags(write=False)
        f.setflags(write=False)
        if self.validate:
            self._validate()

    def _validate(self):
        v, f = self.vertices, self.faces
        if f.min(initial=0) < 0 or f.max(initial=-1) >= len(v):
            raise ValueError("face index out of range")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite vertex")
        radii = np.linalg.norm(v, axis=1)
        if np.any(radii < MIN_VERTEX_RADIUS):
            raise ValueError("mesh has a vertex at (or too close to) the origin")
        scale = radii.max()
        a = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        if np.any(0.5 * np.linalg.norm(a, axis=1) <= 1e-16 * scale**2):
            raise ValueError("mesh has a degenerate face")
        # orientation and manifoldness via directed edges
        de = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        order = np.lexsort((de[:, 1], de[:, 0]))
        ds = de[order]
        if np.any(np.all(ds[1:] == ds[:-1], axis=1)):
            raise ValueError("inconsistent orientation (repeated directed edge)")
        und = np.sort(de, axis=1)
        uf, counts = np.unique(und, axis=0, return_counts=True)
        if np.any(counts > 2):
            raise ValueError("non-manifold edge")

    @cached_property
    def boundary_loops(self) -> list[np.ndarray]:
        """Ordered vertex cycles of the mesh boundary."""
        f = self.faces
        de = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        seen = {(int(a), int(b)) for a, b in de}
        succ = {}
        for a, b in de:
            if (int(b), int(a)) not in seen:
                succ[int(a)] = int(b)
        loops = []
        while succ:
            start, nxt = next(iter(succ.items()))
            loop = [start]
            del succ[start]
            while nxt != start:
                loop.append(nxt)
                nxt2 = succ.pop(nxt)
                nxt = nxt2
            loops.append(np.array(loop, dtype=np.int64))
        return loops

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        if not self.boundary_loops:
            return np.array([], dtype=np.int64)
        return np.unique(np.concatenate(self.boundary_loops))

    @cached_property
    def interior_mask(self) -> np.ndarray:
        mask = np.ones(len(self.vertices), dtype=bool)
        mask[self.boundary_vertices] = False
        return mask

    def flipped(self) -> "TriangleMesh":
        """Same surface with reversed orientation."""
        return TriangleMesh(self.vertices, self.faces[:, ::-1], validate=False)

    def scaled(self, ratio: float) -> "TriangleMesh":
        if ratio <= 0:
            raise ValueError("scale ratio must be positive")
        return TriangleMesh(ratio * self.vertices, self.faces, validate=False)

    def face_areas(self) -> np.ndarray:
        v, f = self.vertices, self.faces
        a = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        return 0.5 * np.linalg.norm(a, axis=1)

    def area(self) -> float:
        return float(self.face_areas().sum())


# --------------------------------------------------------------------------
# OBJ I/O (1-based "v"/"f" records)


def write_obj(mesh: TriangleMesh, path, comments=()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        for x, y, z in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for i, j, k in mesh.faces + 1:
            fh.write(f"f {i} {j} {k}\n")


def read_obj(path, validate: bool = True) -> TriangleMesh:
    verts, faces = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise ValueError("only triangle faces are supported")
                faces.append([i - 1 for i in idx])
    return TriangleMesh(np.array(verts), np.array(faces), validate=validate)


# --------------------------------------------------------------------------
# mesh builders


def _orient_toward(vertices, faces, reference_normal, probe_face=0):
    """Flip all faces if the winding normal of ``probe_face`` disagrees with
    ``reference_normal`` there. Keeps the orientation globally consistent."""
    f = faces[probe_face]
    n = np.cross(
        vertices[f[1]] - vertices[f[0]], vertices[f[2]] - vertices[f[0]]
    )
    if float(n @ reference_normal) < 0.0:
        return faces[:, ::-1].copy()
    return faces


def _normalize_resolution(resolution) -> tuple[int, int]:
    if isinstance(resolution, int):
        res = (resolution, 2 * resolution)
    else:
        res = (int(resolution[0]), int(resolution[1]))
    if res[0] < 3 or res[1] < 3:
        raise ValueError(f"resolution must be at least 3, got {resolution}")
    return res


def mesh_spherical_cap(config: CapConfiguration, resolution) -> TriangleMesh:
    """Triangulate a cap configuration; the boundary ring lies on the cone
    wall and faces are wound so normals point toward the drop."""
    n_rings, n_theta = _normalize_resolution(resolution)
    theta = 2.0 * math.pi * np.arange(n_theta) / n_theta
    d, phi = config.boundary_distance, config.phi

    if isinstance(config.surface, Plane):
        h = config.surface.height
        rmax = d * math.sin(phi)
        verts = [np.array([0.0, 0.0, h])]
        for i in range(1, n_rings + 1):
            r = rmax * i / n_rings
            ring = np.stack(
                [r * np.cos(theta), r * np.sin(theta), np.full(n_theta, h)], axis=1
            )
            verts.append(ring)
        vertices = np.vstack([verts[0][None, :], *verts[1:]])
        faces = graph_triangles(n_rings, n_theta)
        faces = _orient_toward(vertices, faces, np.array([0.0, 0.0, -1.0]))
        return TriangleMesh(vertices, faces)

    a, radius = config.surface.center_z, config.surface.radius
    c = np.array([0.0, 0.0, a])
    pole_sign = 1.0 if config.portion == "north" else -1.0
    cos_psi_b = pole_sign * (d * math.cos(phi) - a) / radius
    psi_b = math.acos(float(np.clip(cos_psi_b, -1.0, 1.0)))
    verts = [c + np.array([0.0, 0.0, pole_sign * radius])]
    for i in range(1, n_rings + 1):
        psi = psi_b * i / n_rings
        ring = c + radius * np.stack(
            [
                math.sin(psi) * np.cos(theta),
                math.sin(psi) * np.sin(theta),
                np.full(n_theta, pole_sign * math.cos(psi)),
            ],
            axis=1,
        )
        verts.append(ring)
    vertices = np.vstack([verts[0][None, :], *verts[1:]])
    faces = graph_triangles(n_rings, n_theta)
    probe_centroid = vertices[faces[0]].mean(axis=0)
    ref = config.surface_normal(c + radius * _unit_rows(probe_centroid - c))
    faces = _orient_toward(vertices, faces, ref)
    return TriangleMesh(vertices, faces)


def _unit_rows(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def mesh_sphere(center, radius: float, resolution: int, inward: bool = True) -> TriangleMesh:
    """Closed UV sphere mesh; ``inward=True`` winds faces so vertex normals
    point toward the center."""
    if resolution < 3:
        raise ValueError("resolution must be at least 3")
    c = np.asarray(center, dtype=float)
    n_pol, n_az = resolution, 2 * resolution
    theta = 2.0 * math.pi * np.arange(n_az) / n_az
    verts = [c + np.array([0.0, 0.0, radius])]
    for i in range(1, n_pol):
        psi = math.pi * i / n_pol
        ring = c + radius * np.stack(
            [
                math.sin(psi) * np.cos(theta),
                math.sin(psi) * np.sin(theta),
                np.full(n_az, math.cos(psi)),
            ],
            axis=1,
        )
        verts.append(ring)
    south = c + np.array([0.0, 0.0, -radius])
    vertices = np.vstack([verts[0][None, :], *verts[1:], south[None, :]])

    nid = lambda i, j: 1 + (i - 1) * n_az + (j % n_az)
    s_id = len(vertices) - 1
    faces = []
    for j in range(n_az):
        faces.append((0, nid(1, j), nid(1, j + 1)))
    for i in range(1, n_pol - 1):
        for j in range(n_az):
            a, b = nid(i, j), nid(i, j + 1)
            cc, dd = nid(i + 1, j), nid(i + 1, j + 1)
            faces.append((a, cc, dd))
            faces.append((a, dd, b))
    for j in range(n_az):
        faces.append((s_id, nid(n_pol - 1, j + 1), nid(n_pol - 1, j)))
    faces = np.array(faces, dtype=np.int64)
    probe = vertices[faces[0]].mean(axis=0)
    ref = (c - probe) if inward else (probe - c)
    faces = _orient_toward(vertices, faces, ref)
    return TriangleMesh(vertices, faces)


def mesh_radial_graph(field, cone: Cone | None = None) -> TriangleMesh:
    """Triangulate a radial-graph field; faces are wound so normals point
    toward the drop (toward the apex side)."""
    positions = field.positions()
    faces = graph_triangles(field.n_s, field.n_theta)
    pole_dir = np.array([0.0, 0.0, 1.0])
    faces = _orient_toward(positions, faces, -pole_dir)
    return TriangleMesh(positions, faces)


def invert_mesh(mesh: TriangleMesh, sphere: InversionSphere) -> TriangleMesh:
    """Apply the inversion vertex-wise. Face index order is unchanged, which
    reverses the geometric orientation (the ambient inversion is
    orientation-reversing); callers comparing discrete normals against the
    analytic Gauss-map transform should align signs first."""
    radii2 = np.einsum("ij,ij->i", mesh.vertices, mesh.vertices)
    if np.any(np.sqrt(radii2) < MIN_VERTEX_RADIUS):
        raise ValueError("mesh has a vertex too close to the inversion center")
    verts = (sphere.radius**2 / radii2)[:, None] * mesh.vertices
    return TriangleMesh(verts, mesh.faces, validate=False)


# --------------------------------------------------------------------------
# discrete jets


@dataclass(frozen=True)
class DiscreteJets:
    """Per-interior-vertex discrete surface data plus a quality report.

    ``obtuse_dominated`` flags vertices whose one-ring is mostly obtuse
    triangles; ``umbilic_fallback`` flags vertices where the principal
    curvatures were clamped to the umbilic pair (H, H) because the
    discriminant H^2 - K was negative.
    """

    vertex_ids: np.ndarray
    positions: np.ndarray
    normals: np.ndarray
    h: np.ndarray
    gauss: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    areas: np.ndarray
    obtuse_dominated: np.ndarray
    umbilic_fallback: np.ndarray

    def jet(self, vertex_id: int) -> SurfaceJet:
        i = int(np.searchsorted(self.vertex_ids, vertex_id))
        if i >= len(self.vertex_ids) or self.vertex_ids[i] != vertex_id:
            raise KeyError(f"no jet at vertex {vertex_id} (boundary or missing)")
        return SurfaceJet(
            self.positions[i], self.normals[i], float(self.lam1[i]), float(self.lam2[i])
        )

    def __iter__(self):
        for i in range(len(self.vertex_ids)):
            yield SurfaceJet(
                self.positions[i],
                self.normals[i],
                float(self.lam1[i]),
                float(self.lam2[i]),
            )


def _scatter_add(target: np.ndarray, ids: np.ndarray, values: np.ndarray) -> None:
    n = len(target)
    if values.ndim == 1:
        target += np.bincount(ids, weights=values, minlength=n)
    else:
        for c in range(values.shape[1]):
            target[:, c] += np.bincount(ids, weights=values[:, c], minlength=n)


def boundary_vertex_mask(n_vertices: int, faces: np.ndarray) -> np.ndarray:
    """Vertices on directed edges whose reverse edge is missing."""
    de = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    keys = de[:, 0] * n_vertices + de[:, 1]
    rev = de[:, 1] * n_vertices + de[:, 0]
    open_edge = ~np.isin(rev, keys)
    mask = np.zeros(n_vertices, dtype=bool)
    mask[de[open_edge].ravel()] = True
    return mask


def jet_arrays(vertices: np.ndarray, faces: np.ndarray, boundary: np.ndarray | None = None):
    """Cotangent-Laplacian curvature quantities on raw arrays.

    Returns a dict with per-vertex mixed areas, mean-curvature values signed
    against area-weighted winding normals, angle-defect Gaussian curvature,
    normals, and quality masks. Boundary vertices carry NaN curvatures; a
    precomputed boundary mask can be passed to skip its recomputation.
    """
    nv = len(vertices)
    tri = vertices[faces]
    v0, v1, v2 = tri[:, 0], tri[:, 1], tri[:, 2]
    face_cross = np.cross(v1 - v0, v2 - v0)
    area2 = np.linalg.norm(face_cross, axis=1)  # 2 * face area

    # cotangents at each corner
    def corner_cot(a, b, c):
        # cot of angle at a, between (b - a) and (c - a)
        return np.einsum("ij,ij->i", b - a, c - a) / area2

    cot0 = corner_cot(v0, v1, v2)
    cot1 = corner_cot(v1, v2, v0)
    cot2 = corner_cot(v2, v0, v1)

    lap = np.zeros((nv, 3))
    # corner cot weights the opposite edge
    for cot, (ia, ib) in ((cot0, (1, 2)), (cot1, (2, 0)), (cot2, (0, 1))):
        contrib = cot[:, None] * (tri[:, ia] - tri[:, ib])
        _scatter_add(lap, faces[:, ia], contrib)
        _scatter_add(lap, faces[:, ib], -contrib)

    # mixed Voronoi areas (Meyer et al.)
    area = area2 / 2.0
    l0sq = np.einsum("ij,ij->i", v2 - v1, v2 - v1)  # edge opposite corner 0
    l1sq = np.einsum("ij,ij->i", v0 - v2, v0 - v2)
    l2sq = np.einsum("ij,ij->i", v1 - v0, v1 - v0)
    vor0 = (l1sq * cot1 + l2sq * cot2) / 8.0
    vor1 = (l2sq * cot2 + l0sq * cot0) / 8.0
    vor2 = (l0sq * cot0 + l1sq * cot1) / 8.0
    obtuse0, obtuse1, obtuse2 = cot0 < 0, cot1 < 0, cot2 < 0
    any_obtuse = obtuse0 | obtuse1 | obtuse2
    mixed = np.stack([vor0, vor1, vor2], axis=1)
    half = np.stack([obtuse0, obtuse1, obtuse2], axis=1)
    obtuse_mixed = np.where(half, (area / 2.0)[:, None], (area / 4.0)[:, None])
    mixed = np.where(any_obtuse[:, None], obtuse_mixed, mixed)
    a_mixed = np.zeros(nv)
    for corner in range(3):
        _scatter_add(a_mixed, faces[:, corner], mixed[:, corner])

    normals = np.zeros((nv, 3))
    for corner in range(3):
        _scatter_add(normals, faces[:, corner], face_cross / 2.0)
    nn = np.linalg.norm(normals, axis=1)
    nn[nn == 0] = 1.0
    normals = normals / nn[:, None]

    # angle defect; each corner angle is atan2(2A, <e_b, e_c>)
    angles = np.zeros(nv)
    for corner in range(3):
        ea, eb = _corner_edges(tri, corner)
        ang = np.arctan2(area2, np.einsum("ij,ij->i", ea, eb))
        _scatter_add(angles, faces[:, corner], ang)

    obtuse_count = np.zeros(nv)
    face_count = np.zeros(nv)
    obtuse_f = any_obtuse.astype(float)
    ones = np.ones(len(faces))
    for corner in range(3):
        _scatter_add(obtuse_count, faces[:, corner], obtuse_f)
        _scatter_add(face_count, faces[:, corner], ones)

    if boundary is None:
        boundary = boundary_vertex_mask(nv, faces)

    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.einsum("ij,ij->i", lap, normals) / (4.0 * a_mixed)
        gauss = (2.0 * math.pi - angles) / a_mixed
    h[boundary] = np.nan
    gauss[boundary] = np.nan
    return {
        "h": h,
        "gauss": gauss,
        "normals": normals,
        "a_mixed": a_mixed,
        "boundary": boundary,
        "obtuse_fraction": obtuse_count / np.maximum(face_count, 1.0),
    }


def _corner_edges(tri, corner):
    a = tri[:, corner]
    b = tri[:, (corner + 1) % 3]
    c = tri[:, (corner + 2) % 3]
    return b - a, c - a


def discrete_jets(mesh: TriangleMesh) -> DiscreteJets:
    """Discrete second-order data at interior vertices of a mesh."""
    data = jet_arrays(mesh.vertices, mesh.faces)
    interior = ~data["boundary"]
    ids = np.flatnonzero(interior)
    h = data["h"][ids]
    k = data["gauss"][ids]
    disc = h * h - k
    fallback = disc < 0
    root = np.sqrt(np.maximum(disc, 0.0))
    lam1 = h + root
    lam2 = h - root
    return DiscreteJets(
        vertex_ids=ids,
        positions=mesh.vertices[ids],
        normals=data["normals"][ids],
        h=h,
        gauss=k,
        lam1=lam1,
        lam2=lam2,
        areas=data["a_mixed"][ids],
        obtuse_dominated=ids[data["obtuse_fraction"][ids] > 0.5],
        umbilic_fallback=ids[fallback],
    )


# --------------------------------------------------------------------------
# ray casting


def _fibonacci_directions(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    golden = math.pi * (3.0 - math.sqrt(5.0))
    th = golden * i
    return np.stack([r * np.cos(th), r * np.sin(th), z], axis=1)


def ray_hits(mesh: TriangleMesh, directions: np.ndarray, chunk: int = 64):
    """Distinct intersection radii of rays from the origin with the mesh.

    Returns a list (per direction) of strictly increasing hit radii; hits
    that coincide within a relative 1e-9 (rays through shared edges or
    vertices) are merged into one.
    """
    v, f = mesh.vertices, mesh.faces
    v0 = v[f[:, 0]]
    e1 = v[f[:, 1]] - v0
    e2 = v[f[:, 2]] - v0
    scale = float(np.linalg.norm(v, axis=1).max())
    out = []
    for start in range(0, len(directions), chunk):
        d = directions[start : start + chunk]  # (B, 3)
        pvec = np.cross(d[:, None, :], e2[None, :, :])  # (B, F, 3)
        det = np.einsum("fj,bfj->bf", e1, pvec)
        safe = np.abs(det) > 1e-14
        inv = np.where(safe, 1.0 / np.where(safe, det, 1.0), 0.0)
        u = -np.einsum("fj,bfj->bf", v0, pvec) * inv
        qvec = np.cross(-v0[None, :, :], e1[None, :, :])
        w = np.einsum("bj,bfj->bf", d, qvec) * inv
        t = np.einsum("fj,bfj->bf", e2, qvec) * inv
        hit = (
            safe
            & (u >= -BARY_EPS)
            & (w >= -BARY_EPS)
            & (u + w <= 1.0 + BARY_EPS)
            & (t > 1e-12 * scale)
        )
        for b in range(len(d)):
            ts = np.sort(t[b][hit[b]])
            if len(ts) == 0:
                out.append(ts)
                continue
            keep = [ts[0]]
            for val in ts[1:]:
                if val - keep[-1] > 1e-9 * max(scale, val):
                    keep.append(val)
            out.append(np.array(keep))
    return out


@dataclass(frozen=True)
class RadialGraphReport:
    is_graph: bool
    witness_direction: np.ndarray | None = None
    witness_radii: np.ndarray | None = None

    def __bool__(self):
        return self.is_graph


def is_radial_graph(mesh: TriangleMesh, n_sample_directions: int = 2048) -> RadialGraphReport:
    """Test whether every ray from the origin meets the mesh at most once.

    Casts rays through all face barycenters plus a Fibonacci direction
    sample; a direction with two or more distinct hit radii is returned as a
    witness.
    """
    bary = mesh.vertices[mesh.faces].mean(axis=1)
    dirs = np.vstack([
        bary / np.linalg.norm(bary, axis=1, keepdims=True),
        _fibonacci_directions(n_sample_directions),
    ])
    hits = ray_hits(mesh, dirs)
    for d, ts in zip(dirs, hits):
        if len(ts) >= 2:
            return RadialGraphReport(False, d.copy(), ts)
    return RadialGraphReport(True)


def graph_radii(mesh: TriangleMesh, directions: np.ndarray) -> np.ndarray:
    """Radius of the (unique) mesh intersection along each direction; NaN
    where the ray misses."""
    hits = ray_hits(mesh, directions)
    return np.array([ts[-1] if len(ts) else math.nan for ts in hits])
