"""Batch command-line front end.

Subcommands expose the classification taxonomy, cap construction, the
reflection sweep, the energy minimizer and the verification suites, with
reproducible file outputs: identical commands on identical inputs produce
byte-identical JSON/CSV/OBJ files, and every output file embeds or is
accompanied by the run manifest that produced it.

Exit codes: 0 pass, 1 usage or input error, 2 diagnostic failure,
3 degenerate solve.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .cones import CircularCone, classify_configuration, construct_cap, sign_of_H
from .fields import write_field_csv
from .inversion import InversionSphere, inversion_invariance_residual, invert_jet, jet_on_plane, jet_on_sphere
from .meshing import (
    TriangleMesh,
    discrete_jets,
    invert_mesh,
    mesh_radial_graph,
    mesh_spherical_cap,
    read_obj,
    write_obj,
)
from .reflection import planar_symmetry_detect, spherical_sweep
from .solver import DegenerateFieldError, SolverConfig, solve, verify_equilibrium, write_history_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIAGNOSTIC = 2
EXIT_DEGENERATE = 3


def stable_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class RunManifest:
    command: str
    parameters: dict
    inputs: list
    outputs: list
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "seed": self.seed,
            "version": __version__,
        }


def _angle(value: float, degrees: bool) -> float:
    return math.radians(value) if degrees else value


def _write_json(path, payload: dict, manifest: RunManifest) -> None:
    payload = dict(payload)
    payload["manifest"] = manifest.to_dict()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(stable_dumps(payload))


def _manifest_sidecar(path, manifest: RunManifest) -> None:
    with open(f"{path}.manifest.json", "w", encoding="utf-8") as fh:
        fh.write(stable_dumps(manifest.to_dict()))


def cmd_classify(args) -> int:
    gamma = _angle(args.gamma, args.degrees)
    phi = _angle(args.phi, args.degrees)
    case = classify_configuration(gamma, phi)
    hsign = sign_of_H(gamma, phi)
    sys.stdout.write(stable_dumps({"case": case.value, "H": hsign.value}))
    return EXIT_OK


def cmd_construct(args) -> int:
    gamma = _angle(args.gamma, args.degrees)
    phi = _angle(args.phi, args.degrees)
    cone = CircularCone(phi)
    config = construct_cap(cone, gamma, args.distance, far_cap=args.far_cap)
    mesh = mesh_spherical_cap(config, args.resolution)
    manifest = RunManifest(
        command="construct",
        parameters={
            "gamma": gamma,
            "phi": phi,
            "distance": args.distance,
            "resolution": args.resolution,
            "far_cap": args.far_cap,
        },
        inputs=[],
        outputs=[args.out, f"{args.out}.json"],
    )
    write_obj(mesh, args.out, comments=[json.dumps(manifest.to_dict(), sort_keys=True)])
    surface = config.surface
    payload = {
        "case": config.case.value,
        "gamma": config.gamma,
        "phi": config.phi,
        "boundaryDistance": config.boundary_distance,
        "meanCurvature": config.mean_curvature,
        "surface": (
            {"type": "plane", "height": surface.height}
            if not hasattr(surface, "radius")
            else {"type": "sphere", "centerZ": surface.center_z, "radius": surface.radius}
        ),
    }
    _write_json(f"{args.out}.json", payload, manifest)
    return EXIT_OK


def cmd_sweep(args) -> int:
    phi = _angle(args.phi, args.degrees)
    mesh = read_obj(getattr(args, "in"))
    report = spherical_sweep(mesh, CircularCone(phi), samples=args.samples)
    manifest = RunManifest(
        command="sweep",
        parameters={"phi": phi, "samples": args.samples},
        inputs=[getattr(args, "in")],
        outputs=[args.out],
    )
    _write_json(args.out, report.to_json_dict(), manifest)
    return EXIT_OK if report.terminal == "ReachedZero" else EXIT_DIAGNOSTIC


def _parse_grid(text: str) -> tuple[int, int]:
    if "x" in text:
        a, b = text.split("x")
        return int(a), int(b)
    n = int(text)
    return n, n


def cmd_solve(args) -> int:
    gamma = _angle(args.gamma, args.degrees)
    phi = _angle(args.phi, args.degrees)
    n_s, n_theta = _parse_grid(args.grid)
    config = SolverConfig(
        gamma=gamma,
        target_volume=args.volume,
        n_s=n_s,
        n_theta=n_theta,
        max_iterations=args.max_iterations,
    )
    cone = CircularCone(phi)
    try:
        result = solve(config, cone)
    except DegenerateFieldError as exc:
        sys.stderr.write(f"degenerate field: {exc}\n")
        return EXIT_DEGENERATE
    prefix = args.out
    outputs = [
        f"{prefix}.result.json",
        f"{prefix}.field.csv",
        f"{prefix}.history.csv",
        f"{prefix}.obj",
    ]
    manifest = RunManifest(
        command="solve",
        parameters={
            "gamma": gamma,
            "phi": phi,
            "volume": args.volume,
            "grid": [n_s, n_theta],
            "max_iterations": args.max_iterations,
        },
        inputs=[],
        outputs=outputs,
    )
    report = verify_equilibrium(result, cone, gamma)
    payload = result.to_json_dict()
    payload["equilibrium"] = report.to_json_dict()
    _write_json(outputs[0], payload, manifest)
    write_field_csv(result.field, outputs[1])
    _manifest_sidecar(outputs[1], manifest)
    write_history_csv(result, outputs[2])
    _manifest_sidecar(outputs[2], manifest)
    mesh = mesh_radial_graph(result.field, cone)
    write_obj(mesh, outputs[3], comments=[json.dumps(manifest.to_dict(), sort_keys=True)])
    return EXIT_OK if result.converged else EXIT_DIAGNOSTIC


def _fit_sphere(vertices: np.ndarray):
    """Least-squares sphere fit; exact on meshes sampled from a sphere."""
    a = np.hstack([2.0 * vertices, np.ones((len(vertices), 1))])
    b = np.einsum("ij,ij->i", vertices, vertices)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    center, k = sol[:3], sol[3]
    radius = math.sqrt(max(k + float(center @ center), 0.0))
    rms = float(np.sqrt(np.mean((np.linalg.norm(vertices - center, axis=1) - radius) ** 2)))
    return center, radius, rms


def _fit_plane(vertices: np.ndarray):
    centroid = vertices.mean(axis=0)
    _, _, vt = np.linalg.svd(vertices - centroid)
    normal = vt[-1]
    offsets = (vertices - centroid) @ normal
    rms = float(np.sqrt(np.mean(offsets**2)))
    return centroid, normal, rms


def cmd_verify(args) -> int:
    mesh = read_obj(getattr(args, "in"))
    manifest = RunManifest(
        command="verify",
        parameters={"check": args.check, "radius": args.radius, "phi": args.phi},
        inputs=[getattr(args, "in")],
        outputs=[args.out] if args.out else [],
    )
    sphere = InversionSphere(args.radius)

    if args.check == "inversion":
        jets = discrete_jets(mesh)
        inverted_jets = discrete_jets(invert_mesh(mesh, sphere))
        if not np.array_equal(jets.vertex_ids, inverted_jets.vertex_ids):
            sys.stderr.write("interior vertex sets changed under inversion\n")
            return EXIT_USAGE
        mismatch = 0.0
        scale = float(np.abs(inverted_jets.h).max())
        for i in range(len(jets.vertex_ids)):
            predicted = invert_jet(jets.jet(int(jets.vertex_ids[i])), sphere)
            measured_h = float(inverted_jets.h[i])
            # vertex-wise winding flips under the ambient inversion
            if float(predicted.n @ inverted_jets.normals[i]) < 0.0:
                measured_h = -measured_h
            mismatch = max(mismatch, abs(predicted.h - measured_h) / max(abs(predicted.h), 0.05 * scale))
        payload = {"check": "inversion", "maxRelativeCurvatureMismatch": mismatch}
        ok = mismatch < 0.05

    elif args.check == "residual":
        v = mesh.vertices
        center, radius, sphere_rms = _fit_sphere(v)
        _, normal, plane_rms = _fit_plane(v)
        scale = float(np.linalg.norm(v, axis=1).max())
        if sphere_rms <= max(plane_rms, 1e-9 * scale):
            jets = [jet_on_sphere(p, center, radius, inward=True) for p in v]
            fit = {"type": "sphere", "rms": sphere_rms}
        elif plane_rms < 1e-9 * scale:
            jets = [jet_on_plane(p, normal) for p in v]
            fit = {"type": "plane", "rms": plane_rms}
        else:
            sys.stderr.write("mesh is neither spherical nor planar to fitting tolerance\n")
            return EXIT_USAGE
        residual = max(abs(inversion_invariance_residual(j, sphere)) for j in jets)
        payload = {"check": "residual", "fit": fit, "maxResidual": residual}
        ok = residual < 1e-6

    elif args.check == "symmetry":
        if args.phi is None:
            sys.stderr.write("--phi is required for the symmetry check\n")
            return EXIT_USAGE
        phi = _angle(args.phi, args.degrees)
        report = planar_symmetry_detect(mesh, CircularCone(phi))
        payload = {"check": "symmetry", **report.to_json_dict()}
        ok = report.found
    else:  # pragma: no cover - argparse restricts choices
        return EXIT_USAGE

    text = stable_dumps({**payload, "manifest": manifest.to_dict()})
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_DIAGNOSTIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conecap",
        description="Capillary surface geometry in solid cones",
    )
    parser.add_argument("--degrees", action="store_true",
                        help="interpret angle arguments as degrees")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="configuration case and H sign for (gamma, phi)")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--phi", type=float, required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("construct", help="build a spherical-cap interface mesh")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--distance", type=float, default=1.0)
    p.add_argument("--resolution", type=int, default=48)
    p.add_argument("--far-cap", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("sweep", help="spherical reflection sweep on an OBJ mesh")
    p.add_argument("--in", required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("solve", help="minimize capillary energy at fixed volume")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--volume", type=float, required=True)
    p.add_argument("--grid", default="64")
    p.add_argument("--max-iterations", type=int, default=4000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="invariant suites on an OBJ mesh")
    p.add_argument("--in", required=True)
    p.add_argument("--check", choices=["inversion", "residual", "symmetry"], required=True)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--phi", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
