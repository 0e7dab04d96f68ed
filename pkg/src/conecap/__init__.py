"""Numerical geometry of capillary surfaces in solid cones.

The package provides exact sphere-inversion transforms of second-order
surface data, spherical-cap capillary configurations in circular cones, a
volume-constrained capillary energy minimizer over radial graphs, and mesh
diagnostics: discrete curvature, the radial-graph test, the spherical
reflection sweep and the vertical-plane symmetry scan.
"""

__version__ = "0.1.0"

from .cones import (
    CapCase,
    CapConfiguration,
    CircularCone,
    GeneralCone,
    HSign,
    Plane,
    RayLocation,
    Sphere,
    classify_configuration,
    construct_cap,
    contact_angle,
    inward_cone_normal,
    ray_through,
    sign_of_H,
)
from .fields import (
    DropMeasures,
    RadialGraphField,
    constant_field,
    drop_measures,
    field_for_volume,
    field_from_function,
    flat_disc_field,
    write_field_csv,
)
from .inversion import (
    InversionSphere,
    SurfaceJet,
    homothety_jet,
    inversion_invariance_residual,
    invert_jet,
    invert_normal,
    invert_point,
    jet_on_plane,
    jet_on_sphere,
    support_function,
)
from .meshing import (
    DiscreteJets,
    RadialGraphReport,
    TriangleMesh,
    discrete_jets,
    invert_mesh,
    is_radial_graph,
    mesh_radial_graph,
    mesh_sphere,
    mesh_spherical_cap,
    read_obj,
    write_obj,
)
from .reflection import (
    BoundednessReport,
    SweepReport,
    SymmetryReport,
    TouchingPoint,
    boundedness_check,
    classify_touching,
    planar_symmetry_detect,
    spherical_sweep,
    support_sign_check,
)
from .solver import (
    DegenerateFieldError,
    EquilibriumReport,
    SolverConfig,
    SolverResult,
    capillary_energy,
    solve,
    verify_equilibrium,
    write_history_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
