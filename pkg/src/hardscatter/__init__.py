"""Scattering of quantum and classical particles by hard bodies.

Four computational engines behind one set of surface types:

* :mod:`hardscatter.geometry`: closed triangulated surfaces (OFF I/O,
  generators, shadow projection, z-reflection).
* :mod:`hardscatter.potential`: the 1/r single-layer operator, layer
  densities and the capacity.
* :mod:`hardscatter.lowfreq`: the small-wavenumber amplitude expansion,
  cross sections to order k^2 and the forward-vs-backscattering checks.
* :mod:`hardscatter.sphere_oracle`: exact hard-sphere partial waves, the
  package's ground truth across all wavenumbers.
* :mod:`hardscatter.classical`: specular ray tracing, shadow cross
  section, classical resistance and |f_cl|^2 histograms.
"""

from .geometry import (
    CappedCylinder,
    Ellipsoid,
    MeshError,
    Sphere,
    TriMesh,
    load_mesh,
    loads_mesh,
    make_body,
    mesh_volume,
    reflect,
    save_mesh,
    scale_mesh,
    shadow_area,
)
from .potential import (
    SingleLayerOperator,
    SolverError,
    SurfaceDensity,
    assemble_single_layer,
    capacity,
    mu0,
    mu1_parts,
    mu2,
    solve_density,
)
from .lowfreq import (
    AmplitudeExpansion,
    LowFreqFunctionals,
    SphereQuadrature,
    TrustRegionError,
    amplitude_expansion,
    cross_sections_lowfreq,
    d2_direct,
    d2_formula,
    functionals,
    make_quadrature,
    solve_expansion_densities,
    theorem1_check,
)
from .sphere_oracle import (
    CrossSections,
    PhaseShiftTable,
    amplitude,
    cross_sections,
    fig1_sweep,
    low_k_extrapolate,
    phase_shifts,
    spherical_bessel,
)
from .classical import (
    FclHistogram,
    RayTraceResult,
    TrappingError,
    fcl_histogram,
    theorem2_check,
    trace,
)

__version__ = "0.1.0"
