import numpy as np
import pytest
from scipy import integrate

from hardscatter.classical import (
    TrappingError,
    fcl_histogram,
    histogram_to_csv,
    theorem2_check,
    trace,
    trace_to_csv,
)
from hardscatter.geometry import (
    CappedCylinder,
    Ellipsoid,
    Sphere,
    TriMesh,
    make_body,
    shadow_area,
)

from conftest import pinwheel_cube

FCL_SQ_SPHERE = 0.25  # (a/2)^2 from theta(b) = pi - 2 arcsin(b/a), a = 1


def classical_sphere_r_cl(a=1.0):
    """Oracle: integrate (1 - cos(deflection)) over the shadow disc."""

    def integrand(b):
        theta = np.pi - 2.0 * np.arcsin(b / a)
        return (1.0 - np.cos(theta)) * 2.0 * np.pi * b

    value, _ = integrate.quad(integrand, 0.0, a, epsabs=1e-12, epsrel=1e-12)
    return value


def groove_prism() -> TriMesh:
    """Extruded heptagon with a steep V-notch in the bottom; rays entering
    the notch bounce at least twice."""
    poly = [(-1, 0), (-0.5, 0), (0, 0.9), (0.5, 0), (1, 0), (1, 1), (-1, 1)]
    cap_tris = [(0, 1, 6), (1, 2, 6), (2, 5, 6), (2, 3, 5), (3, 4, 5)]
    n = len(poly)
    verts = [(x, -0.5, z) for x, z in poly] + [(x, 0.5, z) for x, z in poly]
    faces = []
    for i in range(n):
        j = (i + 1) % n
        faces.append([i, j + n, j])
        faces.append([i, i + n, j + n])
    for a, b, c in cap_tris:
        faces.append([a, b, c])
        faces.append([a + n, c + n, b + n])
    return TriMesh.from_arrays(np.array(verts, dtype=float), np.array(faces))


@pytest.fixture(scope="module")
def sphere_trace():
    return trace(Sphere(1.0), grid=1024)


@pytest.fixture(scope="module")
def cylinder_trace():
    return trace(CappedCylinder(1.0, 2.0), grid=1024)


# ---------------------------------------------------------------------------
# cross sections and resistance


def test_sphere_sigma_cl(sphere_trace):
    assert sphere_trace.sigma_cl == pytest.approx(np.pi, rel=0.005)


def test_sphere_r_cl_against_deflection_oracle(sphere_trace):
    oracle = classical_sphere_r_cl()
    assert oracle == pytest.approx(np.pi, rel=1e-10)
    assert sphere_trace.r_cl == pytest.approx(oracle, rel=0.005)


def test_sphere_cos_weighted_variant_vanishes(sphere_trace):
    # the direction-space cos(theta) integral of |f_cl|^2, kept for
    # comparison, is zero for the sphere (flat histogram)
    assert abs(sphere_trace.r_cl_cos_weighted) < 0.01


def test_sphere_single_bounce(sphere_trace):
    assert sphere_trace.max_bounces_seen == 1


def test_energy_conservation(sphere_trace):
    norms = np.linalg.norm(sphere_trace.outgoing.astype(float), axis=1)
    assert np.abs(norms - 1.0).max() < 1e-6  # float32 storage
    fresh = trace(Sphere(1.0), grid=64)
    # recompute in float64 on a small grid for the tight bound
    assert np.abs(np.linalg.norm(fresh.outgoing.astype(float), axis=1) - 1).max() < 1e-6


def test_flat_cap_cylinder_r_cl(cylinder_trace):
    # every ray reverses off the flat cap, the largest possible transfer
    assert cylinder_trace.r_cl == pytest.approx(2.0 * cylinder_trace.sigma_cl, rel=0.005)
    assert cylinder_trace.sigma_cl == pytest.approx(np.pi, rel=0.005)
    assert cylinder_trace.max_bounces_seen == 1
    assert cylinder_trace.r_cl_cos_weighted == pytest.approx(
        -cylinder_trace.sigma_cl, rel=1e-12
    )


def test_ellipsoid_single_bounce():
    result = trace(Ellipsoid(1.5, 1.0, 0.7), grid=256)
    assert result.max_bounces_seen == 1
    assert result.sigma_cl == pytest.approx(np.pi * 1.5, rel=0.01)


def test_transfer_between_zero_and_twice_sigma(sphere_trace, cylinder_trace):
    for result in (sphere_trace, cylinder_trace):
        assert 0.0 <= result.r_cl <= 2.0 * result.sigma_cl * (1.0 + 1e-12)


def test_grid_convergence():
    coarse = trace(Sphere(1.0), grid=1024)
    fine = trace(Sphere(1.0), grid=2048)
    assert abs(fine.sigma_cl / coarse.sigma_cl - 1.0) < 0.005
    assert abs(fine.r_cl / coarse.r_cl - 1.0) < 0.005


def test_grid_validation():
    with pytest.raises(ValueError):
        trace(Sphere(1.0), grid=32)


# ---------------------------------------------------------------------------
# meshes, bounces, trapping


def test_shadow_consistency_with_rasterizer():
    bodies = [
        make_body(Sphere(1.0), 4),
        make_body(Ellipsoid(1.2, 0.8, 1.0), 4),
        pinwheel_cube(1),
    ]
    for mesh in bodies:
        result = trace(mesh, grid=256)
        assert result.sigma_cl == pytest.approx(shadow_area(mesh, 1024), rel=0.01)


def test_mesh_sphere_single_bounce():
    result = trace(make_body(Sphere(1.0), 3), grid=128)
    assert result.max_bounces_seen == 1


def test_exact_edge_hits_are_retraced():
    # a diagonally split cube face puts a whole lattice line of rays exactly
    # on the shared edge; the deterministic nudge must keep them all
    verts = np.array(
        [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
            [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
        ],
        dtype=float,
    )
    tris = np.array(
        [
            [0, 2, 1], [0, 3, 2], [4, 5, 6], [4, 6, 7],
            [0, 1, 5], [0, 5, 4], [2, 3, 7], [2, 7, 6],
            [0, 4, 7], [0, 7, 3], [1, 2, 6], [1, 6, 5],
        ]
    )
    cube = TriMesh.from_arrays(verts, tris)
    result = trace(cube, grid=128)
    assert result.rays_hit == 128 * 128  # nothing lost on the diagonal
    assert result.sigma_cl == pytest.approx(1.0, rel=1e-12)
    assert result.r_cl == pytest.approx(2.0, rel=1e-12)
    assert result.max_bounces_seen == 1


def test_groove_two_bounces():
    result = trace(groove_prism(), grid=128)
    assert result.sigma_cl == pytest.approx(2.0, rel=0.01)
    assert 2 <= result.max_bounces_seen <= 3


def test_groove_trapping_error():
    with pytest.raises(TrappingError, match="entering"):
        trace(groove_prism(), grid=128, bounce_cap=1)


# ---------------------------------------------------------------------------
# histogram


def test_sphere_histogram_flat():
    result = trace(Sphere(1.0), grid=2048)
    hist = fcl_histogram(result, 32, 32)
    mask = hist.counts >= 50
    assert mask.all()
    deviation = np.abs(hist.values[mask] - FCL_SQ_SPHERE).max() / FCL_SQ_SPHERE
    assert deviation < 0.03


def test_histogram_recovers_sigma_cl(sphere_trace):
    hist = sphere_trace.histogram
    total = hist.values.sum() * hist.bin_solid_angle
    assert total == pytest.approx(sphere_trace.sigma_cl, rel=1e-9)


def test_histogram_transfer_consistency(sphere_trace):
    hist = sphere_trace.histogram
    weighted = hist.weighted_sum(lambda ct: 1.0 - ct)
    assert weighted == pytest.approx(sphere_trace.r_cl, rel=0.02)


def test_histogram_requires_hits():
    result = trace(Sphere(1.0), grid=64)
    object.__setattr__(result, "rays_hit", 0)
    with pytest.raises(ValueError):
        fcl_histogram(result)


# ---------------------------------------------------------------------------
# the high-k comparison


def test_theorem2_sphere():
    report = theorem2_check(1.0, np.geomspace(10.0, 300.0, 24), grid=512)
    assert report.transport_below_total
    assert report.sigma_trend_decreasing
    assert report.sigma_t_trend_decreasing
    assert report.sigma_ratio[-1] == pytest.approx(1.0, abs=0.03)
    assert report.sigma_t_ratio[-1] == pytest.approx(1.0, abs=0.05)


def test_theorem2_grid_validation():
    with pytest.raises(ValueError):
        theorem2_check(1.0, [5.0, 50.0])
    with pytest.raises(ValueError):
        theorem2_check(1.0, [50.0, 20.0])


# ---------------------------------------------------------------------------
# csv


def test_trace_csv(tmp_path, sphere_trace):
    path = tmp_path / "trace.csv"
    trace_to_csv(sphere_trace, path, header_lines=["demo"])
    lines = path.read_text().splitlines()
    assert lines[1].startswith("sigma_cl,R_cl,")
    values = lines[2].split(",")
    assert float(values[0]) == pytest.approx(sphere_trace.sigma_cl)
    assert int(values[4]) == sphere_trace.rays_hit


def test_histogram_csv(tmp_path, sphere_trace):
    path = tmp_path / "hist.csv"
    histogram_to_csv(sphere_trace.histogram, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "cos_theta_center,phi_center,fcl_sq,ray_count"
    assert len(lines) == 1 + 64 * 64
