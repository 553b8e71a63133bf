import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hardscatter.geometry import Sphere, TriMesh, make_body, scale_mesh, reflect
from hardscatter.potential import (
    SingleLayerOperator,
    SolverError,
    _triangle_self_integral,
    assemble_single_layer,
    capacity,
    density_to_csv,
    distance_moment,
    dump_operator,
    load_operator,
    mu0,
    solve_density,
)
from hardscatter.lowfreq import solve_expansion_densities

from conftest import egg_mesh

MU0_SPHERE = -1.0 / (4.0 * np.pi)


def duffy_self_integral(p0, p1, p2):
    """Oracle: adaptive quadrature of 1/|p - centroid| over the triangle.

    The singularity is removed by splitting at the centroid and applying
    the u-substitution x(u, v) = c + u ((1-v)(a-c) + v(b-c)), whose
    Jacobian cancels the 1/r blow-up.
    """
    c = (p0 + p1 + p2) / 3.0
    total = 0.0
    for a, b in ((p0, p1), (p1, p2), (p2, p0)):
        jac = np.linalg.norm(np.cross(a - c, b - c))

        def integrand(u, v, a=a, b=b):
            pt = c + u * ((1.0 - v) * (a - c) + v * (b - c))
            return u * jac / np.linalg.norm(pt - c)

        val, _ = integrate.dblquad(integrand, 0, 1, 0, 1, epsabs=1e-12, epsrel=1e-12)
        total += val
    return total


def two_far_tetrahedra(separation=100.0):
    """One mesh, two tiny tetrahedra far apart along x."""

    def tetra(offset):
        v = np.array(
            [[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0], [0.5, 0.29, 0.8]]
        ) + offset
        t = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]])
        return v, t

    v1, t1 = tetra(np.zeros(3))
    v2, t2 = tetra(np.array([separation, 0.0, 0.0]))
    return TriMesh.from_arrays(np.vstack([v1, v2]), np.vstack([t1, t2 + 4]))


# ---------------------------------------------------------------------------
# assembly


def test_self_integral_equilateral_against_oracle():
    s = 1.0
    p0 = np.array([0.0, 0.0, 0.0])
    p1 = np.array([s, 0.0, 0.0])
    p2 = np.array([s / 2.0, s * np.sqrt(3.0) / 2.0, 0.0])
    mesh_value = _triangle_self_integral_single(p0, p1, p2)
    oracle = duffy_self_integral(p0, p1, p2)
    assert mesh_value == pytest.approx(oracle, rel=1e-8)
    # closed form for the equilateral triangle: 3 d ln((1+sin60)/(1-sin60))
    d = s / (2.0 * np.sqrt(3.0))
    closed = 3.0 * d * np.log((1 + np.sin(np.pi / 3)) / (1 - np.sin(np.pi / 3)))
    assert mesh_value == pytest.approx(closed, rel=1e-12)


def test_self_integral_skewed_against_oracle():
    p0 = np.array([0.1, -0.2, 0.3])
    p1 = np.array([1.3, 0.1, 0.25])
    p2 = np.array([0.4, 0.9, 0.5])
    assert _triangle_self_integral_single(p0, p1, p2) == pytest.approx(
        duffy_self_integral(p0, p1, p2), rel=1e-8
    )


def _triangle_self_integral_single(p0, p1, p2):
    tetra = TriMesh.from_arrays(
        np.array([p0, p1, p2, (p0 + p1 + p2) / 3.0 + np.array([0, 0, 5.0])]),
        np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]]),
    )
    return _triangle_self_integral(tetra)[0]


def test_far_field_entry_against_oracle():
    mesh = two_far_tetrahedra()
    op = assemble_single_layer(mesh)
    i, j = 0, 4  # one triangle per tetrahedron
    c_i = mesh.centroids[i]
    assert op.matrix[i, j] == pytest.approx(
        mesh.areas[j] / np.linalg.norm(mesh.centroids[j] - c_i), rel=1e-15
    )
    p0, p1, p2 = (c[j] for c in mesh.corners())
    jac = np.linalg.norm(np.cross(p1 - p0, p2 - p0))

    def integrand(u, v):
        pt = p0 + u * (p1 - p0) + v * (p2 - p0)
        return jac / np.linalg.norm(pt - c_i)

    oracle, _ = integrate.dblquad(
        integrand, 0, 1, 0, lambda u: 1 - u, epsabs=1e-12, epsrel=1e-12
    )
    assert op.matrix[i, j] == pytest.approx(oracle, rel=1e-4)


def test_diagonal_positive_and_symmetry_smoke(sphere4_densities, cylinder3_densities):
    for densities in (sphere4_densities, cylinder3_densities):
        matrix = densities.operator.matrix
        assert np.all(np.diag(matrix) > 0)
        asym = np.abs(matrix - matrix.T).max() / np.abs(matrix).max()
        assert asym < 0.15


@settings(max_examples=10, deadline=None)
@given(factor=st.floats(0.2, 5.0))
def test_kernel_homogeneity(factor):
    mesh = make_body(Sphere(1.0), 1)
    op = assemble_single_layer(mesh)
    scaled_op = assemble_single_layer(scale_mesh(mesh, factor))
    assert np.allclose(scaled_op.matrix, factor * op.matrix, rtol=1e-12)


# ---------------------------------------------------------------------------
# solves


def test_solve_roundtrip(sphere4_densities):
    op = sphere4_densities.operator
    ones = np.ones(op.n)
    density = solve_density(op, op.matrix @ ones)
    assert np.abs(density.values - 1.0).max() < 1e-10


def test_solve_linearity(sphere4_densities):
    op = sphere4_densities.operator
    g = np.sin(op.mesh.centroids[:, 0])
    one = solve_density(op, g)
    two = solve_density(op, 2.0 * g)
    assert np.allclose(two.values, 2.0 * one.values, rtol=1e-12, atol=1e-15)


def test_solve_rejects_bad_data(sphere3):
    op = assemble_single_layer(sphere3)
    with pytest.raises(ValueError):
        solve_density(op, np.ones(3))
    with pytest.raises(ValueError):
        solve_density(op, np.full(op.n, np.nan))


def test_singular_system_reports_condition(sphere3):
    matrix = np.ones((sphere3.n_triangles, sphere3.n_triangles))
    op = SingleLayerOperator(sphere3, matrix)
    with pytest.raises(SolverError, match="rcond"):
        solve_density(op, np.ones(op.n))


def test_mu0_sphere_uniform(sphere4_densities):
    values = sphere4_densities.mu0.values
    assert np.abs(values / MU0_SPHERE - 1.0).max() < 0.02


def test_mu0_radius_two():
    mesh = make_body(Sphere(2.0), 3)
    values = mu0(mesh).values
    assert np.abs(values / (-1.0 / (8.0 * np.pi)) - 1.0).max() < 0.02


def test_mu0_symmetric_on_reflection_symmetric_body(sphere4_densities):
    mesh = sphere4_densities.mesh
    mirrored = solve_expansion_densities(reflect(mesh))
    anti = 0.5 * (sphere4_densities.mu0.values - mirrored.mu0.values)
    assert np.abs(anti).max() < 1e-8


# ---------------------------------------------------------------------------
# capacity


def test_capacity_sphere_levels():
    assert abs(capacity(make_body(Sphere(1.0), 4)) - 1.0) < 0.01


def test_capacity_prolate_ellipsoid(ellipsoid4_densities):
    # closed-form prolate spheroid capacity sqrt(a^2-b^2)/arccosh(a/b)
    exact = np.sqrt(4.0 - 1.0) / np.arccosh(2.0)
    assert abs(ellipsoid4_densities.capacity / exact - 1.0) < 0.01


def test_capacity_triaxial_ellipsoid_against_quadrature_oracle():
    # general ellipsoid capacity 2 / integral_0^inf dt / sqrt((a^2+t)(b^2+t)(c^2+t))
    a, b, c = 1.5, 1.0, 0.6

    def integrand(t):
        return 1.0 / np.sqrt((a * a + t) * (b * b + t) * (c * c + t))

    integral, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-13)
    oracle = 2.0 / integral
    from hardscatter.geometry import Ellipsoid

    mesh = make_body(Ellipsoid(a, b, c), 4)
    assert capacity(mesh) == pytest.approx(oracle, rel=0.01)


def test_capacity_scaling():
    mesh = make_body(Sphere(1.0), 2)
    base = capacity(mesh)
    assert capacity(scale_mesh(mesh, 2.5)) == pytest.approx(2.5 * base, rel=1e-8)


def test_capacity_translation_invariant():
    mesh = make_body(Sphere(1.0), 3)
    shifted = TriMesh.from_arrays(
        mesh.vertices + np.array([0.3, -1.2, 2.0]), mesh.triangles
    )
    assert capacity(shifted) == pytest.approx(capacity(mesh), rel=1e-10)


def test_k_moment_translation_covariance():
    # shifting the body by z0 along the axis adds -z0 * C to the z-moment
    # of the equilibrium density (the density itself is intrinsic)
    mesh = make_body(Sphere(1.0), 3)
    z0 = 0.75
    shifted = TriMesh.from_arrays(
        mesh.vertices + np.array([0.0, 0.0, z0]), mesh.triangles
    )
    base = solve_expansion_densities(mesh)
    moved = solve_expansion_densities(shifted)
    k_base = base.mu0.moment(mesh.centroids[:, 2])
    k_moved = moved.mu0.moment(shifted.centroids[:, 2])
    assert k_moved == pytest.approx(k_base - z0 * base.capacity, abs=1e-9)


def test_capacity_monotone_in_radius():
    assert capacity(make_body(Sphere(1.0), 3)) < capacity(make_body(Sphere(1.1), 3))


def test_capacity_refinement_convergence():
    errors = [
        abs(capacity(make_body(Sphere(1.0), level)) - 1.0) for level in (2, 3, 4, 5)
    ]
    assert all(a > b for a, b in zip(errors, errors[1:]))


# ---------------------------------------------------------------------------
# first- and second-order densities


def test_mu1_antisymmetric_dipole_oracle(sphere4_densities):
    # surface density s0*cos(theta) has interior potential (4 pi / 3) s0 z,
    # so data -z forces s0 = -3/(4 pi)
    z = sphere4_densities.mesh.centroids[:, 2]
    expected = -3.0 / (4.0 * np.pi) * z
    dev = np.abs(sphere4_densities.mu1a.values - expected).max()
    assert dev / (3.0 / (4.0 * np.pi)) < 0.03


def test_mu1_symmetric_is_scaled_mu0(sphere4_densities):
    expected = 1.0 / (4.0 * np.pi)
    assert np.abs(sphere4_densities.mu1s.values / expected - 1.0).max() < 0.02


def test_mu1_combined_data_residual(sphere4_densities, ellipsoid4_densities):
    for densities in (sphere4_densities, ellipsoid4_densities):
        mesh = densities.mesh
        combined = densities.mu1.values
        data = -mesh.centroids[:, 2] + densities.capacity
        residual = densities.operator.matrix @ combined - data
        assert np.abs(residual).max() / np.abs(data).max() < 1e-9


def test_k_identity_on_symmetric_meshes(
    sphere4_densities, ellipsoid4_densities, cube3_densities, cylinder3_densities
):
    for densities in (
        sphere4_densities,
        ellipsoid4_densities,
        cube3_densities,
        cylinder3_densities,
    ):
        mesh = densities.mesh
        z = mesh.centroids[:, 2]
        k_from_mu0 = densities.mu0.moment(z)
        k_from_mu1a = densities.mu1a.integral()
        tol = 1e-6 * densities.capacity * mesh.diameter
        assert abs(k_from_mu0 - k_from_mu1a) < tol


def test_k_vanishes_on_symmetric_bodies(
    sphere4_densities, ellipsoid4_densities, cube3_densities
):
    for densities in (sphere4_densities, ellipsoid4_densities, cube3_densities):
        mesh = densities.mesh
        k_moment = densities.mu0.moment(mesh.centroids[:, 2])
        assert abs(k_moment) < 1e-3 * densities.capacity * mesh.diameter


def test_distance_moment_sphere(sphere4_densities):
    # integral |p - r| dsigma over the unit sphere from a surface point is
    # 16 pi / 3; with mu0 = -1/(4 pi) the half-moment is -2/3 everywhere
    half = 0.5 * distance_moment(sphere4_densities.mesh, sphere4_densities.mu0)
    assert np.abs(half / (-2.0 / 3.0) - 1.0).max() < 0.01


def test_mu2_antisymmetric_part_vanishes_on_sphere(sphere4_densities):
    mirrored = solve_expansion_densities(reflect(sphere4_densities.mesh))
    anti = 0.5 * (sphere4_densities.mu2.values - mirrored.mu2.values)
    assert np.abs(anti).max() < 0.02 * np.abs(sphere4_densities.mu2.values).max()


def test_mu2_antisymmetric_integral_is_minus_ck():
    mesh = egg_mesh(3)
    densities = solve_expansion_densities(mesh)
    mirrored = solve_expansion_densities(reflect(mesh))
    anti = 0.5 * (densities.mu2.values - mirrored.mu2.values)
    integral = float(np.sum(anti * mesh.areas))
    k_moment = densities.mu0.moment(mesh.centroids[:, 2])
    target = -densities.capacity * k_moment
    assert abs(integral - target) < max(1e-6, 0.02 * abs(target))


def test_reciprocity_smooth_data(sphere4_densities, ellipsoid4_densities):
    rng = np.random.default_rng(7)
    for densities in (sphere4_densities, ellipsoid4_densities):
        op = densities.operator
        mesh = densities.mesh
        x, y, z = mesh.centroids.T
        basis = np.stack(
            [np.ones_like(x), x, y, z, x * y, y * z, x * z, x * x, y * y, z * z]
        )
        for _ in range(5):
            g = rng.normal(size=10) @ basis
            h = rng.normal(size=10) @ basis
            mug = solve_density(op, g).values
            muh = solve_density(op, h).values
            lhs = np.sum(g * muh * mesh.areas)
            rhs = np.sum(h * mug * mesh.areas)
            scale = max(
                np.sum(np.abs(g * muh * mesh.areas)),
                np.sum(np.abs(h * mug * mesh.areas)),
            )
            assert abs(lhs - rhs) / scale < 0.005


# ---------------------------------------------------------------------------
# persistence


def test_operator_dump_roundtrip(tmp_path, sphere3):
    op = assemble_single_layer(sphere3)
    path = tmp_path / "operator.slp"
    dump_operator(op, path)
    again = load_operator(path, sphere3)
    assert np.array_equal(again.matrix, op.matrix)
    header = path.read_bytes()[:16]
    assert header[:4] == b"SLP1"
    assert int.from_bytes(header[8:16], "little") == op.n


def test_operator_load_rejects_wrong_mesh(tmp_path, sphere3):
    op = assemble_single_layer(sphere3)
    path = tmp_path / "operator.slp"
    dump_operator(op, path)
    with pytest.raises(ValueError, match="n="):
        load_operator(path, make_body(Sphere(1.0), 2))


def test_operator_load_rejects_bad_dump(tmp_path, sphere3):
    bad_magic = tmp_path / "bad.slp"
    bad_magic.write_bytes(b"NOPE" + b"\x00" * 12)
    with pytest.raises(ValueError, match="dump"):
        load_operator(bad_magic, sphere3)
    truncated = tmp_path / "short.slp"
    truncated.write_bytes(
        b"SLP1" + b"\x00" * 4 + sphere3.n_triangles.to_bytes(8, "little") + b"\x00" * 64
    )
    with pytest.raises(ValueError, match="truncated"):
        load_operator(truncated, sphere3)


def test_density_csv(tmp_path, sphere3):
    density = mu0(sphere3)
    path = tmp_path / "mu0.csv"
    density_to_csv(density, path, header_lines=["unit test"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# unit test"
    assert lines[1] == "triangle_index,cx,cy,cz,area,value"
    assert len(lines) == 2 + sphere3.n_triangles
    first = lines[2].split(",")
    assert int(first[0]) == 0
    assert float(first[5]) == pytest.approx(density.values[0], rel=1e-15)
