import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smallscat.errors import DomainError
from smallscat.geometry import Obstacle, TriangleMesh, ellipsoid, icosphere
from smallscat.laplace_bem import (assemble_S0, reference_equilibrium, resolve_on_scaled_mesh, scale_equilibrium,
                                   solve_equilibrium, triangle_potential)
from smallscat.quadrature import collapsed_gauss

from conftest import sphere_obstacle


def polar_potential(x, tri, n=400):
    """Newtonian potential of a unit density on a triangle via 2D polar integration about the foot point."""
    a, b, c = tri
    normal = np.cross(b - a, c - a)
    normal /= np.linalg.norm(normal)
    h = (x - a) @ normal
    foot = x - h * normal
    total = 0.0
    for p, q in ((a, b), (b, c), (c, a)):
        # signed sub-triangle (foot, p, q), integrand int_0^R r / sqrt(r^2 + h^2) dr = sqrt(R^2 + h^2) - |h|
        s = (np.arange(n) + 0.5) / n
        edge = p + s[:, None] * (q - p)
        rvec = edge - foot
        R = np.linalg.norm(rvec, axis=1)
        dtheta = np.cross(rvec, np.broadcast_to(q - p, rvec.shape)) @ normal / np.maximum(R**2, 1e-300) / n
        total += np.sum((np.sqrt(R**2 + h**2) - abs(h)) * dtheta)
    return total / (4 * np.pi)


def test_triangle_potential_against_polar_oracle(rng):
    tri = np.array([[0.0, 0.0, 0.0], [1.0, 0.1, 0.0], [0.3, 0.8, 0.2]])
    for x in [tri.mean(0), tri.mean(0) + [0, 0, 0.3], [2.0, -1.0, 0.5], tri[0] + [0.1, 0.05, 0.01]]:
        x = np.asarray(x, dtype=float)
        got = triangle_potential(x[None], tri[None])[0]
        assert got == pytest.approx(polar_potential(x, tri, 4000), rel=1e-5)


def test_triangle_potential_against_collapsed_gauss():
    tri = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    x = np.array([0.2, 0.3, 0.5])
    rule = collapsed_gauss(40)
    mesh = TriangleMesh.from_arrays(np.vstack([tri, [[0, 0, -1]]]), [[0, 1, 2], [0, 3, 1], [1, 3, 2], [0, 2, 3]])
    nodes = rule.physical_nodes(mesh)[0]
    w = rule.physical_weights(mesh)[0]
    ref = np.sum(w / (4 * np.pi * np.linalg.norm(nodes - x, axis=1)))
    assert triangle_potential(x[None], tri[None])[0] == pytest.approx(ref, rel=1e-10)


def test_far_field_entry():
    mesh = icosphere(1, 0.05)
    far = mesh.transformed(shift=[2.0, 0.0, 0.0])
    both = TriangleMesh.from_arrays(np.vstack([mesh.vertices, far.vertices]),
                                    np.vstack([mesh.triangles, far.triangles + len(mesh.vertices)]))
    S = assemble_S0(both)
    P = mesh.n_panels
    i, j = 0, P + 5
    D = np.linalg.norm(both.centroids[i] - both.centroids[j])
    assert S[i, j] == pytest.approx(both.areas[i] * both.areas[j] / (4 * np.pi * D), rel=1e-2)


def test_S0_symmetric_positive_definite():
    S = assemble_S0(icosphere(2))
    np.testing.assert_allclose(S, S.T, rtol=0, atol=1e-15)
    assert np.all(np.diag(S) > 0)
    assert np.linalg.eigvalsh(S).min() > 0


@pytest.mark.parametrize("radius", [1.0, 2.0])
def test_sphere_capacitance(radius):
    eq = solve_equilibrium(icosphere(3, radius), center=np.zeros(3))
    assert eq.capacitance == pytest.approx(4 * np.pi * radius, rel=1e-2)
    assert np.max(np.abs(eq.sigma * radius - 1)) < 2e-2
    assert np.linalg.norm(eq.moment) < 1e-10
    assert eq.residual < 1e-10


def test_capacitance_refinement_is_monotone():
    errs = [abs(solve_equilibrium(icosphere(l), center=np.zeros(3)).capacitance - 4 * np.pi) for l in (1, 2, 3)]
    assert errs[0] > errs[1] > errs[2]


def test_capacitance_bounds():
    obs = Obstacle(ellipsoid((0.5, 0.5, 1.0), 2), np.zeros(3), 1.0)
    eq, _ = reference_equilibrium(obs)
    assert 0 < eq.capacitance <= 4 * np.pi * 2 * obs.bounding_radius
    assert np.linalg.norm(eq.moment) <= 1e-3 * eq.capacitance * 1.0


def test_moment_of_off_center_reference():
    # sphere whose nominal center is shifted by s from the geometric center: p = c * (geometric - nominal)
    mesh = icosphere(2, 1.0, (0.2, 0.0, 0.0))
    eq = solve_equilibrium(mesh, center=np.zeros(3))
    np.testing.assert_allclose(eq.moment, [0.2 * eq.capacitance, 0, 0], rtol=1e-10, atol=1e-12)


def test_scale_equilibrium_exact():
    obs = sphere_obstacle((0.2, 0.1, 0.0), level=2, bound=1.3)
    ref = solve_equilibrium(icosphere(2, 1.0, (0.0, 0.0, 0.0)), center=obs.center)
    assert scale_equilibrium(ref, 1.0) is ref
    s = scale_equilibrium(ref, 0.25)
    assert s.capacitance == 0.25 * ref.capacitance
    np.testing.assert_array_equal(s.moment, ref.moment * 0.25**2)
    areas = icosphere(2).areas
    assert s.l2_norm(areas * 0.25**2) == pytest.approx(ref.l2_norm(areas), rel=1e-12)
    with pytest.raises(DomainError):
        scale_equilibrium(ref, 0.0)
    with pytest.raises(DomainError):
        scale_equilibrium(s, 0.5)


@settings(max_examples=5, deadline=None)
@given(st.floats(0.05, 0.9))
def test_scaling_matches_resolve(eps):
    obs = Obstacle(ellipsoid((0.5, 0.7, 1.0), 1, (0.1, 0.0, 0.0)), np.zeros(3), 1.2)
    ref, _ = reference_equilibrium(obs)
    s = scale_equilibrium(ref, eps)
    fresh = resolve_on_scaled_mesh(obs, eps)
    np.testing.assert_allclose(fresh.sigma, s.sigma, rtol=1e-6)
    assert fresh.capacitance == pytest.approx(s.capacitance, rel=1e-6)
    np.testing.assert_allclose(fresh.moment, s.moment, rtol=1e-6, atol=1e-9 * eps**2)


def test_rigid_motion_invariance(rng):
    mesh = ellipsoid((0.5, 0.7, 1.0), 1, (0.1, 0.0, 0.0))
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    shift = np.array([1.0, -2.0, 0.5])
    a = solve_equilibrium(mesh, center=np.zeros(3))
    b = solve_equilibrium(mesh.transformed(q, shift), center=shift)
    assert b.capacitance == pytest.approx(a.capacitance, rel=1e-12)
    np.testing.assert_allclose(b.moment, q @ a.moment, atol=1e-12)


def test_compiled_point_potential_matches_vectorized(rng):
    from smallscat.laplace_bem import FOUR_PI, _point_potential

    tri = icosphere(1, 1.0).corners[3]
    pts = list(tri.mean(0) + 0.3 * rng.standard_normal((100, 3))) + [tri[0], tri.mean(0), 0.5 * (tri[0] + tri[1])]
    for x in pts:
        a = triangle_potential(x, tri)
        b = _point_potential(np.asarray(x), tri[0], tri[1], tri[2]) / FOUR_PI
        assert abs(a - b) <= 1e-13 * abs(a)
