import numpy as np
import pytest

from smallscat.errors import DomainError
from smallscat.geometry import Scene
from smallscat.helmholtz_bem import (HelmholtzOperator, assemble_S_omega, gfl_matrix, panel_integrals,
                                     potential_weights, reference_solve_frequency, rhs_projection)
from smallscat.laplace_bem import assemble_S0, scene_equilibria
from smallscat.models import CapacitanceSummary, simplified_matrix
from smallscat.quadrature import triangle_rule

from conftest import sphere_obstacle

OMEGA = 1j + 2 * np.pi


@pytest.fixture(scope="module")
def small_pair():
    return Scene((sphere_obstacle((0, 0, 0), 1.0, 1), sphere_obstacle((3, 0, 0), 1.0, 1)), 0.5)


def test_omega_zero_is_laplace(small_pair):
    S = assemble_S_omega(small_pair, omega=0.0)
    P = small_pair.scaled_meshes[0].n_panels
    np.testing.assert_allclose(S[:P, :P], assemble_S0(small_pair.scaled_meshes[0]), rtol=1e-13, atol=1e-16)


def test_symmetry_and_reflection(small_pair):
    op = HelmholtzOperator(small_pair)
    S = op.matrix(OMEGA)
    np.testing.assert_allclose(S, S.T, rtol=0, atol=1e-12 * np.abs(S).max())
    np.testing.assert_allclose(np.conj(S), op.matrix(-np.conj(OMEGA)), rtol=1e-13, atol=1e-16)


def test_gfl_matrix_zero_frequency(small_pair):
    eq = scene_equilibria(small_pair)
    M = gfl_matrix(small_pair, eq, omega=0.0)
    np.testing.assert_allclose(M.diagonal().real, [e.capacitance for e in eq], rtol=1e-9)
    assert M[0, 1] == M[1, 0]


def test_gfl_matches_reduced_full_matrix(small_pair):
    op = HelmholtzOperator(small_pair)
    sigma = np.concatenate([e.sigma for e in op.equilibria])
    S = op.matrix(OMEGA)
    full = np.array([[op.expand(np.eye(2)[l]) @ S @ op.expand(np.eye(2)[k]) for k in range(2)] for l in range(2)])
    np.testing.assert_allclose(op.reduced_matrix(OMEGA), full, rtol=1e-12)
    assert sigma.shape == (op.n_panels,)


def test_gfl_against_closed_form_spheres(two_spheres):
    eq = scene_equilibria(two_spheres)
    M = gfl_matrix(two_spheres, eq, omega=OMEGA)
    Ms = simplified_matrix(CapacitanceSummary.from_equilibria(eq, two_spheres), OMEGA)
    assert np.max(np.abs(M - Ms) / np.abs(Ms)) < 1e-2


def test_rhs_projection_identities(small_pair):
    eq = scene_equilibria(small_pair)
    meshes = small_pair.scaled_meshes
    ones = [np.ones(m.n_panels) for m in meshes]
    np.testing.assert_allclose(rhs_projection(ones, eq, meshes), [e.capacitance for e in eq], rtol=1e-14)
    np.testing.assert_array_equal(rhs_projection([0 * o for o in ones], eq, meshes), 0.0)
    e = np.array([0.3, -0.5, 0.8])
    lin = panel_integrals(small_pair, lambda x: x @ e)
    off = np.cumsum([0] + [m.n_panels for m in meshes])
    q = rhs_projection([lin[off[k]:off[k + 1]] for k in range(2)], eq)
    expected = [d.capacitance * (c @ e) + d.moment @ e for d, c in zip(eq, small_pair.centers)]
    np.testing.assert_allclose(q, expected, rtol=1e-12, atol=1e-14)


def test_potential_weights_newtonian_and_decay():
    scene = Scene((sphere_obstacle(level=2),))
    eq = scene_equilibria(scene)
    R = np.array([2.0, 4.0, 8.0, 16.0, 32.0])
    pts = np.stack([R, 0 * R, 0 * R], axis=1)
    w = potential_weights(scene, eq, pts, 0.0)[:, 0]
    np.testing.assert_allclose(w.real, eq[0].capacitance / (4 * np.pi * R), rtol=1e-2)
    slope = np.polyfit(np.log(R), np.log(np.abs(w)), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.05)
    with pytest.raises(DomainError):
        potential_weights(scene, eq, [[0.5, 0, 0]], 0.0)


def test_reference_roundtrip(small_pair, rng):
    op = HelmholtzOperator(small_pair)
    lam = rng.standard_normal(op.n_panels) + 1j * rng.standard_normal(op.n_panels)
    g = op.matrix(1j) @ lam
    np.testing.assert_allclose(reference_solve_frequency(small_pair, None, 1j, g, operator=op), lam, rtol=1e-8)
    with pytest.raises(DomainError):
        reference_solve_frequency(small_pair, None, 2.0, g, operator=op)


def test_single_sphere_constant_data_gives_constant_density():
    scene = Scene((sphere_obstacle(level=2),))
    op = HelmholtzOperator(scene)
    lam = reference_solve_frequency(scene, None, OMEGA, op.panel_integrals(lambda x: np.ones(x.shape[:-1])),
                                    operator=op)
    assert np.std(lam) / np.abs(lam.mean()) < 2e-2


def test_far_apart_blocks_decouple():
    diffs = []
    single = Scene((sphere_obstacle(level=1),))
    op1 = HelmholtzOperator(single)
    g1 = op1.panel_integrals(lambda x: np.ones(x.shape[:-1]))
    iso = reference_solve_frequency(single, None, 1j, g1, operator=op1)
    for d in (3.0, 6.0, 12.0):
        scene = Scene((sphere_obstacle(level=1), sphere_obstacle((d, 0, 0), level=1)))
        op = HelmholtzOperator(scene)
        lam = reference_solve_frequency(scene, None, 1j, op.panel_integrals(lambda x: np.ones(x.shape[:-1])),
                                        operator=op)
        diffs.append(np.max(np.abs(lam[:len(iso)] - iso)))
    assert diffs[0] > diffs[1] > diffs[2]


def test_linearity(small_pair, rng):
    op = HelmholtzOperator(small_pair)
    a, b = rng.standard_normal((2, op.n_panels))
    S = op.matrix(OMEGA)
    np.testing.assert_allclose(S @ (2 * a + 3 * b), 2 * (S @ a) + 3 * (S @ b), rtol=1e-12, atol=1e-14)


def test_far_quad_option(small_pair):
    exact = HelmholtzOperator(small_pair, triangle_rule(3)).reduced_matrix(OMEGA)
    cheap = HelmholtzOperator(small_pair, triangle_rule(3), triangle_rule(1)).reduced_matrix(OMEGA)
    assert np.abs(cheap - exact).max() < 1e-3 * np.abs(exact).max()
