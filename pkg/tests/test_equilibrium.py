import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compdamage import AdmissibleRegion, EquilibriumProblem, Material, SingularSystemError, maximal_admissible
from compdamage import rectangle_mesh, solve_equilibrium, stress_power, superlevel_region
from compdamage.equilibrium import assemble, equilibrium_residual, pcg, truncated_strain_norm, unit_stiffness
from compdamage.errors import ConvergenceError
from compdamage.mesh import element_strains
from scipy import sparse

import oracles


def test_element_stiffness_matches_dense_oracle():
    mesh = rectangle_mesh(2, 2, 1.5, 1.0, diagonal="alternate")
    mat = Material(lam=1.7, mu=0.6)
    ke = unit_stiffness(mesh, mat)
    for k in range(mesh.n_elements):
        assert np.allclose(ke[k], oracles.element_stiffness(mesh.nodes[mesh.triangles[k]], 1.7, 0.6))


@given(st.integers(0, 10**6))
@settings(max_examples=15, deadline=None)
def test_pcg_solution_matches_direct_solve(seed):
    rng = np.random.default_rng(seed)
    mesh = rectangle_mesh(5, 4, dirichlet=("left", "bottom"), diagonal="alternate")
    mat = Material(lam=rng.uniform(0.1, 3), mu=rng.uniform(0.1, 3), g_kind="quadratic", eta=0.5)
    z = rng.uniform(0.05, 1, mesh.n_nodes)
    b = rng.normal(size=(mesh.n_nodes, 2))
    eps = rng.uniform(0, 1e-3)
    F = AdmissibleRegion.full(mesh)
    u, _ = solve_equilibrium(EquilibriumProblem(mesh, mat, F, z, eps, b))
    ref = oracles.direct_equilibrium(mesh, z, F.active_elements, eps, mat.lam, mat.mu, mat.g, b)
    assert np.allclose(u, ref, atol=1e-9 * (1 + np.abs(ref).max()))


def test_inactive_nodes_are_zero_and_region_respected():
    mesh = rectangle_mesh(4, 2, dirichlet=("left",))
    z = np.ones(mesh.n_nodes)
    cx = mesh.nodes[mesh.triangles].mean(axis=1)[:, 0]
    F = AdmissibleRegion.from_elements(mesh, cx < 0.5)
    b = np.column_stack([0.1 * mesh.nodes[:, 0], 0.2 * mesh.nodes[:, 1]])
    u, _ = solve_equilibrium(EquilibriumProblem(mesh, Material(), F, z, 0.0, b))
    assert np.all(u[~F.active_nodes] == 0.0)
    ref = oracles.direct_equilibrium(mesh, z, F.active_elements, 0.0, 1.0, 1.0, lambda s: s, b)
    assert np.allclose(u, ref, atol=1e-10)


def test_orphan_component_is_singular():
    mesh = rectangle_mesh(4, 1, dirichlet=("left",))
    cx = mesh.nodes[mesh.triangles].mean(axis=1)[:, 0]
    F = AdmissibleRegion.from_elements(mesh, (cx < 0.25) | (cx > 0.5))
    with pytest.raises(SingularSystemError, match="admissibility"):
        solve_equilibrium(EquilibriumProblem(mesh, Material(), F, np.ones(mesh.n_nodes), 1e-3,
                                             np.zeros((mesh.n_nodes, 2))))


def test_degenerate_element_needs_epsilon():
    mesh = rectangle_mesh(2, 1)
    z = np.ones(mesh.n_nodes)
    z[0] = 0.0
    with pytest.raises(ValueError, match="epsilon = 0"):
        EquilibriumProblem(mesh, Material(), AdmissibleRegion.full(mesh), z, 0.0, np.zeros((mesh.n_nodes, 2)))
    F = maximal_admissible(mesh, superlevel_region(mesh, z))
    EquilibriumProblem(mesh, Material(), F, z, 0.0, np.zeros((mesh.n_nodes, 2)))


def test_pcg_detects_indefinite_matrix():
    A = sparse.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(SingularSystemError):
        pcg(A, np.array([1.0, -1.0]))
    with pytest.raises(ConvergenceError):
        lap = sparse.diags([-np.ones(49), 2 * np.ones(50), -np.ones(49)], [-1, 0, 1]).tocsr()
        pcg(lap, np.ones(50), tol=1e-14, max_iter=3)


def test_zero_data_gives_zero_displacement():
    mesh = rectangle_mesh(3, 3)
    u, res = solve_equilibrium(EquilibriumProblem(mesh, Material(), AdmissibleRegion.full(mesh),
                                                  np.ones(mesh.n_nodes), 0.0, np.zeros((mesh.n_nodes, 2))))
    assert np.all(u == 0) and res == 0.0


def test_equilibrium_residual_small_at_solution():
    mesh = rectangle_mesh(4, 4, dirichlet=("left", "right"))
    b = np.column_stack([0.1 * mesh.nodes[:, 0], np.zeros(mesh.n_nodes)])
    z = 0.5 + 0.5 * mesh.nodes[:, 1]
    prob = EquilibriumProblem(mesh, Material(), AdmissibleRegion.full(mesh), z, 0.0, b)
    u, res = solve_equilibrium(prob)
    assert res <= 1e-12
    assert equilibrium_residual(prob, u) <= 1e-11
    assert equilibrium_residual(prob, b) > 1e-6
    sys_ = assemble(prob)
    assert sys_.matrix.shape == (2 * (mesh.n_nodes - 10),) * 2


def test_stress_power_is_energy_derivative_along_data():
    # for fixed z, d/ds E(u(b + s db)) = sum (g+eps) C e(u) : e(db) at the equilibrium u
    mesh = rectangle_mesh(4, 4, dirichlet=("left", "right"))
    mat = Material(lam=0.8, mu=1.1)
    z = 0.6 + 0.4 * mesh.nodes[:, 0]
    F = AdmissibleRegion.full(mesh)
    b = np.column_stack([0.2 * mesh.nodes[:, 0], 0.05 * mesh.nodes[:, 1]])
    db = np.column_stack([0.1 * mesh.nodes[:, 1], 0.3 * mesh.nodes[:, 0]])

    def energy(s):
        u, _ = solve_equilibrium(EquilibriumProblem(mesh, mat, F, z, 1e-6, b + s * db))
        e = element_strains(mesh, u)
        return np.sum(mesh.areas * 0.5 * (mat.g(z[mesh.triangles].mean(1)) + 1e-6) * mat.contract(e, e)), u

    h = 1e-5
    fd = (energy(h)[0] - energy(-h)[0]) / (2 * h)
    _, u0 = energy(0.0)
    assert stress_power(mesh, u0, z, F, db, 1e-6, mat, 1.0) == pytest.approx(fd, rel=1e-7)
    assert stress_power(mesh, u0, z, F, db, 1e-6, mat, 0.5) == pytest.approx(0.5 * fd, rel=1e-7)


def test_truncated_strain_norm_ignores_degenerate_elements():
    mesh = rectangle_mesh(2, 1)
    u = np.column_stack([mesh.nodes[:, 0], np.zeros(mesh.n_nodes)])
    z = np.ones(mesh.n_nodes)
    assert truncated_strain_norm(mesh, u, z) == pytest.approx(1.0)
    z[0] = 0.0
    assert truncated_strain_norm(mesh, u, z) < 1.0
