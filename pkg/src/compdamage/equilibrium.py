"""Degenerate quasi-static linear elasticity on an admissible region.

Element stiffness is ``(g(zbar_K) + epsilon) |K| B^T C B`` with ``zbar_K`` the
nodal average of the damage.  Only active elements are assembled; DOFs on
active Dirichlet edges carry the boundary datum, every other active DOF is
free, and inactive nodes are stored as zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import sparse

from .admissible import THETA_Z, AdmissibleRegion, component_labels
from .errors import ConvergenceError, SingularSystemError
from .mesh import Material, Mesh, element_average, element_strains

EPS_FLOOR = 1e-10


@dataclass
class EquilibriumProblem:
    mesh: Mesh
    material: Material
    region: AdmissibleRegion
    z: np.ndarray
    epsilon: float
    dirichlet_values: np.ndarray
    tol: float = 1e-12
    max_iter: int | None = None
    theta: float = THETA_Z

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.dirichlet_values = np.asarray(self.dirichlet_values, dtype=float).reshape(self.mesh.n_nodes, 2)
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if not np.all(np.isfinite(self.dirichlet_values)):
            raise ValueError("non-finite Dirichlet data")
        act = self.region.active_elements
        if self.epsilon == 0 and act.any():
            zmin = self.z[self.mesh.triangles[act]].min(axis=1)
            if np.any(zmin <= self.theta):
                raise ValueError("epsilon = 0 with an active element at or below the damage threshold")


class AssembledSystem(NamedTuple):
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    free_dofs: np.ndarray
    dirichlet_dofs: np.ndarray
    dirichlet_values: np.ndarray
    full: sparse.csr_matrix


class PCGInfo(NamedTuple):
    iterations: int
    residual: float
    min_curvature: float


def element_dofs(mesh: Mesh) -> np.ndarray:
    t = mesh.triangles
    return np.stack([2 * t[:, 0], 2 * t[:, 0] + 1, 2 * t[:, 1], 2 * t[:, 1] + 1, 2 * t[:, 2], 2 * t[:, 2] + 1], axis=1)


def strain_displacement(mesh: Mesh) -> np.ndarray:
    """Voigt B matrices, shape (n_elements, 3, 6), acting on local DOFs."""
    key = "B"
    if key not in mesh._cache:
        g = mesh.grads
        B = np.zeros((mesh.n_elements, 3, 6))
        B[:, 0, 0::2] = g[:, :, 0]
        B[:, 1, 1::2] = g[:, :, 1]
        B[:, 2, 0::2] = g[:, :, 1]
        B[:, 2, 1::2] = g[:, :, 0]
        B.setflags(write=False)
        mesh._cache[key] = B
    return mesh._cache[key]


def unit_stiffness(mesh: Mesh, mat: Material) -> np.ndarray:
    """Undegraded element matrices ``|K| B^T C B``, shape (n_elements, 6, 6)."""
    key = ("KE", mat.lam, mat.mu)
    if key not in mesh._cache:
        B = strain_displacement(mesh)
        ke = np.einsum("k,kai,ab,kbj->kij", mesh.areas, B, mat.voigt, B)
        ke.setflags(write=False)
        mesh._cache[key] = ke
    return mesh._cache[key]


def stiffness_coefficients(mesh: Mesh, z, epsilon: float, mat: Material) -> np.ndarray:
    return mat.g(element_average(mesh, z)) + epsilon


def _check_admissible(region: AdmissibleRegion) -> None:
    mesh = region.mesh
    act = region.active_elements
    labels = component_labels(mesh, act)
    owning = np.unique(labels[act & mesh.dirichlet_element_edges.any(axis=1)])
    orphan = np.setdiff1d(np.unique(labels[act]), owning)
    if len(orphan):
        bad = np.nonzero(labels == orphan[0])[0]
        raise SingularSystemError(
            f"active component without Dirichlet edge (elements {bad[:10].tolist()}...): admissibility violated"
        )


def _global_matrix(mesh: Mesh, coef: np.ndarray, active: np.ndarray, mat: Material) -> sparse.csr_matrix:
    ke = unit_stiffness(mesh, mat)[active] * coef[active, None, None]
    dofs = element_dofs(mesh)[active]
    rows = np.repeat(dofs, 6, axis=1).reshape(-1)
    cols = np.tile(dofs, (1, 6)).reshape(-1)
    n = 2 * mesh.n_nodes
    return sparse.coo_matrix((ke.reshape(-1), (rows, cols)), shape=(n, n)).tocsr()


def assemble(problem: EquilibriumProblem) -> AssembledSystem:
    """Stiffness on the free active DOFs and the load from the Dirichlet lift."""
    mesh, region = problem.mesh, problem.region
    _check_admissible(region)
    coef = stiffness_coefficients(mesh, problem.z, problem.epsilon, problem.material)
    K = _global_matrix(mesh, coef, region.active_elements, problem.material)
    dnodes = region.dirichlet_nodes()
    free_nodes = region.active_nodes & ~dnodes
    free = np.column_stack([2 * np.nonzero(free_nodes)[0], 2 * np.nonzero(free_nodes)[0] + 1]).reshape(-1)
    dir_dofs = np.column_stack([2 * np.nonzero(dnodes)[0], 2 * np.nonzero(dnodes)[0] + 1]).reshape(-1)
    bd = problem.dirichlet_values.reshape(-1)[dir_dofs]
    Kff = K[free][:, free].tocsr()
    rhs = -(K[free][:, dir_dofs] @ bd) if len(dir_dofs) else np.zeros(len(free))
    return AssembledSystem(Kff, np.asarray(rhs).reshape(-1), free, dir_dofs, bd, K)


def pcg(A, b, x0=None, tol=1e-12, max_iter=None):
    """Jacobi-preconditioned conjugate gradients on an SPD matrix.

    Convergence is measured as ``||r||_{M^-1} / ||b||_{M^-1}``.  Raises
    :class:`SingularSystemError` on non-positive curvature and
    :class:`ConvergenceError` when ``max_iter`` is exhausted.
    """
    n = len(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if n == 0:
        return x, PCGInfo(0, 0.0, np.inf)
    d = A.diagonal()
    if np.any(d <= 0):
        raise SingularSystemError("non-positive diagonal entry in stiffness matrix")
    minv = 1.0 / d
    bnorm = np.sqrt(b @ (minv * b))
    if bnorm == 0.0:
        return np.zeros(n), PCGInfo(0, 0.0, np.inf)
    if max_iter is None:
        max_iter = 20 * n + 100
    r = b - A @ x
    s = minv * r
    rs = r @ s
    res = np.sqrt(max(rs, 0.0)) / bnorm
    p = s.copy()
    min_curv = np.inf
    it = 0
    while res > tol:
        if it >= max_iter:
            raise ConvergenceError(f"PCG stalled at relative residual {res:.3e} after {it} iterations", x, res)
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise SingularSystemError(f"non-positive curvature {pAp:.3e} in conjugate direction")
        min_curv = min(min_curv, pAp / (p @ p))
        a = rs / pAp
        x += a * p
        r -= a * Ap
        s = minv * r
        rs_new = r @ s
        p = s + (rs_new / rs) * p
        rs = rs_new
        res = np.sqrt(max(rs, 0.0)) / bnorm
        it += 1
        if it % 50 == 0:
            # guard against drift of the recursive residual
            r = b - A @ x
            s = minv * r
            rs = r @ s
            res = np.sqrt(max(rs, 0.0)) / bnorm
    return x, PCGInfo(it, float(res), float(min_curv))


def solve_equilibrium(problem: EquilibriumProblem, u0=None):
    """Solve for the displacement; returns ``(u, relative_residual)``."""
    sys_ = assemble(problem)
    mesh = problem.mesh
    u = np.zeros(2 * mesh.n_nodes)
    x0 = None if u0 is None else np.asarray(u0, dtype=float).reshape(-1)[sys_.free_dofs]
    x, info = pcg(sys_.matrix, sys_.rhs, x0=x0, tol=problem.tol, max_iter=problem.max_iter)
    u[sys_.free_dofs] = x
    u[sys_.dirichlet_dofs] = sys_.dirichlet_values
    return u.reshape(-1, 2), info.residual


def equilibrium_residual(problem: EquilibriumProblem, u) -> float:
    """Relative Galerkin residual of ``u`` on the free DOFs (Jacobi-weighted)."""
    sys_ = assemble(problem)
    uf = np.asarray(u, dtype=float).reshape(-1)[sys_.free_dofs]
    if len(uf) == 0:
        return 0.0
    minv = 1.0 / sys_.matrix.diagonal()
    r = sys_.rhs - sys_.matrix @ uf
    scale = np.sqrt(sys_.rhs @ (minv * sys_.rhs))
    if scale == 0.0:
        scale = max(np.sqrt((sys_.matrix @ uf) @ (minv * (sys_.matrix @ uf))), 1.0)
    return float(np.sqrt(r @ (minv * r)) / scale)


def stress_power(mesh: Mesh, u_new, z, F: AdmissibleRegion, b_rate, epsilon: float, mat: Material, tau: float) -> float:
    """Work increment ``tau * sum_K |K| (g+eps) C e(u_new) : e(b_rate)`` over active elements."""
    act = F.active_elements
    e = element_strains(mesh, u_new)[act]
    eb = element_strains(mesh, b_rate)[act]
    coef = stiffness_coefficients(mesh, z, epsilon, mat)[act]
    return float(tau * np.sum(mesh.areas[act] * coef * mat.contract(e, eb)))


def truncated_strain_norm(mesh: Mesh, u, z, theta: float = THETA_Z) -> float:
    """``sum_K |K| |e_K|^2`` over elements whose nodal damage all exceeds ``theta``."""
    from .admissible import superlevel_region

    sel = superlevel_region(mesh, z, theta)
    e = element_strains(mesh, u)[sel]
    return float(np.sum(mesh.areas[sel] * np.einsum("kij,kij->k", e, e)))
