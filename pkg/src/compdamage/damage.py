"""Incremental damage step: box-constrained convex minimization.

For frozen displacement ``u`` the step minimizes, over nodal ``z`` with
``0 <= z <= z_prev``,

    J(z) = sum_K |K| [ |grad z|^p / p + (g(zbar) + eps) C e:e / 2
                       - alpha (zbar - zbar_prev) + beta/(2 tau) (zbar - zbar_prev)^2 ]

over the active elements.  Its KKT system is the discrete damage
variational inequality; the lower-bound multiplier is the obstacle reaction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .admissible import THETA_Z, AdmissibleRegion
from .errors import ConstraintViolation, ConvergenceError
from .mesh import Material, Mesh, element_average, element_gradients, element_strains

FEAS_TOL = 1e-13


@dataclass
class IncrementalDamageProblem:
    mesh: Mesh
    material: Material
    z_prev: np.ndarray
    u: np.ndarray
    region: AdmissibleRegion
    epsilon: float
    tau: float
    tol: float = 1e-8
    z_tol: float = 1e-11
    max_iter: int = 50000
    theta: float = THETA_Z

    def __post_init__(self):
        self.z_prev = np.asarray(self.z_prev, dtype=float)
        self.u = np.asarray(self.u, dtype=float).reshape(self.mesh.n_nodes, 2)
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if np.any(self.z_prev < 0) or np.any(self.z_prev > 1):
            raise ConstraintViolation("z_prev outside [0, 1]: infeasible box")
        act = self.region.active_elements
        e = element_strains(self.mesh, self.u)
        self._act = act
        self._area = self.mesh.areas[act]
        self._tri = self.mesh.triangles[act]
        self._grads = self.mesh.grads[act]
        self._w2 = self.material.contract(e[act], e[act])
        self._zbar_prev = element_average(self.mesh, self.z_prev)[act]
        self.free = self.region.active_nodes & (self.z_prev > 0)
        # diagonal curvature of the dissipation term, used as a metric
        diag = np.bincount(self._tri.reshape(-1), np.repeat(self._area, 3), minlength=self.mesh.n_nodes)
        self.curvature = diag * self.material.beta / (9.0 * self.tau)


class ComplementarityReport(NamedTuple):
    multiplier: np.ndarray
    stationarity_residual: float
    complementarity_gap: float
    iterations: int = 0


def _check_feasible(z, prob: IncrementalDamageProblem) -> None:
    if np.any(z < -FEAS_TOL) or np.any(z > prob.z_prev + FEAS_TOL):
        bad = np.nonzero((z < -FEAS_TOL) | (z > prob.z_prev + FEAS_TOL))[0]
        raise ConstraintViolation(f"constraint violation: z outside [0, z_prev] at nodes {bad[:10].tolist()}")


def _terms(z, prob: IncrementalDamageProblem):
    mat = prob.material
    zt = z[prob._tri]
    gz = np.einsum("ki,kid->kd", zt, prob._grads)
    nrm2 = np.einsum("kd,kd->k", gz, gz)
    zbar = zt.mean(axis=1)
    dz = zbar - prob._zbar_prev
    return gz, nrm2, zbar, dz, mat


def incremental_energy(z, prob: IncrementalDamageProblem) -> float:
    z = np.asarray(z, dtype=float)
    _check_feasible(z, prob)
    gz, nrm2, zbar, dz, mat = _terms(z, prob)
    p = mat.p
    dens = (nrm2 ** (0.5 * p)) / p
    dens = dens + 0.5 * (mat.g(zbar) + prob.epsilon) * prob._w2
    dens = dens - mat.alpha * dz + mat.beta / (2.0 * prob.tau) * dz * dz
    return float(np.sum(prob._area * dens))


def gradient_parts(z, prob: IncrementalDamageProblem):
    """Nodal gradients of the gradient, elastic and dissipation terms."""
    z = np.asarray(z, dtype=float)
    gz, nrm2, zbar, dz, mat = _terms(z, prob)
    n = prob.mesh.n_nodes
    idx = prob._tri.reshape(-1)
    flux = (nrm2 ** (0.5 * mat.p - 1.0))[:, None] * gz
    g_grad = prob._area[:, None] * np.einsum("kd,kid->ki", flux, prob._grads)
    el = prob._area * 0.5 * mat.dg(zbar) * prob._w2 / 3.0
    di = prob._area * (-mat.alpha + mat.beta / prob.tau * dz) / 3.0
    return (
        np.bincount(idx, g_grad.reshape(-1), minlength=n),
        np.bincount(idx, np.repeat(el, 3), minlength=n),
        np.bincount(idx, np.repeat(di, 3), minlength=n),
    )


def incremental_gradient(z, prob: IncrementalDamageProblem) -> np.ndarray:
    a, b, c = gradient_parts(z, prob)
    return a + b + c


def _natural_residual(z, grad, lo, hi, free, scale=None):
    step = grad if scale is None else grad / scale
    r = z - np.clip(z - step, lo, hi)
    r = np.where(free, r, 0.0)
    return float(np.max(np.abs(r))) if r.size else 0.0


def solve_damage_step(prob: IncrementalDamageProblem, z0=None):
    """Projected gradient with Barzilai-Borwein steps on ``[0, z_prev]``.

    Non-free nodes (outside the region, or with ``z_prev = 0``) keep their
    ``z_prev`` value.  Converged when the natural KKT residual is below
    ``tol`` and its curvature-scaled version is below ``z_tol``.
    """
    mesh = prob.mesh
    free = prob.free
    lo = np.where(free, 0.0, prob.z_prev)
    hi = prob.z_prev.copy()
    x = prob.z_prev.copy() if z0 is None else np.clip(np.asarray(z0, dtype=float), lo, hi)
    x[~free] = prob.z_prev[~free]
    if not free.any():
        return x, complementarity_report(x, prob)
    c = np.where(free, prob.curvature, 1.0)
    c = np.where(c > 0, c, 1.0)

    f = incremental_energy(x, prob)
    g = np.where(free, incremental_gradient(x, prob), 0.0)
    history = [f]
    s = 1.0
    it = 0
    while True:
        res = _natural_residual(x, g, lo, hi, free)
        res_z = _natural_residual(x, g, lo, hi, free, c)
        if res <= prob.tol and res_z <= prob.z_tol:
            break
        if it >= prob.max_iter:
            raise ConvergenceError(f"damage step not converged: KKT residual {res:.3e} after {it} iterations", x, res)
        f_ref = max(history[-10:])
        for _ in range(60):
            x_new = np.clip(x - s * g / c, lo, hi)
            d = x_new - x
            gd = g @ d
            f_new = incremental_energy(x_new, prob)
            if f_new <= f_ref + 1e-4 * gd + 16 * np.finfo(float).eps * abs(f_ref):
                break
            s *= 0.5
        else:
            raise ConvergenceError(f"damage line search failed at KKT residual {res:.3e}", x, res)
        g_new = np.where(free, incremental_gradient(x_new, prob), 0.0)
        y = g_new - g
        sy = d @ y
        x, f, g = x_new, f_new, g_new
        history.append(f)
        s = (d @ (c * d)) / sy if sy > 0 else 1.0
        s = float(np.clip(s, 1e-8, 1e8))
        it += 1
    rep = complementarity_report(x, prob)
    return x, rep._replace(iterations=it)


def complementarity_report(z, prob: IncrementalDamageProblem) -> ComplementarityReport:
    z = np.asarray(z, dtype=float)
    grad = incremental_gradient(z, prob)
    free = prob.free
    lo = np.where(free, 0.0, prob.z_prev)
    at_obstacle = free & (z <= prob.theta)
    r = np.where(at_obstacle, np.maximum(grad, 0.0), 0.0)
    stat = _natural_residual(z, grad, lo, prob.z_prev, free)
    gap = float(np.max(np.abs(r * z))) if r.size else 0.0
    return ComplementarityReport(r, stat, gap)


def vi_residual(mesh: Mesh, z, z_prev, u, F: AdmissibleRegion, epsilon: float, mat: Material, tau: float,
                theta: float = THETA_Z) -> float:
    """Largest violation of the discrete damage inequality and its obstacle structure.

    Combines the natural KKT residual on free nodes, the requirement that
    the obstacle reaction be a fraction ``chi in [0, 1]`` of the elastic
    driving force, and the complementarity gap ``|r z|``.
    """
    prob = IncrementalDamageProblem(mesh, mat, z_prev, u, F, epsilon, tau, theta=theta)
    z = np.asarray(z, dtype=float)
    _, el, _ = gradient_parts(z, prob)
    rep = complementarity_report(z, prob)
    structure = float(np.max(np.maximum(rep.multiplier - el, 0.0))) if z.size else 0.0
    return max(0.0, rep.stationarity_residual, structure, rep.complementarity_gap)
