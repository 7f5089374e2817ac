"""Energy functionals, jump energies and the per-step energy-inequality audit."""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .admissible import (
    THETA_Z,
    AdmissibleRegion,
    JumpEvent,
    detect_jump,
    maximal_admissible,
    superlevel_region,
)
from .equilibrium import EPS_FLOOR, EquilibriumProblem, solve_equilibrium
from .errors import AuditFailure
from .mesh import Material, Mesh, element_average, element_gradients, element_strains
from .state import TrajectoryState

AUDIT_RTOL = 1e-6


@dataclass(frozen=True)
class EnergyBreakdown:
    gradient_term: float
    elastic_term: float
    total: float
    region: AdmissibleRegion


def element_energies(mesh: Mesh, u, z, epsilon: float, mat: Material):
    """Per-element ``(gradient, elastic)`` energy contributions (already area-weighted)."""
    z = np.asarray(z, dtype=float)
    gz = element_gradients(mesh, z)
    grad = mesh.areas * np.einsum("kd,kd->k", gz, gz) ** (0.5 * mat.p) / mat.p
    e = element_strains(mesh, u)
    el = mesh.areas * 0.5 * (mat.g(element_average(mesh, z)) + epsilon) * mat.contract(e, e)
    return grad, el


def free_energy(mesh: Mesh, u, z, F: AdmissibleRegion, epsilon: float, mat: Material) -> EnergyBreakdown:
    """Free energy integrated over the active elements of ``F``."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z > 1):
        raise ValueError("damage field outside [0, 1]")
    grad, el = element_energies(mesh, u, z, epsilon, mat)
    act = F.active_elements
    g = float(np.sum(grad[act]))
    e = float(np.sum(el[act]))
    return EnergyBreakdown(g, e, g + e, F)


def default_region(mesh: Mesh, z, epsilon: float, theta: float = THETA_Z) -> AdmissibleRegion:
    if epsilon > 0:
        return AdmissibleRegion.full(mesh)
    return maximal_admissible(mesh, superlevel_region(mesh, z, theta))


def reduced_state(mesh: Mesh, b_values, z, epsilon: float, mat: Material, region=None,
                  theta: float = THETA_Z, u0=None, tol: float = 1e-12):
    """Equilibrium displacement and its energy for data ``(b, z, epsilon)``.

    Returns ``(EnergyBreakdown, u)``.  ``region`` defaults to the whole mesh
    for ``epsilon > 0`` and to the admissible part of ``{z > theta}`` for
    ``epsilon = 0``.
    """
    if region is None:
        region = default_region(mesh, z, epsilon, theta)
    prob = EquilibriumProblem(mesh, mat, region, z, epsilon, b_values, tol=tol, theta=theta)
    u, _ = solve_equilibrium(prob, u0=u0)
    return free_energy(mesh, u, z, region, epsilon, mat), u


def reduced_energy(mesh: Mesh, b_values, z, epsilon: float, mat: Material, region=None,
                   theta: float = THETA_Z, tol: float = 1e-12) -> float:
    """Free energy minimized over displacements matching ``b`` on the active Dirichlet edges.

    Returns ``inf`` if ``z`` leaves ``[0, 1]``.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z > 1):
        return float("inf")
    return reduced_state(mesh, b_values, z, epsilon, mat, region, theta, tol=tol)[0].total


class GammaProbeReport(NamedTuple):
    epsilons: tuple
    deltas: tuple
    values: tuple
    estimate: float
    monotonicity_defect: float


def gamma_probe(mesh: Mesh, b_values, z, mat: Material, eps_schedule, delta_schedule,
                tol: float = 1e-11) -> GammaProbeReport:
    """Evaluate the regularized reduced energy along ``(b, (z - delta_i)^+)`` with ``epsilon_i``."""
    eps = [float(e) for e in eps_schedule]
    dels = [float(d) for d in delta_schedule]
    if len(eps) != len(dels) or not eps:
        raise ValueError("schedules must be nonempty and of equal length")
    for sched, name in ((eps, "epsilon"), (dels, "delta")):
        if any(v <= 0 for v in sched) or any(b >= a for a, b in zip(sched, sched[1:])):
            raise ValueError(f"{name} schedule must be positive and strictly decreasing")
    z = np.asarray(z, dtype=float)
    values = []
    u = None
    for e, d in zip(eps, dels):
        zd = np.maximum(z - d, 0.0)
        br, u = reduced_state(mesh, b_values, zd, e, mat, u0=u, tol=tol)
        values.append(br.total)
    defect = max([0.0] + [b - a for a, b in zip(values, values[1:])])
    return GammaProbeReport(tuple(eps), tuple(dels), tuple(values), values[-1], defect)


def pre_exclusion_region(state: TrajectoryState, theta: float = THETA_Z) -> AdmissibleRegion:
    """Elements of ``state.F`` still in the super-level set of ``state.z``."""
    mesh = state.mesh
    sel = state.F.active_elements & superlevel_region(mesh, state.z, theta)
    return AdmissibleRegion.from_elements(mesh, sel)


def state_energy(state: TrajectoryState, mat: Material, theta: float = THETA_Z) -> EnergyBreakdown:
    """Energy of a (possibly not yet excluded) state over its non-degenerate elements."""
    return free_energy(state.mesh, state.u, state.z, pre_exclusion_region(state, theta), state.epsilon_used, mat)


def jump_energy(state_before: TrajectoryState, z_after, F_after: AdmissibleRegion, b_values, mat: Material,
                epsilon: float | None = None, rtol: float = AUDIT_RTOL, theta: float = THETA_Z):
    """Energy lost when ``state_before`` is cut down to ``F_after``.

    Returns ``(JumpEvent, u_after)`` where ``u_after`` is the equilibrium
    displacement on ``F_after`` realizing the post-jump energy.
    """
    mesh = state_before.mesh
    if np.any(F_after.active_elements & ~state_before.F.active_elements):
        raise ValueError("F_after is not contained in the region before the jump")
    eps = state_before.epsilon_used if epsilon is None else epsilon
    e_before = state_energy(state_before, mat, theta).total
    if F_after.is_empty:
        e_plus, u_after = 0.0, np.zeros((mesh.n_nodes, 2))
    else:
        br, u_after = reduced_state(mesh, b_values, z_after, _safe_eps(mesh, z_after, F_after, eps, theta), mat,
                                    region=F_after, theta=theta, u0=state_before.u)
        e_plus = br.total
    jump = e_before - e_plus
    tol = rtol * (1.0 + abs(e_before))
    if jump < -tol:
        raise AuditFailure(f"negative jump energy {jump:.3e} (tolerance {tol:.1e})")
    excluded = detect_jump(state_before.F, F_after, superlevel_region(mesh, state_before.z, theta))
    return JumpEvent(state_before.t, excluded, max(jump, 0.0), e_plus), u_after


def _safe_eps(mesh, z, F, eps, theta):
    if eps > 0 or F.is_empty:
        return eps
    zmin = np.asarray(z)[mesh.triangles[F.active_elements]].min()
    return EPS_FLOOR if zmin <= theta else eps


def dissipation_increment(mesh: Mesh, z_new, z_prev, F: AdmissibleRegion, mat: Material, tau: float) -> float:
    """``sum_K |K| (alpha |dzbar| + beta dzbar^2 / tau)`` over active elements."""
    act = F.active_elements
    dz = (element_average(mesh, z_new) - element_average(mesh, z_prev))[act]
    return float(np.sum(mesh.areas[act] * (mat.alpha * np.abs(dz) + mat.beta * dz * dz / tau)))


LEDGER_COLUMNS = ("t", "E_total", "E_grad", "E_elastic", "diss_inc", "work_inc", "jump_inc", "jump_cum",
                  "slack", "vi_res", "eq_res", "n_active", "event_flag")


@dataclass(frozen=True)
class LedgerRow:
    t: float
    E_total: float
    E_grad: float
    E_elastic: float
    diss_inc: float
    work_inc: float
    jump_inc: float
    jump_cum: float
    slack: float
    vi_res: float
    eq_res: float
    n_active: int
    event_flag: str


@dataclass(frozen=True)
class StepIncrements:
    dissipation: float
    work: float
    jump: float = 0.0
    vi_residual: float = 0.0
    eq_residual: float = 0.0
    event: str = "step"


def initial_row(t: float, energy: EnergyBreakdown, eq_res: float = 0.0) -> LedgerRow:
    return LedgerRow(t, energy.total, energy.gradient_term, energy.elastic_term, 0.0, 0.0, 0.0, 0.0, 0.0,
                     0.0, eq_res, energy.region.n_active, "init")


def audit_tolerance(row_prev: LedgerRow, e0: float | None = None, rtol: float = AUDIT_RTOL) -> float:
    """``rtol * (1 + ref)`` with ``ref`` the smaller of the previous and initial energy."""
    ref = row_prev.E_total if e0 is None else min(row_prev.E_total, e0)
    return rtol * (1.0 + max(ref, 0.0))


def audit_step(row_prev: LedgerRow, candidate: TrajectoryState, increments: StepIncrements, mat: Material,
               e0: float | None = None, rtol: float = AUDIT_RTOL, energy: EnergyBreakdown | None = None) -> LedgerRow:
    """Ledger row for ``candidate``; raises :class:`AuditFailure` on negative slack.

    ``slack = (E_prev + work) - (E_new + dissipation + jump)``.
    """
    if energy is None:
        energy = free_energy(candidate.mesh, candidate.u, candidate.z, candidate.F, candidate.epsilon_used, mat)
    inc = increments
    slack = (row_prev.E_total + inc.work) - (energy.total + inc.dissipation + inc.jump)
    row = LedgerRow(candidate.t, energy.total, energy.gradient_term, energy.elastic_term, inc.dissipation,
                    inc.work, inc.jump, row_prev.jump_cum + inc.jump, slack, inc.vi_residual, inc.eq_residual,
                    candidate.F.n_active, inc.event)
    tol = audit_tolerance(row_prev, e0, rtol)
    if slack < -tol:
        raise AuditFailure(f"energy inequality violated at t={candidate.t:.6g}: slack {slack:.3e} < -{tol:.1e}")
    return row


def cumulative_slack(rows) -> float:
    """``e0 + sum work - E_last - sum dissipation - sum jumps``."""
    rows = list(rows)
    work = sum(r.work_inc for r in rows[1:])
    diss = sum(r.diss_inc for r in rows[1:])
    jumps = sum(r.jump_inc for r in rows[1:])
    return rows[0].E_total + work - rows[-1].E_total - diss - jumps


def write_ledger(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LEDGER_COLUMNS)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in astuple(r)])


def read_ledger(path):
    from .errors import MeshFormatError

    types = [f.type for f in fields(LedgerRow)]
    rows = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or tuple(header) != LEDGER_COLUMNS:
            raise MeshFormatError(f"{path}: ledger header must be {','.join(LEDGER_COLUMNS)}")
        for lineno, rec in enumerate(rd, 2):
            if len(rec) != len(LEDGER_COLUMNS):
                raise MeshFormatError(f"{path}:{lineno}: expected {len(LEDGER_COLUMNS)} columns")
            try:
                vals = [float(v) if t in (float, "float") else int(v) if t in (int, "int") else v
                        for v, t in zip(rec, types)]
            except ValueError:
                raise MeshFormatError(f"{path}:{lineno}: malformed value") from None
            rows.append(LedgerRow(*vals))
    return rows


class LedgerVerification(NamedTuple):
    ok: bool
    min_slack: float
    cumulative_slack: float
    tolerance: float
    problems: tuple


def verify_ledger(rows, rtol: float = AUDIT_RTOL, consistency: float = 1e-9) -> LedgerVerification:
    """Re-audit a ledger: recomputed slacks, sign conditions, telescoped total."""
    rows = list(rows)
    problems = []
    if not rows or rows[0].event_flag != "init":
        problems.append("first row must be the initial state")
        return LedgerVerification(False, float("nan"), float("nan"), float("nan"), tuple(problems))
    e0 = rows[0].E_total
    cum_jump = 0.0
    for prev, r in zip(rows, rows[1:]):
        s = (prev.E_total + r.work_inc) - (r.E_total + r.diss_inc + r.jump_inc)
        scale = 1.0 + abs(prev.E_total) + abs(r.work_inc)
        if abs(s - r.slack) > consistency * scale:
            problems.append(f"t={r.t!r}: stored slack {r.slack!r} disagrees with recomputed {s!r}")
        tol = audit_tolerance(prev, e0, rtol)
        if r.slack < -tol:
            problems.append(f"t={r.t!r}: slack {r.slack:.3e} below -{tol:.1e}")
        if r.diss_inc < 0:
            problems.append(f"t={r.t!r}: negative dissipation")
        if r.jump_inc < 0:
            problems.append(f"t={r.t!r}: negative jump energy")
        cum_jump += r.jump_inc
        if abs(cum_jump - r.jump_cum) > consistency * (1.0 + abs(cum_jump)):
            problems.append(f"t={r.t!r}: cumulative jump column inconsistent")
        if r.t <= prev.t:
            problems.append(f"t={r.t!r}: time not increasing")
    total = cumulative_slack(rows)
    gtol = rtol * (1.0 + e0)
    if total < -gtol:
        problems.append(f"cumulative slack {total:.3e} below -{gtol:.1e}")
    min_slack = min((r.slack for r in rows[1:]), default=0.0)
    return LedgerVerification(not problems, min_slack, total, gtol, tuple(problems))
