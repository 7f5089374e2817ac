"""Time stepping with exclusion events, audits and step-size control.

One step from ``t`` to ``t + tau``:

1. stagger equilibrium and damage solves on the current region until the
   damage stops changing;
2. rebuild the region as the Dirichlet-connected part of ``{z > theta}``;
3. if components were cut off, record a jump and truncate ``z``;
4. audit the discrete energy inequality.

Any solver or audit failure rejects the step and halves ``tau``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
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
    truncate_field,
)
from .damage import IncrementalDamageProblem, solve_damage_step, vi_residual
from .energy import (
    AUDIT_RTOL,
    LedgerRow,
    StepIncrements,
    audit_step,
    dissipation_increment,
    free_energy,
    initial_row,
    jump_energy,
    reduced_state,
    write_ledger,
)
from .equilibrium import EPS_FLOOR, EquilibriumProblem, solve_equilibrium, stress_power, truncated_strain_norm
from .errors import (
    AuditFailure,
    ConfigError,
    ConstraintViolation,
    ConvergenceError,
    SingularSystemError,
    StepUnderflow,
)
from .mesh import Material, Mesh, element_strains, load_mesh
from .state import TrajectoryState, read_snapshot, write_snapshot

log = logging.getLogger(__name__)

MONOTONE_TOL = 1e-12
VI_TOL = 1e-8
GROW_AFTER = 5
GROW_FACTOR = 1.25


@dataclass(frozen=True)
class BoundaryProgram:
    """Dirichlet datum ``b(t, x) = A(t) x + c(t)``, piecewise linear in ``t``.

    Parameters
    ----------
    times : sequence of float
        Strictly increasing breakpoints; ``b`` is held constant outside.
    A : array_like, shape (n_times, 2, 2)
    c : array_like, shape (n_times, 2), optional
    """

    times: np.ndarray
    A: np.ndarray
    c: np.ndarray = None

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        A = np.array(self.A, dtype=float).reshape(len(t), 2, 2)
        c = np.zeros((len(t), 2)) if self.c is None else np.array(self.c, dtype=float).reshape(len(t), 2)
        if len(t) == 0 or np.any(np.diff(t) <= 0):
            raise ConfigError("load.times must be nonempty and strictly increasing")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(c))):
            raise ConfigError("non-finite load coefficient")
        for a in (t, A, c):
            a.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)

    @classmethod
    def ramp(cls, A, T: float, c=(0.0, 0.0)) -> "BoundaryProgram":
        """Linear growth from zero at ``t = 0`` to ``(A, c)`` at ``t = T``."""
        A = np.asarray(A, dtype=float).reshape(2, 2)
        c = np.asarray(c, dtype=float).reshape(2)
        return cls((0.0, T), np.stack([0 * A, A]), np.stack([0 * c, c]))

    @classmethod
    def zero(cls) -> "BoundaryProgram":
        return cls((0.0,), np.zeros((1, 2, 2)))

    def coefficients(self, t: float):
        t = float(t)
        A = np.array([[np.interp(t, self.times, self.A[:, i, j]) for j in range(2)] for i in range(2)])
        c = np.array([np.interp(t, self.times, self.c[:, i]) for i in range(2)])
        return A, c

    def values(self, mesh: Mesh, t: float) -> np.ndarray:
        A, c = self.coefficients(t)
        return mesh.nodes @ A.T + c


@dataclass
class SimulationConfig:
    """Everything a run needs.

    ``z0`` is a constant or a nodal array; ``epsilon_schedule`` and the
    probe schedules are only used by the continuation and probe studies.
    """

    mesh: Mesh
    material: Material = field(default_factory=Material)
    program: BoundaryProgram = field(default_factory=BoundaryProgram.zero)
    T: float = 1.0
    tau: float = 0.1
    tau_min: float = 1e-6
    epsilon: float = 1e-8
    epsilon_schedule: tuple = ()
    probe_epsilon: tuple = ()
    probe_delta: tuple = ()
    theta_z: float = THETA_Z
    eta_fineness: float = 1e-2
    max_outer: int = 200
    stagger_tol: float = 1e-9
    eq_tol: float = 1e-12
    damage_tol: float = 1e-9
    damage_z_tol: float = 1e-11
    output: Path | None = None
    seed: int = 0
    z0: object = 1.0

    def __post_init__(self):
        if not (0 < self.tau_min <= self.tau <= self.T):
            raise ConfigError(f"need 0 < tau_min <= tau <= T, got {self.tau_min}, {self.tau}, {self.T}")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        if not self.theta_z > 0:
            raise ConfigError("theta_z must be > 0")
        if not self.eta_fineness > 0:
            raise ConfigError("eta_fineness must be > 0")
        if self.max_outer < 1 or self.stagger_tol <= 0:
            raise ConfigError("invalid stagger controls")
        for name in ("epsilon_schedule", "probe_epsilon", "probe_delta"):
            s = tuple(float(v) for v in getattr(self, name))
            if any(v <= 0 for v in s) or any(b >= a for a, b in zip(s, s[1:])):
                raise ConfigError(f"{name} must be positive and strictly decreasing")
            setattr(self, name, s)
        if len(self.probe_epsilon) != len(self.probe_delta):
            raise ConfigError("probe schedules must have equal length")
        if self.output is not None:
            self.output = Path(self.output)

    def initial_damage(self) -> np.ndarray:
        z = np.broadcast_to(np.asarray(self.z0, dtype=float), (self.mesh.n_nodes,)).copy()
        if np.any(~np.isfinite(z)) or np.any(z < 0) or np.any(z > 1):
            raise ConfigError("initial damage must lie in [0, 1]")
        return z


_SCALAR_KEYS = {
    "time.T": ("T", float),
    "time.tau": ("tau", float),
    "time.tau_min": ("tau_min", float),
    "epsilon": ("epsilon", float),
    "theta_z": ("theta_z", float),
    "eta_fineness": ("eta_fineness", float),
    "stagger.max_outer": ("max_outer", int),
    "stagger.tol": ("stagger_tol", float),
    "solver.equilibrium_tol": ("eq_tol", float),
    "solver.damage_tol": ("damage_tol", float),
    "solver.damage_z_tol": ("damage_z_tol", float),
    "seed": ("seed", int),
}
_SCHEDULE_KEYS = {
    "epsilon.schedule": "epsilon_schedule",
    "probe.epsilon": "probe_epsilon",
    "probe.delta": "probe_delta",
}
_MATERIAL_KEYS = {"lambda": "lam", "lam": "lam", "mu": "mu", "alpha": "alpha", "beta": "beta", "p": "p",
                  "g": "g_kind", "eta": "eta"}
_LOAD_KEYS = ("a11", "a12", "a21", "a22", "c1", "c2")


def _floats(text: str, key: str):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{key}: expected numbers, got {text!r}") from None


def load_config(path, output=None) -> SimulationConfig:
    """Parse a ``key = value`` config file; relative paths resolve against its directory."""
    path = Path(path)
    base = path.parent
    raw = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (p.strip() for p in s.split("=", 1))
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = (val, lineno)
    kw = {}
    mat = {}
    load = {}
    for key, (val, lineno) in raw.items():
        where = f"{path}:{lineno}"
        try:
            if key in _SCALAR_KEYS:
                name, typ = _SCALAR_KEYS[key]
                kw[name] = typ(val)
            elif key in _SCHEDULE_KEYS:
                kw[_SCHEDULE_KEYS[key]] = tuple(_floats(val, key))
            elif key.startswith("material.") and key[9:] in _MATERIAL_KEYS:
                name = _MATERIAL_KEYS[key[9:]]
                mat[name] = val if name == "g_kind" else float(val)
            elif key == "load.times" or (key.startswith("load.") and key[5:] in _LOAD_KEYS):
                load[key[5:]] = _floats(val, key)
            elif key in ("mesh", "output", "initial.z"):
                kw[key] = val
            else:
                raise ConfigError(f"{where}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{where}: bad value for {key!r}: {val!r}") from None
    if "mesh" not in kw:
        raise ConfigError(f"{path}: missing required key 'mesh'")
    mesh = load_mesh(base / kw.pop("mesh"))
    try:
        material = Material(**mat)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    kw["material"] = material
    kw["program"] = _program(load, path)
    out = kw.pop("output", None)
    kw["output"] = Path(output) if output is not None else (base / out if out is not None else None)
    if "initial.z" in kw:
        zspec = kw.pop("initial.z")
        try:
            kw["z0"] = float(zspec)
        except ValueError:
            kw["z0"] = read_snapshot(base / zspec, mesh, kw.get("theta_z", THETA_Z)).z
    return SimulationConfig(mesh=mesh, **kw)


def _program(load: dict, path) -> BoundaryProgram:
    times = load.get("times", [0.0])
    n = len(times)
    coef = {}
    for k in _LOAD_KEYS:
        v = load.get(k, [0.0])
        if len(v) == 1:
            v = v * n
        if len(v) != n:
            raise ConfigError(f"{path}: load.{k} needs {n} values to match load.times")
        coef[k] = v
    A = np.array([[[coef["a11"][i], coef["a12"][i]], [coef["a21"][i], coef["a22"][i]]] for i in range(n)])
    c = np.array([[coef["c1"][i], coef["c2"][i]] for i in range(n)])
    return BoundaryProgram(times, A, c)


class RunResult(NamedTuple):
    ledger: list
    states: list
    jumps: list


def effective_epsilon(mesh: Mesh, z, F: AdmissibleRegion, epsilon: float, theta: float) -> float:
    """``epsilon``, raised to the floor when an active element touches ``{z <= theta}``."""
    if epsilon > 0 or F.is_empty:
        return epsilon
    zmin = np.asarray(z)[mesh.triangles[F.active_elements]].min()
    return EPS_FLOOR if zmin <= theta else epsilon


def _equilibrium(cfg: SimulationConfig, F, z, eps, b, u0=None):
    prob = EquilibriumProblem(cfg.mesh, cfg.material, F, z, eps, b, tol=cfg.eq_tol, theta=cfg.theta_z)
    return solve_equilibrium(prob, u0=u0)


def initial_state(cfg: SimulationConfig) -> TrajectoryState:
    """Truncated initial damage with its equilibrium displacement at ``t = 0``."""
    mesh = cfg.mesh
    z = cfg.initial_damage()
    F = maximal_admissible(mesh, superlevel_region(mesh, z, cfg.theta_z))
    if F.is_empty:
        raise ConfigError("initial damage has no Dirichlet-connected region above theta_z")
    z = truncate_field(z, F)
    eps = effective_epsilon(mesh, z, F, cfg.epsilon, cfg.theta_z)
    u, _ = _equilibrium(cfg, F, z, eps, cfg.program.values(mesh, 0.0))
    return TrajectoryState(0.0, z, u, F, eps, tau_next=cfg.tau, streak=0)


def _stagger(cfg: SimulationConfig, state: TrajectoryState, b_new, tau: float):
    mesh = cfg.mesh
    F = state.F
    eps = state.epsilon_used
    z_prev = state.z
    z = z_prev
    u = state.u
    for outer in range(1, cfg.max_outer + 1):
        u, _ = _equilibrium(cfg, F, z, eps, b_new, u0=u)
        prob = IncrementalDamageProblem(mesh, cfg.material, z_prev, u, F, eps, tau, tol=cfg.damage_tol,
                                        z_tol=cfg.damage_z_tol, theta=cfg.theta_z)
        z_new, _ = solve_damage_step(prob, z0=z)
        change = float(np.max(np.abs(z_new - z)))
        z = z_new
        if change <= cfg.stagger_tol:
            u, eq_res = _equilibrium(cfg, F, z, eps, b_new, u0=u)
            return z, u, eq_res, outer
    raise ConvergenceError(f"stagger not converged after {cfg.max_outer} outer iterations (last change {change:.3e})",
                           z, change)


@dataclass
class _Context:
    e0: float
    cum_slack: float
    rtol: float = AUDIT_RTOL


def _attempt(cfg: SimulationConfig, state: TrajectoryState, row_prev: LedgerRow, t_new: float, ctx: _Context):
    mesh, mat, theta = cfg.mesh, cfg.material, cfg.theta_z
    tau = t_new - state.t
    b_prev = cfg.program.values(mesh, state.t)
    b_new = cfg.program.values(mesh, t_new)
    F = state.F
    eps = state.epsilon_used
    z_minus, u, eq_res, _ = _stagger(cfg, state, b_new, tau)
    if np.any(z_minus > state.z + MONOTONE_TOL):
        raise AuditFailure("irreversibility violated by the damage step")
    vi = vi_residual(mesh, z_minus, state.z, u, F, eps, mat, tau, theta)
    if vi > VI_TOL:
        raise AuditFailure(f"variational inequality residual {vi:.3e} exceeds {VI_TOL:.0e}")
    work = stress_power(mesh, u, z_minus, F, (b_new - b_prev) / tau, eps, mat, tau)
    diss = dissipation_increment(mesh, z_minus, state.z, F, mat, tau)

    region = superlevel_region(mesh, z_minus, theta) & F.active_elements
    F_new = maximal_admissible(mesh, region)
    event = None
    jump = 0.0
    if F_new == F:
        flag = "step"
        z_new, u_new = z_minus, u
    else:
        z_new = truncate_field(z_minus, F_new)
        excluded = detect_jump(F, F_new, region)
        if len(excluded):
            flag = "jump"
            before = TrajectoryState(t_new, z_minus, u, F, eps)
            event, u_new = jump_energy(before, z_new, F_new, b_new, mat, eps, ctx.rtol, theta)
            jump = event.jump_energy
        else:
            flag = "shrink"
            if F_new.is_empty:
                u_new = np.zeros_like(u)
            else:
                u_new, _ = _equilibrium(cfg, F_new, z_new, effective_epsilon(mesh, z_new, F_new, eps, theta),
                                        b_new, u0=u)
        if not F_new.is_empty:
            eq_res = _equilibrium_residual(cfg, F_new, z_new, eps, b_new, u_new)
    eps_new = effective_epsilon(mesh, z_new, F_new, cfg.epsilon, theta) if not F_new.is_empty else eps
    cand = TrajectoryState(t_new, z_new, u_new, F_new, eps if flag == "step" else eps_new, z_minus=z_minus)
    energy = free_energy(mesh, u_new, z_new, F_new, cand.epsilon_used, mat)
    inc = StepIncrements(diss, work, jump, vi, eq_res, flag)
    row = audit_step(row_prev, cand, inc, mat, e0=ctx.e0, rtol=ctx.rtol, energy=energy)
    cum = ctx.cum_slack + row.slack
    if cum < -ctx.rtol * (1.0 + max(ctx.e0, 0.0)):
        raise AuditFailure(f"cumulative energy slack {cum:.3e} below tolerance at t={t_new:.6g}")
    return cand, row, event


def _equilibrium_residual(cfg, F, z, eps, b, u):
    from .equilibrium import equilibrium_residual

    eps = effective_epsilon(cfg.mesh, z, F, eps, cfg.theta_z)
    prob = EquilibriumProblem(cfg.mesh, cfg.material, F, z, eps, b, tol=cfg.eq_tol, theta=cfg.theta_z)
    return equilibrium_residual(prob, u)


def run(cfg: SimulationConfig, start: TrajectoryState | None = None, *, e0: float | None = None,
        slack_offset: float = 0.0, jump_offset: float = 0.0, write: bool = True) -> RunResult:
    """Integrate from ``start`` (default: the initial state) to ``cfg.T``.

    ``e0``, ``slack_offset`` and ``jump_offset`` carry the bookkeeping of an
    earlier segment when resuming from a checkpoint, so the resumed audit
    decisions match those of an unbroken run.

    Raises
    ------
    StepUnderflow
        If a step is still rejected at ``tau < tau_min``; ``.certificate``
        holds the last failure and ``.partial`` the accepted trajectory.
    """
    mesh, mat = cfg.mesh, cfg.material
    state = initial_state(cfg) if start is None else start
    energy = free_energy(mesh, state.u, state.z, state.F, state.epsilon_used, mat)
    row = initial_row(state.t, energy)
    row = replace(row, jump_cum=jump_offset)
    ctx = _Context(energy.total if e0 is None else e0, slack_offset)
    ledger, states, jumps = [row], [state], []
    tau = cfg.tau if state.tau_next is None else state.tau_next
    streak = state.streak
    t_end = cfg.T
    while t_end - state.t > 1e-12 * max(1.0, t_end):
        tau_try = tau
        clean = True
        while True:
            t_new = state.t + tau_try
            if t_new >= t_end or t_end - t_new < 1e-10 * max(1.0, t_end):
                t_new = t_end
            try:
                cand, row, event = _attempt(cfg, state, ledger[-1], t_new, ctx)
                break
            except (AuditFailure, ConvergenceError, SingularSystemError, ConstraintViolation) as exc:
                clean = False
                tau_try *= 0.5
                log.info("step rejected at t=%.6g: %s; tau -> %.3e", state.t, exc, tau_try)
                if tau_try < cfg.tau_min:
                    result = RunResult(ledger, states, jumps)
                    if write:
                        write_outputs(cfg, result)
                    err = StepUnderflow(f"time step below tau_min at t={state.t:.6g}: {exc}", state.t, str(exc))
                    err.partial = result
                    raise err from exc
        if clean:
            streak += 1
            if streak >= GROW_AFTER:
                tau = min(tau * GROW_FACTOR, cfg.tau)
                streak = 0
        else:
            tau = tau_try
            streak = 0
        ctx.cum_slack += row.slack
        state = cand.with_(tau_next=tau, streak=streak)
        ledger.append(row)
        states.append(state)
        if event is not None:
            jumps.append(event)
    result = RunResult(ledger, states, jumps)
    if write:
        write_outputs(cfg, result)
    return result


def write_outputs(cfg: SimulationConfig, result: RunResult) -> None:
    """``ledger.csv``, ``jumps.log`` and ``snapshots/state_#####.txt`` under ``cfg.output``."""
    if cfg.output is None:
        return
    out = Path(cfg.output)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    write_ledger(result.ledger, out / "ledger.csv")
    (out / "jumps.log").write_text("".join(ev.log_row() + "\n" for ev in result.jumps))
    for k, st in enumerate(result.states):
        write_snapshot(st, out / "snapshots" / f"state_{k:05d}.txt")


class ContinuationReport(NamedTuple):
    epsilons: tuple
    energies: tuple
    zero_set_energies: tuple
    truncated_strain_norms: tuple
    strain_ratio: float
    monotonicity_defect: float
    zero_set_slope: float
    admissible_energy: float | None


def epsilon_continuation(cfg: SimulationConfig, frozen: TrajectoryState, schedule=None,
                         tol: float = 1e-11) -> ContinuationReport:
    """Equilibrium solves on the whole mesh for each ``epsilon`` at frozen ``(t, z)``.

    Reports the reduced energy, the elastic energy carried by ``{z = 0}``
    (elements whose nodal damage is at most ``theta_z``), the strain norm
    over ``{z > theta_z}`` and, for comparison, the energy of the solve
    restricted to the Dirichlet-connected part of ``{z > theta_z}``.
    """
    mesh, mat, theta = cfg.mesh, cfg.material, cfg.theta_z
    eps_list = tuple(float(e) for e in (cfg.epsilon_schedule if schedule is None else schedule))
    if not eps_list or any(e <= 0 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigError("continuation needs a positive strictly decreasing epsilon schedule")
    z = np.asarray(frozen.z, dtype=float)
    b = cfg.program.values(mesh, frozen.t)
    zero = np.all(z[mesh.triangles] <= theta, axis=1)
    energies, zero_e, norms = [], [], []
    u = None
    for eps in eps_list:
        br, u = reduced_state(mesh, b, z, eps, mat, theta=theta, u0=u, tol=tol)
        e = element_strains(mesh, u)[zero]
        zero_e.append(float(np.sum(mesh.areas[zero] * 0.5 * (mat.g(0.0) + eps) * mat.contract(e, e))))
        energies.append(br.total)
        norms.append(truncated_strain_norm(mesh, u, z, theta))
    defect = max([0.0] + [b_ - a for a, b_ in zip(energies, energies[1:])])
    ratio = max(norms) / min(norms) if min(norms) > 0 else (1.0 if max(norms) == 0 else math.inf)
    slope = float("nan")
    if len(eps_list) >= 2 and all(v > 0 for v in zero_e):
        slope = float(np.polyfit(np.log(eps_list), np.log(zero_e), 1)[0])
    F = maximal_admissible(mesh, superlevel_region(mesh, z, theta))
    adm = None
    if not F.is_empty:
        adm = reduced_state(mesh, b, z, 0.0, mat, region=F, theta=theta, tol=tol)[0].total
    return ContinuationReport(eps_list, tuple(energies), tuple(zero_e), tuple(norms), ratio, defect, slope, adm)


class FinenessReport(NamedTuple):
    times: tuple
    containment_defect: tuple
    equality_defect: tuple
    in_window: tuple
    eta: float
    ok: bool
    note: str


def fineness_report(states, jumps, eta: float, theta: float = THETA_Z) -> FinenessReport:
    """Set comparisons between ``F(t)`` and the admissible part of ``{z^- > theta}``.

    Every jump is treated as isolated: a discrete run has no accumulation
    of jump times.
    """
    jt = [ev.time for ev in jumps]
    times, cont, eq, win = [], [], [], []
    ok = True
    for prev, st in zip(states, states[1:]):
        mesh = st.mesh
        zm = st.z if st.z_minus is None else st.z_minus
        ref = maximal_admissible(mesh, superlevel_region(mesh, zm, theta)).active_elements
        F = st.F.active_elements
        c = float(mesh.areas[ref & ~F].sum())
        d = float(mesh.areas[F & ~ref].sum())
        w = any(t0 <= st.t < t0 + eta for t0 in jt)
        times.append(st.t)
        cont.append(c)
        eq.append(d)
        win.append(w)
        if c > 0 or (d > 0 and not w) or (w and d >= eta):
            ok = False
    areas = states[0].mesh.areas
    total = sum(float(areas[ev.excluded_elements].sum()) for ev in jumps)
    if not jumps:
        note = "no jumps: defect must vanish identically"
    elif eta > total:
        note = f"eta = {eta:g} exceeds the total excluded area {total:g}: in-window bounds hold trivially"
    else:
        note = "jumps treated as isolated events"
    return FinenessReport(tuple(times), tuple(cont), tuple(eq), tuple(win), eta, ok, note)


class RestartReport(NamedTuple):
    t_split: float
    split_index: int
    column_deviation: dict
    field_deviation: float
    n_rows: int
    jumps_after: int
    ok: bool


LEDGER_NUMERIC = ("t", "E_total", "E_grad", "E_elastic", "diss_inc", "work_inc", "jump_inc", "jump_cum",
                  "slack", "vi_res", "eq_res", "n_active")


def checkpoint_restart(states, t_split: float, cfg: SimulationConfig, ledger=None, rtol: float = 1e-8) -> RestartReport:
    """Resume from the accepted state at ``t_split`` and compare with the unbroken run.

    The checkpoint is the post-exclusion state, whose energy is the reduced
    energy of the truncated damage, so a jump at ``t_split`` is charged by
    the first segment only.  Deviations are ``max |delta| / (1 + max |column|)``.
    """
    cfg = replace(cfg, output=None)
    if ledger is None:
        ledger = run(cfg, write=False).ledger
    times = [s.t for s in states]
    k = int(np.argmin(np.abs(np.array(times) - t_split)))
    if abs(times[k] - t_split) > 1e-12 * max(1.0, abs(t_split)):
        raise ValueError(f"t_split = {t_split!r} is not an accepted step time")
    slack_offset = 0.0
    for r in ledger[1:k + 1]:
        slack_offset += r.slack
    res = run(cfg, states[k], e0=ledger[0].E_total, slack_offset=slack_offset,
              jump_offset=ledger[k].jump_cum, write=False)
    ref = ledger[k + 1:]
    new = res.ledger[1:]
    dev = {}
    n = min(len(ref), len(new))
    for col in LEDGER_NUMERIC:
        a = np.array([getattr(r, col) for r in ref[:n]], dtype=float)
        b = np.array([getattr(r, col) for r in new[:n]], dtype=float)
        dev[col] = float(np.max(np.abs(a - b)) / (1.0 + np.max(np.abs(a)))) if n else 0.0
    flags_ok = [r.event_flag for r in ref] == [r.event_flag for r in new]
    fdev = 0.0
    for s_ref, s_new in zip(states[k + 1:], res.states[1:]):
        fdev = max(fdev, float(np.max(np.abs(s_ref.z - s_new.z))), float(np.max(np.abs(s_ref.u - s_new.u))))
    ok = len(ref) == len(new) and flags_ok and all(v <= rtol for v in dev.values()) and fdev <= rtol
    return RestartReport(float(times[k]), k, dev, fdev, len(new), len(res.jumps), ok)
