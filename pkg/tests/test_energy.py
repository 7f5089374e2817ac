import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compdamage import AdmissibleRegion, AuditFailure, Material, TrajectoryState, free_energy, gamma_probe
from compdamage import jump_energy, maximal_admissible, read_ledger, rectangle_mesh, reduced_energy
from compdamage import solve_equilibrium, EquilibriumProblem, superlevel_region, truncate_field, verify_ledger
from compdamage import write_ledger
from compdamage.energy import (
    LEDGER_COLUMNS,
    LedgerRow,
    StepIncrements,
    audit_step,
    cumulative_slack,
    dissipation_increment,
    initial_row,
    state_energy,
)
from compdamage.errors import MeshFormatError
from compdamage.fixtures import two_component_fixture

import oracles


def test_free_energy_trivial_cases():
    mesh = rectangle_mesh(4, 4)
    F = AdmissibleRegion.full(mesh)
    u0 = np.zeros((mesh.n_nodes, 2))
    assert free_energy(mesh, u0, np.ones(mesh.n_nodes), F, 0.0, Material()).total == 0.0
    assert free_energy(mesh, u0, np.full(mesh.n_nodes, 0.3), F, 0.0, Material()).gradient_term == 0.0


def test_gradient_of_linear_profile():
    mesh = rectangle_mesh(5, 3)
    br = free_energy(mesh, np.zeros((mesh.n_nodes, 2)), mesh.nodes[:, 0], AdmissibleRegion.full(mesh), 0.0,
                     Material(p=4.0))
    assert br.gradient_term == pytest.approx(0.25, rel=1e-14)
    assert br.total == br.gradient_term + br.elastic_term


def test_free_energy_respects_region_and_rejects_bad_damage():
    mesh = rectangle_mesh(2, 1)
    u = np.column_stack([mesh.nodes[:, 0], np.zeros(mesh.n_nodes)])
    half = AdmissibleRegion.from_elements(mesh, [True, True, False, False])
    full = AdmissibleRegion.full(mesh)
    z = np.ones(mesh.n_nodes)
    assert free_energy(mesh, u, z, half, 0.0, Material()).total == pytest.approx(
        0.5 * free_energy(mesh, u, z, full, 0.0, Material()).total)
    with pytest.raises(ValueError):
        free_energy(mesh, u, z * 1.1, full, 0.0, Material())


def test_reduced_energy_uniform_strain():
    mesh = rectangle_mesh(3, 3, dirichlet=("left", "right", "top", "bottom"))
    A = np.array([[0.1, 0.03], [0.0, -0.05]])
    mat = Material(lam=1.5, mu=0.5)
    e = 0.5 * (A + A.T)
    expect = 0.5 * (1 + 1e-3) * (1.5 * np.trace(e) ** 2 + 2 * 0.5 * np.sum(e * e))
    assert reduced_energy(mesh, mesh.nodes @ A.T, np.ones(mesh.n_nodes), 1e-3, mat) == pytest.approx(expect, rel=1e-10)
    assert reduced_energy(mesh, mesh.nodes @ A.T, np.full(mesh.n_nodes, 1.2), 1e-3, mat) == np.inf


def test_reduced_energy_zero_data_is_gradient_only():
    mesh = rectangle_mesh(4, 4)
    z = 0.5 + 0.5 * mesh.nodes[:, 1]
    e = reduced_energy(mesh, np.zeros((mesh.n_nodes, 2)), z, 1e-2, Material())
    assert e == pytest.approx(0.5**4 / 4)


def test_reduced_energy_decreases_with_epsilon_and_truncation():
    cfg, z = two_component_fixture(island_value=0.4)
    b = cfg.program.values(cfg.mesh, 0.0)
    vals = [reduced_energy(cfg.mesh, b, z, e, cfg.material) for e in (1e-1, 1e-2, 1e-3)]
    assert vals[0] >= vals[1] >= vals[2]
    zt = truncate_field(z, maximal_admissible(cfg.mesh, superlevel_region(cfg.mesh, z)))
    assert reduced_energy(cfg.mesh, b, zt, 1e-3, cfg.material) <= vals[2] + 1e-12


@given(st.integers(0, 10**6))
@settings(max_examples=15, deadline=None)
def test_reduced_energy_below_any_admissible_displacement(seed):
    rng = np.random.default_rng(seed)
    mesh = rectangle_mesh(4, 4, dirichlet=("left", "bottom"))
    mat = Material(lam=rng.uniform(0.1, 2), mu=rng.uniform(0.1, 2))
    z = rng.uniform(0.1, 1, mesh.n_nodes)
    b = rng.normal(scale=0.2, size=(mesh.n_nodes, 2))
    F = AdmissibleRegion.full(mesh)
    best = reduced_energy(mesh, b, z, 1e-4, mat)
    u, _ = solve_equilibrium(EquilibriumProblem(mesh, mat, F, z, 1e-4, b))
    free = ~F.dirichlet_nodes()
    for _ in range(5):
        v = u.copy()
        v[free] += rng.normal(scale=0.05, size=(int(free.sum()), 2))
        assert best <= free_energy(mesh, v, z, F, 1e-4, mat).total + 1e-14


def test_gamma_probe_trivial_limits():
    mesh = rectangle_mesh(4, 4, dirichlet=("left", "right"))
    b = np.column_stack([0.1 * mesh.nodes[:, 0], np.zeros(mesh.n_nodes)])
    eps, dels = (1e-2, 1e-4, 1e-6, 1e-8), (1e-2, 1e-4, 1e-6, 1e-8)
    rep = gamma_probe(mesh, b, np.ones(mesh.n_nodes), Material(), eps, dels)
    ref = reduced_energy(mesh, b, np.ones(mesh.n_nodes), 0.0, Material())
    assert rep.estimate == pytest.approx(ref, rel=1e-7)
    assert rep.monotonicity_defect <= 1e-15
    zero = gamma_probe(mesh, b, np.zeros(mesh.n_nodes), Material(), eps, dels)
    assert zero.estimate == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        gamma_probe(mesh, b, np.ones(mesh.n_nodes), Material(), (1e-2, 1e-3), (1e-3,))
    with pytest.raises(ValueError):
        gamma_probe(mesh, b, np.ones(mesh.n_nodes), Material(), (1e-3, 1e-2), (1e-3, 1e-4))


def _state(mesh, z, F, b, eps, mat):
    u, _ = solve_equilibrium(EquilibriumProblem(mesh, mat, F, z, eps, b))
    return TrajectoryState(0.5, z, u, F, eps)


def test_jump_energy_without_exclusion_is_zero():
    mesh = rectangle_mesh(4, 2, dirichlet=("left",))
    z = 0.5 + 0.5 * mesh.nodes[:, 1]
    F = AdmissibleRegion.full(mesh)
    b = np.column_stack([np.zeros(mesh.n_nodes), 0.1 * mesh.nodes[:, 1]])
    st = _state(mesh, z, F, b, 1e-8, Material())
    ev, _ = jump_energy(st, z, F, b, Material())
    assert abs(ev.jump_energy) <= 1e-10 and len(ev.excluded_elements) == 0


def _two_blocks(strain_right):
    """Left block clamped; right block lost its clamp; blocks separated by a zero slit."""
    mesh = rectangle_mesh(8, 2, 4.0, 1.0, dirichlet=("left", "right"))
    col = np.rint(mesh.nodes[:, 0] * 2).astype(int)
    z = np.ones(mesh.n_nodes)
    z[(col == 4) | (col == 5)] = 0.0
    z_before_right = z.copy()
    F0 = maximal_admissible(mesh, superlevel_region(mesh, z))
    b = np.column_stack([np.zeros(mesh.n_nodes), np.where(mesh.nodes[:, 0] > 2, strain_right, 0.1) * mesh.nodes[:, 1]])
    mat = Material()
    st = _state(mesh, z_before_right, F0, b, 1e-8, mat)
    # the right clamp dies: its edge nodes drop to zero
    z_minus = z.copy()
    z_minus[col == 8] = 0.0
    st = st.with_(z=z_minus)
    region = superlevel_region(mesh, z_minus) & F0.active_elements
    F1 = maximal_admissible(mesh, region)
    return mesh, mat, st, truncate_field(z_minus, F1), F1, b, region


def test_jump_energy_equals_stored_energy_of_cut_component():
    mesh, mat, st, z_after, F1, b, region = _two_blocks(0.3)
    ev, u_after = jump_energy(st, z_after, F1, b, mat)
    cut = np.nonzero(region & ~F1.active_elements)[0]
    assert np.array_equal(ev.excluded_elements, cut)
    stored = sum(oracles.element_energy(mesh, k, st.u, st.z, 1e-8, 1.0, 1.0, 4.0, lambda s: s) for k in cut)
    assert stored > 0
    assert ev.jump_energy == pytest.approx(stored, rel=1e-8)
    assert np.all(u_after[~F1.active_nodes] == 0)


def test_relaxed_cut_component_carries_no_jump():
    mesh, mat, st, z_after, F1, b, region = _two_blocks(0.0)
    ev, _ = jump_energy(st, z_after, F1, b, mat)
    assert len(ev.excluded_elements) > 0
    assert ev.jump_energy == pytest.approx(0.0, abs=1e-10)


def test_jump_energy_rejects_growing_region():
    mesh, mat, st, z_after, F1, b, _ = _two_blocks(0.3)
    with pytest.raises(ValueError):
        jump_energy(st.with_(F=F1), st.z, AdmissibleRegion.full(mesh), b, mat)


def test_dissipation_increment_formula():
    mesh = rectangle_mesh(2, 2)
    F = AdmissibleRegion.full(mesh)
    mat = Material(alpha=0.3, beta=2.0)
    zp = np.ones(mesh.n_nodes)
    z = np.full(mesh.n_nodes, 0.9)
    assert dissipation_increment(mesh, z, zp, F, mat, 0.5) == pytest.approx(0.3 * 0.1 + 2.0 * 0.01 / 0.5)


def _rows(n=4):
    rng = np.random.default_rng(0)
    rows = [LedgerRow(0.0, 1.0, 0.2, 0.8, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 10, "init")]
    for k in range(1, n):
        prev = rows[-1]
        diss, work = rng.uniform(0, 0.1), rng.uniform(0, 0.2)
        e = prev.E_total + work - diss - 1e-3
        rows.append(LedgerRow(0.1 * k, e, 0.1, e - 0.1, diss, work, 0.0, 0.0, prev.E_total + work - e - diss,
                              1e-12, 1e-13, 10, "step"))
    return rows


def test_ledger_roundtrip_and_header(tmp_path):
    rows = _rows()
    write_ledger(rows, tmp_path / "l.csv")
    assert (tmp_path / "l.csv").read_text().splitlines()[0] == ",".join(LEDGER_COLUMNS)
    back = read_ledger(tmp_path / "l.csv")
    assert back == rows
    (tmp_path / "bad.csv").write_text("t,E\n0,1\n")
    with pytest.raises(MeshFormatError):
        read_ledger(tmp_path / "bad.csv")


def test_verify_ledger_telescopes_and_flags_tampering():
    rows = _rows(6)
    rep = verify_ledger(rows)
    assert rep.ok
    assert rep.cumulative_slack == pytest.approx(sum(r.slack for r in rows[1:]), abs=1e-14)
    bad = rows[:3] + [dataclasses.replace(rows[3], slack=rows[3].slack + 1e-3)] + rows[4:]
    assert not verify_ledger(bad).ok
    neg = rows[:2] + [dataclasses.replace(rows[2], E_total=rows[2].E_total + 1.0, slack=rows[2].slack - 1.0)]
    assert not verify_ledger(neg).ok
    assert not verify_ledger(rows[1:]).ok


def test_audit_step_accepts_frozen_state_and_rejects_energy_creation():
    mesh = rectangle_mesh(2, 2)
    F = AdmissibleRegion.full(mesh)
    st = TrajectoryState(0.0, np.ones(mesh.n_nodes), np.zeros((mesh.n_nodes, 2)), F, 1e-8)
    row0 = initial_row(0.0, free_energy(mesh, st.u, st.z, F, 1e-8, Material()))
    row = audit_step(row0, st.with_(t=0.1), StepIncrements(0.0, 0.0), Material())
    assert row.slack == 0.0 and row.event_flag == "step"
    u = np.column_stack([mesh.nodes[:, 0], np.zeros(mesh.n_nodes)])
    with pytest.raises(AuditFailure):
        audit_step(row0, st.with_(t=0.1, u=u), StepIncrements(0.0, 0.0), Material())
    assert cumulative_slack([row0, row]) == 0.0


def test_state_energy_skips_exhausted_elements():
    mesh = rectangle_mesh(2, 1)
    z = np.ones(mesh.n_nodes)
    z[0] = 0.0
    u = np.column_stack([0.1 * mesh.nodes[:, 0], np.zeros(mesh.n_nodes)])
    st = TrajectoryState(0.0, z, u, AdmissibleRegion.full(mesh), 1e-8)
    full = free_energy(mesh, u, z, st.F, 1e-8, Material()).total
    assert state_energy(st, Material()).total < full
