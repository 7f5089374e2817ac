import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compdamage import AdmissibleRegion, JumpEvent, detect_jump, maximal_admissible, rectangle_mesh, superlevel_region
from compdamage.admissible import (
    GAMMA_DAMAGED,
    GAMMA_DIRICHLET,
    GAMMA_NEUMANN,
    component_labels,
    truncate_field,
)
from compdamage.errors import MeshInvariantError
from compdamage.mesh import Mesh

import oracles


def random_case(rng, max_elements=2000):
    """Jittered structured mesh, random Dirichlet arcs and a random element mask."""
    while True:
        nx, ny = (int(v) for v in rng.integers(1, 32, size=2))
        if 2 * nx * ny <= max_elements:
            break
    sides = [s for s in ("left", "right", "bottom", "top") if rng.random() < 0.5] or ["left"]
    cut = rng.uniform(0, 1)
    diagonal = str(rng.choice(["right", "alternate", "left"]))
    try:
        mesh = rectangle_mesh(nx, ny, diagonal=diagonal,
                              dirichlet=lambda xm, ym: (xm < 1e-12 and "left" in sides and ym < cut + 0.5)
                              or (xm > 1 - 1e-12 and "right" in sides) or (ym < 1e-12 and "bottom" in sides)
                              or (ym > 1 - 1e-12 and "top" in sides and xm > cut))
    except MeshInvariantError:
        # the arcs missed every boundary edge midpoint
        mesh = rectangle_mesh(nx, ny, diagonal=diagonal)
    mask = rng.random(mesh.n_elements) < rng.uniform(0.3, 0.95)
    return mesh, mask


def test_boundary_partition_labels():
    mesh = rectangle_mesh(2, 1)
    F = AdmissibleRegion.from_elements(mesh, [True, True, False, False])
    labels = {int(v) for v in F.boundary[:, 2]}
    assert labels == {GAMMA_DIRICHLET, GAMMA_NEUMANN, GAMMA_DAMAGED}
    assert len(F.edges(GAMMA_DIRICHLET)) == 1
    assert F.dirichlet_nodes().sum() == 2
    assert F.n_active == 2 and not F.is_empty
    assert F.area() == pytest.approx(0.5)


def test_full_region_has_no_interface():
    mesh = rectangle_mesh(3, 3)
    F = AdmissibleRegion.full(mesh)
    assert not np.any(F.boundary[:, 2] == GAMMA_DAMAGED)
    assert len(F.boundary) == 12


def test_superlevel_threshold():
    mesh = rectangle_mesh(2, 2)
    z = np.ones(mesh.n_nodes)
    z[4] = 1e-8
    sel = superlevel_region(mesh, z)
    assert not sel[mesh.triangles.__eq__(4).any(axis=1)].any()
    assert sel[~mesh.triangles.__eq__(4).any(axis=1)].all()
    with pytest.raises(ValueError):
        superlevel_region(mesh, z, -1.0)


def test_vertex_contact_does_not_connect():
    # two triangles touching only at node 2
    nodes = [[0, 0], [1, 0], [1, 1], [2, 1], [2, 2], [0, 1]]
    mesh = Mesh(nodes, [[0, 1, 2], [2, 3, 4]], [[0, 1]], ["D"])
    assert component_labels(mesh, [True, True]).tolist() == [0, 1]
    F = maximal_admissible(mesh, [True, True])
    assert F.active_elements.tolist() == [True, False]


def test_mask_without_dirichlet_contact_is_empty():
    mesh = rectangle_mesh(4, 1)
    mask = np.zeros(mesh.n_elements, dtype=bool)
    mask[4:] = True  # right half, Dirichlet on the left
    assert maximal_admissible(mesh, mask).is_empty


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_maximal_admissible_matches_flood_fill(seed):
    mesh, mask = random_case(np.random.default_rng(seed), max_elements=300)
    F = maximal_admissible(mesh, mask)
    assert np.array_equal(F.active_elements, oracles.flood_fill_admissible(mesh, mask))
    # idempotent and contained in the mask
    assert maximal_admissible(mesh, F.active_elements) == F
    assert not np.any(F.active_elements & ~mask)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_maximal_admissible_monotone_in_mask(seed):
    rng = np.random.default_rng(seed)
    mesh, mask = random_case(rng, max_elements=200)
    sub = mask & (rng.random(mesh.n_elements) < 0.8)
    assert not np.any(maximal_admissible(mesh, sub).active_elements & ~maximal_admissible(mesh, mask).active_elements)


def test_truncate_field_zeroes_inactive_nodes():
    mesh = rectangle_mesh(4, 1)
    F = AdmissibleRegion.from_elements(mesh, np.arange(8) < 4)
    z = truncate_field(np.full(mesh.n_nodes, 0.7), F)
    assert np.all(z[F.active_nodes] == 0.7)
    assert np.all(z[~F.active_nodes] == 0.0)


def isolated_block_case():
    """Strip of 4x2 cells; cutting the middle column leaves a 6-element block without support."""
    mesh = rectangle_mesh(4, 2, 4.0, 2.0)
    cx = mesh.nodes[mesh.triangles].mean(axis=1)[:, 0]
    F_prev = AdmissibleRegion.full(mesh)
    region = ~((cx > 1.0) & (cx < 2.0))
    return mesh, F_prev, region


def test_detect_jump_reports_disconnected_block():
    mesh, F_prev, region = isolated_block_case()
    F_new = maximal_admissible(mesh, region)
    cut = detect_jump(F_prev, F_new, region)
    cx = mesh.nodes[mesh.triangles].mean(axis=1)[:, 0]
    assert np.array_equal(cut, np.nonzero(cx > 2.0)[0])
    assert len(cut) == 8


def test_detect_jump_rejects_growth():
    mesh, F_prev, region = isolated_block_case()
    small = maximal_admissible(mesh, region)
    with pytest.raises(ValueError, match="grew"):
        detect_jump(small, F_prev, np.ones(mesh.n_elements, bool))


def test_jump_event_validation():
    ev = JumpEvent(0.5, np.array([1, 2]), 0.25, 1.0)
    assert ev.log_row() == "jump,0.5,2,0.25,1.0"
    with pytest.raises(ValueError):
        JumpEvent(0.5, np.array([1]), -1e-3, 1.0)


def test_region_equality_and_hash():
    mesh = rectangle_mesh(2, 2)
    a = AdmissibleRegion.from_elements(mesh, np.arange(8) < 3)
    b = AdmissibleRegion.from_elements(mesh, np.arange(8) < 3)
    assert a == b and hash(a) == hash(b)
    with pytest.raises(ValueError):
        AdmissibleRegion.from_elements(mesh, [True])
