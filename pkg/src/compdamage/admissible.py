"""Not-completely-damaged regions, their Dirichlet-connected part and exclusion.

A region is a boolean mask over elements.  Connectivity is through shared
edges only: two triangles touching at a vertex are *not* connected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .mesh import DIRICHLET, Mesh

THETA_Z = 1e-8

GAMMA_DIRICHLET = 1
GAMMA_NEUMANN = 2
GAMMA_DAMAGED = 3


@dataclass(frozen=True)
class AdmissibleRegion:
    """Active element set with its boundary partition.

    ``boundary`` lists ``(element, local_edge, label)`` rows for every
    boundary edge of the active set; ``label`` is 1 (active Dirichlet
    edge), 2 (active Neumann edge) or 3 (interface to inactive elements).
    """

    mesh: Mesh
    active_elements: np.ndarray
    active_nodes: np.ndarray
    boundary: np.ndarray

    @classmethod
    def from_elements(cls, mesh: Mesh, active_elements) -> "AdmissibleRegion":
        act = np.array(active_elements, dtype=bool).reshape(-1)
        if len(act) != mesh.n_elements:
            raise ValueError("element mask has wrong length")
        nodes = np.zeros(mesh.n_nodes, dtype=bool)
        nodes[mesh.triangles[act].reshape(-1)] = True
        adj = mesh.element_adjacency
        label = np.zeros(adj.shape, dtype=np.int64)
        outer = adj < 0
        label[outer] = np.where(mesh.dirichlet_element_edges[outer], GAMMA_DIRICHLET, GAMMA_NEUMANN)
        inner = ~outer
        label[inner] = np.where(act[adj[inner]], 0, GAMMA_DAMAGED)
        label[~act] = 0
        k, le = np.nonzero(label)
        boundary = np.column_stack([k, le, label[k, le]]).astype(np.int64).reshape(-1, 3)
        for a in (act, nodes, boundary):
            a.setflags(write=False)
        return cls(mesh, act, nodes, boundary)

    @classmethod
    def full(cls, mesh: Mesh) -> "AdmissibleRegion":
        return cls.from_elements(mesh, np.ones(mesh.n_elements, dtype=bool))

    @property
    def n_active(self) -> int:
        return int(self.active_elements.sum())

    @property
    def is_empty(self) -> bool:
        return not self.active_elements.any()

    def edges(self, label: int) -> np.ndarray:
        """Node pairs of the boundary edges carrying ``label``."""
        sel = self.boundary[self.boundary[:, 2] == label]
        tri = self.mesh.triangles[sel[:, 0]]
        le = sel[:, 1]
        return np.column_stack([tri[np.arange(len(sel)), le], tri[np.arange(len(sel)), (le + 1) % 3]])

    def dirichlet_nodes(self) -> np.ndarray:
        """Boolean mask of nodes lying on an active Dirichlet edge."""
        mask = np.zeros(self.mesh.n_nodes, dtype=bool)
        mask[self.edges(GAMMA_DIRICHLET).reshape(-1)] = True
        return mask

    def area(self) -> float:
        return float(self.mesh.areas[self.active_elements].sum())

    def __eq__(self, other):
        if not isinstance(other, AdmissibleRegion):
            return NotImplemented
        return self.mesh is other.mesh and np.array_equal(self.active_elements, other.active_elements)

    def __hash__(self):
        return hash((id(self.mesh), self.active_elements.tobytes()))


@dataclass(frozen=True)
class JumpEvent:
    """Material exclusion at time ``time`` with its energy bookkeeping."""

    time: float
    excluded_elements: np.ndarray
    jump_energy: float
    post_jump_energy: float

    def __post_init__(self):
        if self.jump_energy < 0:
            raise ValueError(f"negative jump energy {self.jump_energy!r}")

    def log_row(self) -> str:
        return f"jump,{self.time!r},{len(self.excluded_elements)},{self.jump_energy!r},{self.post_jump_energy!r}"


def superlevel_region(mesh: Mesh, z, threshold: float = THETA_Z) -> np.ndarray:
    """Elements whose three nodal values all exceed ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    z = np.asarray(z, dtype=float)
    return np.all(z[mesh.triangles] > threshold, axis=1)


def _region_graph(mesh: Mesh, region: np.ndarray):
    adj = mesh.element_adjacency
    k = np.repeat(np.arange(mesh.n_elements), 3)
    nb = adj.reshape(-1)
    keep = (nb >= 0) & region[k]
    keep[keep] &= region[nb[keep]]
    n = mesh.n_elements
    return sparse.csr_matrix((np.ones(int(keep.sum())), (k[keep], nb[keep])), shape=(n, n))


def component_labels(mesh: Mesh, region) -> np.ndarray:
    """Edge-connected component label per element; ``-1`` outside ``region``."""
    region = np.asarray(region, dtype=bool)
    _, labels = connected_components(_region_graph(mesh, region), directed=False)
    labels = labels.astype(np.int64)
    labels[~region] = -1
    return labels


def maximal_admissible(mesh: Mesh, region) -> AdmissibleRegion:
    """Union of the components of ``region`` that own a Dirichlet boundary edge."""
    region = np.asarray(region, dtype=bool)
    labels = component_labels(mesh, region)
    seeds = region & mesh.dirichlet_element_edges.any(axis=1)
    good = np.unique(labels[seeds])
    return AdmissibleRegion.from_elements(mesh, np.isin(labels, good) & region)


def truncate_field(z, F: AdmissibleRegion) -> np.ndarray:
    """Zero ``z`` on every node that belongs to no active element."""
    z = np.array(z, dtype=float)
    z[~F.active_nodes] = 0.0
    return z


def detect_jump(F_prev: AdmissibleRegion, F_new: AdmissibleRegion, region) -> np.ndarray:
    """Elements lost from ``F_prev`` by disconnection rather than by damage.

    ``region`` is the super-level set the new region was built from.
    Raises ``ValueError`` if ``F_new`` is not contained in ``F_prev``.
    """
    prev = F_prev.active_elements
    new = F_new.active_elements
    if np.any(new & ~prev):
        bad = np.nonzero(new & ~prev)[0]
        raise ValueError(f"admissible region grew on elements {bad[:10].tolist()}: irreversibility broken upstream")
    lost = prev & ~new & np.asarray(region, dtype=bool)
    return np.nonzero(lost)[0]
