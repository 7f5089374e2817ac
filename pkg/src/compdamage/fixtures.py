"""Reference problems used by the tests and demos.

Each builder returns a :class:`~compdamage.driver.SimulationConfig` or a
``(mesh, z)`` pair.  Domains are scaled so that the gradient term stays
comparable to the elastic energy at the chosen resolution.
"""

from __future__ import annotations

import numpy as np

from .driver import BoundaryProgram, SimulationConfig
from .mesh import Material, Mesh, rectangle_mesh


def affine_patch(n: int = 32, A=((0.1, 0.02), (-0.03, 0.05))):
    """Unit square, Dirichlet on all sides, undamaged: the solution is ``u = A x``."""
    mesh = rectangle_mesh(n, n, dirichlet=("left", "right", "bottom", "top"))
    return mesh, np.ones(mesh.n_nodes), np.asarray(A, dtype=float)


def smooth_config(tau: float, n: int = 8, size: float = 2.0, strain: float = 0.3, T: float = 1.0) -> SimulationConfig:
    """Bar pulled along ``x`` from both ends with a smooth damage dip; nothing is excluded."""
    mesh = rectangle_mesh(n, n, size, size, dirichlet=("left", "right"))
    x, y = mesh.nodes.T
    c = 0.5 * size
    z0 = 1.0 - 0.2 * np.exp(-((x - c) ** 2 + (y - c) ** 2) / (0.1 * size**2))
    mat = Material(lam=1.0, mu=1.0, alpha=0.01, beta=1.0, p=4.0)
    prog = BoundaryProgram.ramp([[strain, 0.0], [0.0, 0.0]], T)
    return SimulationConfig(mesh=mesh, material=mat, program=prog, T=T, tau=tau, tau_min=tau * 1e-4, z0=z0)


def notched_square_config(n: int = 16, size: float = 4.0, strain: float = 0.5, T: float = 1.0,
                          tau: float = 0.05) -> SimulationConfig:
    """Square stretched along ``x`` with a notch of weakened material on the left half of the mid-line."""
    mesh = rectangle_mesh(n, n, size, size, dirichlet=("left", "right"), diagonal="alternate")
    z0 = notch_damage(mesh, size)
    mat = Material(lam=1.0, mu=1.0, alpha=0.05, beta=0.5, p=4.0)
    prog = BoundaryProgram.ramp([[strain, 0.0], [0.0, 0.0]], T)
    return SimulationConfig(mesh=mesh, material=mat, program=prog, T=T, tau=tau, tau_min=1e-6, z0=z0)


def notch_damage(mesh: Mesh, size: float) -> np.ndarray:
    x, y = mesh.nodes.T
    band = np.exp(-((x - 0.5 * size) / (0.08 * size)) ** 2)
    tip = 1.0 / (1.0 + np.exp((y - 0.5 * size) / (0.05 * size)))
    return 1.0 - 0.4 * band * tip


def bridge_config(nx: int = 8, ny: int = 4, scale: float = 5.0, glue: float = 0.15, strain: float = 1.0,
                  T: float = 1.0, tau: float = 0.05) -> SimulationConfig:
    """Two blocks separated by a fully damaged slit, each held by its own Dirichlet edge.

    The right block's clamped edge carries weak material ("glue").  Both
    edges are stretched vertically; once the glue is fully damaged the
    right block has lost its Dirichlet support and is excluded, while the
    left block is mechanically unaffected.
    """
    lx, ly = 2.0 * scale, scale
    mesh = rectangle_mesh(nx, ny, lx, ly, dirichlet=("left", "right"))
    return SimulationConfig(mesh=mesh, material=Material(lam=1.0, mu=1.0, alpha=0.01, beta=1.0, p=4.0),
                            program=BoundaryProgram.ramp([[0.0, 0.0], [0.0, strain]], T), T=T, tau=tau,
                            tau_min=1e-6, z0=bridge_damage(mesh, nx, lx, glue))


def bridge_damage(mesh: Mesh, nx: int, lx: float, glue: float) -> np.ndarray:
    x = mesh.nodes[:, 0]
    h = lx / nx
    col = np.rint(x / h).astype(int)
    z = np.ones(mesh.n_nodes)
    mid = nx // 2
    z[(col == mid) | (col == mid + 1)] = 0.0
    z[col == nx] = glue
    return z


def band_columns(mesh: Mesh, nx: int, lx: float, first: int, width: int = 2) -> np.ndarray:
    """Mask of nodes on grid columns ``first .. first + width - 1``."""
    col = np.rint(mesh.nodes[:, 0] / (lx / nx)).astype(int)
    return (col >= first) & (col < first + width)


def strip_fixture(n: int = 16, A=((0.1, 0.0), (0.0, 0.05))):
    """Unit square clamped left and right with a two-column ``z = 0`` strip at ``x = 1/2``.

    Returns ``(config, z)``; the strip carries only the regularizing stiffness.
    """
    mesh = rectangle_mesh(n, n, dirichlet=("left", "right"))
    z = np.ones(mesh.n_nodes)
    z[band_columns(mesh, n, 1.0, n // 2)] = 0.0
    prog = BoundaryProgram((0.0, 1.0), np.stack([np.asarray(A, float)] * 2))
    cfg = SimulationConfig(mesh=mesh, program=prog, T=1.0, tau=1.0, z0=z,
                           epsilon_schedule=(1e-2, 1e-3, 1e-4, 1e-5, 1e-6))
    return cfg, z


def two_component_fixture(n: int = 16, delta1: float = 1e-3, island_value: float | None = None,
                          A=((0.1, 0.0), (0.0, 0.05))):
    """Square clamped on the left with an island of low damage value cut off by a ``z = 0`` moat.

    The island (right part of the square) is a separate component of
    ``{z > 0}`` without Dirichlet support.  Its value defaults to
    ``delta1 / 2``.  Returns ``(config, z)``.
    """
    mesh = rectangle_mesh(n, n, dirichlet=("left",))
    z = np.ones(mesh.n_nodes)
    moat = band_columns(mesh, n, 1.0, n // 2)
    island = np.rint(mesh.nodes[:, 0] * n).astype(int) >= n // 2 + 2
    z[moat] = 0.0
    z[island] = delta1 / 2 if island_value is None else island_value
    prog = BoundaryProgram((0.0, 1.0), np.stack([np.asarray(A, float)] * 2))
    eps = tuple(10.0 ** -k for k in range(1, 7))
    cfg = SimulationConfig(mesh=mesh, program=prog, T=1.0, tau=1.0, z0=z, epsilon_schedule=eps,
                           probe_epsilon=eps + (1e-8,),
                           probe_delta=tuple(delta1 * 10.0 ** -k for k in range(0, 7)))
    return cfg, z
