"""Trajectory slices and their snapshot text format."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .admissible import THETA_Z, AdmissibleRegion, maximal_admissible, superlevel_region
from .errors import MeshFormatError
from .mesh import Mesh


@dataclass(frozen=True)
class TrajectoryState:
    """One accepted time slice.

    ``z`` is the post-exclusion damage (truncated to ``F``); ``z_minus`` is
    the converged damage before exclusion at the same time, when known.
    ``tau_next`` and ``streak`` are the step controller state needed to
    resume a run deterministically.
    """

    t: float
    z: np.ndarray
    u: np.ndarray
    F: AdmissibleRegion
    epsilon_used: float
    accepted: bool = True
    z_minus: np.ndarray | None = None
    tau_next: float | None = None
    streak: int = 0

    @property
    def mesh(self) -> Mesh:
        return self.F.mesh

    def with_(self, **kw) -> "TrajectoryState":
        return replace(self, **kw)


def write_snapshot(state: TrajectoryState, path) -> None:
    """``t <value>`` header, metadata comments, then ``id x y z ux uy active`` per node."""
    mesh = state.mesh
    out = [f"t {state.t!r}", f"# epsilon {state.epsilon_used!r}", f"# streak {state.streak}"]
    if state.tau_next is not None:
        out.append(f"# tau {state.tau_next!r}")
    act = state.F.active_nodes
    for i, ((x, y), z, (ux, uy)) in enumerate(zip(mesh.nodes.tolist(), state.z.tolist(), state.u.tolist())):
        out.append(f"{i} {x!r} {y!r} {z!r} {ux!r} {uy!r} {int(act[i])}")
    Path(path).write_text("\n".join(out) + "\n")


def read_snapshot(path, mesh: Mesh, theta: float = THETA_Z) -> TrajectoryState:
    """Parse a snapshot; ``F`` is rebuilt as the admissible part of ``{z > theta}``."""
    path = Path(path)
    t = None
    meta = {}
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            parts = s[1:].split()
            if len(parts) == 2:
                meta[parts[0]] = parts[1]
            continue
        tok = s.split()
        if tok[0] == "t":
            if len(tok) != 2:
                raise MeshFormatError(f"{path}:{lineno}: malformed header")
            t = float(tok[1])
            continue
        if len(tok) != 7:
            raise MeshFormatError(f"{path}:{lineno}: expected 7 fields, got {len(tok)}")
        try:
            rows.append((int(tok[0]), float(tok[3]), float(tok[4]), float(tok[5]), int(tok[6])))
        except ValueError:
            raise MeshFormatError(f"{path}:{lineno}: malformed node line") from None
    if t is None:
        raise MeshFormatError(f"{path}: missing 't <value>' header")
    if len(rows) != mesh.n_nodes or sorted(r[0] for r in rows) != list(range(mesh.n_nodes)):
        raise MeshFormatError(f"{path}: node rows do not match the mesh ({len(rows)} vs {mesh.n_nodes})")
    rows.sort()
    arr = np.array([r[1:] for r in rows], dtype=float)
    z = arr[:, 0]
    u = arr[:, 1:3]
    F = maximal_admissible(mesh, superlevel_region(mesh, z, theta))
    if not np.array_equal(F.active_nodes, arr[:, 3].astype(bool)):
        raise MeshFormatError(f"{path}: active flags disagree with the admissible part of the damage field")
    return TrajectoryState(
        t=t,
        z=z,
        u=u,
        F=F,
        epsilon_used=float(meta.get("epsilon", 0.0)),
        tau_next=float(meta["tau"]) if "tau" in meta else None,
        streak=int(meta.get("streak", 0)),
    )
