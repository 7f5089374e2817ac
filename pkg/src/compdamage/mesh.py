"""Triangular P1 meshes, nodal fields and the isotropic material model.

Everything downstream works on plain numpy arrays: a damage field is a
``(n_nodes,)`` array and a displacement field an ``(n_nodes, 2)`` array.
:class:`ScalarField` and :class:`VectorField` are thin validated wrappers
that behave like arrays (via ``__array__``) and are used where a field has
to carry its mesh, e.g. in trajectory snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MeshFormatError, MeshInvariantError

DIRICHLET = "D"
NEUMANN = "N"


class Mesh:
    """Immutable 2D triangulation with tagged boundary edges.

    Parameters
    ----------
    nodes : array_like, shape (n_nodes, 2)
        Node coordinates.
    triangles : array_like of int, shape (n_elements, 3)
        Counterclockwise node triples (0-based).
    boundary_edges : array_like of int, shape (n_edges, 2)
        Node pairs of tagged boundary edges.
    boundary_tags : sequence of str
        ``"D"`` (Dirichlet) or ``"N"`` (Neumann) per boundary edge.
        Geometric boundary edges that are not listed are tagged ``"N"``.

    Attributes
    ----------
    areas : ndarray, shape (n_elements,)
    grads : ndarray, shape (n_elements, 3, 2)
        Constant gradients of the three P1 basis functions on each element.
    element_adjacency : ndarray of int, shape (n_elements, 3)
        Neighbor across local edge ``(k, k+1)``; ``-1`` on the boundary.
    """

    def __init__(self, nodes, triangles, boundary_edges, boundary_tags):
        nodes = np.array(nodes, dtype=float).reshape(-1, 2)
        tris = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        bedges = np.array(boundary_edges, dtype=np.int64).reshape(-1, 2)
        tags = [str(t) for t in boundary_tags]
        if len(tags) != len(bedges):
            raise MeshInvariantError("boundary edge/tag count mismatch")
        n = len(nodes)
        if not np.all(np.isfinite(nodes)):
            raise MeshInvariantError("non-finite node coordinate")
        if tris.size and (tris.min() < 0 or tris.max() >= n):
            bad = int(np.nonzero((tris < 0).any(1) | (tris >= n).any(1))[0][0])
            raise MeshInvariantError(f"triangle {bad}: node index out of range")
        for k, (i, j, l) in enumerate(tris):
            if i == j or j == l or i == l:
                raise MeshInvariantError(f"triangle {k}: degenerate triangle {tuple(int(v) for v in (i, j, l))}")

        x = nodes[tris]
        d1 = x[:, 1] - x[:, 0]
        d2 = x[:, 2] - x[:, 0]
        area2 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        if np.any(area2 <= 0):
            bad = int(np.nonzero(area2 <= 0)[0][0])
            raise MeshInvariantError(f"triangle {bad}: non-positive signed area (inverted or degenerate)")

        # Local edge k joins local vertices k and k+1.
        loc = np.array([[0, 1], [1, 2], [2, 0]])
        all_edges = tris[:, loc].reshape(-1, 2)
        keys = np.sort(all_edges, axis=1)
        uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        if np.any(counts > 2):
            raise MeshInvariantError("non-manifold edge shared by more than two triangles")
        owner = np.repeat(np.arange(len(tris)), 3)
        adjacency = -np.ones(3 * len(tris), dtype=np.int64)
        order = np.argsort(inverse, kind="stable")
        inv_sorted = inverse[order]
        starts = np.searchsorted(inv_sorted, np.arange(len(uniq)))
        shared = np.nonzero(counts == 2)[0]
        a = order[starts[shared]]
        b = order[starts[shared] + 1]
        adjacency[a] = owner[b]
        adjacency[b] = owner[a]
        adjacency = adjacency.reshape(-1, 3)

        # Boundary edges: every geometric boundary edge gets exactly one tag.
        geo_boundary = {tuple(e) for e in uniq[counts == 1].tolist()}
        tag_of = {}
        for k, (e, t) in enumerate(zip(bedges.tolist(), tags)):
            key = tuple(sorted(e))
            if t not in (DIRICHLET, NEUMANN):
                raise MeshInvariantError(f"boundary edge {k}: unknown tag {t!r}")
            if key not in geo_boundary:
                raise MeshInvariantError(f"boundary edge {k} {tuple(e)} does not belong to exactly one triangle")
            if key in tag_of:
                raise MeshInvariantError(f"boundary edge {k} {tuple(e)} listed twice")
            tag_of[key] = t
        for key in sorted(geo_boundary):
            tag_of.setdefault(key, NEUMANN)
        if DIRICHLET not in tag_of.values():
            raise MeshInvariantError("no Dirichlet boundary edge")

        # Map each tagged edge to (element, local edge).
        elem_edge = {}
        bmask = adjacency.reshape(-1) < 0
        for idx in np.nonzero(bmask)[0]:
            elem_edge[tuple(keys[idx])] = (idx // 3, idx % 3)
        blist = sorted(tag_of)
        self.boundary_edges = np.array(blist, dtype=np.int64).reshape(-1, 2)
        self.boundary_tags = np.array([tag_of[e] for e in blist])
        self.boundary_element = np.array([elem_edge[e][0] for e in blist], dtype=np.int64)
        self.boundary_local_edge = np.array([elem_edge[e][1] for e in blist], dtype=np.int64)

        self.nodes = nodes
        self.triangles = tris
        self.element_adjacency = adjacency
        self.areas = 0.5 * area2
        g = np.empty((len(tris), 3, 2))
        g[:, 0, 0] = x[:, 1, 1] - x[:, 2, 1]
        g[:, 0, 1] = x[:, 2, 0] - x[:, 1, 0]
        g[:, 1, 0] = x[:, 2, 1] - x[:, 0, 1]
        g[:, 1, 1] = x[:, 0, 0] - x[:, 2, 0]
        g[:, 2, 0] = x[:, 0, 1] - x[:, 1, 1]
        g[:, 2, 1] = x[:, 1, 0] - x[:, 0, 0]
        self.grads = g / area2[:, None, None]
        dirichlet = self.boundary_tags == DIRICHLET
        self.dirichlet_element_edges = np.zeros((len(tris), 3), dtype=bool)
        self.dirichlet_element_edges[self.boundary_element[dirichlet], self.boundary_local_edge[dirichlet]] = True
        for arr in (self.nodes, self.triangles, self.element_adjacency, self.areas, self.grads,
                    self.boundary_edges, self.boundary_tags, self.boundary_element,
                    self.boundary_local_edge, self.dirichlet_element_edges):
            arr.setflags(write=False)
        self._cache = {}

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @property
    def dirichlet_edges(self) -> np.ndarray:
        return self.boundary_edges[self.boundary_tags == DIRICHLET]

    def node_element_incidence(self):
        """Sparse (n_nodes, n_elements) 0/1 incidence matrix."""
        if "incidence" not in self._cache:
            from scipy import sparse

            rows = self.triangles.reshape(-1)
            cols = np.repeat(np.arange(self.n_elements), 3)
            self._cache["incidence"] = sparse.csr_matrix(
                (np.ones(len(rows)), (rows, cols)), shape=(self.n_nodes, self.n_elements)
            )
        return self._cache["incidence"]

    def interpolate(self, fn) -> np.ndarray:
        """Evaluate ``fn(x, y)`` at the nodes."""
        return np.asarray(fn(self.nodes[:, 0], self.nodes[:, 1]), dtype=float)

    def __repr__(self):
        n_d = int(np.sum(self.boundary_tags == DIRICHLET))
        return f"Mesh(n_nodes={self.n_nodes}, n_elements={self.n_elements}, dirichlet_edges={n_d})"


@dataclass(frozen=True)
class ScalarField:
    """Nodal P1 scalar field (damage ``z``)."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if len(v) != self.mesh.n_nodes:
            raise ValueError(f"expected {self.mesh.n_nodes} nodal values, got {len(v)}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite nodal value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class VectorField:
    """Nodal P1 vector field (displacement ``u`` or boundary datum ``b``)."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.n_nodes, 2):
            raise ValueError(f"expected shape ({self.mesh.n_nodes}, 2), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite nodal value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


_G_KINDS = ("linear", "quadratic")


@dataclass(frozen=True)
class Material:
    """Isotropic stiffness, damage parameters and degradation function.

    ``g_kind="linear"`` is ``g(z) = z``; ``g_kind="quadratic"`` is
    ``g(z) = eta*z + (1 - eta)*z**2``.  ``eta`` is the guaranteed lower
    bound on ``g'`` over ``[0, 1]``.
    """

    lam: float = 1.0
    mu: float = 1.0
    alpha: float = 0.0
    beta: float = 1.0
    p: float = 4.0
    g_kind: str = "linear"
    eta: float = 1.0
    _voigt: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.mu > 0 and self.lam + self.mu > 0):
            raise ValueError("stiffness not positive definite: need mu > 0 and lambda + mu > 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.p <= 2:
            raise ValueError("gradient exponent p must exceed 2")
        if self.g_kind not in _G_KINDS:
            raise ValueError(f"unknown degradation g_kind {self.g_kind!r}, expected one of {_G_KINDS}")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if self.g_kind == "quadratic" and self.eta > 1:
            raise ValueError("quadratic degradation needs eta <= 1")
        if self.g(0.0) != 0.0:
            raise ValueError("degradation must satisfy g(0) = 0")
        s = np.linspace(0.0, 1.0, 1001)
        if np.min(self.dg(s)) < self.eta:
            raise ValueError(f"g' drops below eta = {self.eta} on [0, 1]")
        lam, mu = self.lam, self.mu
        d = np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])
        d.setflags(write=False)
        object.__setattr__(self, "_voigt", d)

    def g(self, z):
        z = np.asarray(z, dtype=float)
        if self.g_kind == "linear":
            return z * 1.0
        return self.eta * z + (1.0 - self.eta) * z * z

    def dg(self, z):
        z = np.asarray(z, dtype=float)
        if self.g_kind == "linear":
            return np.ones_like(z)
        return self.eta + 2.0 * (1.0 - self.eta) * z

    @property
    def voigt(self) -> np.ndarray:
        """3x3 stiffness acting on ``(e11, e22, 2 e12)``."""
        return self._voigt

    def contract(self, e1, e2):
        """``C e1 : e2`` for (..., 2, 2) strain arrays."""
        e1 = np.asarray(e1, dtype=float)
        e2 = np.asarray(e2, dtype=float)
        tr1 = e1[..., 0, 0] + e1[..., 1, 1]
        tr2 = e2[..., 0, 0] + e2[..., 1, 1]
        return self.lam * tr1 * tr2 + 2.0 * self.mu * np.einsum("...ij,...ij->...", e1, e2)


def load_mesh(path) -> Mesh:
    """Read the line-oriented mesh text format.

    Sections ``nodes <N>``, ``triangles <M>`` and ``boundary <B>`` are
    followed by that many data lines; ``#`` starts a comment.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    sections = {}
    i = 0

    def data_lines():
        nonlocal i
        while i < len(lines):
            raw = lines[i].split("#", 1)[0].strip()
            i += 1
            if raw:
                yield i, raw.split()

    it = data_lines()
    expected = {"nodes": (2, float), "triangles": (3, int), "boundary": (3, None)}
    for lineno, tok in it:
        head = tok[0]
        if head not in expected or len(tok) != 2:
            raise MeshFormatError(f"{path}:{lineno}: expected section header, got {' '.join(tok)!r}")
        if head in sections:
            raise MeshFormatError(f"{path}:{lineno}: duplicate section {head!r}")
        try:
            count = int(tok[1])
        except ValueError:
            raise MeshFormatError(f"{path}:{lineno}: bad count {tok[1]!r}") from None
        if count < 0:
            raise MeshFormatError(f"{path}:{lineno}: negative count")
        width, conv = expected[head]
        rows = []
        for _ in range(count):
            try:
                ln, row = next(it)
            except StopIteration:
                raise MeshFormatError(f"{path}: section {head!r} ended early ({len(rows)} of {count} lines)") from None
            if len(row) != width:
                raise MeshFormatError(f"{path}:{ln}: expected {width} fields in {head!r} line, got {len(row)}")
            try:
                if head == "boundary":
                    rows.append((int(row[0]), int(row[1]), row[2]))
                else:
                    rows.append(tuple(conv(v) for v in row))
            except ValueError:
                raise MeshFormatError(f"{path}:{ln}: malformed {head!r} line {' '.join(row)!r}") from None
            if head == "boundary" and row[2] not in (DIRICHLET, NEUMANN):
                raise MeshFormatError(f"{path}:{ln}: boundary tag must be D or N, got {row[2]!r}")
        sections[head] = (lineno, rows)
    for head in ("nodes", "triangles", "boundary"):
        if head not in sections:
            raise MeshFormatError(f"{path}: missing section {head!r}")
    nodes = np.array(sections["nodes"][1], dtype=float).reshape(-1, 2)
    n = len(nodes)
    tris = np.array(sections["triangles"][1], dtype=np.int64).reshape(-1, 3)
    for k, t in enumerate(tris):
        if min(t) < 0 or max(t) >= n:
            raise MeshFormatError(f"{path}: triangle {k}: bad node index in {tuple(int(v) for v in t)}")
    brows = sections["boundary"][1]
    for k, (a, b, _) in enumerate(brows):
        if not (0 <= a < n and 0 <= b < n):
            raise MeshFormatError(f"{path}: boundary edge {k}: bad node index in {(a, b)}")
    bedges = np.array([(a, b) for a, b, _ in brows], dtype=np.int64).reshape(-1, 2)
    return Mesh(nodes, tris, bedges, [t for _, _, t in brows])


def write_mesh(mesh: Mesh, path) -> None:
    out = [f"nodes {mesh.n_nodes}"]
    out += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    out.append(f"triangles {mesh.n_elements}")
    out += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    out.append(f"boundary {len(mesh.boundary_edges)}")
    out += [f"{i} {j} {t}" for (i, j), t in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags)]
    Path(path).write_text("\n".join(out) + "\n")


def rectangle_mesh(nx, ny, lx=1.0, ly=1.0, dirichlet=("left",), diagonal="right") -> Mesh:
    """Structured ``nx`` by ``ny`` grid of ``[0, lx] x [0, ly]``, two triangles per cell.

    ``dirichlet`` names the sides (``left``, ``right``, ``bottom``, ``top``)
    tagged Dirichlet, or is a callable ``(xm, ym) -> bool`` evaluated at
    boundary edge midpoints.
    """
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)
            if diagonal == "right" or (diagonal == "alternate" and (i + j) % 2 == 0):
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
    edges, tags = [], []
    sides = {
        "bottom": [(nid(i, 0), nid(i + 1, 0)) for i in range(nx)],
        "right": [(nid(nx, j), nid(nx, j + 1)) for j in range(ny)],
        "top": [(nid(i + 1, ny), nid(i, ny)) for i in range(nx)],
        "left": [(nid(0, j + 1), nid(0, j)) for j in range(ny)],
    }
    for side, es in sides.items():
        for e in es:
            if callable(dirichlet):
                xm, ym = nodes[list(e)].mean(axis=0)
                is_d = bool(dirichlet(xm, ym))
            else:
                is_d = side in dirichlet
            edges.append(e)
            tags.append(DIRICHLET if is_d else NEUMANN)
    return Mesh(nodes, tris, edges, tags)


def element_average(mesh: Mesh, z) -> np.ndarray:
    """Nodal average of ``z`` on every element."""
    return np.asarray(z, dtype=float)[mesh.triangles].mean(axis=1)


def element_gradients(mesh: Mesh, z) -> np.ndarray:
    """Element-constant gradient of a P1 scalar field, shape (n_elements, 2)."""
    z = np.asarray(z, dtype=float)
    return np.einsum("ki,kid->kd", z[mesh.triangles], mesh.grads)


def element_strains(mesh: Mesh, u) -> np.ndarray:
    """Symmetric gradient of a P1 displacement on every element, shape (n_elements, 2, 2)."""
    u = np.asarray(u, dtype=float)
    grad = np.einsum("kia,kib->kab", u[mesh.triangles], mesh.grads)
    return 0.5 * (grad + np.swapaxes(grad, 1, 2))


def element_strain(mesh: Mesh, u, tri: int) -> np.ndarray:
    """Strain ``(grad u + grad u^T)/2`` on one element."""
    if not 0 <= tri < mesh.n_elements:
        raise IndexError(f"triangle index {tri} out of range")
    u = np.asarray(u, dtype=float)
    grad = u[mesh.triangles[tri]].T @ mesh.grads[tri]
    return 0.5 * (grad + grad.T)


def elastic_density(e, z, epsilon: float, mat: Material):
    """Regularized elastic energy density ``(g(z) + epsilon) C e : e / 2``."""
    z = np.asarray(z, dtype=float)
    if np.any((z < 0) | (z > 1)):
        raise ValueError("damage value outside [0, 1]")
    return 0.5 * (mat.g(z) + epsilon) * mat.contract(e, e)
