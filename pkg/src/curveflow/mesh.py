"""Structured triangulations of a rectangle and P1 finite-element data."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

__all__ = [
    "MeshIntegrityError",
    "TriMesh",
    "build_structured_mesh",
    "p1_element_quantities",
    "mass_matrix",
    "stiffness_matrix",
    "dump_mesh",
]


class MeshIntegrityError(ValueError):
    """Raised for degenerate or inconsistent elements."""


def _element_data(nodes, elements):
    p = nodes[elements]  # (E, 3, 2)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    area = 0.5 * det
    # grad phi_a = rot90(opposite edge) / (2 area), opposite edge taken CCW
    opp = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        grads = np.stack([-opp[..., 1], opp[..., 0]], axis=-1) / det[:, None, None]
    return area, grads


@dataclass(frozen=True)
class TriMesh:
    """Triangulated planar domain with precomputed P1 element data.

    Attributes
    ----------
    nodes : ndarray, shape (N, 2)
    elements : ndarray, shape (E, 3)
        Counterclockwise node-index triples.
    boundary_nodes : ndarray
        Sorted indices of nodes on the domain boundary.
    domain : tuple
        ``(xmin, xmax, ymin, ymax)``.
    areas : ndarray, shape (E,)
    grads : ndarray, shape (E, 3, 2)
        Constant gradients of the three local basis functions.
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary_nodes: np.ndarray
    domain: tuple
    areas: np.ndarray = field(repr=False)
    grads: np.ndarray = field(repr=False)
    shape: tuple = (0, 0)

    @classmethod
    def from_arrays(cls, nodes, elements, boundary_nodes, domain, shape=(0, 0)):
        nodes = np.ascontiguousarray(nodes, dtype=float)
        elements = np.ascontiguousarray(elements, dtype=np.int64)
        areas, grads = _element_data(nodes, elements)
        bad = np.flatnonzero(~(areas > 0))
        if bad.size:
            raise MeshIntegrityError(f"{bad.size} degenerate element(s), first {bad[0]}")
        for arr in (nodes, elements, areas, grads):
            arr.setflags(write=False)
        return cls(nodes, elements, np.asarray(boundary_nodes, dtype=np.int64),
                   tuple(float(v) for v in domain), areas, grads, tuple(shape))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def domain_area(self) -> float:
        x0, x1, y0, y1 = self.domain
        return (x1 - x0) * (y1 - y0)

    @property
    def spacing(self) -> float:
        """Largest grid-cell side (structured meshes)."""
        x0, x1, y0, y1 = self.domain
        nx, ny = self.shape
        return max((x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1))

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted node pairs."""
        e = self.elements
        pairs = np.concatenate([e[:, [0, 1]], e[:, [1, 2]], e[:, [2, 0]]])
        pairs.sort(axis=1)
        return np.unique(pairs, axis=0)

    def element_gradient(self, values: np.ndarray) -> np.ndarray:
        """Per-element gradient of the P1 interpolant of nodal ``values``.

        ``values`` has shape (N,) or (N, m); the result has shape (E, 2) or
        (E, m, 2).
        """
        v = np.asarray(values, dtype=float)[self.elements]  # (E,3) or (E,3,m)
        if v.ndim == 2:
            return np.einsum("ea,eax->ex", v, self.grads)
        return np.einsum("eam,eax->emx", v, self.grads)


def build_structured_mesh(nx: int, ny: int, domain=(0.0, 1.0, 0.0, 1.0)) -> TriMesh:
    """Triangulate a rectangle on an ``nx`` by ``ny`` node grid.

    Each grid cell is split along its lower-left to upper-right diagonal,
    giving ``2 (nx-1)(ny-1)`` elements.
    """
    if int(nx) != nx or int(ny) != ny or nx < 2 or ny < 2:
        raise ValueError(f"need nx, ny >= 2, got ({nx}, {ny})")
    nx, ny = int(nx), int(ny)
    x0, x1, y0, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"empty domain {domain!r}")
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys)  # row j = y index
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange(nx * ny).reshape(ny, nx)
    n00 = idx[:-1, :-1].ravel()
    n10 = idx[:-1, 1:].ravel()
    n01 = idx[1:, :-1].ravel()
    n11 = idx[1:, 1:].ravel()
    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    elements = np.empty((2 * len(n00), 3), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper
    border = np.zeros((ny, nx), dtype=bool)
    border[[0, -1], :] = True
    border[:, [0, -1]] = True
    return TriMesh.from_arrays(nodes, elements, np.flatnonzero(border.ravel()),
                               (x0, x1, y0, y1), shape=(nx, ny))


def p1_element_quantities(mesh: TriMesh, element: int):
    """Return ``(area, grads)`` of one element, grads of shape (3, 2)."""
    if not 0 <= element < mesh.n_elements:
        raise IndexError(f"element {element} out of range")
    p = mesh.nodes[mesh.elements[element]]
    area, grads = _element_data(p, np.array([[0, 1, 2]]))
    if not area[0] > 0:
        raise MeshIntegrityError(f"element {element} has area {area[0]}")
    return float(area[0]), grads[0]


_LOCAL_MASS = (np.ones((3, 3)) + np.eye(3)) / 12.0


def _assemble(mesh, local):
    rows = np.repeat(mesh.elements, 3, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, 3)).ravel()
    n = mesh.n_nodes
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def mass_matrix(mesh: TriMesh) -> sp.csr_matrix:
    """Consistent P1 mass matrix."""
    return _assemble(mesh, mesh.areas[:, None, None] * _LOCAL_MASS)


def stiffness_matrix(mesh: TriMesh) -> sp.csr_matrix:
    """P1 stiffness matrix with natural (homogeneous Neumann) boundary."""
    local = np.einsum("eax,ebx->eab", mesh.grads, mesh.grads) * mesh.areas[:, None, None]
    return _assemble(mesh, local)


def element_mass(areas: np.ndarray) -> np.ndarray:
    """Local consistent mass matrices, shape (E, 3, 3)."""
    return np.asarray(areas)[:, None, None] * _LOCAL_MASS


def dump_mesh(mesh: TriMesh, path) -> None:
    """Write a plain-text listing: one ``node`` or ``element`` per line."""
    lines = [f"# nodes {mesh.n_nodes} elements {mesh.n_elements}"]
    lines += [f"node {i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(mesh.nodes)]
    lines += [f"element {i} {a} {b} {c}" for i, (a, b, c) in enumerate(mesh.elements)]
    Path(path).write_text("\n".join(lines) + "\n")
