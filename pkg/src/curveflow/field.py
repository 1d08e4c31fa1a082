"""Nodal vector fields, phase labels and thresholding.

Phase indices are 0-based throughout the library.  Files written by the
command-line tools use 1-based phase numbers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .mesh import TriMesh
from .simplex import ReferenceFrame, pair_direction

__all__ = [
    "VectorField",
    "Shape",
    "assign_initial_phases",
    "labels_to_field",
    "threshold",
    "scalar_equivalents",
    "project_pair",
    "smooth_initial_field",
]


@dataclass(frozen=True)
class VectorField:
    """Nodal values of ``u: Omega -> R^(k-1)``."""

    frame: ReferenceFrame
    values: np.ndarray
    mesh: TriMesh

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape != (self.mesh.n_nodes, self.frame.dim):
            raise ValueError(f"field shape {v.shape} does not match "
                             f"({self.mesh.n_nodes}, {self.frame.dim})")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    def scores(self) -> np.ndarray:
        """``p_i . u`` at every node, shape (N, k)."""
        return self.frame.scores(self.values)


@dataclass(frozen=True)
class Shape:
    """A region predicate tagged with the phase it seeds.

    ``kind`` is one of ``disk (cx, cy, r)``, ``ellipse (cx, cy, a, b[, angle])``,
    ``rect (x0, y0, x1, y1)`` or ``halfplane (nx, ny, c)`` (points with
    ``nx*x + ny*y <= c``).
    """

    kind: str
    params: tuple
    phase: int

    def level(self, xy: np.ndarray) -> np.ndarray:
        """Signed level function, positive inside; exact distance for disks."""
        x, y = np.asarray(xy, dtype=float).T
        p = self.params
        if self.kind == "disk":
            cx, cy, r = p
            return r - np.hypot(x - cx, y - cy)
        if self.kind == "ellipse":
            cx, cy, a, b = p[:4]
            ang = p[4] if len(p) > 4 else 0.0
            c, s = np.cos(ang), np.sin(ang)
            dx, dy = x - cx, y - cy
            xr, yr = c * dx + s * dy, -s * dx + c * dy
            rho = np.hypot(xr / a, yr / b)
            return (1.0 - rho) * min(a, b)
        if self.kind == "rect":
            x0, y0, x1, y1 = p
            return np.minimum.reduce([x - x0, x1 - x, y - y0, y1 - y])
        if self.kind == "halfplane":
            nx_, ny_, c0 = p
            nrm = np.hypot(nx_, ny_)
            return (c0 - nx_ * x - ny_ * y) / nrm
        raise ValueError(f"unknown shape kind {self.kind!r}")

    def contains(self, xy: np.ndarray) -> np.ndarray:
        return self.level(xy) >= 0.0


def assign_initial_phases(mesh: TriMesh, shapes: Sequence, background: int) -> np.ndarray:
    """Label nodes by the first shape containing them, else ``background``.

    ``shapes`` may hold :class:`Shape` objects or ``(predicate, phase)``
    pairs where ``predicate`` maps an (N, 2) array to booleans.
    """
    if shapes is None:
        raise ValueError("shape list must not be None")
    labels = np.full(mesh.n_nodes, int(background), dtype=np.int64)
    free = np.ones(mesh.n_nodes, dtype=bool)
    for item in shapes:
        if isinstance(item, Shape):
            pred, phase = item.contains, item.phase
        else:
            pred, phase = item
        hit = free & np.asarray(pred(mesh.nodes), dtype=bool)
        labels[hit] = phase
        free &= ~hit
    return labels


def labels_to_field(labels: np.ndarray, frame: ReferenceFrame, mesh: TriMesh) -> VectorField:
    """Field equal to ``p_label`` at every node."""
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= frame.k:
        raise ValueError("labels out of range")
    return VectorField(frame, frame.vectors[labels], mesh)


def threshold(u, tol: float = 0.0) -> np.ndarray:
    """Per-node argmax of ``p_i . u``; ties go to the smallest phase index.

    ``u`` is a :class:`VectorField` or an (N, k) score array.  With
    ``tol > 0`` any phase within ``tol`` of the maximum counts as tied.
    """
    s = u.scores() if isinstance(u, VectorField) else np.asarray(u, dtype=float)
    if tol == 0.0:
        return np.argmax(s, axis=1)
    return np.argmax(s >= s.max(axis=1, keepdims=True) - tol, axis=1)


def scalar_equivalents(u: VectorField, i: int) -> np.ndarray:
    """``w_i = (k-1)/k (u . p_i + 1/(k-1))``, the scalar indicator flow of phase ``i``."""
    k = u.frame.k
    return (k - 1.0) / k * (u.values @ u.frame.vectors[i] + 1.0 / (k - 1.0))


def project_pair(u: VectorField, i: int, j: int) -> np.ndarray:
    """Nodal ``u . p_ij``; its zero set carries the ``i``/``j`` interface."""
    return u.values @ pair_direction(u.frame, i, j)


def smooth_initial_field(mesh: TriMesh, frame: ReferenceFrame, shapes: Sequence[Shape],
                         background: int, width: float | None = None) -> VectorField:
    """P1 field whose phase partition follows the shape outlines sub-grid.

    Each phase gets a score equal to the largest level value among its
    shapes; the background scores minus the largest level of all shapes.
    The field is ``sum_i s_i p_i`` with scores clipped to ``[-1, 1]`` after
    scaling by ``width`` (default: two grid cells), so ``argmax p_i . u``
    coincides with ``argmax s_i``.
    """
    if width is None:
        width = 2.0 * mesh.spacing
    xy = mesh.nodes
    scores = np.full((mesh.n_nodes, frame.k), -np.inf)
    lv_all = np.full(mesh.n_nodes, -np.inf)
    for s in shapes:
        lv = s.level(xy)
        scores[:, s.phase] = np.maximum(scores[:, s.phase], lv)
        lv_all = np.maximum(lv_all, lv)
    scores[:, background] = np.maximum(scores[:, background], -lv_all)
    scores = np.clip(scores / width, -1.0, 1.0)
    return VectorField(frame, scores @ frame.vectors, mesh)
