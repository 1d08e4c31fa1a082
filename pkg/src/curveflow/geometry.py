"""Interface extraction from P1 vector fields and geometric diagnostics.

Inside every element whose nodal labels differ, the P1 interpolant of the
phase scores ``p_i . u`` is compared exactly: each phase owns the convex
polygon where its score is largest.  Interface segments are the polygon
edges shared by two phases, junctions are polygon vertices where three
phases meet inside an element.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .field import VectorField
from .kernels import partition_elements
from .mesh import TriMesh

__all__ = [
    "DegenerateFitError",
    "InterfaceGeometry",
    "partition",
    "extract_interfaces",
    "phase_areas",
    "fit_circle",
    "junction_angles",
    "segment_components",
    "phase_components",
    "interface_length",
]


class DegenerateFitError(ValueError):
    """Raised when a fit has too few or collinear points."""


_SEG_EPS = 1e-14


@dataclass
class InterfaceGeometry:
    """Exact phase partition of a P1 vector field.

    Attributes
    ----------
    mesh : TriMesh
    k : int
    labels : ndarray (N,)
        Nodal argmax labels.
    elements : ndarray (E,)
        Indices of interface elements (mixed nodal labels).
    scores : ndarray (E, 3, k)
        Nodal phase scores on those elements.
    counts, bary, tags, poly_areas, loads
        Polygon data per (element, phase); see ``partition_elements``.
    areas : ndarray (k,)
        Total area of each phase.
    seg_pairs : ndarray (S, 2)
        Phase pair ``(i, j)``, ``i < j``, of each interface segment.
    seg_points : ndarray (S, 2, 2)
        Segment endpoints; phase ``i`` lies to the left of the direction
        from the first to the second point.
    seg_bary : ndarray (S, 2, 3)
    seg_elements : ndarray (S,)
        Row into ``elements`` holding each segment.
    junctions : ndarray (J, 2)
    junction_elements : ndarray (J,)
        Row into ``elements`` holding each junction.
    """

    mesh: TriMesh
    k: int
    labels: np.ndarray
    elements: np.ndarray
    scores: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    bary: np.ndarray = field(repr=False)
    tags: np.ndarray = field(repr=False)
    poly_areas: np.ndarray = field(repr=False)
    loads: np.ndarray = field(repr=False)
    areas: np.ndarray = None
    seg_pairs: np.ndarray = None
    seg_points: np.ndarray = None
    seg_bary: np.ndarray = None
    seg_elements: np.ndarray = None
    junctions: np.ndarray = None
    junction_elements: np.ndarray = None

    @property
    def n_segments(self) -> int:
        return 0 if self.seg_pairs is None else len(self.seg_pairs)

    def polygons(self, row: int):
        """``[(phase, (n, 2) vertex array), ...]`` for interface element ``row``."""
        xy = self.mesh.nodes[self.mesh.elements[self.elements[row]]]
        out = []
        for i in range(self.k):
            n = self.counts[row, i]
            if n:
                out.append((i, self.bary[row, i, :n] @ xy))
        return out

    def crossing_points(self) -> np.ndarray:
        """All segment endpoints, shape (2S, 2)."""
        if not self.n_segments:
            return np.zeros((0, 2))
        return self.seg_points.reshape(-1, 2)


def partition(mesh: TriMesh, scores: np.ndarray, segments: bool = True) -> InterfaceGeometry:
    """Partition the mesh by nodal phase scores of shape (N, k)."""
    scores = np.asarray(scores, dtype=float)
    n, k = scores.shape
    labels = np.argmax(scores, axis=1)
    el = labels[mesh.elements]
    mixed = (el[:, 0] != el[:, 1]) | (el[:, 0] != el[:, 2])
    rows = np.flatnonzero(mixed)
    areas = np.bincount(el[~mixed, 0], weights=mesh.areas[~mixed], minlength=k)
    esc = scores[mesh.elements[rows]]
    exy = mesh.nodes[mesh.elements[rows]]
    counts, bary, tags, pareas, loads = partition_elements(exy, esc)
    areas = areas + pareas.sum(axis=0)
    g = InterfaceGeometry(mesh, k, labels, rows, esc, counts, bary, tags, pareas, loads, areas)
    if segments:
        _segments(g)
    return g


def _segments(g: InterfaceGeometry) -> None:
    E, k, V = g.tags.shape
    t = np.arange(V)
    valid = t[None, None, :] < g.counts[:, :, None]
    phase = np.arange(k)[None, :, None]
    mask = valid & (g.tags > phase)
    e_idx, i_idx, t_idx = np.nonzero(mask)
    n = g.counts[e_idx, i_idx]
    s_idx = np.where(t_idx + 1 < n, t_idx + 1, 0)
    b0 = g.bary[e_idx, i_idx, t_idx]
    b1 = g.bary[e_idx, i_idx, s_idx]
    xy = g.mesh.nodes[g.mesh.elements[g.elements[e_idx]]]
    p0 = np.einsum("sa,sax->sx", b0, xy)
    p1 = np.einsum("sa,sax->sx", b1, xy)
    keep = np.hypot(*(p1 - p0).T) > _SEG_EPS
    g.seg_pairs = np.column_stack([i_idx, g.tags[e_idx, i_idx, t_idx]])[keep]
    g.seg_points = np.stack([p0, p1], axis=1)[keep]
    g.seg_bary = np.stack([b0, b1], axis=1)[keep]
    g.seg_elements = e_idx[keep]
    # interior polygon vertices are triple points
    inner = valid & np.all(g.bary > 1e-12, axis=-1)
    je, ji, jt = np.nonzero(inner)
    if je.size:
        jxy = np.einsum("sa,sax->sx", g.bary[je, ji, jt], g.mesh.nodes[g.mesh.elements[g.elements[je]]])
        key = np.column_stack([je, np.round(jxy / 1e-10)])
        _, first = np.unique(key, axis=0, return_index=True)
        first.sort()
        g.junctions = jxy[first]
        g.junction_elements = je[first]
    else:
        g.junctions = np.zeros((0, 2))
        g.junction_elements = np.zeros(0, dtype=np.int64)


def extract_interfaces(u: VectorField) -> InterfaceGeometry:
    """Exact interface geometry of the P1 field ``u``."""
    v = np.asarray(u.values)
    if not np.all(np.isfinite(v)):
        raise ValueError("field values must be finite")
    return partition(u.mesh, u.scores())


def phase_areas(g: InterfaceGeometry) -> np.ndarray:
    """Per-phase areas of a partition."""
    return np.array(g.areas, dtype=float)


def interface_length(g: InterfaceGeometry) -> float:
    if not g.n_segments:
        return 0.0
    d = g.seg_points[:, 1] - g.seg_points[:, 0]
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def fit_circle(points) -> tuple:
    """Least-squares circle through ``points``.

    Minimizes ``sum(((x - cx)^2 + (y - cy)^2 - r^2)^2)``.  The algebraic
    solution is exact for this functional in ``(cx, cy, c = cx^2+cy^2-r^2)``;
    one Gauss-Newton step in ``(cx, cy, r)`` follows as a guard against
    round-off.

    Returns
    -------
    center : ndarray (2,)
    radius : float
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 3:
        raise DegenerateFitError(f"need at least 3 points, got {len(pts)}")
    shift = pts.mean(axis=0)
    q = pts - shift
    scale = np.sqrt((q ** 2).sum(axis=1).mean())
    if scale == 0.0:
        raise DegenerateFitError("coincident points")
    q = q / scale
    A = np.column_stack([2 * q, np.ones(len(q))])
    b = (q ** 2).sum(axis=1)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise DegenerateFitError("points are collinear")
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    c = sol[:2]
    r2 = sol[2] + c @ c
    if r2 <= 0:
        raise DegenerateFitError("no real circle fits the points")
    r = np.sqrt(r2)
    # Gauss-Newton on residual_i = |q_i - c|^2 - r^2
    d = q - c
    res = (d ** 2).sum(axis=1) - r * r
    J = np.column_stack([-2 * d, -2 * r * np.ones(len(q))])
    step, *_ = np.linalg.lstsq(J, -res, rcond=None)
    c2, r_new = c + step[:2], abs(r + step[2])
    d2 = q - c2
    if (((d2 ** 2).sum(axis=1) - r_new ** 2) ** 2).sum() < (res ** 2).sum():
        c, r = c2, r_new
    return c * scale + shift, float(r * scale)


def _branch_direction(pts, J, method):
    if method == "arc" and len(pts) >= 3:
        try:
            c, _ = fit_circle(pts)
        except DegenerateFitError:
            c = None
        if c is not None:
            rad = J - c
            n = np.hypot(*rad)
            if n > 0:
                d = np.array([-rad[1], rad[0]]) / n
                if (pts - J).mean(axis=0) @ d < 0:
                    d = -d
                return d
    _, _, vt = np.linalg.svd(pts - pts.mean(axis=0))
    d = vt[0]
    if (pts - J).mean(axis=0) @ d < 0:
        d = -d
    return d


def junction_angles(g: InterfaceGeometry, junction, n_fit: int | None = None,
                    method: str = "arc") -> np.ndarray:
    """Angles (degrees) between the three interface branches at ``junction``.

    ``junction`` is a point or an index into ``g.junctions``.  Each branch
    is a phase pair meeting there.  With ``method="arc"`` (default) its
    direction is the tangent at the junction of the least-squares circle
    through the ``n_fit`` (default 16) branch points nearest to the
    junction, which removes the curvature bias of a straight fit; straight
    branches fall back to a line.  ``method="line"`` uses the principal
    axis of the nearest ``n_fit`` (default 6) points.  Directions point
    away from the junction; the angles are in counterclockwise order and
    sum to 360.
    """
    if method not in ("arc", "line"):
        raise ValueError(f"unknown method {method!r}")
    if n_fit is None:
        n_fit = 16 if method == "arc" else 6
    if np.ndim(junction) == 0:
        jrow = int(junction)
        J = g.junctions[jrow]
        e = g.junction_elements[jrow]
    else:
        J = np.asarray(junction, dtype=float)
        jrow = int(np.argmin(np.hypot(*(g.junctions - J).T)))
        e = g.junction_elements[jrow]
    phases = [i for i in range(g.k) if g.counts[e, i] > 0]
    if len(phases) != 3:
        raise DegenerateFitError(f"junction element holds {len(phases)} phases, need 3")
    pairs = [(phases[0], phases[1]), (phases[0], phases[2]), (phases[1], phases[2])]
    dirs = []
    for i, j in pairs:
        sel = (g.seg_pairs[:, 0] == i) & (g.seg_pairs[:, 1] == j)
        pts = g.seg_points[sel].reshape(-1, 2)
        if len(pts):
            pts = np.unique(np.round(pts, 12), axis=0)
            dist = np.hypot(*(pts - J).T)
            pts = pts[dist > 1e-12]
        if len(pts) < 2:
            raise DegenerateFitError(f"branch {(i, j)} has fewer than 2 points")
        near = pts[np.argsort(np.hypot(*(pts - J).T), kind="stable")[:n_fit]]
        d = _branch_direction(near, J, method)
        dirs.append(np.arctan2(d[1], d[0]))
    ang = np.sort(np.mod(np.degrees(dirs), 360.0))
    return np.diff(np.append(ang, ang[0] + 360.0))


def segment_components(points: np.ndarray, tol: float = 1e-9) -> tuple:
    """Group segments (S, 2, 2) into connected chains.

    Returns ``(n_components, label per segment)``.
    """
    pts = np.asarray(points).reshape(-1, 2)
    if not len(pts):
        return 0, np.zeros(0, dtype=np.int64)
    _, inv = np.unique(np.round(pts / tol), axis=0, return_inverse=True)
    inv = inv.ravel()
    a, b = inv[0::2], inv[1::2]
    m = inv.max() + 1
    graph = coo_matrix((np.ones(len(a)), (a, b)), shape=(m, m))
    n, lab = connected_components(graph, directed=False)
    seg_lab = lab[a]
    _, seg_lab = np.unique(seg_lab, return_inverse=True)
    return int(seg_lab.max() + 1), seg_lab


def phase_components(mesh: TriMesh, labels: np.ndarray, phase: int) -> int:
    """Number of edge-connected node clusters carrying ``phase``."""
    labels = np.asarray(labels)
    edges = mesh.edges()
    on = labels == phase
    keep = on[edges[:, 0]] & on[edges[:, 1]]
    e = edges[keep]
    n = mesh.n_nodes
    graph = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    _, lab = connected_components(graph, directed=False)
    return int(np.unique(lab[on]).size)
