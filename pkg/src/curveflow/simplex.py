"""Regular-simplex reference vectors.

Phase ``i`` of a ``k``-phase system is represented by the unit vector
``p_i`` in ``R^(k-1)`` pointing from the centroid of a regular simplex to
one of its vertices.  The construction below shifts the vertices of the
standard simplex in ``R^k`` to the origin, projects them onto an explicit
orthonormal basis of the hyperplane ``sum(x) = 0`` and normalizes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ReferenceFrame", "reference_vectors", "pair_direction", "basis_rows"]


@dataclass(frozen=True)
class ReferenceFrame:
    """The ``k`` reference vectors of a phase system.

    Attributes
    ----------
    k : int
        Number of phases.
    vectors : ndarray, shape (k, k-1)
        Row ``i`` is the unit vector of phase ``i`` (0-based).
    shifted : ndarray, shape (k, k)
        Centroid-shifted standard simplex vertices (construction input).
    basis : ndarray, shape (k-1, k)
        Orthonormal rows spanning the hyperplane of the shifted simplex.
    """

    k: int
    vectors: np.ndarray
    shifted: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        for arr in (self.vectors, self.shifted, self.basis):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.k - 1

    def scores(self, values: np.ndarray) -> np.ndarray:
        """Return ``values @ vectors.T``, i.e. ``p_i . u`` for every phase."""
        return np.asarray(values, dtype=float) @ self.vectors.T


def basis_rows(k: int) -> np.ndarray:
    """Orthonormal rows ``q_1 .. q_{k-1}`` of the simplex hyperplane.

    Row ``j`` (1-based) has ``j - 1`` leading zeros, then ``k - j``, then
    ``-1`` repeated, scaled by ``1/sqrt((k-j)(k-j+1))``.
    """
    q = np.zeros((k - 1, k))
    for j in range(1, k):
        m = k - j
        q[j - 1, j - 1] = m
        q[j - 1, j:] = -1.0
        q[j - 1] /= np.sqrt(m * (m + 1.0))
    return q


def reference_vectors(k: int) -> ReferenceFrame:
    """Build the reference frame for ``k`` phases.

    Raises
    ------
    ValueError
        If ``k < 2``.
    """
    if int(k) != k or k < 2:
        raise ValueError(f"phase count must be an integer >= 2, got {k!r}")
    k = int(k)
    shifted = (k * np.eye(k) - np.ones((k, k))) / k
    q = basis_rows(k)
    proj = shifted @ q.T
    vectors = proj / np.linalg.norm(proj, axis=1, keepdims=True)
    return ReferenceFrame(k=k, vectors=vectors, shifted=shifted, basis=q)


def pair_direction(frame: ReferenceFrame, i: int, j: int) -> np.ndarray:
    """Unit vector ``(p_i - p_j)/|p_i - p_j|`` for phases ``i < j`` (0-based)."""
    if not (0 <= i < j < frame.k):
        raise ValueError(f"need 0 <= i < j < {frame.k}, got ({i}, {j})")
    d = frame.vectors[i] - frame.vectors[j]
    return d / np.linalg.norm(d)
