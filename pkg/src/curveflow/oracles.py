"""Analytic and ODE reference solutions for curvature-driven interface motion."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "DegenerateConfigurationError",
    "NumericalFailure",
    "EXTINCT",
    "circle_radius_exact",
    "two_circle_ode",
    "double_bubble_equilibrium",
    "double_bubble_areas",
    "MultiphaseStats",
    "lagrange_multipliers",
    "multiphase_velocities",
    "three_phase_velocities",
    "two_phase_velocity",
    "radius_error",
]

EXTINCT = 0.0


class DegenerateConfigurationError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


def circle_radius_exact(r0, t):
    """Radius ``sqrt(r0^2 - 2t)`` of a circle under curve-shortening flow.

    Returns ``EXTINCT`` (0.0) at and past the extinction time ``r0^2/2``.
    Works elementwise on arrays.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    r = np.sqrt(np.clip(r0 * r0 - 2.0 * t, 0.0, None))
    return float(r) if r.ndim == 0 else r


def _two_circle_rhs(r):
    s = 2.0 / (r[0] + r[1])
    return np.array([-1.0 / r[0] + s, -1.0 / r[1] + s])


def two_circle_ode(ra: float, rb: float, T: float, dt: float):
    """Area-preserving flow of two disjoint circles, integrated by RK4.

    ``r_i' = -1/r_i + 2/(r_a + r_b)``.  Near the extinction of the
    smaller circle the step is capped at ``rb^2/10``; once it vanishes
    the survivor keeps the total area.

    Returns
    -------
    t, ra_t, rb_t : ndarray
        Output times ``0, dt, ..., T`` and radii at those times.
    t_ext : float
        Extinction time of the smaller circle, ``inf`` if it survives.
    """
    if not (ra >= rb > 0):
        raise ValueError("need ra >= rb > 0")
    n = int(round(T / dt))
    times = np.arange(n + 1) * dt
    out = np.zeros((n + 1, 2))
    r = np.array([ra, rb], dtype=float)
    area = ra * ra + rb * rb
    out[0] = r
    t = 0.0
    t_ext = math.inf
    for m in range(1, n + 1):
        target = times[m]
        while t < target - 1e-15 and math.isinf(t_ext):
            step = min(target - t, max(r[1] ** 2 / 10.0, 1e-14))
            k1 = _two_circle_rhs(r)
            trial = r + 0.5 * step * k1
            if trial[1] <= 0 or r[1] < 1e-7:
                # the remaining life is about r_b^2/2 since r_b r_b' ~ -1
                t_ext = t + r[1] ** 2 / 2.0
                break
            k2 = _two_circle_rhs(trial)
            trial = r + 0.5 * step * k2
            if trial[1] <= 0:
                t_ext = t + r[1] ** 2 / 2.0
                break
            k3 = _two_circle_rhs(trial)
            trial = r + step * k3
            if trial[1] <= 0:
                t_ext = t + r[1] ** 2 / 2.0
                break
            k4 = _two_circle_rhs(trial)
            r = r + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += step
        if not math.isinf(t_ext) and target >= t_ext:
            r = np.array([math.sqrt(area), 0.0])
        out[m] = r
    return times, out[:, 0], out[:, 1], t_ext


def _segment(r, phi):
    """Area of a circular segment of radius ``r`` cut by a chord subtending ``2 phi``."""
    return 0.5 * r * r * (2.0 * phi - math.sin(2.0 * phi))


def _unit_areas(phi12):
    """Half-bubble areas for unit chord half-length and interior arc angle ``phi12``."""
    p1 = 2.0 * math.pi / 3.0 - phi12
    p2 = 2.0 * math.pi / 3.0 + phi12
    r1, r2 = 1.0 / math.sin(p1), 1.0 / math.sin(p2)
    s12 = 0.0 if phi12 == 0 else _segment(1.0 / math.sin(phi12), phi12)
    return 0.5 * (_segment(r1, p1) + s12), 0.5 * (_segment(r2, p2) - s12)


def double_bubble_areas(r1: float, r2: float, r12: float | None = None):
    """Areas of the two wall-attached half-bubbles with outer arc radii ``r1, r2``.

    The wall is a symmetry line of a free double bubble whose arcs meet at
    120 degrees, so the middle radius follows from ``r1`` and ``r2``; a
    supplied ``r12`` is only checked against ``1/r1 - 1/r2``.
    """
    rho = r2 / r1
    phi12 = math.atan(math.sqrt(3.0) * (rho - 1.0) / (1.0 + rho))
    d = r1 * math.sin(2.0 * math.pi / 3.0 - phi12)
    if r12 is not None and not math.isinf(r12):
        if abs(1.0 / r1 - 1.0 / r2 - 1.0 / r12) > 1e-9 * (1.0 / r1 + 1.0 / r2):
            raise ValueError("radii violate 1/r1 - 1/r2 = 1/r12")
    a1, a2 = _unit_areas(phi12)
    return a1 * d * d, a2 * d * d


def double_bubble_equilibrium(A1: float, A2: float):
    """Arc radii of the wall-attached double bubble with areas ``A1, A2``.

    Arcs meet the wall at 90 degrees and each other at 120 degrees.
    Returns ``(r1, r2, r12)`` with ``1/r1 - 1/r2 = 1/r12``; equal areas
    give ``r12 = inf``.
    """
    if not (A1 > 0 and A2 > 0):
        raise ValueError("areas must be positive")
    if A1 < A2:
        r2, r1, r12 = double_bubble_equilibrium(A2, A1)
        return r1, r2, -r12
    target = A1 / A2

    def f(p):
        a1, a2 = _unit_areas(p)
        return a1 / a2 - target

    if A1 == A2:
        phi12 = 0.0
    else:
        lo, hi = -math.pi / 3.0 + 1e-12, 0.0
        if f(lo) * f(hi) > 0:
            lo, hi = 0.0, math.pi / 3.0 - 1e-12
        try:
            phi12 = brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
        except ValueError as exc:
            raise NumericalFailure("double-bubble area equation has no root") from exc
    a1, a2 = _unit_areas(phi12)
    d = math.sqrt(A1 / a1)
    r1 = d / math.sin(2.0 * math.pi / 3.0 - phi12)
    r2 = d / math.sin(2.0 * math.pi / 3.0 + phi12)
    if phi12 == 0.0:
        return r1, r2, math.inf
    # enforce the radii condition exactly
    r12 = 1.0 / (1.0 / r1 - 1.0 / r2)
    return r1, r2, r12


@dataclass
class MultiphaseStats:
    """Interface lengths ``L[i, j]``, weighted average curvatures ``kappa[i, j]``
    (of the ``i``/``j`` interface, sign taken from the side of ``i``) and tensions.

    ``L`` is symmetric; ``kappa`` is antisymmetric in the sense that
    only ``i < j`` entries are read.
    """

    L: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray | None = None

    def __post_init__(self):
        self.L = np.asarray(self.L, dtype=float)
        self.kappa = np.asarray(self.kappa, dtype=float)
        k = self.L.shape[0]
        if self.L.shape != (k, k) or self.kappa.shape != (k, k):
            raise ValueError("L and kappa must be square and of equal size")
        if np.any(self.L < 0) or not np.allclose(self.L, self.L.T, rtol=0, atol=0):
            raise ValueError("L must be symmetric and non-negative")
        if self.tau is None:
            self.tau = np.ones((k, k))
        self.tau = np.asarray(self.tau, dtype=float)

    @property
    def k(self) -> int:
        return self.L.shape[0]

    @property
    def boundary_lengths(self) -> np.ndarray:
        L = self.L.copy()
        np.fill_diagonal(L, 0.0)
        return L.sum(axis=1)


def lagrange_multipliers(stats: MultiphaseStats, k: int | None = None) -> np.ndarray:
    """Solve ``L_i l_i - sum_{j != i} L_ij l_j = sum_{j>i} L_ij k_ij - sum_{j<i} L_ij k_ji``
    for ``l_1 .. l_{k-1}`` (``l_k = 0``)."""
    k = stats.k if k is None else k
    if k != stats.k:
        raise ValueError("phase count does not match the statistics")
    L = stats.L.copy()
    np.fill_diagonal(L, 0.0)
    Li = L.sum(axis=1)
    tk = stats.tau * stats.kappa
    rhs = np.array([sum(L[i, j] * tk[i, j] for j in range(i + 1, k))
                    - sum(L[i, j] * tk[j, i] for j in range(i)) for i in range(k)])
    A = np.diag(Li) - L
    A, rhs = A[: k - 1, : k - 1], rhs[: k - 1]
    if k == 1 or np.linalg.cond(A) > 1e14:
        raise DegenerateConfigurationError("multiplier system is singular")
    return np.linalg.solve(A, rhs)


def multiphase_velocities(stats: MultiphaseStats, kappa: float, i: int, j: int) -> float:
    """Normal velocity ``-tau_ij kappa + l_i - l_j`` of the ``i``/``j`` interface (0-based, i < j)."""
    if not 0 <= i < j < stats.k:
        raise ValueError("need 0 <= i < j < k")
    lam = np.append(lagrange_multipliers(stats), 0.0)
    return -stats.tau[i, j] * kappa + lam[i] - lam[j]


def two_phase_velocity(length: float, kappa_avg: float, kappa: float, tau: float = 1.0) -> float:
    """``-tau kappa + tau kappa_avg``: the constrained two-phase velocity."""
    if length <= 0:
        raise DegenerateConfigurationError("interface length must be positive")
    return -tau * kappa + tau * kappa_avg


def three_phase_velocities(stats: MultiphaseStats, kappa: float, interface: tuple) -> float:
    """Closed-form normal velocity for three phases.

    ``interface`` is a 0-based pair ``(i, j)`` with ``i < j``.
    """
    if stats.k != 3:
        raise ValueError("closed forms need exactly three phases")
    i, j = interface
    L, tk = stats.L, stats.tau * stats.kappa
    L12, L13, L23 = L[0, 1], L[0, 2], L[1, 2]
    alpha = L13 * L23 + L23 * L12 + L13 * L12
    if alpha == 0:
        raise DegenerateConfigurationError("alpha vanishes")
    L1, L2, L3 = L12 + L13, L12 + L23, L13 + L23
    if min(L1, L2, L3) <= 0:
        raise DegenerateConfigurationError("a phase has no boundary")
    k1 = (L12 * tk[0, 1] + L13 * tk[0, 2]) / L1
    k2 = (-L12 * tk[0, 1] + L23 * tk[1, 2]) / L2
    k3 = (-L13 * tk[0, 2] - L23 * tk[1, 2]) / L3
    c1, c2, c3 = 1 - L13 * L12 / alpha, 1 - L23 * L12 / alpha, 1 - L13 * L23 / alpha
    if (i, j) == (0, 2):
        lam = c1 * k1 - c3 * k3
    elif (i, j) == (1, 2):
        lam = c2 * k2 - c3 * k3
    elif (i, j) == (0, 1):
        lam = c1 * k1 - c2 * k2
    else:
        raise ValueError("interface must be (0,1), (0,2) or (1,2)")
    return -stats.tau[i, j] * kappa + lam


def radius_error(r_fit, r_exact) -> float:
    """Time average of ``|r_fit - r_exact|`` over the supplied steps."""
    r_fit = np.asarray(r_fit, dtype=float)
    r_exact = np.asarray(r_exact, dtype=float)
    if r_fit.size == 0 or r_fit.shape != r_exact.shape:
        raise ValueError("need two nonempty series of equal length")
    return float(np.mean(np.abs(r_fit - r_exact)))
