"""Discrete Morse flow steps: heat minimization, area penalties, recall.

One inner step minimizes

    F(w) = int |w - w_prev|^2/(2h) + |grad w|^2/2 dx + sum_i phi(A_i - |P_i^w|)

over P1 fields, where ``P_i^w`` is the region where phase ``i`` wins and
``phi`` is the penalty.  The quadratic part is handled by an exact sparse
factorization of ``M + hS``; the penalty coupling is descended with an
Armijo backtracking line search in the metric of the quadratic part plus
the Gauss-Newton term of the penalty.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.sparse.linalg import cg, splu

from .field import VectorField
from .geometry import InterfaceGeometry, partition
from .mesh import TriMesh, element_mass, mass_matrix, stiffness_matrix
from .simplex import ReferenceFrame

__all__ = [
    "NumericalFailure",
    "ConvergenceWarning",
    "DmfParams",
    "DmfSystem",
    "StepInfo",
    "heat_step",
    "recall_rhs",
    "geometry_mass_term",
    "area_gradient",
    "pair_weights",
    "transport_term",
    "penalized_step",
    "minimize_step",
    "PENALTY_FORMS",
]

PENALTY_FORMS = ("quadratic", "piecewise_linear", "abs")


class NumericalFailure(RuntimeError):
    """Linear solver or minimizer broke down."""


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class DmfParams:
    """Inner-step parameters.

    ``h`` is the inner time step ``dt / K``.  ``epsilon=None`` switches
    the area penalty off.  ``targets`` holds the prescribed area of every
    phase.
    """

    h: float
    K: int = 1
    epsilon: float | None = None
    penalty_form: str = "quadratic"
    targets: np.ndarray | None = None
    tol: float = 1e-10
    max_iter: int = 500
    armijo: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 40

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.penalty_form not in PENALTY_FORMS:
            raise ValueError(f"unknown penalty form {self.penalty_form!r}")
        if self.epsilon is not None:
            if not self.epsilon > 0:
                raise ValueError("epsilon must be positive")
            if self.targets is None:
                raise ValueError("constrained steps need target areas")
            self.targets = np.asarray(self.targets, dtype=float)

    @property
    def constrained(self) -> bool:
        return self.epsilon is not None


@dataclass
class StepInfo:
    iterations: int = 0
    converged: bool = True
    f_start: float = np.nan
    f_end: float = np.nan
    residuals: np.ndarray | None = None
    flagged: int = 0


class DmfSystem:
    """Factorized ``M + hS`` for one mesh and inner step.

    ``solver`` is ``"direct"`` (sparse LU, default) or ``"cg"`` (Jacobi
    preconditioned conjugate gradients to relative residual ``rtol``).
    """

    def __init__(self, mesh: TriMesh, h: float, solver: str = "direct", rtol: float = 1e-10,
                 maxiter: int = 10000):
        if not h > 0:
            raise ValueError("h must be positive")
        self.mesh, self.h, self.solver, self.rtol, self.maxiter = mesh, float(h), solver, rtol, maxiter
        self.M = mass_matrix(mesh)
        self.S = stiffness_matrix(mesh)
        self.A = (self.M + self.h * self.S).tocsc()
        if solver == "direct":
            self._lu = splu(self.A, permc_spec="MMD_AT_PLUS_A")
        elif solver == "cg":
            self._diag = 1.0 / self.A.diagonal()
        else:
            raise ValueError(f"unknown solver {solver!r}")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if self.solver == "direct":
            return self._lu.solve(rhs)
        cols = rhs.reshape(len(rhs), -1)
        out = np.empty_like(cols)
        pre = sp.diags(self._diag)
        for c in range(cols.shape[1]):
            x, info = cg(self.A, cols[:, c], rtol=self.rtol, atol=0.0, M=pre, maxiter=self.maxiter)
            if info != 0:
                raise NumericalFailure(f"conjugate gradients did not converge (info={info})")
            out[:, c] = x
        return out.reshape(rhs.shape)

    def quad_value(self, w, b, c) -> float:
        """``(w'Aw - 2 w'b + c) / (2h)`` summed over components."""
        return float((np.sum(w * (self.A @ w)) - 2.0 * np.sum(w * b) + c) / (2.0 * self.h))


_SYSTEMS: dict = {}


def _system(mesh, h, solver="direct"):
    key = (id(mesh), float(h), solver)
    sysm = _SYSTEMS.get(key)
    if sysm is None or sysm.mesh is not mesh:
        if len(_SYSTEMS) > 8:
            _SYSTEMS.clear()
        sysm = _SYSTEMS[key] = DmfSystem(mesh, h, solver)
    return sysm


def heat_step(u_prev: VectorField, h: float, mesh: TriMesh | None = None,
              solver: str = "direct") -> VectorField:
    """Minimizer of the unconstrained inner functional: ``(M + hS) w = M u_prev``."""
    mesh = u_prev.mesh if mesh is None else mesh
    sysm = _system(mesh, h, solver)
    w = sysm.solve(sysm.M @ u_prev.values)
    return VectorField(u_prev.frame, w, mesh)


def recall_rhs(mesh: TriMesh, frame: ReferenceFrame, u_nodal: np.ndarray,
               recalled: InterfaceGeometry | None, M=None):
    """Load vector ``int phi_a u_prev`` and ``int |u_prev|^2``.

    Outside recalled interface elements ``u_prev`` is the P1 interpolant
    of ``u_nodal``; on them it equals ``p_i`` on the recorded polygon of
    phase ``i``.
    """
    M = mass_matrix(mesh) if M is None else M
    b = M @ u_nodal
    c = float(np.sum(u_nodal * b))
    if recalled is None or not len(recalled.elements):
        return b, c
    if recalled.mesh is not mesh and recalled.mesh.n_nodes != mesh.n_nodes:
        raise ValueError("recalled geometry belongs to a different mesh")
    elems = mesh.elements[recalled.elements]
    ue = u_nodal[elems]  # (E, 3, d)
    Me = element_mass(mesh.areas[recalled.elements])
    nodal_part = np.einsum("eab,ebd->ead", Me, ue)
    recall_part = np.einsum("eia,id->ead", recalled.loads, frame.vectors)
    np.add.at(b, elems.ravel(), (recall_part - nodal_part).reshape(-1, frame.dim))
    c += float(mesh.areas[recalled.elements].sum() - np.sum(ue * nodal_part))
    return b, c


# three-point edge-midpoint rule, exact for quadratics on a triangle
_MID = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


def geometry_mass_term(u: VectorField, recalled: InterfaceGeometry, h: float) -> float:
    """``sum_i int_{R_i} |u - p_i|^2 / (2h)`` over the recalled interface elements.

    Each recorded polygon is fan-triangulated and integrated with a
    degree-2 rule, which is exact for the quadratic integrand.
    """
    mesh = u.mesh
    if recalled.mesh.n_nodes != mesh.n_nodes or recalled.k != u.frame.k:
        raise ValueError("recalled geometry is inconsistent with the field")
    total = 0.0
    U = u.values
    P = u.frame.vectors
    for row, e in enumerate(recalled.elements):
        nodes = mesh.elements[e]
        xy = mesh.nodes[nodes]
        ue = U[nodes]
        for i in range(recalled.k):
            n = recalled.counts[row, i]
            if not n:
                continue
            B = recalled.bary[row, i, :n]
            for t in range(1, n - 1):
                tri = B[[0, t, t + 1]]
                pts = tri @ xy
                area = 0.5 * abs((pts[1, 0] - pts[0, 0]) * (pts[2, 1] - pts[0, 1])
                                 - (pts[2, 0] - pts[0, 0]) * (pts[1, 1] - pts[0, 1]))
                vals = (_MID @ tri) @ ue - P[i]
                total += area / 3.0 * np.sum(vals * vals)
    return total / (2.0 * h)


def pair_weights(g: InterfaceGeometry, frame: ReferenceFrame, grad_tol: float = 1e-14):
    """Scalar nodal weights of the area derivative, one column per phase pair.

    Moving the zero line of ``g_ij = (p_i - p_j) . u`` shifts it by
    ``delta g / |grad g|``, so ``d|P_i| / d g_ij(node a)`` is the integral
    of the hat function of ``a`` over the ``i``/``j`` segments divided by
    ``|grad g_ij|``.

    Returns
    -------
    pairs : ndarray (P, 2)
        Active phase pairs ``i < j``.
    weights : ndarray (N, P)
        ``d|P_i|/du(a) = +weights[a, p] (p_i - p_j)`` and ``d|P_j|/du(a)``
        is its negative.
    flagged : int
        Segments skipped because ``|grad g_ij|`` vanished.
    """
    mesh = g.mesh
    if not g.n_segments:
        return np.zeros((0, 2), dtype=np.int64), np.zeros((mesh.n_nodes, 0)), 0
    rows = g.seg_elements
    i, j = g.seg_pairs[:, 0], g.seg_pairs[:, 1]
    sc = g.scores[rows]  # (S, 3, k)
    gval = np.take_along_axis(sc, i[:, None, None], 2)[..., 0] - \
        np.take_along_axis(sc, j[:, None, None], 2)[..., 0]
    el = g.elements[rows]
    grad = np.einsum("sa,sax->sx", gval, mesh.grads[el])
    gn = np.hypot(grad[:, 0], grad[:, 1])
    d = g.seg_points[:, 1] - g.seg_points[:, 0]
    length = np.hypot(d[:, 0], d[:, 1])
    ok = gn > grad_tol
    coef = np.zeros((len(rows), 3))
    coef[ok] = (length[ok] / gn[ok])[:, None] * 0.5 * (g.seg_bary[ok, 0] + g.seg_bary[ok, 1])
    pairs, col = np.unique(g.seg_pairs, axis=0, return_inverse=True)
    col = col.ravel()
    weights = np.zeros((mesh.n_nodes, len(pairs)))
    np.add.at(weights, (mesh.elements[el].ravel(), np.repeat(col, 3)), coef.ravel())
    return pairs, weights, int((~ok).sum())


def _expand(pairs, weights, frame):
    """Dense (N, k-1, k) derivative from pair weights."""
    out = np.zeros((weights.shape[0], frame.dim, frame.k))
    for p, (i, j) in enumerate(pairs):
        block = np.outer(weights[:, p], frame.vectors[i] - frame.vectors[j])
        out[:, :, i] += block
        out[:, :, j] -= block
    return out


def area_gradient(g: InterfaceGeometry, frame: ReferenceFrame, grad_tol: float = 1e-14):
    """Derivative of every phase area with respect to the nodal values.

    Returns
    -------
    grad : ndarray (N, k-1, k)
        ``grad[a, :, i]`` is ``d|P_i| / d u(a)``; zero away from interfaces.
    flagged : int
        Segments skipped because the pair projection had no gradient.
    """
    pairs, weights, flagged = pair_weights(g, frame, grad_tol)
    return _expand(pairs, weights, frame), flagged


def transport_term(u: VectorField, f: np.ndarray, n: int, h: float, M=None):
    """Energy ``int f w / sqrt(4 pi n h)`` with ``w = (u + 1)/2`` and its gradient.

    Only defined for two phases (scalar ``u``).
    """
    if u.frame.k != 2:
        raise ValueError("the transport term is defined for two phases only")
    if n < 1:
        raise ValueError(f"inner step index must be >= 1, got {n}")
    M = mass_matrix(u.mesh) if M is None else M
    cn = 1.0 / np.sqrt(4.0 * np.pi * n * h)
    Mf = M @ np.asarray(f, dtype=float)
    w = 0.5 * (u.values[:, 0] + 1.0)
    return float(cn * (Mf @ w)), (0.5 * cn * Mf)[:, None]


def _penalty(z, eps, form):
    if form == "quadratic":
        return float(np.sum(z * z) / eps)
    if form == "abs":
        return float(np.sum(np.abs(z)) / eps)
    return float(np.sum(np.maximum(z / eps, eps * z)))


def _box(eps, form):
    return (eps, 1.0 / eps) if form == "piecewise_linear" else (-1.0 / eps, 1.0 / eps)


def _box_qp(W, q, lo, hi):
    """Maximize ``s.q - s'Ws/2`` over ``lo <= s <= hi`` (``W`` positive semidefinite).

    Solved in the unit box ``s = lo + (hi - lo) x`` by L-BFGS-B.
    """
    span = hi - lo
    s0 = np.full(len(q), lo)
    Ws, Wq = span * span * W, span * (q - W @ s0)

    def fun(x):
        Wx = Ws @ x
        return 0.5 * x @ Wx - Wq @ x, Wx - Wq

    res = minimize(fun, np.full(len(q), 0.5), jac=True, method="L-BFGS-B",
                   bounds=[(0.0, 1.0)] * len(q), options=dict(ftol=1e-15, gtol=1e-14, maxiter=1000))
    return s0 + span * np.clip(res.x, 0.0, 1.0)


def minimize_step(sysm: DmfSystem, frame: ReferenceFrame, b: np.ndarray, c: float,
                  params: DmfParams, w0: np.ndarray | None = None):
    """Minimize ``(w'Aw - 2w'b + c)/(2h) + penalty`` starting from ``A^-1 b``.

    Returns ``(w, StepInfo)``.
    """
    mesh, h = sysm.mesh, sysm.h
    wq = sysm.solve(b) if w0 is None else w0
    if not params.constrained:
        val = sysm.quad_value(wq, b, c)
        return wq, StepInfo(0, True, val, val)
    eps, form, targets = params.epsilon, params.penalty_form, params.targets
    k = frame.k

    def evaluate(w, grad=False):
        g = partition(mesh, frame.scores(w), segments=grad)
        z = targets - g.areas
        return sysm.quad_value(w, b, c) + _penalty(z, eps, form), z, g

    w = wq
    F, z, g = evaluate(w, grad=True)
    if not np.isfinite(F):
        raise NumericalFailure("non-finite functional value at the start of the step")
    info = StepInfo(f_start=F)
    converged = False
    it = 0
    for it in range(1, params.max_iter + 1):
        pairs, pw, flagged = pair_weights(g, frame)
        info.flagged += flagged
        G = _expand(pairs, pw, frame)
        # A^-1 acts componentwise, so one scalar solve per active pair suffices
        BU = _expand(pairs, h * sysm.solve(pw), frame) if len(pairs) else np.zeros_like(G)
        W = np.einsum("adi,adj->ij", G, BU)
        gq = (sysm.A @ w - b) / h
        if form == "quadratic":
            gp = -(2.0 / eps) * np.einsum("adi,i->ad", G, z)
            Bg = (w - wq) - (2.0 / eps) * np.einsum("adi,i->ad", BU, z)
            grad_F = gq + gp
            y = np.linalg.solve(0.5 * eps * np.eye(k) + W, np.einsum("adi,ad->i", G, Bg))
            d = -(Bg - np.einsum("adi,i->ad", BU, y))
            slope = float(np.sum(grad_F * d))
            model = slope
        else:
            lo, hi = _box(eps, form)
            q = z + np.einsum("adi,ad->i", G, w - wq)
            s = _box_qp(W, q, lo, hi)
            d = -(w - wq) + np.einsum("adi,i->ad", BU, s)
            zl = z - np.einsum("adi,ad->i", G, d)
            model = float(np.sum(gq * d)) + _penalty(zl, eps, form) - _penalty(z, eps, form)
        if not model < 0.0:
            converged = True
            break
        t = 1.0
        for _ in range(params.max_backtracks):
            Fn, zn, gn = evaluate(w + t * d, grad=True)
            if Fn <= F + params.armijo * t * model:
                break
            t *= params.shrink
        else:
            converged = True  # no further decrease representable
            break
        w_new = w + t * d
        dec = F - Fn
        w, F, z, g = w_new, Fn, zn, gn
        if dec <= params.tol * max(abs(F), 1e-300):
            converged = True
            break
    info.iterations, info.converged, info.f_end, info.residuals = it, converged, F, z
    if not converged:
        warnings.warn(f"penalized step hit {params.max_iter} iterations", ConvergenceWarning)
    return w, info


def penalized_step(u_prev: VectorField, params: DmfParams,
                   recalled: InterfaceGeometry | None = None, solver: str = "direct"):
    """One inner step of the penalized functional.

    With ``recalled`` geometry the mass term integrates ``|w - p_i|^2``
    over the recorded polygons of each interface element.  Returns
    ``(VectorField, StepInfo)``.
    """
    mesh = u_prev.mesh
    sysm = _system(mesh, params.h, solver)
    b, c = recall_rhs(mesh, u_prev.frame, u_prev.values, recalled, sysm.M)
    w, info = minimize_step(sysm, u_prev.frame, b, c, params)
    return VectorField(u_prev.frame, w, mesh), info
