"""Cross-checks of the solver against its oracles, used by ``curveflow validate``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dmf import area_gradient, heat_step
from .driver import CIRCLE_R0, circle_table_config, run, scenario_config
from .field import Shape, VectorField, labels_to_field, smooth_initial_field, threshold
from .geometry import fit_circle, junction_angles, partition
from .mesh import build_structured_mesh
from .oracles import (
    MultiphaseStats,
    circle_radius_exact,
    double_bubble_areas,
    double_bubble_equilibrium,
    multiphase_velocities,
    radius_error,
    three_phase_velocities,
    two_circle_ode,
)
from .simplex import reference_vectors

__all__ = ["Check", "CHECKS", "run_checks", "circle_error", "arc_radii", "double_bubble_report",
           "frame_defects", "equivalence_mismatches", "gradient_fd_error", "transport_report"]


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


def frame_defects(k: int, perturb: float = 0.0) -> float:
    """Largest violation of the unit-norm, pairwise-dot and zero-sum identities."""
    v = np.array(reference_vectors(k).vectors)
    if perturb:
        v[0, 0] += perturb
    gram = v @ v.T
    off = gram[~np.eye(k, dtype=bool)]
    return float(max(np.abs(np.diag(gram) - 1).max(), np.abs(off - 1.0 / (1 - k)).max(),
                     np.linalg.norm(v.sum(axis=0))))


def equivalence_mismatches(k: int, seed: int, n: int = 41, steps: int = 5, h: float = 2e-4,
                           K: int = 3) -> int:
    """Nodes where the vector flow and ``k`` scalar indicator flows disagree.

    Runs ``steps`` outer rounds of ``K`` heat steps; labels are compared
    after every round with ties resolved after rounding to 1e-10.
    """
    rng = np.random.default_rng(seed)
    mesh = build_structured_mesh(n, n)
    frame = reference_vectors(k)
    centers = rng.uniform(0.1, 0.9, size=(2 * k, 2))
    radii = rng.uniform(0.08, 0.25, size=2 * k)
    d = np.hypot(*(mesh.nodes[:, None, :] - centers[None]).transpose(2, 0, 1)) - radii
    labels = np.where(d.min(axis=1) < 0, np.argmin(d, axis=1) % k, k - 1)
    bad = 0
    for _ in range(steps):
        u = labels_to_field(labels, frame, mesh)
        chi = np.eye(k)[labels]
        for _ in range(K):
            u = heat_step(u, h)
            chi = np.column_stack([heat_step(VectorField(reference_vectors(2), c[:, None], mesh), h).values[:, 0]
                                   for c in chi.T])
        vec = threshold(np.round(u.scores(), 10))
        sca = threshold(np.round((k - 1.0) / k * (chi * k / (k - 1.0) - 1.0 / (k - 1.0)), 10))
        bad += int(np.sum(vec != sca))
        labels = vec
    return bad


def gradient_fd_error(seed: int, k: int = 3, n: int = 17, step: float = 1e-6):
    """Relative error of the analytic area gradient against central differences.

    Returns ``(relative error, flagged segments)`` for a random
    interface configuration.
    """
    rng = np.random.default_rng(seed)
    mesh = build_structured_mesh(n, n)
    frame = reference_vectors(k)
    shapes = [Shape("disk", (*rng.uniform(0.3, 0.7, 2), rng.uniform(0.15, 0.3)), i) for i in range(k - 1)]
    u = smooth_initial_field(mesh, frame, shapes, k - 1)
    u = VectorField(frame, u.values + 0.05 * rng.standard_normal(u.values.shape), mesh)
    g = partition(mesh, u.scores())
    G, flagged = area_gradient(g, frame)
    num = np.zeros_like(G)
    for a in np.unique(mesh.elements[g.elements]):
        for c in range(frame.dim):
            up = u.values.copy()
            dn = u.values.copy()
            up[a, c] += step
            dn[a, c] -= step
            num[a, c] = (partition(mesh, frame.scores(up), False).areas
                         - partition(mesh, frame.scores(dn), False).areas) / (2 * step)
    scale = max(np.abs(num).max(), 1e-300)
    return float(np.abs(num - G).max() / scale), flagged


def circle_error(traj, r0: float = CIRCLE_R0) -> float:
    """Time-averaged fitted-radius error over the steps before exact extinction."""
    t_ext = r0 * r0 / 2.0
    fit, exact = [], []
    for m in range(1, traj.n_steps + 1):
        t = traj.times[m]
        if t >= t_ext * (1 - 1e-12):
            break
        cs = traj.circles[m]
        fit.append(cs[0][2] if cs else 0.0)
        exact.append(circle_radius_exact(r0, t))
    return radius_error(fit, exact)


def arc_radii(g, pairs=((0, 2), (1, 2), (0, 1))):
    """Fitted circle per phase pair: ``{pair: (center, radius)}``."""
    out = {}
    for pr in pairs:
        sel = (g.seg_pairs[:, 0] == pr[0]) & (g.seg_pairs[:, 1] == pr[1])
        pts = np.unique(np.round(g.seg_points[sel].reshape(-1, 2), 13), axis=0)
        out[pr] = fit_circle(pts)
    return out


def double_bubble_report(traj) -> dict:
    """Fitted and analytic radii plus junction angles of a double-bubble run."""
    g = traj.geometry
    fits = arc_radii(g)
    r1, r2 = fits[(0, 2)][1], fits[(1, 2)][1]
    c12, r12 = fits[(0, 1)]
    # the common arc bulges into the smaller bubble, which fixes the sign
    c2 = fits[(1, 2)][0]
    sign = -1.0 if np.linalg.norm(c12 - c2) > np.linalg.norm(fits[(0, 2)][0] - c12) else 1.0
    A1, A2 = traj.targets[0], traj.targets[1]
    e1, e2, e12 = double_bubble_equilibrium(A1, A2)
    # signed middle radius in the oracle convention: 1/r1 - 1/r2 = 1/r12
    r12s = r12 if (1 / r1 - 1 / r2) > 0 else -r12
    angles = [junction_angles(g, j) for j in range(len(g.junctions))]
    return dict(r1=r1, r2=r2, r12=r12s, oracle=(e1, e2, e12), angles=angles,
                condition=abs(1 / r1 - 1 / r2 - 1 / r12s), inv_r12=abs(1 / r12s), sign=sign)


def transport_report(traj, window: int = 20) -> dict:
    """Wall contact, roundness and drift of a single-bubble transport run.

    ``detach_step`` is the first step after which the interface never
    again reaches the bottom wall (``None`` if it stays attached).
    ``roundness`` is the largest relative deviation of the final interface
    points from their fitted circle.  ``stationary`` holds when the top of
    the bubble moved less than one grid cell over the last ``window``
    steps.
    """
    cfg = traj.config
    y0 = cfg.domain[2]
    touch = [len(p) > 0 and p[:, 1].min() <= y0 + 1e-12 for p in traj.crossings]
    detach = None
    for m in range(len(touch) - 1, 0, -1):
        if touch[m]:
            break
        detach = m
    pts = traj.crossings[-1]
    c, r = fit_circle(pts)
    roundness = float(np.abs(np.hypot(*(pts - c).T) - r).max() / r)
    top = np.array([p[:, 1].max() if len(p) else np.nan for p in traj.crossings])
    w = min(window, traj.n_steps)
    move = float(abs(top[-1] - top[-1 - w]))
    hx = (cfg.domain[3] - cfg.domain[2]) / cfg.ny
    return dict(detach_step=detach, roundness=roundness, drift=float(traj.drift().max()),
                top_speed=move / (w * cfg.dt), stationary=move <= hx, top=top, radius=r)


# checks ---------------------------------------------------------------------

def _check_frames(fault):
    worst = max(frame_defects(k, 1e-6 if fault == "frame" else 0.0) for k in range(2, 9))
    return Check("frame_invariants", worst <= 1e-12, f"max defect {worst:.2e} (k=2..8)")


def _check_equivalence(fault):
    bad = sum(equivalence_mismatches(k, seed, steps=2) for k in (2, 3, 4) for seed in (0, 1))
    return Check("equivalence", bad == 0, f"{bad} mismatched labels over 6 runs")


def _check_gradient(fault):
    errs = [gradient_fd_error(s)[0] for s in range(5)]
    return Check("area_gradient", max(errs) <= 1e-5, f"max relative error {max(errs):.2e}")


def _check_two_phase_oracles(fault):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        L = np.zeros((3, 3))
        kap = np.zeros((3, 3))
        for i, j in ((0, 1), (0, 2), (1, 2)):
            L[i, j] = L[j, i] = rng.uniform(0.1, 2.0)
            kap[i, j] = rng.normal()
        st = MultiphaseStats(L, kap)
        kk = rng.normal()
        for pr in ((0, 1), (0, 2), (1, 2)):
            worst = max(worst, abs(three_phase_velocities(st, kk, pr) - multiphase_velocities(st, kk, *pr)))
    return Check("lagrange_closed_forms", worst <= 1e-12, f"max deviation {worst:.2e}")


def _check_circle(fault):
    e = circle_error(run(circle_table_config(40, 8, "bmo")))
    es = circle_error(run(circle_table_config(40, 8, "bmo_star")))
    return Check("shrinking_circle", e <= 0.010 and es <= 0.008,
                 f"40x40/8 error bmo {e:.4f}, bmo_star {es:.4f}")


def _check_two_circles(fault):
    cfg = scenario_config("two_circles", nx=64, ny=64, M=80)
    traj = run(cfg)
    t, ra, rb, _ = two_circle_ode(0.1996, 0.1384, traj.times[-1], cfg.dt)
    fa = np.array([c[0][2] for c in traj.circles])
    dev = float(np.abs(fa - ra).max())
    return Check("two_circles_vs_rk4", dev <= 5e-3,
                 f"large-circle sup deviation {dev:.4f}, area drift {traj.drift().max():.1e}")


def _check_double_bubble(fault):
    a1, a2 = 0.06, 0.02
    r1, r2, r12 = double_bubble_equilibrium(a1, a2)
    b1, b2 = double_bubble_areas(r1, r2, r12)
    res = max(abs(b1 - a1), abs(b2 - a2), abs(1 / r1 - 1 / r2 - 1 / r12))
    traj = run(scenario_config("double_bubble", M=150))
    rep = double_bubble_report(traj)
    ang = np.concatenate(rep["angles"]) if rep["angles"] else np.array([np.nan])
    ok = res <= 1e-10 and np.all(np.abs(ang - 120.0) <= 5.0)
    return Check("double_bubble", bool(ok),
                 f"oracle residual {res:.1e}; junction angles "
                 + ", ".join(f"{a:.1f}" for a in ang)
                 + f"; radii {rep['r1']:.4f} {rep['r2']:.4f} vs {rep['oracle'][0]:.4f} {rep['oracle'][1]:.4f}")


def _check_junction_star(fault):
    mesh = build_structured_mesh(61, 61)
    d = mesh.nodes - np.array([0.5037, 0.4981])
    # phase i wins inside the 120 degree sector around direction 90 + 120 i
    dirs = np.radians([90.0, 210.0, 330.0])
    sc = np.column_stack([d @ np.array([np.cos(a), np.sin(a)]) for a in dirs])
    ang = junction_angles(partition(mesh, sc), 0)
    dev = float(np.abs(ang - 120.0).max())
    return Check("junction_angles", dev <= 1e-6, "star angles " + ", ".join(f"{a:.4f}" for a in ang))


CHECKS = {
    "frame_invariants": _check_frames,
    "equivalence": _check_equivalence,
    "area_gradient": _check_gradient,
    "lagrange_closed_forms": _check_two_phase_oracles,
    "junction_angles": _check_junction_star,
    "shrinking_circle": _check_circle,
    "two_circles_vs_rk4": _check_two_circles,
    "double_bubble": _check_double_bubble,
}


def run_checks(filter_: str | None = None, fault: str | None = None, emit=None) -> list:
    out = []
    for name, fn in CHECKS.items():
        if filter_ and filter_ not in name:
            continue
        try:
            res = fn(fault)
        except Exception as exc:  # a crashing check is a failing check
            res = Check(name, False, f"error: {exc}")
        out.append(res)
        if emit is not None:
            emit(res)
    return out
