"""Outer thresholding loops and canned scenarios."""
from __future__ import annotations

import math
import time as _time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .dmf import (
    ConvergenceWarning,
    DmfParams,
    DmfSystem,
    StepInfo,
    minimize_step,
    recall_rhs,
)
from .field import (
    Shape,
    VectorField,
    assign_initial_phases,
    labels_to_field,
    smooth_initial_field,
    threshold,
)
from .geometry import (
    DegenerateFitError,
    InterfaceGeometry,
    fit_circle,
    interface_length,
    partition,
    segment_components,
)
from .mesh import build_structured_mesh
from .simplex import reference_vectors

__all__ = [
    "RunConfig",
    "GeometryFrame",
    "Trajectory",
    "StepFailure",
    "initial_state",
    "bmo_run",
    "bmo_star_run",
    "run",
    "run_scenario",
    "scenario_config",
    "SCENARIOS",
    "stall_detector",
    "circle_table_config",
]

MODES = ("bmo", "bmo_star")


class StepFailure(RuntimeError):
    """Inner solver failure, annotated with the outer step."""


@dataclass(frozen=True)
class RunConfig:
    """Scenario description.

    ``nx``/``ny`` count grid cells, so the mesh has ``(nx+1)(ny+1)`` nodes.
    Phases are 0-based; ``background`` fills whatever no shape covers.
    ``initial`` is ``"sharp"`` (nodal labels) or ``"smooth"`` (sub-grid
    outline); ``None`` picks sharp for BMO and smooth for BMO*.
    ``fit_phase`` requests per-step circle fits on the boundary of that
    phase, one per connected interface chain.
    """

    nx: int
    ny: int
    k: int
    shapes: tuple
    background: int
    dt: float
    K: int
    M: int
    mode: str = "bmo"
    initial: str | None = None
    constraint: bool = False
    epsilon: float = 1e-6
    penalty_form: str = "quadratic"
    targets: tuple | None = None
    transport: bool = False
    beta: float = 0.0
    geometry_every: int = 10
    fit_phase: int | None = None
    solver: str = "direct"
    domain: tuple = (0.0, 1.0, 0.0, 1.0)
    name: str = "custom"

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("mesh needs at least one cell per direction")
        if self.k < 2:
            raise ValueError("need at least two phases")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.K < 1 or self.M < 1:
            raise ValueError("K and M must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.initial not in (None, "sharp", "smooth"):
            raise ValueError(f"unknown initial condition {self.initial!r}")
        if self.transport and self.k != 2:
            raise ValueError("transport needs exactly two phases")
        if self.geometry_every < 1:
            raise ValueError("geometry cadence must be >= 1")
        for s in self.shapes:
            if not 0 <= s.phase < self.k:
                raise ValueError(f"shape phase {s.phase} out of range")
        if not 0 <= self.background < self.k:
            raise ValueError("background phase out of range")
        if self.targets is not None:
            t = np.asarray(self.targets, dtype=float)
            if t.shape != (self.k,) or not np.all(np.isfinite(t)) or np.any(t < 0):
                raise ValueError("targets need one finite, non-negative area per phase")

    @property
    def h(self) -> float:
        return self.dt / self.K

    @property
    def initial_kind(self) -> str:
        if self.initial is not None:
            return self.initial
        return "smooth" if self.mode == "bmo_star" else "sharp"


@dataclass
class GeometryFrame:
    """Full interface record at one step."""

    step: int
    time: float
    labels: np.ndarray
    seg_pairs: np.ndarray
    seg_points: np.ndarray
    junctions: np.ndarray
    areas: np.ndarray


@dataclass
class Trajectory:
    """Per-step record of a run.

    Scalar series have one entry per outer step plus the initial state.
    ``crossings[m]`` holds the sorted interface crossing points of step
    ``m``; ``frames`` holds full geometry at the configured cadence and at
    the final step.
    """

    config: RunConfig
    times: list = field(default_factory=list)
    areas: list = field(default_factory=list)
    lengths: list = field(default_factory=list)
    pairs: list = field(default_factory=list)
    crossings: list = field(default_factory=list)
    circles: list = field(default_factory=list)
    f_values: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    flagged: list = field(default_factory=list)
    frames: list = field(default_factory=list)
    labels: np.ndarray | None = None
    geometry: InterfaceGeometry | None = None
    targets: np.ndarray | None = None
    wall_time: float = 0.0

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def area_array(self) -> np.ndarray:
        return np.array(self.areas)

    def drift(self) -> np.ndarray:
        """``|A_i(step) - A_i(0 or target)|`` per step and phase."""
        ref = self.targets if self.targets is not None else self.areas[0]
        return np.abs(self.area_array() - ref)

    def radii(self) -> list:
        return [[c[2] for c in cs] for cs in self.circles]

    def stall_step(self, window: int = 5, last: int | None = None) -> int | None:
        """First step ``m`` such that steps ``m-window+1 .. m`` are stalled
        with a nonempty interface; only steps ``<= last`` are examined."""
        last = self.n_steps if last is None else min(last, self.n_steps)
        for m in range(window, last + 1):
            win = self.crossings[m - window + 1: m + 1]
            if len(win[0]) and stall_detector(win):
                return m
        return None


def stall_detector(window, tol: float = 1e-12) -> bool:
    """True iff no crossing point moved more than ``tol`` across ``window``.

    ``window`` is a sequence of at least 5 point arrays (sorted as stored
    in :class:`Trajectory`).  Empty interfaces count as stalled.
    """
    window = list(window)
    if len(window) < 5:
        raise ValueError("stall detection needs at least 5 recorded steps")
    first = np.asarray(window[0])
    for pts in window[1:]:
        pts = np.asarray(pts)
        if pts.shape != first.shape:
            return False
        if pts.size and np.max(np.abs(pts - first)) > tol:
            return False
    return True


def _sorted_points(g: InterfaceGeometry) -> np.ndarray:
    pts = g.crossing_points()
    if not len(pts):
        return pts.reshape(0, 2)
    return pts[np.lexsort((pts[:, 1], pts[:, 0]))]


def _fit_chains(g: InterfaceGeometry, phase: int) -> list:
    sel = (g.seg_pairs[:, 0] == phase) | (g.seg_pairs[:, 1] == phase) if g.n_segments else []
    if not np.any(sel):
        return []
    segs = g.seg_points[sel]
    n, lab = segment_components(segs)
    out = []
    for c in range(n):
        pts = np.unique(np.round(segs[lab == c].reshape(-1, 2), 13), axis=0)
        try:
            center, r = fit_circle(pts)
        except DegenerateFitError:
            continue
        out.append((float(center[0]), float(center[1]), float(r)))
    out.sort(key=lambda c: -c[2])
    return out


def initial_state(cfg: RunConfig):
    """Mesh, frame and initial P1 field of a configuration."""
    x0, x1, y0, y1 = cfg.domain
    mesh = build_structured_mesh(cfg.nx + 1, cfg.ny + 1, cfg.domain)
    frame = reference_vectors(cfg.k)
    if cfg.initial_kind == "smooth":
        u0 = smooth_initial_field(mesh, frame, cfg.shapes, cfg.background)
    else:
        u0 = labels_to_field(assign_initial_phases(mesh, cfg.shapes, cfg.background), frame, mesh)
    return mesh, frame, u0


def _transport_load(cfg, sysm):
    # f = -beta (y - 1/2): buoyancy with y pointing up; constants only shift the area multiplier
    y = sysm.mesh.nodes[:, 1]
    f = -cfg.beta * (y - 0.5)
    return sysm.M @ f


def run(cfg: RunConfig, progress=None) -> Trajectory:
    """Advance ``cfg.M`` outer rounds of inner minimization and thresholding."""
    t_start = _time.perf_counter()
    mesh, frame, u0 = initial_state(cfg)
    traj = Trajectory(config=cfg)
    g = partition(mesh, u0.scores())
    targets = np.asarray(cfg.targets, dtype=float) if cfg.targets is not None else g.areas.copy()
    traj.targets = targets
    labels = threshold(u0)
    star = cfg.mode == "bmo_star"
    recalled = g if star else None
    _record(traj, cfg, 0, 0.0, g, labels, StepInfo(0, True, np.nan, np.nan), force=True)

    sysm = DmfSystem(mesh, cfg.h, cfg.solver)
    # the scalar transport functional lives in w = (u+1)/2, and the u functional is four times it
    eps = cfg.epsilon / 4.0 if cfg.transport else cfg.epsilon
    params = DmfParams(h=cfg.h, K=cfg.K, epsilon=eps if cfg.constraint else None,
                       penalty_form=cfg.penalty_form, targets=targets if cfg.constraint else None)
    Mf = _transport_load(cfg, sysm) if cfg.transport else None

    for m in range(1, cfg.M + 1):
        w = frame.vectors[labels]
        total = StepInfo(0, True, np.nan, np.nan)
        for n in range(1, cfg.K + 1):
            rec = recalled if (star and n == 1) else None
            b, c = recall_rhs(mesh, frame, w, rec, sysm.M)
            if Mf is not None:
                b = b - (cfg.h * 2.0 / math.sqrt(4.0 * math.pi * n * cfg.h)) * Mf[:, None]
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ConvergenceWarning)
                    w, info = minimize_step(sysm, frame, b, c, params)
            except Exception as exc:
                raise StepFailure(f"outer step {m}, inner step {n}: {exc}") from exc
            total.iterations += info.iterations
            total.converged &= info.converged
            total.flagged += info.flagged
            total.f_end = info.f_end
            if not np.all(np.isfinite(w)):
                raise StepFailure(f"outer step {m}, inner step {n}: non-finite field")
        g = partition(mesh, frame.scores(w))
        labels = threshold(frame.scores(w))
        if star:
            recalled = g
        _record(traj, cfg, m, m * cfg.dt, g, labels, total, force=(m == cfg.M))
        if progress is not None:
            progress(m, traj)
    traj.labels = labels
    traj.geometry = g
    traj.wall_time = _time.perf_counter() - t_start
    return traj


def _record(traj, cfg, m, t, g, labels, info, force=False):
    traj.times.append(t)
    traj.areas.append(g.areas.copy())
    traj.lengths.append(interface_length(g))
    traj.pairs.append(frozenset(map(tuple, np.unique(g.seg_pairs, axis=0).tolist()))
                      if g.n_segments else frozenset())
    traj.crossings.append(_sorted_points(g))
    traj.f_values.append(info.f_end)
    traj.iterations.append(info.iterations)
    traj.converged.append(info.converged)
    traj.flagged.append(info.flagged)
    if cfg.fit_phase is not None:
        traj.circles.append(_fit_chains(g, cfg.fit_phase))
    if force or m % cfg.geometry_every == 0:
        traj.frames.append(GeometryFrame(m, t, labels.copy(), g.seg_pairs.copy(),
                                         g.seg_points.copy(), g.junctions.copy(), g.areas.copy()))


def bmo_run(cfg: RunConfig, progress=None) -> Trajectory:
    """Standard thresholding: nodal labels only carry over between rounds."""
    if cfg.mode != "bmo":
        raise ValueError("bmo_run needs mode='bmo'")
    return run(cfg, progress)


def bmo_star_run(cfg: RunConfig, progress=None) -> Trajectory:
    """Thresholding with recall of the sub-element geometry in the next round."""
    if cfg.mode != "bmo_star":
        raise ValueError("bmo_star_run needs mode='bmo_star'")
    return run(cfg, progress)


# canned scenarios -----------------------------------------------------------

CIRCLE_R0 = 0.35


def circle_table_config(N: int, n_t: int, mode: str, K: int = 10) -> RunConfig:
    """Shrinking disk ``r0 = 0.35`` on an ``N x N`` grid with ``n_t`` steps to extinction."""
    dt = CIRCLE_R0 ** 2 / 2.0 / n_t
    return RunConfig(nx=N, ny=N, k=2, shapes=(Shape("disk", (0.5, 0.5, CIRCLE_R0), 0),), background=1,
                     dt=dt, K=K, M=n_t, mode=mode, fit_phase=0, name=f"circle_{N}_{n_t}_{mode}")


def _scenarios():
    d = {}
    d["shrinking_circle"] = circle_table_config(40, 8, "bmo")
    d["two_circles"] = RunConfig(
        nx=85, ny=85, k=2, background=1,
        shapes=(Shape("disk", (0.3, 0.3, 0.1996), 0), Shape("disk", (0.7, 0.7, 0.1384), 0)),
        dt=2.5e-4, K=10, M=120, mode="bmo_star", constraint=True, epsilon=1e-6, fit_phase=0,
        name="two_circles")
    d["double_bubble"] = RunConfig(
        nx=64, ny=64, k=3, background=2,
        shapes=(Shape("rect", (0.2, -1.0, 0.5, 0.2), 0), Shape("rect", (0.5, -1.0, 0.65, 0.1), 1)),
        dt=5e-4, K=10, M=300, mode="bmo_star", constraint=True, epsilon=1e-6,
        name="double_bubble")
    d["triple_bubble"] = RunConfig(
        nx=53, ny=53, k=4, background=3,
        shapes=(Shape("disk", (0.4, 0.42, 0.14), 0), Shape("disk", (0.62, 0.45, 0.12), 1),
                Shape("disk", (0.5, 0.64, 0.1), 2)),
        dt=5e-4, K=10, M=200, mode="bmo_star", constraint=True, epsilon=1e-6,
        name="triple_bubble")
    seeds = ((0.14, 0.09, 0.09, 0), (0.38, 0.1, 0.1, 1), (0.62, 0.08, 0.08, 2), (0.86, 0.1, 0.1, 3),
             (0.26, 0.3, 0.09, 4), (0.5, 0.29, 0.1, 5), (0.74, 0.3, 0.09, 6), (0.52, 0.52, 0.1, 7))
    d["nine_phases"] = RunConfig(
        nx=70, ny=70, k=9, background=8,
        shapes=tuple(Shape("disk", (x, y, r), p) for x, y, r, p in seeds),
        dt=3e-4, K=10, M=250, mode="bmo_star", constraint=True, epsilon=1e-6,
        name="nine_phases")
    d["coalesce_2p"] = RunConfig(
        nx=53, ny=53, k=2, background=1,
        shapes=(Shape("ellipse", (0.37, 0.5, 0.08, 0.2), 0), Shape("ellipse", (0.63, 0.5, 0.08, 0.2), 0)),
        dt=5e-4, K=10, M=200, mode="bmo_star", constraint=True, epsilon=1e-6, fit_phase=0,
        name="coalesce_2p")
    d["coalesce_3p"] = RunConfig(
        nx=53, ny=53, k=3, background=2,
        shapes=(Shape("ellipse", (0.36, 0.5, 0.09, 0.22), 0), Shape("ellipse", (0.64, 0.5, 0.07, 0.16), 1)),
        dt=5e-4, K=10, M=200, mode="bmo_star", constraint=True, epsilon=1e-6,
        name="coalesce_3p")
    # buoyancy runs: a tall bubble detaches from the bottom wall, a small flat one stays
    d["rising_bubble"] = RunConfig(
        nx=48, ny=48, k=2, background=1,
        shapes=(Shape("ellipse", (0.5, 0.25, 0.1, 0.35), 0),),
        dt=1e-3, K=20, M=60, mode="bmo_star", constraint=True, epsilon=1e-5,
        transport=True, beta=20.5, fit_phase=0, name="rising_bubble")
    d["attached_bubble"] = replace(
        d["rising_bubble"], shapes=(Shape("ellipse", (0.5, 0.0, 0.2, 0.08), 0),), M=50,
        name="attached_bubble")
    return d


SCENARIOS = _scenarios()


def scenario_config(name: str, **overrides) -> RunConfig:
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return replace(SCENARIOS[name], **overrides)


def run_scenario(name: str, progress=None, **overrides) -> Trajectory:
    """Run a canned scenario, optionally overriding configuration fields."""
    return run(scenario_config(name, **overrides), progress)
