"""CSV, SVG and summary writers for trajectories.

Phases are written 1-based.  CSV files are comma separated with a header
row and LF line endings.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .driver import Trajectory

__all__ = [
    "SEGMENT_HEADER",
    "AREA_HEADER",
    "write_segments_csv",
    "write_areas_csv",
    "write_diagnostics_csv",
    "read_segments_csv",
    "read_areas_csv",
    "write_svg",
    "write_summary",
    "write_outputs",
]

SEGMENT_HEADER = ("step", "i", "j", "x1", "y1", "x2", "y2")
AREA_HEADER = ("step", "phase", "area", "drift")
DIAG_HEADER = ("step", "time", "length", "iterations", "converged", "max_drift")

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
           "#bcbd22", "#7f7f7f")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_segments_csv(traj: Trajectory, path) -> int:
    """One row per interface segment of every recorded frame; returns the row count."""
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(SEGMENT_HEADER)
        for fr in traj.frames:
            for (i, j), seg in zip(fr.seg_pairs, fr.seg_points):
                w.writerow((fr.step, i + 1, j + 1, repr(float(seg[0, 0])), repr(float(seg[0, 1])),
                            repr(float(seg[1, 0])), repr(float(seg[1, 1]))))
                rows += 1
    return rows


def write_areas_csv(traj: Trajectory, path) -> int:
    """Per-frame phase areas with the absolute drift from the target areas."""
    ref = traj.targets if traj.targets is not None else traj.areas[0]
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(AREA_HEADER)
        for fr in traj.frames:
            for p, a in enumerate(fr.areas):
                w.writerow((fr.step, p + 1, repr(float(a)), repr(float(abs(a - ref[p])))))
                rows += 1
    return rows


def write_diagnostics_csv(traj: Trajectory, path) -> None:
    """Scalar diagnostics at every outer step."""
    drift = traj.drift().max(axis=1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(DIAG_HEADER)
        for m in range(len(traj.times)):
            w.writerow((m, repr(float(traj.times[m])), repr(float(traj.lengths[m])), traj.iterations[m],
                        int(bool(traj.converged[m])), repr(float(drift[m]))))


def read_segments_csv(path) -> dict:
    """``{step: (pairs (S, 2) 0-based, points (S, 2, 2))}``."""
    out: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = tuple(next(r))
        if header != SEGMENT_HEADER:
            raise ValueError(f"unexpected header {header}")
        for row in r:
            step = int(row[0])
            pairs, pts = out.setdefault(step, ([], []))
            pairs.append((int(row[1]) - 1, int(row[2]) - 1))
            x1, y1, x2, y2 = map(float, row[3:])
            pts.append(((x1, y1), (x2, y2)))
    return {s: (np.array(p, dtype=np.int64), np.array(q)) for s, (p, q) in out.items()}


def read_areas_csv(path) -> dict:
    """``{step: areas (k,)}``."""
    out: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = tuple(next(r))
        if header[:3] != AREA_HEADER[:3]:
            raise ValueError(f"unexpected header {header}")
        for row in r:
            out.setdefault(int(row[0]), {})[int(row[1]) - 1] = float(row[2])
    return {s: np.array([d[p] for p in sorted(d)]) for s, d in out.items()}


def write_svg(frame, path, domain=(0.0, 1.0, 0.0, 1.0), size: int = 500) -> None:
    """Interfaces of one frame, coloured by the lower phase of each pair."""
    x0, x1, y0, y1 = domain
    sx = size / (x1 - x0)
    height = int(round((y1 - y0) * sx))

    def X(x):
        return (x - x0) * sx

    def Y(y):
        return height - (y - y0) * sx

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{height}" '
           f'viewBox="0 0 {size} {height}">',
           f'<rect x="0" y="0" width="{size}" height="{height}" fill="white" stroke="black"/>',
           f"<title>step {frame.step} t={frame.time:.6g}</title>"]
    for (i, j), seg in zip(frame.seg_pairs, frame.seg_points):
        c = _COLORS[int(i) % len(_COLORS)]
        out.append(f'<line x1="{X(seg[0, 0]):.3f}" y1="{Y(seg[0, 1]):.3f}" x2="{X(seg[1, 0]):.3f}" '
                   f'y2="{Y(seg[1, 1]):.3f}" stroke="{c}" stroke-width="1.5"/>')
    for jx, jy in frame.junctions:
        out.append(f'<circle cx="{X(jx):.3f}" cy="{Y(jy):.3f}" r="2.5" fill="black"/>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def write_summary(traj: Trajectory, path) -> None:
    cfg = traj.config
    drift = traj.drift()
    lines = [
        f"name: {cfg.name}",
        f"mode: {cfg.mode}",
        f"mesh: {cfg.nx}x{cfg.ny} cells",
        f"phases: {cfg.k}",
        f"dt: {cfg.dt!r}  K: {cfg.K}  M: {cfg.M}",
        f"steps: {traj.n_steps}",
        f"frames: {len(traj.frames)}",
        "final areas: " + " ".join(f"{a:.8f}" for a in traj.areas[-1]),
        "target areas: " + " ".join(f"{a:.8f}" for a in traj.targets),
        f"max drift: {drift.max():.3e}",
        f"final drift: {drift[-1].max():.3e}",
        f"final interface length: {traj.lengths[-1]:.6f}",
        f"unconverged inner steps: {sum(1 for c in traj.converged if not c)}",
        f"wall clock: {traj.wall_time:.2f} s",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_outputs(traj: Trajectory, out_dir, svg: bool = False) -> Path:
    """Write segments.csv, areas.csv, diagnostics.csv, summary.txt and optional SVG frames."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_segments_csv(traj, out / "segments.csv")
    write_areas_csv(traj, out / "areas.csv")
    write_diagnostics_csv(traj, out / "diagnostics.csv")
    write_summary(traj, out / "summary.txt")
    if svg:
        for fr in traj.frames:
            write_svg(fr, out / f"frame_{fr.step:05d}.svg", traj.config.domain)
    return out
