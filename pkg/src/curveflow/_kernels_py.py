"""Pure-Python element partition kernel (fallback for ``_kernels``).

Both implementations share one contract, see :func:`partition_elements`.
"""
import numpy as np

BACKEND = "python"


def _clip(verts, tags, g, tag):
    """Clip a convex polygon (barycentric vertices) by ``g . bary >= 0``."""
    n = len(verts)
    vals = [g[0] * v[0] + g[1] * v[1] + g[2] * v[2] for v in verts]
    out_v, out_t = [], []
    for t in range(n):
        s = (t + 1) % n
        gt, gs = vals[t], vals[s]
        if gt >= 0.0:
            out_v.append(verts[t])
            if gs >= 0.0:
                out_t.append(tags[t])
            else:
                out_t.append(tags[t])
                r = gt / (gt - gs)
                a, b = verts[t], verts[s]
                out_v.append((a[0] + r * (b[0] - a[0]), a[1] + r * (b[1] - a[1]),
                              a[2] + r * (b[2] - a[2])))
                out_t.append(tag)
        elif gs >= 0.0:
            r = gt / (gt - gs)
            a, b = verts[t], verts[s]
            out_v.append((a[0] + r * (b[0] - a[0]), a[1] + r * (b[1] - a[1]),
                          a[2] + r * (b[2] - a[2])))
            out_t.append(tags[t])
    return out_v, out_t


def partition_elements(xy, scores):
    """Split triangles into the regions where each phase score is largest.

    Parameters
    ----------
    xy : ndarray, shape (E, 3, 2)
        Vertex coordinates of each element.
    scores : ndarray, shape (E, 3, k)
        Nodal phase scores ``p_i . u``; the P1 interpolant of each column is
        compared pointwise.

    Returns
    -------
    counts : int32 (E, k)
        Vertex count of the polygon of each phase (0 when absent).
    bary : float64 (E, k, k+3, 3)
        Barycentric vertex coordinates, counterclockwise.
    tags : int32 (E, k, k+3)
        Tag of the edge leaving each vertex: ``-(t+1)`` for element edge
        ``t`` (vertex ``t`` to ``t+1``), or the competing phase index for an
        interface edge.
    areas : float64 (E, k)
    loads : float64 (E, k, 3)
        Integral of each local basis function over each polygon.
    """
    xy = np.asarray(xy, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    E, _, k = scores.shape
    V = k + 3
    counts = np.zeros((E, k), dtype=np.int32)
    bary = np.zeros((E, k, V, 3))
    tags = np.zeros((E, k, V), dtype=np.int32)
    areas = np.zeros((E, k))
    loads = np.zeros((E, k, 3))
    tri = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]
    for e in range(E):
        s = scores[e]
        p = xy[e]
        cand = []
        for i in range(k):
            ok = True
            for l in range(k):
                if l != i and max(s[0, i] - s[0, l], s[1, i] - s[1, l], s[2, i] - s[2, l]) < 0.0:
                    ok = False
                    break
            if ok:
                cand.append(i)
        for i in cand:
            verts, tg = list(tri), [-1, -2, -3]
            for l in cand:
                if l == i:
                    continue
                g = (s[0, i] - s[0, l], s[1, i] - s[1, l], s[2, i] - s[2, l])
                verts, tg = _clip(verts, tg, g, l)
                if len(verts) < 3:
                    break
            n = len(verts)
            if n < 3:
                continue
            pts = [(b[0] * p[0, 0] + b[1] * p[1, 0] + b[2] * p[2, 0],
                    b[0] * p[0, 1] + b[1] * p[1, 1] + b[2] * p[2, 1]) for b in verts]
            area = 0.0
            load = [0.0, 0.0, 0.0]
            x0, y0 = pts[0]
            for t in range(1, n - 1):
                x1, y1 = pts[t]
                x2, y2 = pts[t + 1]
                at = 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
                area += at
                for a in range(3):
                    load[a] += at * (verts[0][a] + verts[t][a] + verts[t + 1][a]) / 3.0
            if area <= 0.0:
                continue
            counts[e, i] = n
            bary[e, i, :n] = verts
            tags[e, i, :n] = tg
            areas[e, i] = area
            loads[e, i] = load
    return counts, bary, tags, areas, loads
