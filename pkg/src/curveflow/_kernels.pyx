# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled element partition kernel; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

BACKEND = "cython"

DEF MAXV = 40


cdef int _clip(double[:, ::1] vin, int[::1] tin, int n, double g0, double g1, double g2,
               int tag, double[:, ::1] vout, int[::1] tout) noexcept nogil:
    cdef double vals[MAXV]
    cdef int t, s, m = 0, c
    cdef double gt, gs, r
    for t in range(n):
        vals[t] = g0 * vin[t, 0] + g1 * vin[t, 1] + g2 * vin[t, 2]
    for t in range(n):
        s = t + 1
        if s == n:
            s = 0
        gt = vals[t]
        gs = vals[s]
        if gt >= 0.0:
            for c in range(3):
                vout[m, c] = vin[t, c]
            tout[m] = tin[t]
            m += 1
            if gs < 0.0:
                r = gt / (gt - gs)
                for c in range(3):
                    vout[m, c] = vin[t, c] + r * (vin[s, c] - vin[t, c])
                tout[m] = tag
                m += 1
        elif gs >= 0.0:
            r = gt / (gt - gs)
            for c in range(3):
                vout[m, c] = vin[t, c] + r * (vin[s, c] - vin[t, c])
            tout[m] = tin[t]
            m += 1
    return m


def partition_elements(xy, scores):
    xy_arr = np.ascontiguousarray(xy, dtype=np.float64)
    sc_arr = np.ascontiguousarray(scores, dtype=np.float64)
    cdef Py_ssize_t E = sc_arr.shape[0]
    cdef int k = <int>sc_arr.shape[2]
    if k + 3 > MAXV:
        raise ValueError("too many phases for the compiled kernel")
    cdef int V = k + 3
    counts_a = np.zeros((E, k), dtype=np.int32)
    bary_a = np.zeros((E, k, V, 3))
    tags_a = np.zeros((E, k, V), dtype=np.int32)
    areas_a = np.zeros((E, k))
    loads_a = np.zeros((E, k, 3))
    cdef double[:, :, ::1] P = xy_arr
    cdef double[:, :, ::1] S = sc_arr
    cdef int[:, ::1] counts = counts_a
    cdef double[:, :, :, ::1] bary = bary_a
    cdef int[:, :, ::1] tags = tags_a
    cdef double[:, ::1] areas = areas_a
    cdef double[:, :, ::1] loads = loads_a
    cdef double[:, ::1] va = np.zeros((MAXV, 3))
    cdef double[:, ::1] vb = np.zeros((MAXV, 3))
    cdef int[::1] ta = np.zeros(MAXV, dtype=np.int32)
    cdef int[::1] tb = np.zeros(MAXV, dtype=np.int32)
    cand_a = np.zeros(k, dtype=np.int32)
    cdef int[::1] cand = cand_a
    cdef double px[MAXV]
    cdef double py[MAXV]
    cdef Py_ssize_t e
    cdef int i, l, a, t, n, nc, ci, cl, ok, c
    cdef double d, dm, area, at, x0, y0, x1, y1, x2, y2
    cdef double ld0, ld1, ld2
    cdef double[:, ::1] cur
    cdef double[:, ::1] nxt
    cdef int[::1] curt
    cdef int[::1] nxtt
    with nogil:
        for e in range(E):
            nc = 0
            for i in range(k):
                ok = 1
                for l in range(k):
                    if l == i:
                        continue
                    dm = S[e, 0, i] - S[e, 0, l]
                    d = S[e, 1, i] - S[e, 1, l]
                    if d > dm:
                        dm = d
                    d = S[e, 2, i] - S[e, 2, l]
                    if d > dm:
                        dm = d
                    if dm < 0.0:
                        ok = 0
                        break
                if ok:
                    cand[nc] = i
                    nc += 1
            for ci in range(nc):
                i = cand[ci]
                for t in range(3):
                    for c in range(3):
                        va[t, c] = 1.0 if t == c else 0.0
                    ta[t] = -(t + 1)
                n = 3
                cur = va
                curt = ta
                nxt = vb
                nxtt = tb
                for cl in range(nc):
                    l = cand[cl]
                    if l == i:
                        continue
                    n = _clip(cur, curt, n, S[e, 0, i] - S[e, 0, l], S[e, 1, i] - S[e, 1, l],
                              S[e, 2, i] - S[e, 2, l], l, nxt, nxtt)
                    cur, nxt = nxt, cur
                    curt, nxtt = nxtt, curt
                    if n < 3:
                        break
                if n < 3:
                    continue
                for t in range(n):
                    px[t] = cur[t, 0] * P[e, 0, 0] + cur[t, 1] * P[e, 1, 0] + cur[t, 2] * P[e, 2, 0]
                    py[t] = cur[t, 0] * P[e, 0, 1] + cur[t, 1] * P[e, 1, 1] + cur[t, 2] * P[e, 2, 1]
                area = 0.0
                ld0 = 0.0
                ld1 = 0.0
                ld2 = 0.0
                x0 = px[0]
                y0 = py[0]
                for t in range(1, n - 1):
                    x1 = px[t]
                    y1 = py[t]
                    x2 = px[t + 1]
                    y2 = py[t + 1]
                    at = 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
                    area = area + at
                    ld0 = ld0 + at * (cur[0, 0] + cur[t, 0] + cur[t + 1, 0]) / 3.0
                    ld1 = ld1 + at * (cur[0, 1] + cur[t, 1] + cur[t + 1, 1]) / 3.0
                    ld2 = ld2 + at * (cur[0, 2] + cur[t, 2] + cur[t + 1, 2]) / 3.0
                if area <= 0.0:
                    continue
                counts[e, i] = n
                for t in range(n):
                    for c in range(3):
                        bary[e, i, t, c] = cur[t, c]
                    tags[e, i, t] = curt[t]
                areas[e, i] = area
                loads[e, i, 0] = ld0
                loads[e, i, 1] = ld1
                loads[e, i, 2] = ld2
    return counts_a, bary_a, tags_a, areas_a, loads_a
