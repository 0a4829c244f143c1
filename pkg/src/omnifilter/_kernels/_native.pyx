# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the hot kernels (rectangular LAP solve, fused box cost).

The arithmetic mirrors ``_pure`` operation-for-operation so both backends
return bit-identical results.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs


def solve_lap(cost):
    """Minimum-cost injective assignment of rows to columns (n <= m)."""
    cdef const double[:, ::1] c = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], m = c.shape[1]
    if n > m:
        raise ValueError(f"need at least as many columns as rows, got {n}x{m}")

    u_arr = np.zeros(n + 1, dtype=np.float64)
    v_arr = np.zeros(m + 1, dtype=np.float64)
    minv_arr = np.empty(m + 1, dtype=np.float64)
    p_arr = np.zeros(m + 1, dtype=np.int64)
    way_arr = np.zeros(m + 1, dtype=np.int64)
    used_arr = np.zeros(m + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr, v = v_arr, minv = minv_arr
    cdef long long[::1] p = p_arr, way = way_arr
    cdef unsigned char[::1] used = used_arr

    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double cur, delta

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(m + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = INFINITY
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = c[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    match_arr = np.empty(n, dtype=np.int64)
    cdef long long[::1] match = match_arr
    for j in range(1, m + 1):
        if p[j] > 0:
            match[p[j] - 1] = j - 1
    return match_arr


def box_match_cost(gt_cxcywh, pred_cxcywh, double lambda_iou, double lambda_l1):
    """``lambda_iou * (1 - GIoU) + lambda_l1 * L1`` for all (gt, pred) pairs."""
    cdef const double[:, ::1] g = np.ascontiguousarray(gt_cxcywh, dtype=np.float64)
    cdef const double[:, ::1] q = np.ascontiguousarray(pred_cxcywh, dtype=np.float64)
    cdef Py_ssize_t ng = g.shape[0], nq = q.shape[0]
    if g.shape[1] != 4 or q.shape[1] != 4:
        raise ValueError("boxes must have shape (N, 4)")

    out_arr = np.empty((ng, nq), dtype=np.float64)
    cdef double[:, ::1] out = out_arr

    cdef Py_ssize_t i, k
    cdef double gx0, gy0, gx1, gy1, qx0, qy0, qx1, qy1
    cdef double area_g, area_q, ix, iy, inter, union_, enclose, giou, l1

    for i in range(ng):
        gx0 = g[i, 0] - g[i, 2] / 2
        gy0 = g[i, 1] - g[i, 3] / 2
        gx1 = g[i, 0] + g[i, 2] / 2
        gy1 = g[i, 1] + g[i, 3] / 2
        area_g = (gx1 - gx0) * (gy1 - gy0)
        for k in range(nq):
            qx0 = q[k, 0] - q[k, 2] / 2
            qy0 = q[k, 1] - q[k, 3] / 2
            qx1 = q[k, 0] + q[k, 2] / 2
            qy1 = q[k, 1] + q[k, 3] / 2
            area_q = (qx1 - qx0) * (qy1 - qy0)

            ix = min(gx1, qx1) - max(gx0, qx0)
            if ix < 0.0:
                ix = 0.0
            iy = min(gy1, qy1) - max(gy0, qy0)
            if iy < 0.0:
                iy = 0.0
            inter = ix * iy
            union_ = area_g + area_q - inter
            enclose = (max(gx1, qx1) - min(gx0, qx0)) * (max(gy1, qy1) - min(gy0, qy0))
            giou = inter / union_ - (enclose - union_) / enclose

            l1 = ((fabs(g[i, 0] - q[k, 0]) + fabs(g[i, 1] - q[k, 1]))
                  + fabs(g[i, 2] - q[k, 2])) + fabs(g[i, 3] - q[k, 3])

            out[i, k] = lambda_iou * (1.0 - giou) + lambda_l1 * l1
    return out_arr
