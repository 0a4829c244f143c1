"""Pure numpy implementations of the hot kernels.

These mirror the compiled extension operation-for-operation (same IEEE
arithmetic order per element), so both backends produce bit-identical
results and the test suite can assert exact equality.
"""
from __future__ import annotations

import numpy as np


def solve_lap(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost injective assignment of rows to columns.

    Potential-based shortest-augmenting-path Hungarian method on a
    rectangular ``n x m`` matrix with ``n <= m``.  Returns ``match`` with
    ``match[i]`` = column assigned to row ``i``.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    n, m = cost.shape
    if n > m:
        raise ValueError(f"need at least as many columns as rows, got {n}x{m}")

    # 1-indexed arrays; column 0 is the virtual column holding the row
    # currently being inserted.
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.int64)  # p[j] = row matched to column j (0 = free)
    way = np.zeros(m + 1, dtype=np.int64)

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            free[0] = False
            cols = np.nonzero(free)[0]
            cur = cost[i0 - 1, cols - 1] - u[i0] - v[cols]
            better = cur < minv[cols]
            upd = cols[better]
            minv[upd] = cur[better]
            way[upd] = j0
            # First occurrence of the minimum = smallest column index.
            k = int(np.argmin(minv[cols]))
            j1 = int(cols[k])
            delta = minv[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = int(way[j0])
            p[j0] = p[j1]
            j0 = j1

    match = np.empty(n, dtype=np.int64)
    for j in range(1, m + 1):
        if p[j] > 0:
            match[p[j] - 1] = j - 1
    return match


def box_match_cost(gt_cxcywh: np.ndarray, pred_cxcywh: np.ndarray,
                   lambda_iou: float, lambda_l1: float) -> np.ndarray:
    """``lambda_iou * (1 - GIoU) + lambda_l1 * L1`` for all (gt, pred) pairs."""
    g = np.ascontiguousarray(gt_cxcywh, dtype=np.float64)
    q = np.ascontiguousarray(pred_cxcywh, dtype=np.float64)

    gx0 = g[:, 0] - g[:, 2] / 2
    gy0 = g[:, 1] - g[:, 3] / 2
    gx1 = g[:, 0] + g[:, 2] / 2
    gy1 = g[:, 1] + g[:, 3] / 2
    qx0 = q[:, 0] - q[:, 2] / 2
    qy0 = q[:, 1] - q[:, 3] / 2
    qx1 = q[:, 0] + q[:, 2] / 2
    qy1 = q[:, 1] + q[:, 3] / 2

    area_g = (gx1 - gx0) * (gy1 - gy0)
    area_q = (qx1 - qx0) * (qy1 - qy0)

    ix = np.maximum(np.minimum(gx1[:, None], qx1[None, :])
                    - np.maximum(gx0[:, None], qx0[None, :]), 0.0)
    iy = np.maximum(np.minimum(gy1[:, None], qy1[None, :])
                    - np.maximum(gy0[:, None], qy0[None, :]), 0.0)
    inter = ix * iy
    union = area_g[:, None] + area_q[None, :] - inter
    ex = np.maximum(gx1[:, None], qx1[None, :]) - np.minimum(gx0[:, None], qx0[None, :])
    ey = np.maximum(gy1[:, None], qy1[None, :]) - np.minimum(gy0[:, None], qy0[None, :])
    enclose = ex * ey
    giou = inter / union - (enclose - union) / enclose

    l1 = ((np.abs(g[:, 0, None] - q[None, :, 0])
           + np.abs(g[:, 1, None] - q[None, :, 1]))
          + np.abs(g[:, 2, None] - q[None, :, 2])) \
        + np.abs(g[:, 3, None] - q[None, :, 3])

    return lambda_iou * (1.0 - giou) + lambda_l1 * l1
