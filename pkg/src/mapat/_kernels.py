"""Compiled inner loops: ray marching, candidate back-propagation, clustering.

Walls are passed as an ``(W, 4)`` float64 array of ``[ax, ay, bx, by]`` rows and
bounds as ``[xmin, ymin, xmax, ymax]``. Interaction kinds are encoded as
``REFLECTION = 0`` and ``TRANSMISSION = 1``.

Everything here is ``nogil`` so the Monte Carlo driver can fan blocks out to
threads.
"""

import math

import numpy as np
from numba import njit

from .constants import GEOM_EPS, PARAM_EPS

REFLECTION = 0
TRANSMISSION = 1

# sin(angle) below which a ray and a wall are treated as parallel
_PARALLEL_EPS = 1e-12


@njit(cache=True, nogil=True)
def first_hit(walls, ox, oy, dx, dy, exclude, t_min):
    """Index of and distance to the nearest wall struck by a unit-direction ray.

    Hits with distance ``<= t_min`` and the wall ``exclude`` are ignored. Ties go
    to the lower wall index. Returns ``(-1, inf)`` when nothing is struck.
    """
    best = -1
    best_t = np.inf
    for i in range(walls.shape[0]):
        if i == exclude:
            continue
        ax = walls[i, 0]
        ay = walls[i, 1]
        ex = walls[i, 2] - ax
        ey = walls[i, 3] - ay
        denom = dx * ey - dy * ex
        if abs(denom) <= _PARALLEL_EPS * math.hypot(ex, ey):
            continue
        wx = ax - ox
        wy = ay - oy
        t = (wx * ey - wy * ex) / denom
        if t <= t_min or t >= best_t:
            continue
        s = (wx * dy - wy * dx) / denom
        if s < -PARAM_EPS or s > 1.0 + PARAM_EPS:
            continue
        best = i
        best_t = t
    return best, best_t


@njit(cache=True, nogil=True)
def in_bounds(bounds, x, y):
    return (
        bounds[0] - GEOM_EPS <= x <= bounds[2] + GEOM_EPS
        and bounds[1] - GEOM_EPS <= y <= bounds[3] + GEOM_EPS
    )


@njit(cache=True, nogil=True)
def back_propagate(
    walls, bounds, ox, oy, azimuth, budget, max_k, min_leg,
    out_pts, out_walls, out_kinds, out_depth, offset,
):
    """Depth-first reflect/transmit expansion of one ray with a path-length budget.

    Writes candidates starting at row ``offset`` of the output arrays and returns
    how many were written (at most ``2**max_k``). Reflection branches are
    emitted before transmission branches.
    """
    cap = 2 * max_k + 2
    s_ox = np.empty(cap)
    s_oy = np.empty(cap)
    s_dx = np.empty(cap)
    s_dy = np.empty(cap)
    s_rem = np.empty(cap)
    s_depth = np.empty(cap, np.int64)
    s_wall = np.empty(cap, np.int64)
    s_kind = np.empty(cap, np.int64)
    width = max(max_k, 1)
    path_w = np.full(width, -1, np.int64)
    path_k = np.full(width, -1, np.int64)

    s_ox[0] = ox
    s_oy[0] = oy
    s_dx[0] = math.cos(azimuth)
    s_dy[0] = math.sin(azimuth)
    s_rem[0] = budget
    s_depth[0] = 0
    s_wall[0] = -1
    s_kind[0] = -1
    top = 1
    n = 0
    while top > 0:
        top -= 1
        x = s_ox[top]
        y = s_oy[top]
        dx = s_dx[top]
        dy = s_dy[top]
        rem = s_rem[top]
        depth = s_depth[top]
        last = s_wall[top]
        if depth > 0:
            path_w[depth - 1] = last
            path_k[depth - 1] = s_kind[top]

        t_min = GEOM_EPS if last < 0 else min_leg
        idx, t = first_hit(walls, x, y, dx, dy, last, t_min)
        if idx < 0 or t >= rem:
            px = x + rem * dx
            py = y + rem * dy
            if in_bounds(bounds, px, py):
                row = offset + n
                out_pts[row, 0] = px
                out_pts[row, 1] = py
                for d in range(depth):
                    out_walls[row, d] = path_w[d]
                    out_kinds[row, d] = path_k[d]
                out_depth[row] = depth
                n += 1
            continue
        if depth >= max_k:
            continue

        hx = x + t * dx
        hy = y + t * dy
        rem_after = rem - t
        ex = walls[idx, 2] - walls[idx, 0]
        ey = walls[idx, 3] - walls[idx, 1]
        norm = math.hypot(ex, ey)
        ex /= norm
        ey /= norm
        along = dx * ex + dy * ey

        # transmission pushed first so the reflection branch is explored first
        for kind in (TRANSMISSION, REFLECTION):
            s_ox[top] = hx
            s_oy[top] = hy
            if kind == REFLECTION:
                s_dx[top] = 2.0 * along * ex - dx
                s_dy[top] = 2.0 * along * ey - dy
            else:
                s_dx[top] = dx
                s_dy[top] = dy
            s_rem[top] = rem_after
            s_depth[top] = depth + 1
            s_wall[top] = idx
            s_kind[top] = kind
            top += 1
    return n


@njit(cache=True, nogil=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@njit(cache=True, nogil=True)
def cluster_labels(pts, n, radius):
    """Single-linkage connected components of the first ``n`` points.

    Returns ``(labels, n_clusters, n_distance_evals)``; labels are numbered in
    order of first appearance.
    """
    parent = np.arange(n)
    r2 = radius * radius
    evals = 0
    for i in range(n):
        for j in range(i + 1, n):
            evals += 1
            ddx = pts[i, 0] - pts[j, 0]
            ddy = pts[i, 1] - pts[j, 1]
            if ddx * ddx + ddy * ddy <= r2:
                ri = _find(parent, i)
                rj = _find(parent, j)
                if ri != rj:
                    if ri < rj:
                        parent[rj] = ri
                    else:
                        parent[ri] = rj
    labels = np.empty(n, np.int64)
    root_label = np.full(n, -1, np.int64)
    m = 0
    for i in range(n):
        r = _find(parent, i)
        if root_label[r] < 0:
            root_label[r] = m
            m += 1
        labels[i] = root_label[r]
    return labels, m, evals


@njit(cache=True, nogil=True)
def cluster_stats(pts, mpc, budget, labels, n, m):
    """Per-cluster centroid, distinct-MPC count, mean spread and shortest member budget."""
    count = np.zeros(m, np.int64)
    sx = np.zeros(m)
    sy = np.zeros(m)
    for i in range(n):
        c = labels[i]
        count[c] += 1
        sx[c] += pts[i, 0]
        sy[c] += pts[i, 1]
    cx = sx / count
    cy = sy / count

    spread = np.zeros(m)
    distinct = np.zeros(m, np.int64)
    min_budget = np.full(m, np.inf)
    for i in range(n):
        c = labels[i]
        spread[c] += math.hypot(pts[i, 0] - cx[c], pts[i, 1] - cy[c])
        if budget[i] < min_budget[c]:
            min_budget[c] = budget[i]
        seen = False
        for j in range(i):
            if labels[j] == c and mpc[j] == mpc[i]:
                seen = True
                break
        if not seen:
            distinct[c] += 1
    spread /= count
    return cx, cy, count, distinct, spread, min_budget


@njit(cache=True, nogil=True)
def select_winner(cx, cy, distinct, spread, min_budget, m):
    """Majority cluster by distinct MPC count; see ``core.estimate_position``."""
    best = 0
    for i in range(1, m):
        if distinct[i] != distinct[best]:
            better = distinct[i] > distinct[best]
        elif spread[i] != spread[best]:
            better = spread[i] < spread[best]
        elif min_budget[i] != min_budget[best]:
            better = min_budget[i] < min_budget[best]
        elif cx[i] != cx[best]:
            better = cx[i] < cx[best]
        else:
            better = cy[i] < cy[best]
        if better:
            best = i
    top = 0
    for i in range(m):
        if distinct[i] == distinct[best]:
            top += 1
    return best, top >= 2


@njit(cache=True, nogil=True)
def locate_batch(
    walls, bounds, bsx, bsy, aoas, budgets, max_k, radius, min_leg,
    out_xy, out_support, out_ncand, out_tie,
):
    """Run the full estimator once per row of ``aoas``/``budgets`` (shape ``(R, M)``).

    Rows that yield no candidates get NaN coordinates and zero support.
    """
    n_runs, n_mpc = aoas.shape
    per = 1 << max_k
    width = max(max_k, 1)
    pts = np.empty((n_mpc * per, 2))
    cw = np.empty((n_mpc * per, width), np.int64)
    ck = np.empty((n_mpc * per, width), np.int64)
    cd = np.empty(n_mpc * per, np.int64)
    mpc = np.empty(n_mpc * per, np.int64)
    budget = np.empty(n_mpc * per)
    for r in range(n_runs):
        n = 0
        for j in range(n_mpc):
            k = back_propagate(
                walls, bounds, bsx, bsy, aoas[r, j], budgets[r, j], max_k, min_leg,
                pts, cw, ck, cd, n,
            )
            for q in range(n, n + k):
                mpc[q] = j
                budget[q] = budgets[r, j]
            n += k
        out_ncand[r] = n
        if n == 0:
            out_xy[r, 0] = np.nan
            out_xy[r, 1] = np.nan
            out_support[r] = 0
            out_tie[r] = False
            continue
        labels, m, _ = cluster_labels(pts, n, radius)
        cx, cy, _, distinct, spread, min_budget = cluster_stats(pts, mpc, budget, labels, n, m)
        w, tie = select_winner(cx, cy, distinct, spread, min_budget, m)
        out_xy[r, 0] = cx[w]
        out_xy[r, 1] = cy[w]
        out_support[r] = distinct[w]
        out_tie[r] = tie
