"""Degree-weighted 1/d repulsion: exact O(n^2) reference and a Barnes-Hut quadtree.

The repulsion between nodes u, v is k_r * (deg(u)+1) * (deg(v)+1) / d(u,v),
directed apart. The quadtree approximates far-away cells by their center of
mass when cell_size / distance < theta; theta -> 0 degenerates to the exact
sum. Kernels are numba-compiled (strict IEEE, single-threaded) so results are
reproducible bit-for-bit.
"""

from __future__ import annotations

import numba as nb
import numpy as np

__all__ = ["exact_repulsion", "repulsion_barnes_hut"]

_MAX_DEPTH = 48


def exact_repulsion(positions: np.ndarray, degrees: np.ndarray, k_repulsion: float = 1.0) -> np.ndarray:
    """Exact pairwise repulsion, chunked to keep memory flat. Oracle for the tree."""
    pos = np.asarray(positions, dtype=np.float64)
    mass = np.asarray(degrees, dtype=np.float64) + 1.0
    n = pos.shape[0]
    out = np.zeros((n, 2), dtype=np.float64)
    if n < 2:
        return out
    chunk = max(1, min(n, 8_000_000 // max(n, 1)))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = pos[start:stop, None, :] - pos[None, :, :]  # (c, n, 2)
        d2 = diff[..., 0] ** 2 + diff[..., 1] ** 2
        coef = np.zeros_like(d2)
        np.divide(k_repulsion * mass[start:stop, None] * mass[None, :], d2, out=coef, where=d2 > 0)
        out[start:stop, 0] = (coef * diff[..., 0]).sum(axis=1)
        out[start:stop, 1] = (coef * diff[..., 1]).sum(axis=1)
    return out


@nb.njit(cache=True)
def _build_tree(pos, mass, cap):
    """Array quadtree. Returns (status, ncells, ...arrays); status<0 means cap too small."""
    n = pos.shape[0]
    child0 = np.full(cap, -1, np.int32)  # children are 4 consecutive cells child0..child0+3
    cx = np.zeros(cap, np.float64)
    cy = np.zeros(cap, np.float64)
    half = np.zeros(cap, np.float64)
    acc_x = np.zeros(cap, np.float64)
    acc_y = np.zeros(cap, np.float64)
    msum = np.zeros(cap, np.float64)
    count = np.zeros(cap, np.int32)
    depth = np.zeros(cap, np.int16)
    first = np.full(cap, -1, np.int32)
    nxt = np.full(n, -1, np.int32)

    minx = pos[0, 0]
    maxx = pos[0, 0]
    miny = pos[0, 1]
    maxy = pos[0, 1]
    for i in range(n):
        if pos[i, 0] < minx:
            minx = pos[i, 0]
        if pos[i, 0] > maxx:
            maxx = pos[i, 0]
        if pos[i, 1] < miny:
            miny = pos[i, 1]
        if pos[i, 1] > maxy:
            maxy = pos[i, 1]
    cx[0] = 0.5 * (minx + maxx)
    cy[0] = 0.5 * (miny + maxy)
    span = maxx - minx
    if maxy - miny > span:
        span = maxy - miny
    half[0] = 0.5 * span * (1.0 + 1e-9) + 1e-12
    ncells = 1

    for p in range(n):
        cell = 0
        while True:
            count[cell] += 1
            acc_x[cell] += mass[p] * pos[p, 0]
            acc_y[cell] += mass[p] * pos[p, 1]
            msum[cell] += mass[p]
            if child0[cell] != -1:
                quad = 0
                if pos[p, 0] > cx[cell]:
                    quad += 1
                if pos[p, 1] > cy[cell]:
                    quad += 2
                cell = child0[cell] + quad
                continue
            if count[cell] == 1 or depth[cell] >= _MAX_DEPTH:
                nxt[p] = first[cell]
                first[cell] = p
                break
            # leaf holding exactly one prior point: split and push it down
            if ncells + 4 > cap:
                return -1, 0, child0, cx, cy, half, acc_x, acc_y, msum, count, first, nxt
            base = ncells
            ncells += 4
            h = 0.5 * half[cell]
            d = depth[cell] + 1
            for q in range(4):
                c = base + q
                child0[c] = -1
                cx[c] = cx[cell] + (h if q & 1 else -h)
                cy[c] = cy[cell] + (h if q & 2 else -h)
                half[c] = h
                depth[c] = d
            child0[cell] = base
            old = first[cell]
            first[cell] = -1
            quad = 0
            if pos[old, 0] > cx[cell]:
                quad += 1
            if pos[old, 1] > cy[cell]:
                quad += 2
            tgt = base + quad
            count[tgt] = 1
            acc_x[tgt] = mass[old] * pos[old, 0]
            acc_y[tgt] = mass[old] * pos[old, 1]
            msum[tgt] = mass[old]
            first[tgt] = old
            nxt[old] = -1
            quad = 0
            if pos[p, 0] > cx[cell]:
                quad += 1
            if pos[p, 1] > cy[cell]:
                quad += 2
            cell = base + quad
    return ncells, 0, child0, cx, cy, half, acc_x, acc_y, msum, count, first, nxt


@nb.njit(cache=True)
def _tree_forces(pos, mass, k_r, theta, child0, cx, cy, half, com_x, com_y, msum, count, first, nxt, out):
    n = pos.shape[0]
    theta2 = theta * theta
    stack = np.empty(4 * (_MAX_DEPTH + 2), np.int32)
    for i in range(n):
        px = pos[i, 0]
        py = pos[i, 1]
        mi = mass[i]
        fx = 0.0
        fy = 0.0
        top = 0
        stack[top] = 0
        top += 1
        while top > 0:
            top -= 1
            cell = stack[top]
            if count[cell] == 0:
                continue
            if child0[cell] == -1:
                q = first[cell]
                while q != -1:
                    if q != i:
                        dx = px - pos[q, 0]
                        dy = py - pos[q, 1]
                        d2 = dx * dx + dy * dy
                        if d2 > 0.0:
                            f = k_r * mi * mass[q] / d2
                            fx += f * dx
                            fy += f * dy
                    q = nxt[q]
                continue
            dx = px - com_x[cell]
            dy = py - com_y[cell]
            d2 = dx * dx + dy * dy
            size = 2.0 * half[cell]
            # never approximate a cell the query point sits in
            inside = abs(px - cx[cell]) <= half[cell] and abs(py - cy[cell]) <= half[cell]
            if not inside and d2 > 0.0 and size * size < theta2 * d2:
                f = k_r * mi * msum[cell] / d2
                fx += f * dx
                fy += f * dy
            else:
                base = child0[cell]
                stack[top] = base
                stack[top + 1] = base + 1
                stack[top + 2] = base + 2
                stack[top + 3] = base + 3
                top += 4
        out[i, 0] = fx
        out[i, 1] = fy


def repulsion_barnes_hut(
    positions: np.ndarray,
    degrees: np.ndarray,
    theta: float,
    k_repulsion: float = 1.0,
) -> np.ndarray:
    """Quadtree-approximated repulsion field for all nodes at once."""
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must be in (0, 1]")
    pos = np.ascontiguousarray(positions, dtype=np.float64)
    mass = np.asarray(degrees, dtype=np.float64) + 1.0
    n = pos.shape[0]
    out = np.zeros((n, 2), dtype=np.float64)
    if n < 2:
        return out
    cap = 8 * n + 64
    while True:
        ncells, _, child0, cx, cy, half, acc_x, acc_y, msum, count, first, nxt = _build_tree(pos, mass, cap)
        if ncells > 0:
            break
        cap *= 2
        if cap > 512 * n + 4096:
            raise RuntimeError("quadtree capacity blow-up; positions are pathological")
    com_x = np.where(msum > 0, acc_x / np.where(msum > 0, msum, 1.0), 0.0)
    com_y = np.where(msum > 0, acc_y / np.where(msum > 0, msum, 1.0), 0.0)
    _tree_forces(pos, mass, float(k_repulsion), float(theta), child0, cx, cy, half, com_x, com_y, msum, count, first, nxt, out)
    return out
