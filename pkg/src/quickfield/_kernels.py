"""Compiled inner loops shared by :mod:`quickfield.fields` and :mod:`quickfield.dynamics`.

Arrays are ``[y, x]``. Cell kinds: 0 free, 1 wall, 2 destination.
"""

import math

import numba as nb
import numpy as np

_jit = nb.njit(cache=True, nogil=True)

FREE, WALL, DEST = 0, 1, 2


@_jit
def _heap_push(keys, vals, size, key, val):
    i = size
    keys[i] = key
    vals[i] = val
    while i > 0:
        parent = (i - 1) >> 1
        if keys[parent] <= keys[i]:
            break
        keys[parent], keys[i] = keys[i], keys[parent]
        vals[parent], vals[i] = vals[i], vals[parent]
        i = parent
    return size + 1


@_jit
def _heap_pop(keys, vals, size):
    key, val = keys[0], vals[0]
    size -= 1
    keys[0] = keys[size]
    vals[0] = vals[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        child = left
        if left + 1 < size and keys[left + 1] < keys[left]:
            child = left + 1
        if keys[i] <= keys[child]:
            break
        keys[child], keys[i] = keys[i], keys[child]
        vals[child], vals[i] = vals[i], vals[child]
        i = child
    return key, val, size


@_jit
def diagonal_open(cells, x, y, nx, ny):
    """A diagonal step is open unless both flanking cells are walls."""
    return not (cells[y, nx] == WALL and cells[ny, x] == WALL)


@_jit
def weighted_fill(cells, cost, moore):
    """Shortest entry-cost distance from the destination set.

    ``cost[y, x]`` is charged on entering cell (x, y); destinations are
    sources at 0. Walls and unreachable cells get ``inf``.
    """
    h, w = cells.shape
    n = h * w
    dist = np.full((h, w), np.inf)
    done = np.zeros((h, w), dtype=np.bool_)
    cap = 9 * n + 1
    keys = np.empty(cap, dtype=np.float64)
    vals = np.empty(cap, dtype=np.int64)
    size = 0
    for y in range(h):
        for x in range(w):
            if cells[y, x] == DEST:
                dist[y, x] = 0.0
                size = _heap_push(keys, vals, size, 0.0, y * w + x)
    while size > 0:
        d, idx, size = _heap_pop(keys, vals, size)
        y = idx // w
        x = idx - y * w
        if done[y, x]:
            continue
        done[y, x] = True
        for dy in range(-1, 2):
            ny = y + dy
            if ny < 0 or ny >= h:
                continue
            for dx in range(-1, 2):
                if dx == 0 and dy == 0:
                    continue
                if dx != 0 and dy != 0:
                    if not moore:
                        continue
                nx = x + dx
                if nx < 0 or nx >= w:
                    continue
                if cells[ny, nx] == WALL or done[ny, nx]:
                    continue
                if dx != 0 and dy != 0 and not diagonal_open(cells, x, y, nx, ny):
                    continue
                nd = d + cost[ny, nx]
                if nd < dist[ny, nx]:
                    dist[ny, nx] = nd
                    size = _heap_push(keys, vals, size, nd, ny * w + nx)
    return dist


@_jit
def combine_v1(manhattan, chebyshev):
    h, w = manhattan.shape
    out = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            m = manhattan[y, x]
            c = chebyshev[y, x]
            if math.isinf(m):
                out[y, x] = np.inf
            else:
                mn = m - c
                out[y, x] = math.sqrt(c * c + mn * mn)
    return out


@_jit
def candidates(cells, occ, static, x, y, speed, agent, out_x, out_y):
    """Cells reachable within ``speed`` Moore steps over non-wall cells.

    Keeps cells that are free of other agents and have finite static value;
    written to ``out_x``/``out_y`` in row-major order. Returns the count.
    """
    h, w = cells.shape
    r = speed
    side = 2 * r + 1
    depth = np.full((side, side), -1, dtype=np.int64)
    qx = np.empty(side * side, dtype=np.int64)
    qy = np.empty(side * side, dtype=np.int64)
    depth[r, r] = 0
    qx[0] = x
    qy[0] = y
    head, tail = 0, 1
    while head < tail:
        cx, cy = qx[head], qy[head]
        head += 1
        dcur = depth[cy - y + r, cx - x + r]
        if dcur == r:
            continue
        for dy in range(-1, 2):
            ny = cy + dy
            if ny < 0 or ny >= h:
                continue
            for dx in range(-1, 2):
                if dx == 0 and dy == 0:
                    continue
                nx = cx + dx
                if nx < 0 or nx >= w or cells[ny, nx] == WALL:
                    continue
                wy, wx = ny - y + r, nx - x + r
                if depth[wy, wx] >= 0:
                    continue
                if dx != 0 and dy != 0 and not diagonal_open(cells, cx, cy, nx, ny):
                    continue
                depth[wy, wx] = dcur + 1
                qx[tail] = nx
                qy[tail] = ny
                tail += 1
    n = 0
    for wy in range(side):
        for wx in range(side):
            if depth[wy, wx] < 0:
                continue
            cx, cy = x + wx - r, y + wy - r
            o = occ[cy, cx]
            if o != -1 and o != agent:
                continue
            if math.isinf(static[cy, cx]):
                continue
            out_x[n] = cx
            out_y[n] = cy
            n += 1
    return n


@_jit
def weights(static, sdyn, xs, ys, n, k_s, k_sdyn, out):
    """Unnormalised transition weights, shifted so the best is exp(0)."""
    best = np.inf
    for i in range(n):
        e = k_s * static[ys[i], xs[i]] + k_sdyn * sdyn[ys[i], xs[i]]
        out[i] = e
        if e < best:
            best = e
    total = 0.0
    for i in range(n):
        out[i] = math.exp(best - out[i])
        total += out[i]
    return total


@_jit
def pick(w, n, total, u):
    threshold = u * total
    acc = 0.0
    for i in range(n):
        acc += w[i]
        if threshold < acc:
            return i
    return n - 1


@_jit
def move_agents(cells, occ, static, sdyn, pos_x, pos_y, speed, order, draws, k_s, k_sdyn):
    """One random-sequential sweep of agent moves in ``order``."""
    cx = np.empty(81, dtype=np.int64)
    cy = np.empty(81, dtype=np.int64)
    w = np.empty(81, dtype=np.float64)
    for j in range(order.shape[0]):
        a = order[j]
        x, y = pos_x[a], pos_y[a]
        n = candidates(cells, occ, static, x, y, speed[a], a, cx, cy)
        if n == 0:
            continue
        total = weights(static, sdyn, cx, cy, n, k_s, k_sdyn, w)
        i = pick(w, n, total, draws[j])
        nx, ny = cx[i], cy[i]
        if nx != x or ny != y:
            occ[y, x] = -1
            occ[ny, nx] = a
            pos_x[a] = nx
            pos_y[a] = ny
