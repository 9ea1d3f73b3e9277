"""Pure-Python/numpy implementations of the hot kernels.

Same signatures and results as the compiled ``_kernels`` module, which is
preferred when importable (see :mod:`permconc.kernels`).
"""
from __future__ import annotations

from collections import deque

import numpy as np

OPTIMAL = 0
ITERATION_LIMIT = 1


def hamming_matrix(images):
    imgs = np.asarray(images, dtype=np.int64)
    return (imgs[:, None, :] != imgs[None, :, :]).sum(axis=2).astype(np.int64)


def two_point_scan(dist, phi, kappa):
    """Minimise ``sum p*phi + kappa*(sum p*dist)**2`` over mixtures of at most two atoms.

    Returns ``(value, y1, y2, lam)``: the optimum puts mass ``lam`` on ``y1``
    and ``1 - lam`` on ``y2``.
    """
    d = np.asarray(dist, dtype=np.float64)
    f = np.asarray(phi, dtype=np.float64)
    N = d.shape[0]
    single = f + kappa * d * d
    k = int(np.argmin(single))
    best = (float(single[k]), k, k, 1.0)
    for y1 in range(N):
        for y2 in range(y1 + 1, N):
            b = d[y1] - d[y2]
            if b == 0.0:
                continue
            a = f[y1] - f[y2]
            lam = -(a + 2.0 * kappa * b * d[y2]) / (2.0 * kappa * b * b)
            if 0.0 < lam < 1.0:
                m = d[y2] + lam * b
                val = f[y2] + lam * a + kappa * m * m
                if val < best[0]:
                    best = (float(val), y1, y2, float(lam))
    return best


def _nw_corner(a, b):
    m, n = len(a), len(b)
    ra, rb = a.copy(), b.copy()
    cells, flows = [], []
    i = j = 0
    while len(cells) < m + n - 1:
        x = min(ra[i], rb[j])
        if i == m - 1:
            x = rb[j]
        elif j == n - 1:
            x = ra[i]
        cells.append((i, j))
        flows.append(max(x, 0.0))
        ra[i] -= x
        rb[j] -= x
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return cells, flows


def transport_simplex(a, b, cost, max_iter=100000):
    """Exact network simplex for the transportation problem.

    Parameters
    ----------
    a, b : (m,), (n,) arrays
        Supplies and demands with equal totals.
    cost : (m, n) array

    Returns
    -------
    flow : (m, n) array
    u, v : dual potentials with ``u[i] + v[j] <= cost[i, j]`` at optimality
    iterations : int
    status : int
        0 when optimal, 1 when the pivot limit was hit.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    C = np.asarray(cost, dtype=np.float64)
    m, n = C.shape
    tol = 1e-12 * max(1.0, float(np.abs(C).max()) if C.size else 1.0)
    cells, flows = _nw_corner(a, b)
    nodes = m + n
    bland = False
    degenerate_run = 0
    it = 0
    status = OPTIMAL
    while True:
        adj = [[] for _ in range(nodes)]
        for k, (i, j) in enumerate(cells):
            adj[i].append(k)
            adj[m + j].append(k)
        pot = np.zeros(nodes)
        parent = [-1] * nodes
        parc = [-1] * nodes
        depth = [0] * nodes
        seen = [False] * nodes
        seen[0] = True
        queue = deque([0])
        while queue:
            x = queue.popleft()
            for k in adj[x]:
                i, j = cells[k]
                y = m + j if x == i else i
                if seen[y]:
                    continue
                seen[y] = True
                parent[y] = x
                parc[y] = k
                depth[y] = depth[x] + 1
                pot[y] = C[i, j] - pot[x]
                queue.append(y)
        u, v = pot[:m], pot[m:]
        red = C - u[:, None] - v[None, :]
        if bland:
            neg = np.flatnonzero(red.ravel() < -tol)
            if neg.size == 0:
                break
            e = int(neg[0])
        else:
            e = int(np.argmin(red))
            if red.flat[e] >= -tol:
                break
        if it >= max_iter:
            status = ITERATION_LIMIT
            break
        it += 1
        ei, ej = divmod(e, n)
        # tree path from column node ej to row node ei
        plus, minus = [], []
        x, y = m + ej, ei
        while depth[x] > depth[y]:
            (minus if x >= m else plus).append(parc[x])
            x = parent[x]
        while depth[y] > depth[x]:
            (minus if y < m else plus).append(parc[y])
            y = parent[y]
        while x != y:
            (minus if x >= m else plus).append(parc[x])
            x = parent[x]
            (minus if y < m else plus).append(parc[y])
            y = parent[y]
        leave = min(minus, key=lambda k: (flows[k], cells[k][0] * n + cells[k][1]))
        theta = flows[leave]
        for k in plus:
            flows[k] += theta
        for k in minus:
            flows[k] -= theta
        cells[leave] = (ei, ej)
        flows[leave] = theta
        if theta <= 0.0:
            degenerate_run += 1
            if degenerate_run > 2 * nodes:
                bland = True
        else:
            degenerate_run = 0
    flow = np.zeros((m, n))
    for (i, j), x in zip(cells, flows):
        flow[i, j] += max(x, 0.0)
    return flow, np.array(u), np.array(v), it, status
