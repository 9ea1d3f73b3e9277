# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels`` for the reference versions."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def hamming_matrix(images):
    cdef const cnp.int64_t[:, ::1] imgs = np.ascontiguousarray(images, dtype=np.int64)
    cdef Py_ssize_t N = imgs.shape[0], n = imgs.shape[1]
    out = np.zeros((N, N), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] o = out
    cdef Py_ssize_t a, b, i
    cdef cnp.int64_t c
    for a in range(N):
        for b in range(a + 1, N):
            c = 0
            for i in range(n):
                if imgs[a, i] != imgs[b, i]:
                    c += 1
            o[a, b] = c
            o[b, a] = c
    return out


def two_point_scan(dist, phi, double kappa):
    cdef const double[::1] d = np.ascontiguousarray(dist, dtype=np.float64)
    cdef const double[::1] f = np.ascontiguousarray(phi, dtype=np.float64)
    cdef Py_ssize_t N = d.shape[0], y1, y2
    cdef double best = 0.0, val, a, b, lam, m, best_lam = 1.0
    cdef Py_ssize_t b1 = 0, b2 = 0
    for y1 in range(N):
        val = f[y1] + kappa * d[y1] * d[y1]
        if y1 == 0 or val < best:
            best = val
            b1 = y1
            b2 = y1
    for y1 in range(N):
        for y2 in range(y1 + 1, N):
            b = d[y1] - d[y2]
            if b == 0.0:
                continue
            a = f[y1] - f[y2]
            lam = -(a + 2.0 * kappa * b * d[y2]) / (2.0 * kappa * b * b)
            if lam > 0.0 and lam < 1.0:
                m = d[y2] + lam * b
                val = f[y2] + lam * a + kappa * m * m
                if val < best:
                    best = val
                    b1 = y1
                    b2 = y2
                    best_lam = lam
    return (best, int(b1), int(b2), best_lam)


def transport_simplex(a_in, b_in, cost, long max_iter=100000):
    cdef const double[::1] a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t m = C.shape[0], n = C.shape[1]
    cdef Py_ssize_t nodes = m + n, nb = m + n - 1
    cdef double cmax = 1.0
    cdef Py_ssize_t i, j, k, x, y, h, t, e_i = 0, e_j = 0, leave
    for i in range(m):
        for j in range(n):
            if fabs(C[i, j]) > cmax:
                cmax = fabs(C[i, j])
    cdef double tol = 1e-12 * cmax

    ci_arr = np.zeros(nb, dtype=np.int64)
    cj_arr = np.zeros(nb, dtype=np.int64)
    fl_arr = np.zeros(nb, dtype=np.float64)
    cdef cnp.int64_t[::1] ci = ci_arr
    cdef cnp.int64_t[::1] cj = cj_arr
    cdef double[::1] fl = fl_arr

    ra_arr = np.array(a, dtype=np.float64)
    rb_arr = np.array(b, dtype=np.float64)
    cdef double[::1] ra = ra_arr
    cdef double[::1] rb = rb_arr
    cdef double xv
    # north-west corner start
    i = 0
    j = 0
    for k in range(nb):
        xv = ra[i] if ra[i] < rb[j] else rb[j]
        if i == m - 1:
            xv = rb[j]
        elif j == n - 1:
            xv = ra[i]
        ci[k] = i
        cj[k] = j
        fl[k] = xv if xv > 0.0 else 0.0
        ra[i] -= xv
        rb[j] -= xv
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1

    deg_arr = np.zeros(nodes + 1, dtype=np.int64)
    adj_arr = np.zeros(2 * nb, dtype=np.int64)
    fill_arr = np.zeros(nodes, dtype=np.int64)
    pot_arr = np.zeros(nodes, dtype=np.float64)
    parent_arr = np.zeros(nodes, dtype=np.int64)
    parc_arr = np.zeros(nodes, dtype=np.int64)
    depth_arr = np.zeros(nodes, dtype=np.int64)
    queue_arr = np.zeros(nodes, dtype=np.int64)
    plus_arr = np.zeros(nodes, dtype=np.int64)
    minus_arr = np.zeros(nodes, dtype=np.int64)
    cdef cnp.int64_t[::1] start = deg_arr
    cdef cnp.int64_t[::1] adj = adj_arr
    cdef cnp.int64_t[::1] fill = fill_arr
    cdef double[::1] pot = pot_arr
    cdef cnp.int64_t[::1] parent = parent_arr
    cdef cnp.int64_t[::1] parc = parc_arr
    cdef cnp.int64_t[::1] depth = depth_arr
    cdef cnp.int64_t[::1] queue = queue_arr
    cdef cnp.int64_t[::1] plus = plus_arr
    cdef cnp.int64_t[::1] minus = minus_arr
    cdef Py_ssize_t np_, nm, q
    cdef double r, rmin, theta
    cdef bint bland = False, found
    cdef long it = 0, degenerate_run = 0
    cdef int status = 0
    cdef cnp.int64_t key, best_key

    while True:
        # adjacency by counting sort
        for x in range(nodes + 1):
            start[x] = 0
        for k in range(nb):
            start[ci[k] + 1] += 1
            start[m + cj[k] + 1] += 1
        for x in range(nodes):
            start[x + 1] += start[x]
            fill[x] = start[x]
        for k in range(nb):
            x = ci[k]
            adj[fill[x]] = k
            fill[x] += 1
            x = m + cj[k]
            adj[fill[x]] = k
            fill[x] += 1
        # BFS potentials from row node 0
        for x in range(nodes):
            parent[x] = -2
        parent[0] = -1
        depth[0] = 0
        pot[0] = 0.0
        h = 0
        t = 1
        queue[0] = 0
        while h < t:
            x = queue[h]
            h += 1
            for q in range(start[x], start[x + 1]):
                k = adj[q]
                if x == ci[k]:
                    y = m + cj[k]
                else:
                    y = ci[k]
                if parent[y] != -2:
                    continue
                parent[y] = x
                parc[y] = k
                depth[y] = depth[x] + 1
                pot[y] = C[ci[k], cj[k]] - pot[x]
                queue[t] = y
                t += 1
        # pricing
        found = False
        rmin = -tol
        for i in range(m):
            for j in range(n):
                r = C[i, j] - pot[i] - pot[m + j]
                if r < rmin:
                    rmin = r
                    e_i = i
                    e_j = j
                    found = True
                    if bland:
                        break
            if bland and found:
                break
        if not found:
            break
        if it >= max_iter:
            status = 1
            break
        it += 1
        # cycle through the tree
        np_ = 0
        nm = 0
        x = m + e_j
        y = e_i
        while depth[x] > depth[y]:
            if x >= m:
                minus[nm] = parc[x]; nm += 1
            else:
                plus[np_] = parc[x]; np_ += 1
            x = parent[x]
        while depth[y] > depth[x]:
            if y < m:
                minus[nm] = parc[y]; nm += 1
            else:
                plus[np_] = parc[y]; np_ += 1
            y = parent[y]
        while x != y:
            if x >= m:
                minus[nm] = parc[x]; nm += 1
            else:
                plus[np_] = parc[x]; np_ += 1
            x = parent[x]
            if y < m:
                minus[nm] = parc[y]; nm += 1
            else:
                plus[np_] = parc[y]; np_ += 1
            y = parent[y]
        leave = minus[0]
        best_key = ci[leave] * n + cj[leave]
        for q in range(1, nm):
            k = minus[q]
            key = ci[k] * n + cj[k]
            if fl[k] < fl[leave] or (fl[k] == fl[leave] and key < best_key):
                leave = k
                best_key = key
        theta = fl[leave]
        for q in range(np_):
            fl[plus[q]] += theta
        for q in range(nm):
            fl[minus[q]] -= theta
        ci[leave] = e_i
        cj[leave] = e_j
        fl[leave] = theta
        if theta <= 0.0:
            degenerate_run += 1
            if degenerate_run > 2 * nodes:
                bland = True
        else:
            degenerate_run = 0

    flow = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] fv = flow
    for k in range(nb):
        if fl[k] > 0.0:
            fv[ci[k], cj[k]] += fl[k]
    return flow, np.array(pot_arr[:m]), np.array(pot_arr[m:]), int(it), status
