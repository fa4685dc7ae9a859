# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled distance and agglomeration kernels.

Mirror the arithmetic of ``_pykernels`` exactly; see that module for the
contracts. Dissimilarities are kept in condensed upper-triangle storage.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()

cdef enum:
    SINGLE = 0
    COMPLETE = 1
    AVERAGE = 2
    WARD = 3


cdef inline Py_ssize_t cidx(Py_ssize_t n, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    if i > j:
        i, j = j, i
    return n * i - (i * (i + 1)) // 2 + (j - i - 1)


def pdist(X, w):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    out = np.empty(n * (n - 1) // 2, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j, k, p = 0
    cdef double acc, diff
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    diff = x[i, k] - x[j, k]
                    acc = acc + wv[k] * (diff * diff)
                o[p] = sqrt(acc)
                p += 1
    return out


def nn_chain(condensed, sizes, int method):
    cdef double[::1] D = np.array(condensed, dtype=np.float64, copy=True)
    cdef double[::1] size = np.array(sizes, dtype=np.float64, copy=True)
    cdef Py_ssize_t n = size.shape[0]
    out_x = np.empty(n - 1, dtype=np.int64)
    out_y = np.empty(n - 1, dtype=np.int64)
    out_d = np.empty(n - 1, dtype=np.float64)
    cdef cnp.int64_t[::1] ox = out_x
    cdef cnp.int64_t[::1] oy = out_y
    cdef double[::1] od = out_d
    cdef unsigned char[::1] active = np.ones(n, dtype=np.uint8)
    cdef Py_ssize_t[::1] chain = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t clen = 0, step, i, k, x, y, c, first = 0
    cdef double cur, dik, dxk, dyk, dxy, nx, ny, nk, new

    with nogil:
        for step in range(n - 1):
            if clen == 0:
                while not active[first]:
                    first += 1
                chain[0] = first
                clen = 1
            while True:
                x = chain[clen - 1]
                if clen >= 2:
                    c = chain[clen - 2]
                    cur = D[cidx(n, x, c)]
                else:
                    c = -1
                    cur = INFINITY
                for i in range(n):
                    if i == x or not active[i]:
                        continue
                    dik = D[cidx(n, x, i)]
                    if dik < cur:
                        cur = dik
                        c = i
                if clen >= 2 and c == chain[clen - 2]:
                    break
                chain[clen] = c
                clen += 1
            x = chain[clen - 1]
            y = chain[clen - 2]
            clen -= 2
            if x > y:
                x, y = y, x
            dxy = D[cidx(n, x, y)]
            ox[step] = x
            oy[step] = y
            od[step] = dxy

            nx = size[x]
            ny = size[y]
            for k in range(n):
                if k == x or k == y or not active[k]:
                    continue
                dxk = D[cidx(n, x, k)]
                dyk = D[cidx(n, y, k)]
                if method == SINGLE:
                    new = dxk if dxk < dyk else dyk
                elif method == COMPLETE:
                    new = dxk if dxk > dyk else dyk
                elif method == AVERAGE:
                    new = (nx * dxk + ny * dyk) / (nx + ny)
                else:
                    nk = size[k]
                    new = ((nx + nk) * dxk + (ny + nk) * dyk - nk * dxy) / (nx + ny + nk)
                D[cidx(n, y, k)] = new
            active[x] = 0
            size[y] = nx + ny
    return out_x, out_y, out_d
