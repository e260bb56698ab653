# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled level step for the scanner (see kernels.py for the contract)."""

from libc.stdint cimport int32_t, int64_t

ctypedef fused cell_t:
    int32_t
    int64_t


def advance(cell_t[:, ::1] A, cell_t[:, ::1] B, int64_t[::1] V, int64_t[::1] var,
            int64_t[::1] mean, Py_ssize_t rows, Py_ssize_t center,
            cell_t[:, ::1] A_next=None, cell_t[:, ::1] B_next=None):
    cdef Py_ssize_t W = A.shape[1]
    cdef Py_ssize_t i, j, r0, r1
    cdef int64_t p, d, v, s1, s2
    cdef bint grow = A_next is not None
    with nogil:
        for i in range(rows):
            v = 0
            s1 = 0
            s2 = 0
            r0 = 2 * i
            r1 = r0 + 1
            for j in range(W):
                p = 0
                if j + 1 < W:
                    p = A[i, j + 1]
                if j > 0:
                    p = p + B[i, j - 1]
                d = j - center
                if d >= 0:
                    v = v + p
                s1 = s1 + d * p
                s2 = s2 + d * d * p
                if grow:
                    A_next[r0, j] = <cell_t>p
                    B_next[r0, j] = 2 * B[i, j]
                    A_next[r1, j] = 2 * A[i, j]
                    B_next[r1, j] = <cell_t>p
            V[i] = v
            var[i] = s2
            mean[i] = s1
