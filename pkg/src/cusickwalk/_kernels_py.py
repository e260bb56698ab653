"""Numpy version of the scanner's level step; used when the extension is absent."""

import numpy as np


def advance(A, B, V, var, mean, rows, center, A_next=None, B_next=None):
    A = A[:rows]
    B = B[:rows]
    W = A.shape[1]
    P = np.zeros((rows, W), dtype=np.int64)
    P[:, :-1] += A[:, 1:]
    P[:, 1:] += B[:, :-1]
    d = np.arange(W, dtype=np.int64) - center
    V[:rows] = P[:, center:].sum(axis=1)
    mean[:rows] = P @ d
    var[:rows] = P @ (d * d)
    if A_next is not None:
        Pc = P.astype(A_next.dtype, copy=False)
        A_next[0 : 2 * rows : 2] = Pc
        A_next[1 : 2 * rows : 2] = 2 * A
        B_next[0 : 2 * rows : 2] = 2 * B
        B_next[1 : 2 * rows : 2] = Pc
