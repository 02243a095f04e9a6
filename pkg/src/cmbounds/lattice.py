"""Integral lattices given by Gram matrices: reduction and short vectors.

The enumeration is a Fincke-Pohst layered search on an LLL-reduced Gram
matrix. Floating point is only used to prune; every candidate is checked
with exact integer arithmetic before it is reported, and the pruning
radius is padded so rounding can only add candidates, never drop them.
"""

from math import floor, ceil, sqrt

import flint
import numpy as np


def _as_int_matrix(G):
    return [[int(v) for v in row] for row in G]


def quad_value(G, x):
    """x^T G x with Python integers."""
    n = len(x)
    s = 0
    for i in range(n):
        xi = x[i]
        if xi:
            row = G[i]
            s += xi * sum(row[j] * x[j] for j in range(n))
    return s


def lll_gram(G):
    """LLL-reduce a positive definite Gram matrix.

    Returns (reduced Gram, T) with reduced = T G T^T, T unimodular.
    """
    M = flint.fmpz_mat(_as_int_matrix(G))
    R, T = M.lll(rep="gram", transform=True)
    n = len(G)
    red = [[int(R[i, j]) for j in range(n)] for i in range(n)]
    tr = [[int(T[i, j]) for j in range(n)] for i in range(n)]
    return red, tr


def _cholesky_q(G):
    # G = sum_i q_ii (x_i + sum_{j>i} q_ij x_j)^2
    n = len(G)
    A = np.array(G, dtype=float)
    q = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            q[i, j] = A[i, j]
    for i in range(n):
        for j in range(i + 1, n):
            q[j, i] = q[i, j]
            q[i, j] = q[i, j] / q[i, i]
        for k in range(i + 1, n):
            for l in range(k, n):
                q[k, l] -= q[k, i] * q[i, l]
    return q


def enumerate_gram(G, bound, reduce=True):
    """All integer vectors x with x^T G x <= bound (bound an integer).

    Output is a sorted list of tuples including the zero vector.
    """
    G = _as_int_matrix(G)
    n = len(G)
    if bound < 0:
        return []
    if reduce:
        Gr, T = lll_gram(G)
    else:
        Gr, T = G, [[int(i == j) for j in range(n)] for i in range(n)]
    q = _cholesky_q(Gr)
    if min(q[i, i] for i in range(n)) <= 0:
        raise ValueError("Gram matrix is not positive definite")
    C = float(bound) * (1 + 1e-9) + 1e-6
    out = []
    x = [0] * n
    # iterative layered search from the last coordinate down
    def rec(i, remaining):
        c = -sum(q[i, j] * x[j] for j in range(i + 1, n))
        r = sqrt(max(remaining, 0.0) / q[i, i])
        lo, hi = ceil(c - r - 1e-9), floor(c + r + 1e-9)
        for v in range(lo, hi + 1):
            x[i] = v
            t = v - c
            rem = remaining - q[i, i] * t * t
            if rem < -1e-6:
                continue
            if i == 0:
                out.append(tuple(x))
            else:
                rec(i - 1, rem)
        x[i] = 0

    rec(n - 1, C)
    res = []
    for y in out:
        if quad_value(Gr, y) <= bound:
            # map back: vector in original coordinates is y T
            res.append(tuple(sum(y[k] * T[k][j] for k in range(n)) for j in range(n)))
    res.sort()
    return res


def gram_det(G):
    return int(flint.fmpz_mat(_as_int_matrix(G)).det())


def qmat(rows):
    """flint rational matrix from rows of ints or Fractions."""
    return flint.fmpq_mat([[flint.fmpq(int(getattr(c, "numerator", c)), int(getattr(c, "denominator", 1)))
                            for c in r] for r in rows])


def rank_of(vectors):
    if not vectors:
        return 0
    return qmat(vectors).rank()


def hnf(rows):
    """Hermite normal form (row style), zero rows dropped."""
    M = flint.fmpz_mat([[int(v) for v in r] for r in rows])
    H = M.hnf()
    out = []
    for i in range(H.nrows()):
        row = [int(H[i, j]) for j in range(H.ncols())]
        if any(row):
            out.append(row)
    return out
