"""Exact integer matrix helpers: Bareiss determinant, column echelon, kernels."""

from __future__ import annotations

import itertools
from math import gcd
from typing import Sequence

IntMatrix = list  # list of rows of Python ints


def as_int_matrix(A) -> IntMatrix:
    return [[int(v) for v in row] for row in A]


def int_det(A) -> int:
    """Fraction-free (Bareiss) determinant of a square integer matrix."""
    M = as_int_matrix(A)
    n = len(M)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for r in range(k + 1, n):
                if M[r][k] != 0:
                    M[k], M[r] = M[r], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def int_rank(A) -> int:
    if not A:
        return 0
    _, _, r = column_echelon(A)
    return r


def column_echelon(A) -> tuple[IntMatrix, IntMatrix, int]:
    """Unimodular column reduction ``A U = H``.

    ``H`` has nonzero pivot columns ``0..r-1`` and zero columns ``r..n-1``,
    so the trailing ``n - r`` columns of ``U`` are a basis of the integer
    kernel of ``A``.
    """
    H = as_int_matrix(A)
    k = len(H)
    n = len(H[0]) if k else 0
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def col_op(dst, src, q):  # col_dst -= q * col_src
        for row in H:
            row[dst] -= q * row[src]
        for row in U:
            row[dst] -= q * row[src]

    def col_swap(a, b):
        for row in H:
            row[a], row[b] = row[b], row[a]
        for row in U:
            row[a], row[b] = row[b], row[a]

    p = 0
    for r in range(k):
        if p >= n:
            break
        row = H[r]
        if all(row[j] == 0 for j in range(p, n)):
            continue
        while True:
            nz = [j for j in range(p, n) if row[j] != 0]
            jmin = min(nz, key=lambda j: abs(row[j]))
            if jmin != p:
                col_swap(p, jmin)
            others = [j for j in range(p + 1, n) if row[j] != 0]
            if not others:
                break
            for j in others:
                col_op(j, p, row[j] // row[p])
        p += 1
    return H, U, p


def integer_kernel(A, n: int | None = None) -> IntMatrix:
    """Rows forming a basis of ``{x in Z^n : A x = 0}``."""
    if not A:
        return [[int(i == j) for j in range(n)] for i in range(n)]
    _, U, r = column_echelon(A)
    ncol = len(U)
    return [[U[i][j] for i in range(ncol)] for j in range(r, ncol)]


def saturate(B) -> IntMatrix:
    """Basis rows of ``span_Q(B) intersect Z^n``."""
    B = as_int_matrix(B)
    n = len(B[0])
    C = integer_kernel(B)
    if not C:
        return [[int(i == j) for j in range(n)] for i in range(n)]
    return integer_kernel(C)


def complete_basis(B) -> tuple[IntMatrix, int]:
    """Unimodular ``T`` whose first ``k`` columns span ``span(B) intersect Z^n``.

    Returns ``(T, k)`` with ``k`` the rank of ``B``.
    """
    B = as_int_matrix(B)
    n = len(B[0])
    C = integer_kernel(B)  # rows spanning the orthogonal complement lattice
    if not C:
        return [[int(i == j) for j in range(n)] for i in range(n)], n
    _, U, r = column_echelon(C)
    order = list(range(r, n)) + list(range(r))
    T = [[U[i][j] for j in order] for i in range(n)]
    return T, n - r


def minors_gcd(cols: Sequence[Sequence[int]]) -> int:
    """gcd of the maximal minors of the ``n x i`` matrix with the given columns."""
    i = len(cols)
    n = len(cols[0])
    g = 0
    for rows in itertools.combinations(range(n), i):
        g = gcd(g, int_det([[cols[c][r] for c in range(i)] for r in rows]))
        if g == 1:
            return 1
    return g


def transpose(A) -> IntMatrix:
    return [list(r) for r in zip(*A)]


def matmul(A, B) -> IntMatrix:
    Bt = transpose(B)
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]
