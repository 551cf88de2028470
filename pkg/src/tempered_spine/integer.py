"""Small integer-lattice utilities: row Hermite normal form, kernels, saturation."""

from __future__ import annotations

from typing import Sequence


def hnf_with_transform(M: Sequence[Sequence[int]]):
    """Row HNF ``H = U M`` with U unimodular.

    Returns (H, U, r) where the first r rows of H are the nonzero canonical
    rows (positive pivots, entries above pivots reduced into [0, pivot)).
    """
    A = [list(map(int, r)) for r in M]
    m = len(A)
    ncols = len(A[0]) if m else 0
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    row = 0
    pivots = []
    for col in range(ncols):
        if row >= m:
            break
        # gcd-reduce the column below `row`
        while True:
            nz = [i for i in range(row, m) if A[i][col] != 0]
            if not nz:
                break
            i0 = min(nz, key=lambda i: abs(A[i][col]))
            A[row], A[i0] = A[i0], A[row]
            U[row], U[i0] = U[i0], U[row]
            done = True
            for i in range(row + 1, m):
                if A[i][col]:
                    q = A[i][col] // A[row][col]
                    A[i] = [x - q * y for x, y in zip(A[i], A[row])]
                    U[i] = [x - q * y for x, y in zip(U[i], U[row])]
                    if A[i][col]:
                        done = False
            if done:
                break
        if row < m and A[row][col] != 0:
            if A[row][col] < 0:
                A[row] = [-x for x in A[row]]
                U[row] = [-x for x in U[row]]
            p = A[row][col]
            for i in range(row):
                q = A[i][col] // p
                if q:
                    A[i] = [x - q * y for x, y in zip(A[i], A[row])]
                    U[i] = [x - q * y for x, y in zip(U[i], U[row])]
            pivots.append(col)
            row += 1
    return A, U, row


def hnf(M) -> tuple[tuple[int, ...], ...]:
    """Canonical basis (nonzero HNF rows) of the row lattice of M."""
    if not M:
        return ()
    H, _, r = hnf_with_transform(M)
    return tuple(tuple(x) for x in H[:r])


def integer_kernel(M) -> list[list[int]]:
    """Z-basis of {x in Z^m : x M = 0} for an m x k integer matrix M."""
    H, U, r = hnf_with_transform(M)
    return [U[i] for i in range(r, len(H))]


def saturate(vectors, n: int) -> tuple[tuple[int, ...], ...]:
    """HNF basis of (Q-span of vectors) intersected with Z^n."""
    vecs = [list(v) for v in vectors if any(v)]
    if not vecs:
        return ()
    # complement equations: integer kernel of the transpose
    comp = integer_kernel([list(col) for col in zip(*vecs)])
    if not comp:
        return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
    # lattice = {x : x . c = 0 for c in comp}
    return hnf(integer_kernel([list(col) for col in zip(*comp)]))


def in_row_lattice(v, basis) -> bool:
    """Membership of an integer (or rational) vector in the Z-span of basis rows."""
    from gmpy2 import mpq

    if not basis:
        return not any(v)
    H, _, r = hnf_with_transform(basis)
    rem = [mpq(x) for x in v]
    for i in range(r):
        row = H[i]
        col = next(j for j, x in enumerate(row) if x)
        c = rem[col] / row[col]
        if c.denominator != 1:
            return False
        rem = [x - c * y for x, y in zip(rem, row)]
    return not any(rem)


def det_int(M) -> int:
    if not M:
        return 1
    n = len(M)
    if n == 1:
        return int(M[0][0])
    if n == 2:
        return int(M[0][0] * M[1][1] - M[0][1] * M[1][0])
    if n == 3:
        a, b, c = M
        return int(
            a[0] * (b[1] * c[2] - b[2] * c[1])
            - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0])
        )
    from tempered_spine.lattice import _det

    return int(_det(M))


def matmul_int(A, B):
    return [[sum(a * b for a, b in zip(r, c)) for c in zip(*B)] for r in A]


def adjugate(a) -> list[list[int]]:
    """det(a) * a^{-1}, integral for integral a."""
    from tempered_spine.lattice import _det, _inverse

    d = _det(a)
    inv = _inverse(a)
    return [[int(d * x) for x in r] for r in inv]
