"""Independent oracles written with ``fractions`` only (no package imports).

They recompute, by brute force and with separately written code, quantities
the package derives through its own pipeline: the cells of the n = 2 and
n = 3 well-rounded retracts modulo SL_n(Z), and the cohomology of the Borel
subgroup of SL_2(Z) with symmetric-power coefficients.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, permutations, product
from math import comb, gcd, isqrt


def _det(M):
    M = [[Fraction(x) for x in r] for r in M]
    n = len(M)
    d = Fraction(1)
    for i in range(n):
        p = next((r for r in range(i, n) if M[r][i] != 0), None)
        if p is None:
            return Fraction(0)
        if p != i:
            M[i], M[p] = M[p], M[i]
            d = -d
        d *= M[i][i]
        for r in range(i + 1, n):
            f = M[r][i] / M[i][i]
            M[r] = [a - f * b for a, b in zip(M[r], M[i])]
    return d


def _solve(M, y):
    """Solve M x = y by Gauss-Jordan over Fractions; None when singular."""
    n = len(M)
    A = [[Fraction(x) for x in r] + [Fraction(b)] for r, b in zip(M, y)]
    for i in range(n):
        p = next((r for r in range(i, n) if A[r][i] != 0), None)
        if p is None:
            return None
        A[i], A[p] = A[p], A[i]
        A[i] = [x / A[i][i] for x in A[i]]
        for r in range(n):
            if r != i and A[r][i] != 0:
                f = A[r][i]
                A[r] = [a - f * b for a, b in zip(A[r], A[i])]
    return [A[i][n] for i in range(n)]


def _inv(M):
    n = len(M)
    cols = [_solve(M, [int(i == j) for i in range(n)]) for j in range(n)]
    if any(c is None for c in cols):
        return None
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def _rank(rows):
    M = [[Fraction(x) for x in r] for r in rows]
    r = 0
    cols = len(M[0]) if M else 0
    for c in range(cols):
        p = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c] / M[r][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        r += 1
    return r


def _norm(v):
    for x in v:
        if x:
            return tuple(v) if x > 0 else tuple(-y for y in v)
    return tuple(v)


def _val(A, v):
    n = len(v)
    return sum(v[i] * A[i][j] * v[j] for i in range(n) for j in range(n))


def _min_set(A):
    """(minimum, set of sign-normalized minimal vectors) by box enumeration."""
    n = len(A)
    Ainv = _inv(A)
    m0 = min(A[i][i] for i in range(n))
    box = []
    for i in range(n):
        r = m0 * Ainv[i][i]
        box.append(isqrt(r.numerator // r.denominator) + 1)
    best, vecs = None, set()
    for v in product(*[range(-b, b + 1) for b in box]):
        if not any(v):
            continue
        x = _val(A, v)
        if best is None or x < best:
            best, vecs = x, {_norm(v)}
        elif x == best:
            vecs.add(_norm(v))
    return best, vecs


def _is_pd(A):
    return all(_det([r[:k] for r in A[:k]]) > 0 for k in range(1, len(A) + 1))


def _lf(v):
    n = len(v)
    return [v[i] * v[j] * (1 if i == j else 2) for i in range(n) for j in range(i, n)]


def _sym_from_vec(x, n):
    A = [[Fraction(0)] * n for _ in range(n)]
    k = 0
    for i in range(n):
        for j in range(i, n):
            A[i][j] = A[j][i] = Fraction(x[k])
            k += 1
    return A


# --- SL_n(Z) equivalence of vector configurations ----------------------------------


def sl_equivalent(S1, S2) -> bool:
    """Is there g in SL_n(Z) with {+-v g : v in S1} = {+-w : w in S2}?"""
    S1, S2 = [tuple(v) for v in S1], [tuple(v) for v in S2]
    if len(S1) != len(S2):
        return False
    n = len(S1[0])
    base = None
    for B in combinations(S1, n):
        if _det(B) != 0:
            base = B
            break
    if base is None:
        return False
    Binv = _inv(base)
    target = {_norm(w) for w in S2}
    signed = [w for u in S2 for w in (u, tuple(-x for x in u))]
    for img in permutations(signed, n):
        g = [[sum(Binv[i][k] * img[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        if any(x.denominator != 1 for r in g for x in r) or _det(g) != 1:
            continue
        if {_norm(tuple(sum(v[i] * g[i][j] for i in range(n)) for j in range(n))) for v in S1} == target:
            return True
    return False


def classify(cells):
    """Group (signature, dim) pairs into SL_n(Z)-classes; returns dim -> number of classes."""
    reps: dict = {}
    for sig, d in cells:
        bucket = reps.setdefault(d, [])
        if not any(sl_equivalent(r, sig) for r in bucket):
            bucket.append(sig)
    return {d: len(v) for d, v in sorted(reps.items())}


# --- n = 2: brute-force enumeration of well-rounded signatures -----------------------


def primitive_vectors(n: int, bound: int):
    out = set()
    for v in product(range(-bound, bound + 1), repeat=n):
        if any(v):
            g = 0
            for x in v:
                g = gcd(g, x)
            if g == 1:
                out.add(_norm(v))
    return sorted(out)


def n2_cells(bound: int = 2, grid: int = 32):
    """All cells of the n=2 retract whose signature vectors have entries in [-bound, bound].

    Vertices: three or more vectors determine the form; accept when it is
    positive definite with exactly that minimal set.  Edges: two spanning
    vectors; the forms with both values 1 are a line parametrized by the
    off-diagonal Gram entry b in (-1, 1), scanned on a grid.
    """
    P = primitive_vectors(2, bound)
    cells = []
    for size in (2, 3, 4):
        for S in combinations(P, size):
            if _rank(S) < 2:
                continue
            if size >= 3:
                rows = [_lf(v) for v in S[:3]]
                x = _solve(rows, [1, 1, 1])
                if x is None:
                    continue
                A = _sym_from_vec(x, 2)
                if not _is_pd(A):
                    continue
                m, vecs = _min_set(A)
                if m == 1 and vecs == set(S):
                    cells.append((S, 0))
            else:
                M = [list(S[0]), list(S[1])]
                Mi = _inv(M)
                for k in range(-grid + 1, grid):
                    b = Fraction(k, grid)
                    G = [[1, b], [b, 1]]
                    A = [[sum(Mi[i][p] * G[p][q] * Mi[j][q] for p in range(2) for q in range(2)) for j in range(2)]
                         for i in range(2)]
                    m, vecs = _min_set(A)
                    if m == 1 and vecs == set(S):
                        cells.append((S, 1))
                        break
    return cells


# --- n = 3: cells around the perfect form A3 ------------------------------------------

A3_GRAM = [[Fraction(1), Fraction(1, 2), Fraction(1, 2)],
           [Fraction(1, 2), Fraction(1), Fraction(1, 2)],
           [Fraction(1, 2), Fraction(1, 2), Fraction(1)]]


def n3_cells(box: int = 2):
    """Cells of the n=3 retract with the A3 vertex in their closure.

    A subset S of the six minimal pairs of A3 is a cell exactly when some
    symmetric D vanishes on S and is positive on the remaining minimal
    vectors (then A3 + eps D has minimal set S).  D is searched by brute
    force over integer matrices with entries in [-box, box].  Dimension is
    6 minus the rank of the linear forms of S.  Since A3 is the unique
    perfect form in rank 3 and every cell is a compact polytope, these
    subsets meet every SL_3(Z)-orbit of cells.
    """
    m, M = _min_set(A3_GRAM)
    assert m == 1 and len(M) == 6
    M = sorted(M)
    Ds = [_sym_from_vec(x, 3) for x in product(range(-box, box + 1), repeat=6)]
    cells = []
    for size in range(3, 7):
        for S in combinations(M, size):
            if _rank(S) < 3:
                continue
            rest = [v for v in M if v not in S]
            if rest:
                ok = any(
                    all(_val(D, v) == 0 for v in S) and all(_val(D, v) > 0 for v in rest) for D in Ds
                )
                if not ok:
                    continue
            cells.append((S, 6 - _rank([_lf(v) for v in S])))
    return cells


# --- H*(Gamma cap B, Sym^k) for SL_2(Z) -----------------------------------------------------


def sym_matrix(g, k: int):
    """P(x, y) -> P((x, y) g) on the monomial basis x^(k-i) y^i (columns = images)."""
    (a, b), (c, d) = g
    M = [[0] * (k + 1) for _ in range(k + 1)]
    for i in range(k + 1):
        # (a x + c y)^(k-i) (b x + d y)^i
        for p in range(k - i + 1):
            for q in range(i + 1):
                coef = comb(k - i, p) * a ** (k - i - p) * c ** p * comb(i, q) * b ** (i - q) * d ** q
                M[p + q][i] += coef
    return M


def borel_cohomology(k: int):
    """(dim H^0, dim H^1) of {+-1} x <u>, u = [[1,0],[1,1]], acting on Sym^k Q^2.

    Over Q the finite factor only cuts down to its invariants; for the
    infinite cyclic factor H^0 = ker(u - 1) and H^1 = coker(u - 1).
    """
    N = k + 1
    sign = (-1) ** k
    if sign == -1:
        return 0, 0
    U = sym_matrix(((1, 0), (1, 1)), k)
    Um1 = [[U[i][j] - int(i == j) for j in range(N)] for i in range(N)]
    r = _rank(Um1)
    return N - r, N - r


# --- strict homogeneous systems ------------------------------------------------------------


def _basic_solution(A, b):
    """Unique solution of A x = b (A given by rows) or None when singular or inconsistent."""
    rows = [[Fraction(x) for x in r] + [Fraction(y)] for r, y in zip(A, b)]
    k = len(A[0])
    piv = []
    r = 0
    for c in range(k):
        p = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if p is None:
            return None
        rows[r], rows[p] = rows[p], rows[r]
        rows[r] = [x / rows[r][c] for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * e for a, e in zip(rows[i], rows[r])]
        piv.append(c)
        r += 1
    if any(row[-1] != 0 for row in rows[r:]):
        return None
    return [rows[i][-1] for i in range(k)]


def strict_system_feasible(H) -> bool:
    """Gordan's alternative: H y > 0 is solvable iff no lambda >= 0 with sum 1 has lambda H = 0.

    The polytope of such lambda is nonempty iff it has a vertex, and vertices
    are basic solutions supported on at most m + 1 rows.
    """
    m = len(H[0])
    for k in range(1, min(len(H), m + 1) + 1):
        for R in combinations(range(len(H)), k):
            A = [[H[i][j] for i in R] for j in range(m)] + [[1] * k]
            lam = _basic_solution(A, [0] * m + [1])
            if lam is not None and all(x >= 0 for x in lam):
                return False
    return True
