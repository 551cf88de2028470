"""Exact linear algebra over Q and F_p.

Thin helpers around sympy's ``DomainMatrix`` so the rest of the package can
work with plain nested lists.  Matrices act on column vectors; ``rows`` is
always a list of row lists.
"""

from __future__ import annotations

from functools import lru_cache

from gmpy2 import mpq
from sympy import GF, QQ
from sympy.polys.matrices import DomainMatrix

__all__ = [
    "mpq",
    "QQ",
    "parse_field",
    "field_spec",
    "field_characteristic",
    "dm",
    "zeros",
    "identity",
    "rank",
    "nullspace",
    "colspace_basis",
    "solve_columns",
    "matmul",
    "is_zero",
    "CohomologyData",
    "cohomology_data",
    "induced_matrix",
    "charpoly",
    "rat_str",
    "parse_rat",
]


def rat_str(x) -> str:
    """Canonical string ``p/q`` (or ``p``) for an exact rational."""
    x = mpq(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def parse_rat(s) -> mpq:
    if isinstance(s, str) and "/" in s:
        p, q = s.split("/")
        return mpq(int(p), int(q))
    return mpq(s)


@lru_cache(maxsize=None)
def _gf(p: int):
    return GF(p)


def parse_field(spec: str | int | None = "Q"):
    """``"Q"`` / ``0`` -> QQ, ``"Fp:7"`` / ``7`` -> GF(7)."""
    if spec is None or spec == 0 or spec == "Q":
        return QQ
    if isinstance(spec, int):
        return _gf(spec)
    if isinstance(spec, str) and spec.startswith("Fp:"):
        p = int(spec[3:])
        if p < 2 or any(p % d == 0 for d in range(2, int(p**0.5) + 1)):
            raise ValueError(f"not a prime: {p}")
        return _gf(p)
    raise ValueError(f"unparseable field spec {spec!r}")


def field_characteristic(K) -> int:
    return 0 if K == QQ else int(K.characteristic())


def field_spec(K) -> str:
    return "Q" if K == QQ else f"Fp:{field_characteristic(K)}"


def _conv(K, x):
    if K == QQ:
        return QQ(x.numerator, x.denominator) if hasattr(x, "denominator") else QQ(x)
    x = mpq(x)
    return K(int(x.numerator)) / K(int(x.denominator))


def dm(rows, K=QQ, shape=None) -> DomainMatrix:
    rows = [list(r) for r in rows]
    if shape is None:
        shape = (len(rows), len(rows[0]) if rows else 0)
    return DomainMatrix([[_conv(K, x) for x in r] for r in rows], shape, K)


def zeros(r: int, c: int, K=QQ) -> DomainMatrix:
    return DomainMatrix.zeros((r, c), K)


def identity(n: int, K=QQ) -> DomainMatrix:
    return DomainMatrix.eye(n, K)


def matmul(A: DomainMatrix, B: DomainMatrix) -> DomainMatrix:
    if A.shape[1] != B.shape[0]:
        raise ValueError(f"shape mismatch {A.shape} @ {B.shape}")
    if 0 in A.shape or 0 in B.shape:
        return zeros(A.shape[0], B.shape[1], A.domain)
    return A * B


def is_zero(A: DomainMatrix) -> bool:
    return 0 in A.shape or A.is_zero_matrix


def rank(A: DomainMatrix) -> int:
    if 0 in A.shape:
        return 0
    return A.rank()


def nullspace(A: DomainMatrix) -> DomainMatrix:
    """Columns spanning ``{x : A x = 0}`` (canonical, from the RREF)."""
    r, c = A.shape
    if c == 0:
        return zeros(0, 0, A.domain)
    if r == 0:
        return identity(c, A.domain)
    ns = A.nullspace()
    if ns.shape[0] == 0:
        return zeros(c, 0, A.domain)
    return ns.transpose()


def colspace_basis(A: DomainMatrix) -> DomainMatrix:
    """A maximal independent subset of the columns of A, as columns."""
    r, c = A.shape
    if r == 0 or c == 0:
        return zeros(r, 0, A.domain)
    _, pivots = A.rref()
    if not pivots:
        return zeros(r, 0, A.domain)
    return A.extract(list(range(r)), list(pivots))


def solve_columns(B: DomainMatrix, Y: DomainMatrix) -> DomainMatrix | None:
    """X with B X = Y where B has independent columns; None if inconsistent."""
    r, k = B.shape
    K = B.domain
    m = Y.shape[1]
    if m == 0:
        return zeros(k, 0, K)
    if k == 0:
        return zeros(0, m, K) if is_zero(Y) else None
    aug = B.hstack(Y)
    R, pivots = aug.rref()
    if any(p >= k for p in pivots):
        return None
    rows = R.to_list()
    out = [[K.zero] * m for _ in range(k)]
    for i, p in enumerate(pivots):
        for j in range(m):
            out[p][j] = rows[i][k + j]
    return DomainMatrix(out, (k, m), K)


class CohomologyData:
    """Kernel/image bookkeeping for one degree of a cochain complex.

    ``basis`` holds representative cocycles as columns; ``project`` sends a
    cocycle (column) to its cohomology coordinates.
    """

    def __init__(self, dim_cochains, d_in, d_out, K):
        self.K = K
        self.dim_cochains = dim_cochains
        if d_out is None or d_out.shape[0] == 0:
            Z = identity(dim_cochains, K)
        else:
            Z = nullspace(d_out)
        if d_in is None or d_in.shape[1] == 0:
            B = zeros(dim_cochains, 0, K)
        else:
            B = colspace_basis(d_in)
        self.boundaries = B
        # extend a basis of B to a basis of Z
        if Z.shape[1] == 0:
            H = zeros(dim_cochains, 0, K)
        else:
            stacked = B.hstack(Z)
            ext = colspace_basis(stacked)
            nb = B.shape[1]
            H = ext.extract(list(range(dim_cochains)), list(range(nb, ext.shape[1])))
        self.basis = H
        self._full = B.hstack(H)
        self.dim = H.shape[1]

    def project(self, Y: DomainMatrix) -> DomainMatrix:
        """Cohomology coordinates of cocycles given as columns of Y."""
        X = solve_columns(self._full, Y)
        if X is None:
            raise ValueError("not a cocycle")
        nb = self.boundaries.shape[1]
        return X.extract(list(range(nb, X.shape[0])), list(range(X.shape[1])))


def cohomology_data(dims, diffs, K=QQ) -> list[CohomologyData]:
    """Per-degree cohomology of a complex with ``diffs[q]: C^q -> C^{q+1}``."""
    out = []
    for q, d in enumerate(dims):
        d_in = diffs[q - 1] if q > 0 else None
        d_out = diffs[q] if q < len(diffs) else None
        out.append(CohomologyData(d, d_in, d_out, K))
    return out


def induced_matrix(f: DomainMatrix, src: CohomologyData, dst: CohomologyData) -> DomainMatrix:
    """Matrix of the map induced on cohomology by the cochain map f."""
    if src.dim == 0 or dst.dim == 0:
        return zeros(dst.dim, src.dim, src.K)
    return dst.project(matmul(f, src.basis))


def charpoly(A: DomainMatrix) -> list:
    """Coefficients, highest degree first."""
    if A.shape[0] == 0:
        return [A.domain.one]
    return A.charpoly()
