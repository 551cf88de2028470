"""Quadratic forms, weights and arithmetic minima with exact rationals.

Vectors are row vectors (tuples of ints); the value of a form ``A`` on ``v``
is ``v A v^T``.  A group element ``g`` moves a form to ``g A g^T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isqrt
from typing import Callable, Sequence

from gmpy2 import mpq

from tempered_spine.linalg import dm, rank as _rank

Vector = tuple[int, ...]


def _as_rat(x) -> mpq:
    if isinstance(x, str):
        if "/" in x:
            p, q = x.split("/")
            return mpq(int(p), int(q))
    return mpq(x)


def _det(M):
    """Exact determinant by fraction elimination (small matrices)."""
    M = [list(map(mpq, r)) for r in M]
    n = len(M)
    det = mpq(1)
    for i in range(n):
        piv = next((r for r in range(i, n) if M[r][i] != 0), None)
        if piv is None:
            return mpq(0)
        if piv != i:
            M[i], M[piv] = M[piv], M[i]
            det = -det
        det *= M[i][i]
        for r in range(i + 1, n):
            f = M[r][i] / M[i][i]
            if f:
                for c in range(i, n):
                    M[r][c] -= f * M[i][c]
    return det


def _inverse(M):
    n = len(M)
    A = [list(map(mpq, r)) + [mpq(int(i == j)) for j in range(n)] for i, r in enumerate(M)]
    for i in range(n):
        piv = next((r for r in range(i, n) if A[r][i] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        A[i], A[piv] = A[piv], A[i]
        p = A[i][i]
        A[i] = [x / p for x in A[i]]
        for r in range(n):
            if r != i and A[r][i] != 0:
                f = A[r][i]
                A[r] = [x - f * y for x, y in zip(A[r], A[i])]
    return [row[n:] for row in A]


class QForm:
    """Positive-definite symmetric rational matrix (Gram form of a marked lattice)."""

    __slots__ = ("n", "entries", "_hash")

    def __init__(self, entries: Sequence[Sequence], check: bool = True):
        rows = tuple(tuple(_as_rat(x) for x in r) for r in entries)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("form must be a nonempty square matrix")
        self.n = n
        self.entries = rows
        self._hash = None
        if check:
            for i in range(n):
                for j in range(i):
                    if rows[i][j] != rows[j][i]:
                        raise ValueError("form is not symmetric")
            if not self.is_positive_definite():
                raise ValueError("form is not positive definite")

    @classmethod
    def identity(cls, n: int) -> "QForm":
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def diagonal(cls, diag: Sequence) -> "QForm":
        n = len(diag)
        return cls([[diag[i] if i == j else 0 for j in range(n)] for i in range(n)])

    def is_positive_definite(self) -> bool:
        return all(_det([r[:k] for r in self.entries[:k]]) > 0 for k in range(1, self.n + 1))

    def value(self, v: Sequence[int]) -> mpq:
        A = self.entries
        n = self.n
        if len(v) != n:
            raise ValueError(f"vector of length {len(v)} for form of dimension {n}")
        total = mpq(0)
        for i in range(n):
            vi = v[i]
            if not vi:
                continue
            row = A[i]
            total += vi * vi * row[i]
            for j in range(i + 1, n):
                if v[j]:
                    total += 2 * vi * v[j] * row[j]
        return total

    def scaled(self, lam) -> "QForm":
        lam = _as_rat(lam)
        return QForm([[lam * x for x in r] for r in self.entries], check=False)

    def transformed(self, g: Sequence[Sequence]) -> "QForm":
        """``g A g^T``."""
        n = self.n
        A = self.entries
        gA = [[sum(mpq(g[i][k]) * A[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        return QForm(
            [[sum(gA[i][k] * g[j][k] for k in range(n)) for j in range(n)] for i in range(n)],
            check=False,
        )

    def __eq__(self, other):
        return isinstance(other, QForm) and self.entries == other.entries

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.entries)
        return self._hash

    def __repr__(self):
        body = ", ".join("[" + ", ".join(str(x) for x in r) + "]" for r in self.entries)
        return f"QForm([{body}])"

    def to_json(self):
        from tempered_spine.linalg import rat_str

        return [[rat_str(x) for x in r] for r in self.entries]


@dataclass(frozen=True)
class WeightSystem:
    """Positive weights on nonzero lattice vectors.

    ``base`` maps a primitive vector to a positive rational (constant 1 when
    omitted); ``base_min`` must bound ``base`` from below.  ``m0_basis`` rows
    span the sublattice M0 used by the tempered family.
    """

    n: int
    base: Callable[[Vector], mpq] | None = None
    base_min: mpq = mpq(1)
    m0_basis: tuple[tuple[int, ...], ...] | None = None
    _m0_inv: tuple = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.m0_basis is not None:
            B = tuple(tuple(int(x) for x in r) for r in self.m0_basis)
            if len(B) != self.n or any(len(r) != self.n for r in B):
                raise ValueError("m0_basis must be n x n")
            if _det(B) == 0:
                raise ValueError("m0_basis must have nonzero determinant")
            object.__setattr__(self, "m0_basis", B)
            object.__setattr__(self, "_m0_inv", tuple(map(tuple, _inverse(B))))
        if mpq(self.base_min) <= 0:
            raise ValueError("weights must be positive")
        object.__setattr__(self, "base_min", mpq(self.base_min))

    @classmethod
    def from_hecke(cls, a: Sequence[Sequence[int]]) -> "WeightSystem":
        """Weights whose sublattice is M0 = Z^n a."""
        return cls(n=len(a), m0_basis=tuple(tuple(r) for r in a))

    def base_weight(self, v: Vector) -> mpq:
        if self.base is None:
            return mpq(1)
        g = 0
        for x in v:
            g = _gcd(g, x)
        w = mpq(self.base(tuple(x // g for x in v)))
        if w <= 0:
            raise ValueError(f"nonpositive weight at {v}")
        return w

    def in_m0(self, v: Sequence[int]) -> bool:
        if self.m0_basis is None:
            return True
        inv = self._m0_inv
        n = self.n
        for j in range(n):
            c = sum(v[i] * inv[i][j] for i in range(n) if v[i])
            if c.denominator != 1:
                return False
        return True

    @property
    def m0_index(self) -> int:
        if self.m0_basis is None:
            return 1
        return abs(int(_det(self.m0_basis)))

    def validate_invariance(self, generators, samples) -> bool:
        """Check base(v g) == base(v) on the sampled vectors (finite check only)."""
        for g in generators:
            for v in samples:
                vg = tuple(sum(v[i] * g[i][j] for i in range(self.n)) for j in range(self.n))
                if self.base_weight(vg) != self.base_weight(tuple(v)):
                    return False
        return True


def _gcd(a: int, b: int) -> int:
    a, b = abs(a), abs(b)
    while b:
        a, b = b, a % b
    return a


@dataclass(frozen=True)
class TemperedWeight:
    """The weight family at parameter s = tau^2 (weights off M0 multiplied by s)."""

    weights: WeightSystem
    s: mpq = mpq(1)

    def __post_init__(self):
        s = _as_rat(self.s)
        if s < 1:
            raise ValueError("temperament parameter s must be >= 1")
        object.__setattr__(self, "s", s)

    @classmethod
    def trivial(cls, n: int) -> "TemperedWeight":
        return cls(WeightSystem(n))

    @property
    def n(self) -> int:
        return self.weights.n

    def at(self, s) -> "TemperedWeight":
        return TemperedWeight(self.weights, s)

    def phi(self, v: Sequence[int]) -> mpq:
        b = self.weights.base_weight(tuple(v))
        if self.s == 1 or self.weights.in_m0(v):
            return b
        return self.s * b

    @property
    def min_weight(self) -> mpq:
        return self.weights.base_min

    @property
    def is_untempered(self) -> bool:
        return self.weights.m0_basis is None or self.s == 1


@dataclass(frozen=True)
class MinimaReport:
    minimum: mpq
    vectors: frozenset
    span_rank: int


def weighted_length(form: QForm, w: TemperedWeight, v: Sequence[int]) -> mpq:
    """Phi_s(v) * v A v^T."""
    if len(v) != form.n or w.n != form.n:
        raise ValueError("dimension mismatch")
    if not any(v):
        raise ValueError("zero vector has no weighted length")
    return w.phi(v) * form.value(v)


def _ldl(form: QForm):
    """Cohen's quadratic completion: q(x) = sum_i q_ii (x_i + sum_{j>i} q_ij x_j)^2."""
    n = form.n
    q = [list(r) for r in form.entries]
    for i in range(n):
        for j in range(i + 1, n):
            q[j][i] = q[i][j]
            q[i][j] = q[i][j] / q[i][i]
        for k in range(i + 1, n):
            for l in range(k, n):
                q[k][l] -= q[k][i] * q[i][l]
    return q


def short_vectors(form: QForm, bound) -> set[Vector]:
    """All nonzero integer v with v A v^T <= bound (Fincke-Pohst, exact)."""
    bound = _as_rat(bound)
    if bound <= 0:
        raise ValueError("bound must be positive")
    n = form.n
    q = _ldl(form)
    diag = [q[i][i] for i in range(n)]
    out: set[Vector] = set()
    x = [0] * n

    def rec(i: int, remaining):
        if i < 0:
            if any(x):
                out.add(tuple(x))
            return
        c = -sum(q[i][j] * x[j] for j in range(i + 1, n))
        r2 = remaining / diag[i]
        rb = isqrt(int(r2)) + 1
        fc = int(c.numerator // c.denominator)
        for xi in range(fc - rb, fc + rb + 2):
            t = xi - c
            used = diag[i] * t * t
            if used <= remaining:
                x[i] = xi
                rec(i - 1, remaining - used)
        x[i] = 0

    rec(n - 1, bound)
    return out


def span_rank(vectors) -> int:
    vecs = list(vectors)
    if not vecs:
        return 0
    return _rank(dm(vecs))


def arithmetic_minimum(form: QForm, w: TemperedWeight) -> MinimaReport:
    """Least weighted length and the complete set of vectors attaining it."""
    n = form.n
    if w.n != n:
        raise ValueError("dimension mismatch")
    # upper bound from the coordinate vectors
    ub = None
    for i in range(n):
        e = tuple(int(i == j) for j in range(n))
        val = weighted_length(form, w, e)
        ub = val if ub is None or val < ub else ub
    best = None
    vecs: list[Vector] = []
    for v in short_vectors(form, ub / w.min_weight):
        val = w.phi(v) * form.value(v)
        if val > ub:
            continue
        if best is None or val < best:
            best, vecs = val, [v]
        elif val == best:
            vecs.append(v)
    return MinimaReport(best, frozenset(vecs), span_rank(vecs))


def normalize_homothety(form: QForm, w: TemperedWeight) -> QForm:
    """Rescale so that the arithmetic minimum is exactly 1."""
    m = arithmetic_minimum(form, w).minimum
    return form.scaled(1 / m)
