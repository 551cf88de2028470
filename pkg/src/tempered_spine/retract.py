"""The weighted well-rounded retraction, evaluated at the end of the homotopy.

Scalars are stored squared: scaling the orthogonal complement by mu changes
Gram entries by mu^2 only, so ``mu_squared`` stays rational.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq, is_square

from tempered_spine.integer import saturate
from tempered_spine.lattice import (
    QForm,
    TemperedWeight,
    _inverse,
    arithmetic_minimum,
    normalize_homothety,
    short_vectors,
)


class RetractionError(ValueError):
    pass


@dataclass(frozen=True)
class MinimaFlag:
    """Strictly increasing chain of saturated sublattices ending at Z^n."""

    subspaces: tuple[tuple[tuple[int, ...], ...], ...]

    def __post_init__(self):
        ranks = [len(b) for b in self.subspaces]
        if any(a >= b for a, b in zip(ranks, ranks[1:])):
            raise ValueError("flag must be strictly increasing")

    @property
    def ranks(self) -> list[int]:
        return [len(b) for b in self.subspaces]


@dataclass(frozen=True)
class RetractionStep:
    mu_squared: mpq
    subspace: tuple[tuple[int, ...], ...]
    form_after: QForm

    @property
    def mu(self):
        """Exact mu when mu^2 is a rational square, else a float (diagnostic)."""
        m = self.mu_squared
        if is_square(m.numerator) and is_square(m.denominator):
            from gmpy2 import isqrt

            return mpq(isqrt(m.numerator), isqrt(m.denominator))
        return float(m) ** 0.5


@dataclass(frozen=True)
class RetractionTrace:
    steps: tuple[RetractionStep, ...]
    result: QForm
    flag: MinimaFlag


def _mat(A, B):
    return [[sum(a * b for a, b in zip(r, c)) for c in zip(*B)] for r in A]


def _transpose(A):
    return [list(c) for c in zip(*A)]


def split_form(form: QForm, basis):
    """Decompose A = A_U + A_perp for the A-orthogonal projection onto span(basis)."""
    A = [list(r) for r in form.entries]
    U = [[mpq(x) for x in r] for r in basis]
    AUt = _mat(A, _transpose(U))
    G = _mat(U, AUt)
    A_U = _mat(_mat(AUt, _inverse(G)), _transpose(AUt))
    A_perp = [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(A, A_U)]
    return A_U, A_perp


def _qval(M, v):
    n = len(v)
    return sum(v[i] * v[j] * M[i][j] for i in range(n) for j in range(n) if v[i] and v[j])


def _independent(vectors):
    from tempered_spine.linalg import dm, rank

    chosen = []
    for v in sorted(vectors):
        if rank(dm(chosen + [list(v)])) > len(chosen):
            chosen.append(list(v))
    return chosen


def retraction_step(form: QForm, w: TemperedWeight):
    """One scaling step; returns ``(mu_squared, new_form)``."""
    rep = arithmetic_minimum(form, w)
    if rep.minimum != 1:
        raise RetractionError("form must be normalized to minimum 1")
    n = form.n
    if rep.span_rank == n:
        raise RetractionError("no step needed: form is already well rounded")
    basis = _independent(rep.vectors)
    A_U, A_perp = split_form(form, basis)

    def scaled(t):
        return QForm(
            [[u + t * p for u, p in zip(r1, r2)] for r1, r2 in zip(A_U, A_perp)], check=False
        )

    t = mpq(1, 2)
    for _ in range(200):
        F = scaled(t)
        roots = []
        for v in short_vectors(F, 1 / w.min_weight):
            phi = w.phi(v)
            a = phi * _qval(A_perp, v)
            if a == 0:
                continue
            b = phi * _qval(A_U, v)
            if a * t + b <= 1:
                roots.append((1 - b) / a)
        if roots:
            mu2 = max(roots)
            if not 0 < mu2 < 1:
                raise RetractionError(f"crossing parameter {mu2} outside (0, 1)")
            new = scaled(mu2)
            return mu2, new
        t /= 2
    raise RetractionError("no crossing found for the retraction step")


def well_rounded_retract(form: QForm, w: TemperedWeight) -> RetractionTrace:
    """Iterate retraction steps until the minimal vectors span."""
    f = normalize_homothety(form, w)
    n = form.n
    steps = []
    flag = []
    while True:
        rep = arithmetic_minimum(f, w)
        sub = saturate(rep.vectors, n)
        if not flag or len(sub) > len(flag[-1]):
            flag.append(sub)
        if rep.span_rank == n:
            break
        if len(steps) >= n - 1:
            raise RetractionError("retraction did not terminate within n-1 steps")
        mu2, f = retraction_step(f, w)
        steps.append(RetractionStep(mu2, sub, f))
    return RetractionTrace(tuple(steps), f, MinimaFlag(tuple(flag)))


def cell_signature(form: QForm, w: TemperedWeight) -> tuple[tuple[int, ...], ...]:
    """Weighted minimal vectors up to sign, canonically ordered."""
    rep = arithmetic_minimum(form, w)
    if rep.span_rank != form.n:
        raise RetractionError("form is not well rounded")
    return canonical_signature(rep.vectors)


def sign_normalize(v):
    for x in v:
        if x:
            return tuple(v) if x > 0 else tuple(-y for y in v)
    raise ValueError("zero vector")


def canonical_signature(vectors) -> tuple[tuple[int, ...], ...]:
    return tuple(sorted({sign_normalize(v) for v in vectors}))
