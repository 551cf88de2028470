from __future__ import annotations

from fractions import Fraction
from itertools import product
from math import isqrt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import pd_forms, unimodular
from tempered_spine.lattice import (
    QForm,
    TemperedWeight,
    WeightSystem,
    arithmetic_minimum,
    normalize_homothety,
    short_vectors,
    weighted_length,
)

E1, E2 = (1, 0), (0, 1)
HEX = QForm([[2, 1], [1, 2]])
M0_2Y = WeightSystem(2, m0_basis=((1, 0), (0, 2)))


def pm(*vs):
    return {v for u in vs for v in (u, tuple(-x for x in u))}


# --- oracles -------------------------------------------------------------------


def _inverse_diag(A):
    """Diagonal of A^{-1} with Fractions (cofactor formula, n <= 3)."""
    n = len(A)
    M = [[Fraction(x) for x in r] for r in A]
    if n == 2:
        det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
        return [M[1][1] / det, M[0][0] / det]
    det = (
        M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
        - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
        + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])
    )
    minors = [
        M[1][1] * M[2][2] - M[1][2] * M[2][1],
        M[0][0] * M[2][2] - M[0][2] * M[2][0],
        M[0][0] * M[1][1] - M[0][1] * M[1][0],
    ]
    return [m / det for m in minors]


def brute_short(A, bound):
    """Box enumeration: |x_i|^2 <= bound * (A^-1)_ii bounds every candidate."""
    n = len(A)
    box = []
    for d in _inverse_diag(A):
        r = Fraction(bound) * d
        box.append(isqrt(r.numerator // r.denominator) + 1)
    out = set()
    for v in product(*[range(-b, b + 1) for b in box]):
        if any(v):
            val = sum(v[i] * A[i][j] * v[j] for i in range(n) for j in range(n))
            if val <= bound:
                out.add(v)
    return out


# --- weighted_length ---------------------------------------------------------------


def test_weighted_length_examples():
    assert weighted_length(QForm.identity(2), TemperedWeight.trivial(2), E1) == 1
    assert weighted_length(QForm.identity(2), TemperedWeight(M0_2Y, 4), E2) == 4
    assert weighted_length(HEX, TemperedWeight.trivial(2), (1, -1)) == 2


def test_weighted_length_errors():
    w = TemperedWeight.trivial(2)
    with pytest.raises(ValueError):
        weighted_length(QForm.identity(2), w, (0, 0))
    with pytest.raises(ValueError):
        weighted_length(QForm.identity(2), w, (1, 0, 0))


def test_qform_validation():
    with pytest.raises(ValueError):
        QForm([[1, 2], [0, 1]])
    with pytest.raises(ValueError):
        QForm([[1, 2], [2, 1]])
    with pytest.raises(ValueError):
        TemperedWeight(M0_2Y, Fraction(1, 2))
    with pytest.raises(ValueError):
        WeightSystem(2, m0_basis=((1, 1), (2, 2)))


# --- arithmetic_minimum and short_vectors ---------------------------------------------


def test_arithmetic_minimum_examples():
    r = arithmetic_minimum(QForm.identity(2), TemperedWeight.trivial(2))
    assert (r.minimum, set(r.vectors), r.span_rank) == (1, pm(E1, E2), 2)
    r = arithmetic_minimum(HEX, TemperedWeight.trivial(2))
    assert (r.minimum, set(r.vectors), r.span_rank) == (2, pm(E1, E2, (1, -1)), 2)
    r = arithmetic_minimum(QForm.identity(2), TemperedWeight(M0_2Y, 4))
    assert (r.minimum, set(r.vectors), r.span_rank) == (1, pm(E1), 1)


def test_short_vectors_examples():
    assert short_vectors(QForm.identity(2), 1) == pm(E1, E2)
    assert short_vectors(QForm.diagonal([1, 4]), 1) == pm(E1)
    assert short_vectors(HEX, 2) == pm(E1, E2, (1, -1))


@settings(max_examples=60, deadline=None)
@given(pd_forms(), st.integers(1, 12))
def test_short_vectors_match_box_enumeration(A, bound):
    assert short_vectors(QForm(A), bound) == brute_short(A, bound)


@settings(max_examples=40, deadline=None)
@given(pd_forms(), st.fractions(min_value=Fraction(1, 7), max_value=7))
def test_scaling_covariance(A, lam):
    f = QForm(A)
    w = TemperedWeight.trivial(f.n)
    r1, r2 = arithmetic_minimum(f, w), arithmetic_minimum(f.scaled(lam), w)
    assert r2.minimum == lam * r1.minimum
    assert set(r2.vectors) == set(r1.vectors)
    v = next(iter(r1.vectors))
    assert weighted_length(f.scaled(lam), w, v) == lam * weighted_length(f, w, v)


@settings(max_examples=40, deadline=None)
@given(pd_forms(n=2), st.integers(1, 6))
def test_minimal_vectors_are_short(A, s):
    f = QForm(A)
    w = TemperedWeight(M0_2Y, s)
    r = arithmetic_minimum(f, w)
    assert set(r.vectors) <= short_vectors(f, r.minimum / w.min_weight)
    assert all(weighted_length(f, w, v) == r.minimum for v in r.vectors)
    assert all(tuple(-x for x in v) in r.vectors for v in r.vectors)


@settings(max_examples=30, deadline=None)
@given(pd_forms(n=2))
def test_s_equal_one_is_untempered(A):
    f = QForm(A)
    a = arithmetic_minimum(f, TemperedWeight(M0_2Y, 1))
    b = arithmetic_minimum(f, TemperedWeight.trivial(2))
    assert (a.minimum, set(a.vectors)) == (b.minimum, set(b.vectors))


@settings(max_examples=40, deadline=None)
@given(pd_forms(n=2), unimodular())
def test_gl_invariance(A, g):
    f = QForm(A)
    w = TemperedWeight.trivial(2)
    fg = f.transformed(g)
    r, rg = arithmetic_minimum(f, w), arithmetic_minimum(fg, w)
    assert r.minimum == rg.minimum
    # fg(v) = f(v g), so v is minimal for fg exactly when v g is minimal for f
    image = {tuple(sum(v[i] * g[i][j] for i in range(2)) for j in range(2)) for v in rg.vectors}
    assert image == set(r.vectors)


# --- normalize_homothety ------------------------------------------------------------------


def test_normalize_examples():
    w = TemperedWeight.trivial(2)
    half = Fraction(1, 2)
    assert normalize_homothety(HEX, w).entries == ((1, half), (half, 1))
    assert normalize_homothety(QForm.identity(2), w).entries == QForm.identity(2).entries
    assert normalize_homothety(QForm.diagonal([4, 4]), w).entries == QForm.identity(2).entries


@settings(max_examples=30, deadline=None)
@given(pd_forms())
def test_normalize_gives_minimum_one(A):
    f = QForm(A)
    w = TemperedWeight.trivial(f.n)
    g = normalize_homothety(f, w)
    r = arithmetic_minimum(g, w)
    assert r.minimum == 1
    assert set(r.vectors) == set(arithmetic_minimum(f, w).vectors)
