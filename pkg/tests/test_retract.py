from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempered_spine.lattice import QForm, TemperedWeight, WeightSystem, arithmetic_minimum
from tempered_spine.retract import (
    RetractionError,
    cell_signature,
    retraction_step,
    well_rounded_retract,
)

from strategies import pd_forms, unimodular

TRIV = TemperedWeight.trivial(2)
M0_2Y = WeightSystem(2, m0_basis=((1, 0), (0, 2)))


def test_retraction_step_examples():
    mu2, f = retraction_step(QForm.diagonal([1, 4]), TRIV)
    assert (mu2, f) == (Fraction(1, 4), QForm.identity(2))
    mu2, f = retraction_step(QForm.diagonal([1, 9]), TRIV)
    assert (mu2, f) == (Fraction(1, 9), QForm.identity(2))
    mu2, f = retraction_step(QForm.identity(2), TemperedWeight(M0_2Y, 4))
    assert (mu2, f) == (Fraction(1, 4), QForm.diagonal([1, Fraction(1, 4)]))


def test_retraction_step_errors():
    with pytest.raises(RetractionError):
        retraction_step(QForm.identity(2), TRIV)
    with pytest.raises(RetractionError):
        retraction_step(QForm.diagonal([2, 8]), TRIV)


def test_well_rounded_retract_examples():
    tr = well_rounded_retract(QForm.identity(2), TRIV)
    assert tr.steps == () and tr.result == QForm.identity(2)
    assert tr.flag.ranks == [2]
    tr = well_rounded_retract(QForm.diagonal([1, 4]), TRIV)
    assert len(tr.steps) == 1 and tr.result == QForm.identity(2)
    assert tr.flag.subspaces == (((1, 0),), ((1, 0), (0, 1)))
    tr = well_rounded_retract(QForm.diagonal([1, 4, 25]), TemperedWeight.trivial(3))
    assert len(tr.steps) == 2 and tr.result == QForm.identity(3)
    assert tr.flag.ranks == [1, 2, 3]
    assert tr.steps[0].mu == Fraction(1, 2)


def test_cell_signature_examples():
    assert cell_signature(QForm.identity(2), TRIV) == ((0, 1), (1, 0))
    half = Fraction(1, 2)
    assert cell_signature(QForm([[1, half], [half, 1]]), TRIV) == ((0, 1), (1, -1), (1, 0))
    tw = TemperedWeight(M0_2Y, 4)
    assert cell_signature(QForm.diagonal([1, Fraction(1, 4)]), tw) == ((0, 1), (0, 2), (1, 0))
    with pytest.raises(RetractionError):
        cell_signature(QForm.diagonal([1, 4]), TRIV)


@settings(max_examples=40, deadline=None)
@given(pd_forms())
def test_retract_properties(A):
    f = QForm(A)
    w = TemperedWeight.trivial(f.n)
    tr = well_rounded_retract(f, w)
    assert len(tr.steps) <= f.n - 1
    assert arithmetic_minimum(tr.result, w).span_rank == f.n
    assert well_rounded_retract(tr.result, w).steps == ()
    ranks = tr.flag.ranks
    assert ranks == sorted(set(ranks)) and ranks[-1] == f.n
    for st_ in tr.steps:
        assert 0 < st_.mu_squared < 1


@settings(max_examples=40, deadline=None)
@given(pd_forms(n=2), unimodular())
def test_retract_equivariance(A, g):
    f = QForm(A)
    r = well_rounded_retract(f, TRIV).result
    rg = well_rounded_retract(f.transformed(g), TRIV).result
    assert rg == r.transformed(g)


@settings(max_examples=30, deadline=None)
@given(pd_forms(n=2), st.integers(1, 9))
def test_tempered_retract_and_s_one(A, s):
    f = QForm(A)
    tw = TemperedWeight(M0_2Y, s)
    tr = well_rounded_retract(f, tw)
    assert arithmetic_minimum(tr.result, tw).span_rank == 2
    t1 = well_rounded_retract(f, TemperedWeight(M0_2Y, 1))
    t0 = well_rounded_retract(f, TRIV)
    assert t1.result == t0.result and t1.flag == t0.flag
