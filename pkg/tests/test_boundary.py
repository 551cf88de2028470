from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import borel_cohomology
from tempered_spine.boundary import (
    FlagClasses,
    abutment_dims,
    e1_page,
    e2_page,
    flag_reps,
    lemma73_constants,
    psi_map,
    subcomplex_WF,
)
from tempered_spine.equivariant import CoefficientModule
from tempered_spine.flags import Flag
from tempered_spine.groups import SL, HeckeSubgroup
from tempered_spine.hecke import _base_slice, base_complex, base_psi
from tempered_spine.lattice import QForm, TemperedWeight, WeightSystem
from tempered_spine.linalg import matmul

A2 = ((1, 0), (0, 2))


@st.composite
def sl_elements(draw, n=2):
    g = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(draw(st.integers(0, 8))):
        i, j = draw(st.sampled_from([(i, j) for i in range(n) for j in range(n) if i != j]))
        e = draw(st.sampled_from([-1, 1]))
        g = [[g[r][c] + (e * g[j][c] if r == i else 0) for c in range(n)] for r in range(n)]
    return tuple(map(tuple, g))


# --- flags -----------------------------------------------------------------------------------


def test_flag_reps_examples():
    assert flag_reps(2, 2, SL(2)) == [Flag.standard(2, [1])]
    assert len(flag_reps(3, 2, SL(3))) == 2
    assert len(flag_reps(3, 3, SL(3))) == 1
    assert len(flag_reps(2, 2, HeckeSubgroup(A2))) == 2
    with pytest.raises(ValueError):
        flag_reps(2, 3, SL(2))


@settings(max_examples=30, deadline=None)
@given(sl_elements(), st.sampled_from(["sl", "hecke"]), st.integers(0, 1))
def test_locate_roundtrip_n2(g, which, r):
    group = SL(2) if which == "sl" else HeckeSubgroup(A2)
    fc = FlagClasses(group)
    reps = fc.reps(2)
    rep = reps[r % len(reps)]
    flag = rep.act(g)
    i, h = fc.locate(flag)
    assert reps[i].act(h) == flag
    assert group.contains(h)
    if group.contains(g):
        assert reps[i] == rep


@settings(max_examples=20, deadline=None)
@given(sl_elements(n=3), st.sampled_from([(1,), (2,), (1, 2)]))
def test_locate_roundtrip_n3(g, dims):
    fc = FlagClasses(SL(3))
    flag = Flag.standard(3, dims).act(g)
    i, h = fc.locate(flag)
    assert fc.reps(len(dims) + 1)[i].act(h) == flag


def test_subcomplex_wf_n2():
    sl = _base_slice(2)
    f = Flag.standard(2, [1])
    cells, table = subcomplex_WF(sl.chunk, f, sl.tables)
    assert cells and all((1, 0) in s for s in cells)
    assert table.counts() == {0: 1, 1: 1}


def test_subcomplex_wf_refinement_n3():
    sl = _base_slice(3)
    full, _ = subcomplex_WF(sl.chunk, Flag.standard(3, [1, 2]))
    line, _ = subcomplex_WF(sl.chunk, Flag.standard(3, [1]))
    plane, _ = subcomplex_WF(sl.chunk, Flag.standard(3, [2]))
    assert full and set(full) <= set(line) & set(plane)


# --- double complexes ---------------------------------------------------------------------------


def test_boundary_n2_trivial():
    grid = base_complex(2, CoefficientModule(2), "boundary")
    assert grid.P == 1
    assert grid.betti() == [1, 1]
    assert grid.betti() == list(borel_cohomology(0))


def test_boundary_n2_sym10_matches_borel_oracle():
    grid = base_complex(2, CoefficientModule.parse("sym:10", 2), "boundary")
    assert grid.betti() == list(borel_cohomology(10)) == [1, 1]


def test_boundary_n3_structure():
    grid = base_complex(3, CoefficientModule(3), "boundary")
    assert grid.P == 2
    assert [len(c) for c in grid.columns] == [2, 1]
    assert grid.algebra_residuals() == {"dv2": 0, "dh2": 0, "anti": 0}
    assert grid.betti() == [1, 0, 0, 0, 1]


def test_psi_examples():
    psi = base_psi(2, CoefficientModule(2))
    assert psi.induced()[0].rank() == 1
    psi = base_psi(2, CoefficientModule.parse("sym:10", 2))
    assert psi.is_chain_map()
    assert psi.induced()[1].rank() == 1


def test_psi_requires_same_chunk():
    from tempered_spine.tempered import critical_temperaments, make_complex

    lad = critical_temperaments(2, A2, boundary=True)
    rho = CoefficientModule(2)
    other = make_complex(lad, lad.slice(3), rho, "boundary")
    with pytest.raises(ValueError):
        psi_map(base_complex(2, rho, "interior"), other)


def test_e1_page_n2():
    page = e1_page(base_complex(2, CoefficientModule(2), "boundary"))
    assert page.terms == {(0, 0): 1, (0, 1): 1}
    assert page.differentials == {}
    assert abutment_dims(e2_page(page), 2) == [1, 1]


def test_e1_page_n3():
    grid = base_complex(3, CoefficientModule(3), "boundary")
    page = e1_page(grid)
    assert set(page.differentials) == {(0, q) for q in range(grid.Q)}
    assert abutment_dims(e2_page(page), len(grid.dims)) == grid.betti()


def test_zero_grid_gives_zero_page():
    # -1 acts by -1 on odd symmetric powers, killing every invariant
    grid = base_complex(2, CoefficientModule.parse("sym:1", 2), "boundary")
    assert grid.dims == [0, 0]
    assert all(d == 0 for d in e1_page(grid).terms.values())


# --- lemma constants ------------------------------------------------------------------------------


def test_lemma73_examples():
    f = Flag.standard(2, [1])
    w = TemperedWeight.trivial(2)
    assert lemma73_constants(QForm.identity(2), w, f) == [(1, 1, Fraction(1, 2))]
    assert lemma73_constants(QForm.diagonal([1, 4]), w, f) == [(4, 1, 1)]


def test_lemma73_continuity():
    f = Flag.standard(2, [1])
    ws = WeightSystem(2, m0_basis=A2)
    base = lemma73_constants(QForm.identity(2), TemperedWeight(ws, 1), f)[0][2]
    for k in (1000, 100, 10):
        s = 1 + Fraction(1, k)
        t = lemma73_constants(QForm.identity(2), TemperedWeight(ws, s), f)[0][2]
        assert abs(t - base) <= Fraction(1, k)


def test_column_cohomology_classes_are_cocycles():
    grid = base_complex(2, CoefficientModule.parse("sym:10", 2), "boundary")
    for p in range(grid.P):
        for q, h in enumerate(grid.column_cohomology(p)):
            if h.dim and q < grid.Q - 1:
                d = grid.dv[(p, q)]
                assert matmul(d, h.basis).to_list() == [[0] * h.dim for _ in range(d.shape[0])]
