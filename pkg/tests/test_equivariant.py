from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import sym_matrix
from strategies import unimodular
from tempered_spine.equivariant import (
    BadPrimeError,
    ChainMap,
    CochainSpace,
    CoefficientModule,
    check_bad_primes,
    cohomology,
    identity_map,
    induced_map,
    sym_power_matrix,
)
from tempered_spine.groups import SL
from tempered_spine.hecke import _base_slice, base_complex, base_psi
from tempered_spine.linalg import QQ, dm, identity, parse_field, zeros
from tempered_spine.spine import Context


class _Toy(CochainSpace):
    def __init__(self, dims, D):
        self.dims = dims
        self.D = D


def _mat(M):
    return [list(r) for r in M.to_list()]


# --- coefficient modules ----------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(unimodular(), unimodular(), st.integers(0, 6))
def test_sym_power_is_homomorphism(g, h, k):
    gh = tuple(tuple(sum(g[i][t] * h[t][j] for t in range(2)) for j in range(2)) for i in range(2))
    A, B, C = sym_power_matrix(g, k), sym_power_matrix(h, k), sym_power_matrix(gh, k)
    AB = [[sum(A[i][t] * B[t][j] for t in range(k + 1)) for j in range(k + 1)] for i in range(k + 1)]
    assert AB == C


@settings(max_examples=30, deadline=None)
@given(unimodular(), st.integers(0, 8))
def test_sym_power_matches_binomial_oracle(g, k):
    # both realize P(x) -> P(x g) on monomials x^(k-i) y^i
    assert sym_power_matrix(g, k) == sym_matrix(g, k)


def test_coefficient_parse():
    assert CoefficientModule.parse("trivial", 2).dim == 1
    assert CoefficientModule.parse("sym:10", 2).dim == 11
    assert CoefficientModule.parse("sym:2", 3).dim == 6
    with pytest.raises(ValueError):
        CoefficientModule.parse("adjoint", 2)
    assert CoefficientModule(2, field=parse_field("Fp:5")).characteristic == 5


# --- bad primes -----------------------------------------------------------------------------


def test_bad_primes_examples():
    t = _base_slice(2).tables[Context(SL(2))]
    assert check_bad_primes([t], 0) == []
    assert check_bad_primes([t], 5) == []
    assert check_bad_primes([t], 2) == [4, 6]
    assert check_bad_primes([t], 3) == [6]


def test_bad_prime_rejected():
    t = _base_slice(2).tables[Context(SL(2))]
    from tempered_spine.equivariant import EqCochainComplex

    with pytest.raises(BadPrimeError) as exc:
        EqCochainComplex(t, CoefficientModule(2, field=parse_field("Fp:2")))
    assert exc.value.p == 2


def test_good_prime_cohomology():
    t = _base_slice(2).tables[Context(SL(2))]
    from tempered_spine.equivariant import EqCochainComplex

    cx = EqCochainComplex(t, CoefficientModule(2, field=parse_field("Fp:5")))
    assert cx.betti() == [1, 0]


# --- complexes and cohomology ------------------------------------------------------------------


def test_interior_n2_trivial():
    cx = base_complex(2, CoefficientModule(2), "interior")
    assert cx.dims == [1, 0]
    assert cx.betti() == [1, 0]
    assert cx.check_d2()


def test_interior_n2_sym10():
    cx = base_complex(2, CoefficientModule.parse("sym:10", 2), "interior")
    h = cohomology(cx)
    assert [x.dim for x in h] == [0, 3]
    assert h[1].basis.shape == (cx.dims[1], 3)


@pytest.mark.slow
def test_interior_n3_trivial():
    cx = base_complex(3, CoefficientModule(3), "interior")
    assert cx.betti() == [1, 0, 0, 0]
    assert cx.check_d2()


def test_zero_differential_complex():
    cx = _Toy([1, 0], [zeros(0, 1, QQ)])
    assert [h.dim for h in cohomology(cx)] == [1, 0]


def test_exact_complex():
    cx = _Toy([2, 2], [identity(2, QQ)])
    assert [h.dim for h in cohomology(cx)] == [0, 0]
    cx = _Toy([1, 2, 1], [dm([[1], [0]]), dm([[0, 1]])])
    assert [h.dim for h in cohomology(cx)] == [0, 0, 0]


def test_identity_induces_identity():
    cx = base_complex(2, CoefficientModule.parse("sym:10", 2), "interior")
    mats = induced_map(identity_map(cx))
    assert _mat(mats[1]) == _mat(identity(3, QQ))


def test_psi_rank_on_h0():
    psi = base_psi(2, CoefficientModule(2))
    assert psi.is_chain_map()
    assert psi.induced()[0].rank() == 1


def test_non_chain_map_rejected():
    from tempered_spine.equivariant import ChainMapError

    cx = _Toy([1, 1], [dm([[1]])])
    f = ChainMap(cx, cx, [dm([[1]]), dm([[2]])], "bad")
    assert not f.is_chain_map()
    with pytest.raises(ChainMapError):
        f.induced()


def test_zero_cochain_maps_to_zero():
    psi = base_psi(2, CoefficientModule.parse("sym:10", 2))
    for M in psi.mats:
        z = zeros(M.shape[1], 1, QQ)
        assert all(x == 0 for r in (M * z).to_list() for x in r)
