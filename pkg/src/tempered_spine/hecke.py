"""Hecke pairs, the maps q and p, the composite T_a and its verification.

``T_a`` is assembled from cochain maps between equivariant complexes:

* ``q*`` carries Gamma_0-cochains on the slice at ``s = 1`` to
  Gamma_a-cochains on the top slice ``s0`` through the cellular isomorphism
  ``A -> a A a^T`` (on signatures ``S -> S a^{-1}``), with coefficient part
  ``rho(adj a)``;
* each interval contributes ``(l*)^{-1} r*`` on cohomology, where ``l`` and
  ``r`` are the limit maps of the interval's sample slice to its ends;
* ``p_*`` is the transfer ``sum_i g_i . phi(g_i^{-1} sigma)`` over the left
  cosets ``Gamma_0 = U g_i Gamma_a``.

The same recipe applied to the boundary double complexes gives the boundary
operator; every stage is also checked against the restriction map psi.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

from sympy import Poly, symbols

from tempered_spine.boundary import BoundaryComplex, FlagClasses, flag_contexts, psi_map
from tempered_spine.cosets import left_coset_reps
from tempered_spine.equivariant import ChainMap, CoefficientModule, EqCochainComplex, build_map, scale_value
from tempered_spine.geometry import act_on_vec, coords_in, direction_basis, orientation_sign, sign_det
from tempered_spine.groups import HeckeSubgroup, SL, act_signature, as_matrix, mat_inv, mat_mul
from tempered_spine.integer import adjugate, det_int
from tempered_spine.lattice import TemperedWeight
from tempered_spine.linalg import charpoly, identity, induced_matrix, matmul, rank, rat_str
from tempered_spine.spine import Context, build_chunk, orbit_table
from tempered_spine.tempered import (
    LadderError,
    Slice,
    TemperamentLadder,
    interval_complex,
    ladder_top,
    transport_down,
)

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A stage of the Hecke composite failed (not a chain map or not invertible)."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


# --- Hecke pairs -----------------------------------------------------------------


@dataclass
class HeckePair:
    n: int
    a: tuple
    gamma0: object
    gamma_a: object
    left_cosets: list  # g_i with Gamma_0 = disjoint union of g_i Gamma_a

    @property
    def index(self) -> int:
        return len(self.left_cosets)

    @property
    def right_cosets(self) -> list:
        """h_i with Gamma_0 = disjoint union of Gamma_a h_i."""
        return [mat_inv(g) for g in self.left_cosets]

    def in_gamma_a(self, g) -> bool:
        return self.gamma_a.contains(as_matrix(g))

    def conjugate_is_integral(self, g) -> bool:
        """a g a^{-1} in SL_n(Z)."""
        a = self.a
        d = det_int(a)
        m = mat_mul(mat_mul(a, g), adjugate(a))
        return all(x % d == 0 for r in m for x in r)

    def to_json(self):
        return {
            "n": self.n,
            "a": [list(r) for r in self.a],
            "index": self.index,
            "cosets": [[list(r) for r in g] for g in self.left_cosets],
        }


def hecke_pair(n: int, a) -> HeckePair:
    a = as_matrix(a)
    if len(a) != n or any(len(r) != n for r in a):
        raise ValueError("a must be n x n")
    if det_int(a) == 0:
        raise ValueError("a must be nonsingular")
    if abs(det_int(a)) == 1:
        return HeckePair(n, a, SL(n), SL(n), [tuple(tuple(int(i == j) for j in range(n)) for i in range(n))])
    return HeckePair(n, a, SL(n), HeckeSubgroup(a), left_coset_reps(a))


# --- the base slice (Gamma_0 at s = 1) ---------------------------------------------


@lru_cache(maxsize=None)
def _base_slice(n: int) -> Slice:
    from tempered_spine.lattice import WeightSystem

    G = SL(n)
    ctxs = flag_contexts(G, _classes(G))
    chunk = build_chunk(n, TemperedWeight(WeightSystem(n)), ctxs)
    return Slice(1, chunk, {c: orbit_table(chunk, c) for c in ctxs})


@lru_cache(maxsize=None)
def _classes(group) -> FlagClasses:
    return FlagClasses(group)


_complex_cache: dict = {}


def base_complex(n: int, rho: CoefficientModule, target: str = "interior"):
    """Gamma_0 complex on the untempered spine, shared by all Hecke runs."""
    key = (n, rho.label(), str(rho.K), target)
    if key not in _complex_cache:
        G = SL(n)
        sl = _base_slice(n)
        if target == "interior":
            _complex_cache[key] = EqCochainComplex(sl.tables[Context(G)], rho)
        else:
            _complex_cache[key] = BoundaryComplex(sl.tables, G, rho, _classes(G))
    return _complex_cache[key]


def base_psi(n: int, rho: CoefficientModule) -> ChainMap:
    key = ("psi", n, rho.label(), str(rho.K))
    if key not in _complex_cache:
        _complex_cache[key] = psi_map(base_complex(n, rho, "interior"), base_complex(n, rho, "boundary"))
    return _complex_cache[key]


# --- q and p -------------------------------------------------------------------------


def transport_sign(a, sig) -> int:
    """Orientation sign of X -> a X a^T from D_S onto D_{S a^{-1}}."""
    basis = direction_basis(sig)
    if not basis:
        return 1
    n = len(a)
    T = transport_down(a, sig)
    C = coords_in(direction_basis(T), [act_on_vec(a, b, n) for b in basis])
    if C is None:
        raise LadderError("transported directions leave the target cell span")
    return sign_det(C)


def q_map(pair: HeckePair, ladder: TemperamentLadder, rho: CoefficientModule, target: str = "interior", src=None, dst=None):
    """Cochain map from the Gamma_0 complex at s = 1 to the Gamma_a complex at s0."""
    from tempered_spine.tempered import make_complex

    src = src or base_complex(pair.n, rho, target)
    if dst is None:
        if target == "boundary" and not ladder.boundary:
            raise ValueError("ladder was built without flag contexts")
        dst = make_complex(ladder, ladder.slice(ladder.s0), rho, target)
    a = pair.a
    adj = adjugate(a)

    def terms(flag, q, sig):
        T = transport_down(a, sig)
        f = flag.right(adj) if flag is not None else None
        off, k, M = src.value(f, q, T)
        if k == 0:
            return []
        return [(off, k, scale_value(M, adj, rho, transport_sign(a, sig)))]

    return build_map(src, dst, terms, "q")


def p_map(pair: HeckePair, ladder: TemperamentLadder, rho: CoefficientModule, target: str = "interior", src=None, dst=None):
    """Transfer from the Gamma_a complex at s = 1 to the Gamma_0 complex at s = 1."""
    from tempered_spine.tempered import make_complex

    if src is None:
        src = make_complex(ladder, ladder.slice(1), rho, target)
    dst = dst or base_complex(pair.n, rho, target)

    def terms(flag, q, sig):
        out = []
        for g in pair.left_cosets:
            gi = mat_inv(g)
            sig_i = act_signature(gi, sig)
            f = flag.act(gi) if flag is not None else None
            off, k, M = src.value(f, q, sig_i)
            if k == 0:
                continue
            e = orientation_sign(g, sig_i)[1]
            out.append((off, k, scale_value(M, g, rho, e)))
        return out

    return build_map(src, dst, terms, "p")


# --- the run ---------------------------------------------------------------------------


def _invert(M, stage):
    if M.shape[0] != M.shape[1] or rank(M) != M.shape[0]:
        raise StageError(stage, f"induced map of shape {M.shape} is not invertible")
    if M.shape[0] == 0:
        return M
    return M.inv()


def _compose(mats_outer, mats_inner):
    return [matmul(a, b) for a, b in zip(mats_outer, mats_inner)]


@dataclass
class Stage:
    name: str
    kind: str  # "Q", "L-R" or "P"
    chain_maps: dict  # target -> list of ChainMap (one for Q/P, (l, r) for L-R)
    cohomology: dict  # target -> list of matrices per degree


@dataclass
class HeckeLadderRun:
    pair: HeckePair
    ladder: TemperamentLadder
    rho: CoefficientModule
    targets: tuple
    stages: list = field(default_factory=list)
    result: dict = field(default_factory=dict)  # target -> list of T_a matrices per degree
    e1_result: dict = field(default_factory=dict)  # (p, q) -> matrix on E1 (boundary)

    def degrees(self, target="interior"):
        return len(self.result[target])

    def charpolys(self, target="interior"):
        return [charpoly_str(M) for M in self.result[target]]

    def to_json(self):
        def mat(M):
            return [[rat_str(x) for x in r] for r in M.to_list()]

        doc = {
            "pair": self.pair.to_json(),
            "ladder": self.ladder.to_json(),
            "coefficients": self.rho.to_json(),
            "stages": [
                {
                    "name": st.name,
                    "type": st.kind,
                    "shapes": {t: [list(M.shape) for M in mats] for t, mats in st.cohomology.items()},
                    "invertible": {
                        t: [M.shape[0] == M.shape[1] and rank(M) == M.shape[0] for M in mats]
                        for t, mats in st.cohomology.items()
                    },
                }
                for st in self.stages
            ],
            "T_a": {t: [mat(M) for M in mats] for t, mats in self.result.items()},
            "charpoly": {t: [charpoly_str(M) for M in mats] for t, mats in self.result.items()},
        }
        return doc


def charpoly_coeffs(M) -> list:
    """Characteristic polynomial coefficients (highest degree first) as exact values."""
    return list(charpoly(M))


def charpoly_str(M) -> str:
    """Factored characteristic polynomial in x (field elements converted to rationals)."""
    x = symbols("x")
    coeffs = charpoly_coeffs(M)
    if M.domain.is_QQ:
        from sympy import Rational

        cs = [Rational(int(c.numerator), int(c.denominator)) for c in coeffs]
        return str(Poly(cs, x).as_expr().factor())
    return " ".join(str(c) for c in coeffs)


def run_hecke(
    pair: HeckePair,
    ladder: TemperamentLadder,
    rho: CoefficientModule,
    targets=("interior",),
) -> HeckeLadderRun:
    """Compose p_*, the interval stages and q* on cohomology for each target."""
    targets = tuple(targets)
    if "boundary" in targets and not ladder.boundary:
        raise ValueError("boundary target needs a ladder built with boundary=True")
    ladder_top(ladder)
    run = HeckeLadderRun(pair, ladder, rho, targets)
    for target in targets:
        q = q_map(pair, ladder, rho, target)
        if not q.is_chain_map():
            raise StageError("q", "not a chain map")
        run.stages.append(Stage("q", "Q", {target: [q]}, {target: q.induced()}))
    stages_lr = []
    for i in range(ladder.k, 0, -1):
        ic = interval_complex(ladder, i)
        cmaps, coh = {}, {}
        for target in targets:
            lmap, rmap = ic.maps(rho, target)
            for m in (lmap, rmap):
                if not m.is_chain_map():
                    raise StageError(m.name, "not a chain map")
            L = lmap.induced()
            R = rmap.induced()
            Linv = [_invert(M, lmap.name) for M in L]
            for M in R:
                _invert(M, rmap.name)
            cmaps[target] = [lmap, rmap]
            coh[target] = _compose(Linv, R)
        stages_lr.append(Stage(f"l({i - 1})^-1 r({i})", "L-R", cmaps, coh))
    run.stages.extend(stages_lr)
    for target in targets:
        p = p_map(pair, ladder, rho, target)
        if not p.is_chain_map():
            raise StageError("p", "not a chain map")
        run.stages.append(Stage("p", "P", {target: [p]}, {target: p.induced()}))
    # merge per-target stage records of the same name
    merged: dict = {}
    order = []
    for st in run.stages:
        if st.name not in merged:
            merged[st.name] = Stage(st.name, st.kind, {}, {})
            order.append(st.name)
        merged[st.name].chain_maps.update(st.chain_maps)
        merged[st.name].cohomology.update(st.cohomology)
    run.stages = [merged[n] for n in order]
    for target in targets:
        mats = None
        for st in run.stages:
            step = st.cohomology[target]
            mats = step if mats is None else _compose(step, mats)
        run.result[target] = mats
    return run


def hecke_operator(pair, ladder, rho, target: str = "interior"):
    """T_a matrices per degree on the chosen cohomology."""
    return run_hecke(pair, ladder, rho, (target,)).result[target]


# --- verification ------------------------------------------------------------------------


def _nnz(M) -> int:
    return sum(1 for r in M.to_list() for x in r if x)


def _chain_residual(f: ChainMap) -> int:
    return sum(_nnz(r) for r in f.residuals())


def _psi_for(cx_int, cx_bd):
    key = ("psi", id(cx_int), id(cx_bd))
    if key not in _complex_cache:
        _complex_cache[key] = psi_map(cx_int, cx_bd)
    return _complex_cache[key]


def _square(f_int: ChainMap, f_bd: ChainMap):
    """Chain-level and cohomology residuals of psi_dst f_int = f_bd psi_src."""
    psi_src = _psi_for(f_int.src, f_bd.src)
    psi_dst = _psi_for(f_int.dst, f_bd.dst)
    chain = 0
    for m in range(min(len(f_int.mats), len(f_bd.mats), len(psi_src.mats), len(psi_dst.mats))):
        chain += _nnz(matmul(psi_dst.mats[m], f_int.mats[m]) - matmul(f_bd.mats[m], psi_src.mats[m]))
    Fi, Fb = f_int.induced(), f_bd.induced()
    Ps, Pd = psi_src.induced(), psi_dst.induced()
    coh = 0
    for m in range(min(len(Fi), len(Fb), len(Ps), len(Pd))):
        coh += _nnz(matmul(Pd[m], Fi[m]) - matmul(Fb[m], Ps[m]))
    psi_res = _chain_residual(psi_src) + _chain_residual(psi_dst)
    return chain, coh, psi_res


def verify_cubes(run: HeckeLadderRun) -> list[dict]:
    """Residuals (counts of nonzero entries) of every face of every cube."""
    if set(run.targets) != {"interior", "boundary"}:
        raise ValueError("cube verification needs both interior and boundary stage maps")
    out = []
    for st in run.stages:
        pairs = list(zip(st.chain_maps["interior"], st.chain_maps["boundary"]))
        for f_int, f_bd in pairs:
            chain, coh, psi_res = _square(f_int, f_bd)
            out.append(
                {
                    "type": st.kind,
                    "stage": st.name,
                    "map": f_int.name,
                    "faces": {
                        "interior_chain": _chain_residual(f_int),
                        "boundary_chain": _chain_residual(f_bd),
                        "psi_chain": psi_res,
                        "restriction_square_chain": chain,
                        "restriction_square_cohomology": coh,
                        "vertical_identifications": 0,
                    },
                }
            )
    return out


def cubes_ok(report) -> bool:
    return all(v == 0 for c in report for v in c["faces"].values())


def restriction_compatibility(run: HeckeLadderRun) -> int:
    """Nonzero entries of psi* T_a(interior) - T_a(boundary) psi* over all degrees."""
    psi = base_psi(run.pair.n, run.rho).induced()
    Ti, Tb = run.result["interior"], run.result["boundary"]
    res = 0
    for m in range(min(len(psi), len(Ti), len(Tb))):
        res += _nnz(matmul(psi[m], Ti[m]) - matmul(Tb[m], psi[m]))
    return res


# --- E1 pages ------------------------------------------------------------------------------


def _column_block(f: ChainMap, p: int, q: int):
    src, dst = f.src, f.dst
    m = p + q
    M = f.mats[m]
    r0 = dst.tot_off[(p, q)]
    c0 = src.tot_off[(p, q)]
    return M.extract(
        list(range(r0, r0 + dst.col_dim[p][q])), list(range(c0, c0 + src.col_dim[p][q]))
    ) if dst.col_dim[p][q] and src.col_dim[p][q] else _zero(dst.col_dim[p][q], src.col_dim[p][q], dst.K)


def _zero(r, c, K):
    from tempered_spine.linalg import zeros

    return zeros(r, c, K)


def e1_map(f: ChainMap) -> dict:
    """Induced map on E1 pages of a column-preserving map of boundary grids."""
    out = {}
    cs = [f.src.column_cohomology(p) for p in range(f.src.P)]
    cd = [f.dst.column_cohomology(p) for p in range(f.dst.P)]
    for p in range(min(f.src.P, f.dst.P)):
        for q in range(min(f.src.Q, f.dst.Q)):
            if (p, q) not in f.src.tot_off or (p, q) not in f.dst.tot_off or p + q >= len(f.mats):
                continue
            out[(p, q)] = induced_matrix(_column_block(f, p, q), cs[p][q], cd[p][q])
    return out


def e1_operator(run: HeckeLadderRun) -> dict:
    """T_a on the boundary E1 page, composed stage by stage."""
    total = None
    for st in run.stages:
        maps = st.chain_maps["boundary"]
        if st.kind == "L-R":
            lmap, rmap = maps
            L, R = e1_map(lmap), e1_map(rmap)
            step = {k: matmul(_invert(L[k], lmap.name + " (E1)"), R[k]) for k in R}
        else:
            step = e1_map(maps[0])
        total = step if total is None else {k: matmul(step[k], total[k]) for k in step}
    run.e1_result = total
    return total


# --- mapping torus ---------------------------------------------------------------------------


def torus_from_monodromy(mats) -> dict:
    """E2 terms and H* dimensions of a mapping torus with the given monodromy per degree."""
    E2 = {}
    for q, M in enumerate(mats):
        d = M.shape[0]
        fixed = d - rank(M - identity(d, M.domain)) if d else 0
        E2[(0, q)] = fixed
        E2[(1, q)] = fixed  # coinvariants of a square matrix have the same dimension
    top = len(mats) + 1
    H = [E2.get((0, m), 0) + E2.get((1, m - 1), 0) for m in range(top)]
    return {"E2": E2, "H": H}


def monodromy(ladder: TemperamentLadder, rho: CoefficientModule):
    """Monodromy of the cellular identification of the top slice with the slice at 1.

    The fibre is the (contractible) retract itself, so its cohomology with
    coefficients in rho is rho in degree 0; a constant 0-cochain v is carried
    by the q-recipe to rho(adj a) v.
    """
    ladder_top(ladder)
    return [rho.matrix(adjugate(ladder.a))]


def mapping_torus_ss(ladder: TemperamentLadder, rho: CoefficientModule) -> dict:
    mats = monodromy(ladder, rho)
    out = torus_from_monodromy(mats)
    out["monodromy"] = mats
    return out


__all__ = [
    "StageError",
    "HeckePair",
    "hecke_pair",
    "base_complex",
    "base_psi",
    "q_map",
    "p_map",
    "HeckeLadderRun",
    "run_hecke",
    "hecke_operator",
    "verify_cubes",
    "cubes_ok",
    "restriction_compatibility",
    "e1_map",
    "e1_operator",
    "torus_from_monodromy",
    "monodromy",
    "mapping_torus_ss",
    "charpoly_str",
    "charpoly_coeffs",
]

