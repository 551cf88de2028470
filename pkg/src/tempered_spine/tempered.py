"""The temperament sweep: critical parameters, slices, interval maps, the top.

For ``a`` in the Hecke semigroup the weights are ``Phi_s(v) = 1`` on
``M0 = Z^n a`` and ``s`` elsewhere.  With ``t = 1/s`` the vertex form of a
fixed minimal set ``T`` is affine in ``t``, and so is (after clearing the
factor ``s``) the weighted length of any other vector against it.  A critical
parameter is an ``s`` at which some vertex acquires a new minimal vector; all
of them lie in ``(1, det(a)^2]`` because ``det(a) v`` lies in ``M0`` for
every ``v``.

An interval between consecutive critical parameters is modeled by the slice
at an interior sample point.  Its maps to the end slices come from sending a
cell to the cell of the end slice that contains its limit as the parameter
tends to the end point (cells whose limit drops dimension are collapsed).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from gmpy2 import mpq

from tempered_spine.geometry import act_on_vec, cell_dim, lf, vec_to_form
from tempered_spine.groups import HeckeSubgroup, SL, canon, sign_normalize, transporters
from tempered_spine.integer import adjugate, det_int
from tempered_spine.lattice import TemperedWeight, WeightSystem, short_vectors
from tempered_spine.linalg import dm, rank, rat_str, solve_columns
from tempered_spine.spine import BudgetExceeded, Context, build_chunk, orbit_table

log = logging.getLogger(__name__)


class LadderError(RuntimeError):
    """Raised when the ladder cannot be completed (with diagnostics)."""


class SampleAtEvent(Exception):
    pass


# --- exact event location -------------------------------------------------------


def _check_weights(weights: WeightSystem):
    if weights.base is not None:
        raise ValueError("critical temperaments are implemented for constant base weights")


def vertex_affine(weights: WeightSystem, T):
    """(x0, x1) with vertex form x(t) = x0 + t x1 for t = 1/s, or None.

    None means the minimal set T is a vertex for at most one value of t.
    """
    _check_weights(weights)
    b = weights.base_min
    rows, c0, c1 = [], [], []
    for v in T:
        rows.append(list(lf(v)))
        if weights.in_m0(v):
            c0.append(1 / b)
            c1.append(mpq(0))
        else:
            c0.append(mpq(0))
            c1.append(1 / b)
    N = len(rows[0])
    A = dm(rows)
    if rank(A) != N:
        raise ValueError(f"{T} does not determine a vertex")
    X = solve_columns(A, dm([[p, q] for p, q in zip(c0, c1)]))
    if X is None:
        return None
    L = X.to_list()
    x0 = tuple(mpq(int(r[0].numerator), int(r[0].denominator)) for r in L)
    x1 = tuple(mpq(int(r[1].numerator), int(r[1].denominator)) for r in L)
    return x0, x1


def _at(x0, x1, t):
    return tuple(a + t * b for a, b in zip(x0, x1))


def _h(weights, v, x0, x1):
    """Coefficients (c0, c1) of h_v(t) = c0 + c1 t, positive exactly when v is longer than the minimum."""
    L = lf(v)
    p = sum(c * a for c, a in zip(L, x0) if c)
    q = sum(c * a for c, a in zip(L, x1) if c)
    b = weights.base_min
    if weights.in_m0(v):
        return b * p - 1, b * q
    return b * p, b * q - 1


def first_crossing(weights: WeightSystem, T, x0, x1, t0, t_end):
    """First t strictly after t0 (towards t_end, inclusive) where a vector outside T ties; None if none."""
    n = len(T[0])
    Tset = set(T)
    forward = t_end > t0
    a = t0
    while a != t_end:
        b = t_end
        for _ in range(200):
            if vec_to_form(_at(x0, x1, b), n).is_positive_definite():
                break
            b = (a + b) / 2
        else:
            raise LadderError("vertex form degenerates without a crossing")
        roots = []
        seen = set()
        for t in (a, b):
            bound = 1 / weights.base_min
            for v in short_vectors(vec_to_form(_at(x0, x1, t), n), bound):
                if not any(v):
                    continue
                v = sign_normalize(v)
                if v in Tset or v in seen:
                    continue
                seen.add(v)
                c0, c1 = _h(weights, v, x0, x1)
                if c1 == 0:
                    continue
                r = -c0 / c1
                if (forward and a < r <= b) or (not forward and b <= r < a):
                    roots.append(r)
        if roots:
            return min(roots) if forward else max(roots)
        a = b
    return None


def sample_interval(weights: WeightSystem, vertex_reps, s, horizon):
    """(lo, hi) critical parameters around a generic s (hi None past the horizon)."""
    t = 1 / mpq(s)
    lo, hi = mpq(1), None
    for T in vertex_reps:
        aff = vertex_affine(weights, T)
        if aff is None:
            raise SampleAtEvent(s)
        x0, x1 = aff
        down = first_crossing(weights, T, x0, x1, t, mpq(1))
        if down is not None:
            lo = max(lo, 1 / down)
        up = first_crossing(weights, T, x0, x1, t, 1 / mpq(horizon))
        if up is not None:
            s_up = 1 / up
            hi = s_up if hi is None else min(hi, s_up)
    return lo, hi


# --- slices ----------------------------------------------------------------------


@dataclass
class Slice:
    """Chunk and orbit tables at one parameter value."""

    s: mpq
    chunk: object
    tables: dict

    def table(self, ctx):
        return self.tables[ctx]


@dataclass
class TemperamentLadder:
    n: int
    a: tuple
    weights: WeightSystem
    s_values: list = field(default_factory=list)  # 1 = s^0 < ... < s^k = s0
    sample_points: list = field(default_factory=list)
    boundary: bool = False
    wave_budget: int = 200
    _slices: dict = field(default_factory=dict, repr=False)

    @property
    def det(self) -> int:
        return abs(det_int(self.a))

    @property
    def k(self) -> int:
        return len(self.s_values) - 1

    @property
    def s0(self):
        return self.s_values[-1]

    @property
    def events(self):
        return self.s_values[1:-1]

    @property
    def gamma0(self):
        return SL(self.n)

    @property
    def gamma_a(self):
        return HeckeSubgroup(self.a) if self.det > 1 else SL(self.n)

    def flag_classes(self, group):
        from tempered_spine.boundary import FlagClasses

        key = ("classes", group.key())
        if key not in self._slices:
            self._slices[key] = FlagClasses(group)
        return self._slices[key]

    def contexts_at(self, s, boundary=None):
        from tempered_spine.boundary import flag_contexts

        boundary = self.boundary if boundary is None else boundary
        groups = [self.gamma_a]
        if s == 1 and self.det > 1:
            groups = [self.gamma0, self.gamma_a]
        out = []
        for g in groups:
            if boundary:
                out.extend(flag_contexts(g, self.flag_classes(g)))
            else:
                out.append(Context(g))
        return out

    def slice(self, s, boundary=None, extra=()) -> Slice:
        s = mpq(s)
        boundary = self.boundary if boundary is None else boundary
        key = (s, boundary, tuple(c.name for c in extra))
        if key not in self._slices:
            ctxs = self.contexts_at(s, boundary) + list(extra)
            w = TemperedWeight(self.weights, s)
            chunk = build_chunk(self.n, w, ctxs, wave_budget=self.wave_budget)
            tables = {c: orbit_table(chunk, c) for c in ctxs}
            self._slices[key] = Slice(s, chunk, tables)
        return self._slices[key]

    def to_json(self):
        return {
            "n": self.n,
            "a": [list(r) for r in self.a],
            "s_events": [rat_str(x) for x in self.s_values],
            "samples": [rat_str(x) for x in self.sample_points],
            "s0": rat_str(self.s0),
        }


def critical_temperaments(
    n: int,
    a,
    base_weights: WeightSystem | None = None,
    *,
    boundary: bool = False,
    budget_events: int = 64,
    wave_budget: int = 200,
) -> TemperamentLadder:
    """Exact critical parameters for M0 = Z^n a, with one sample per interval."""
    a = tuple(tuple(int(x) for x in r) for r in a)
    if len(a) != n or any(len(r) != n for r in a):
        raise ValueError("a must be an n x n integer matrix")
    if det_int(a) == 0:
        raise ValueError("a must be nonsingular")
    if base_weights is not None:
        _check_weights(base_weights)
    weights = WeightSystem.from_hecke(a)
    ladder = TemperamentLadder(n, a, weights, boundary=boundary, wave_budget=wave_budget)
    d = ladder.det
    if d == 1:
        ladder.s_values = [mpq(1)]
        return ladder
    horizon = mpq(d * d + 1)
    events = set()
    confirmed = {}
    gaps = [(mpq(1), None)]
    while gaps:
        lo, hi = gaps.pop()
        s = horizon if hi is None else (lo + hi) / 2
        reps = ladder.slice(s, boundary=False).chunk.vertex_reps[Context(ladder.gamma_a)]
        try:
            e_lo, e_hi = sample_interval(weights, reps, s, horizon)
        except SampleAtEvent:
            events.add(s)
            gaps += [(lo, s), (s, hi)]
            continue
        if e_hi is not None and hi is not None and e_hi > hi or e_lo < lo:
            raise LadderError(f"inconsistent interval around s={s}: ({e_lo}, {e_hi}) outside ({lo}, {hi})")
        for e in (e_lo, e_hi):
            if e is not None and e != 1:
                events.add(e)
        if len(events) > budget_events:
            raise BudgetExceeded(f"event budget {budget_events} exceeded")
        confirmed[(e_lo, e_hi)] = s
        if e_lo > lo:
            gaps.append((lo, e_lo))
        if e_hi is not None and (hi is None or e_hi < hi):
            gaps.append((e_hi, hi))
    ev = sorted(events)
    s0 = (ev[-1] if ev else mpq(1)) + 1
    ladder.s_values = [mpq(1)] + ev + [s0]
    ladder.sample_points = [(x + y) / 2 for x, y in zip(ladder.s_values, ladder.s_values[1:])]
    log.debug("ladder events %s, s0=%s", ev, s0)
    return ladder


def slice_complex(ladder: TemperamentLadder, s, boundary=None) -> Slice:
    if mpq(s) < 1:
        raise ValueError("s must be >= 1")
    return ladder.slice(s, boundary)


# --- limits and interval maps -----------------------------------------------------


def limit_signature(ladder: TemperamentLadder, src: Slice, u, sig):
    """Cell of the slice at u containing the limit of the cell sig of src; None when it collapses."""
    key = ("limit", src.s, mpq(u), sig)
    cache = ladder._slices
    if key in cache:
        return cache[key]
    verts = src.chunk.vertices_of[sig]
    t = 1 / mpq(u)
    forms = []
    for V in verts:
        aff = vertex_affine(ladder.weights, V)
        if aff is None:
            raise LadderError(f"sample slice at s={src.s} is not generic")
        forms.append(_at(*aff, t))
    bary = tuple(sum(c) / len(forms) for c in zip(*forms))
    from tempered_spine.geometry import SliceGeometry

    geo = SliceGeometry(TemperedWeight(ladder.weights, u))
    m, T0, _ = geo.minimal_signature(bary)
    if m != 1:
        raise LadderError("limit barycenter is not normalized")
    out = T0 if cell_dim(T0) == cell_dim(sig) else None
    cache[key] = out
    return out


def limit_map(ladder: TemperamentLadder, end_cx, base_cx, end_slice: Slice, base_slice: Slice, name=""):
    """Cochain map from a complex on an end slice into the complex on the sample slice."""
    from tempered_spine.equivariant import build_map

    u = end_slice.s

    def terms(flag, q, sig):
        T0 = limit_signature(ladder, base_slice, u, sig)
        if T0 is None:
            return []
        return [end_cx.value(flag, q, T0)]

    return build_map(end_cx, base_cx, terms, name)


@dataclass
class IntervalComplex:
    ladder: TemperamentLadder
    index: int
    base: Slice
    left: Slice
    right: Slice

    def complexes(self, rho, target="interior"):
        return tuple(make_complex(self.ladder, sl, rho, target) for sl in (self.left, self.base, self.right))

    def maps(self, rho, target="interior"):
        """(left_map, right_map) as chain maps into the base complex."""
        L, B, R = self.complexes(rho, target)
        i = self.index
        return (
            limit_map(self.ladder, L, B, self.left, self.base, f"l({i - 1})"),
            limit_map(self.ladder, R, B, self.right, self.base, f"r({i})"),
        )


def make_complex(ladder: TemperamentLadder, sl: Slice, rho, target="interior", group=None):
    """Equivariant interior complex or boundary total complex on a slice (cached)."""
    from tempered_spine.boundary import BoundaryComplex
    from tempered_spine.equivariant import EqCochainComplex

    group = group or ladder.gamma_a
    key = ("cx", sl.s, id(sl), rho.label(), str(rho.K), target, group.key())
    if key not in ladder._slices:
        if target == "interior":
            cx = EqCochainComplex(sl.tables[Context(group)], rho)
        elif target == "boundary":
            cx = BoundaryComplex(sl.tables, group, rho, ladder.flag_classes(group))
        else:
            raise ValueError(f"unknown target {target!r}")
        ladder._slices[key] = cx
    return ladder._slices[key]


def interval_complex(ladder: TemperamentLadder, i: int, boundary=None) -> IntervalComplex:
    if not 1 <= i <= ladder.k:
        raise IndexError(f"interval index {i} outside 1..{ladder.k}")
    sv = ladder.s_values
    return IntervalComplex(
        ladder,
        i,
        ladder.slice(ladder.sample_points[i - 1], boundary),
        ladder.slice(sv[i - 1], boundary),
        ladder.slice(sv[i], boundary),
    )


# --- the top of the ladder ----------------------------------------------------------


@dataclass
class TopBijection:
    s0: mpq
    entries: list  # (dim, rep index, signature at s0, signature at 1)
    conj_group: object

    def to_json(self):
        return [
            {"dim": d, "rep": i, "top": [list(v) for v in s], "bottom": [list(v) for v in t]}
            for d, i, s, t in self.entries
        ]


def transport_down(a, sig):
    """canon(S a^{-1}) for a signature inside M0 = Z^n a."""
    adj = adjugate(a)
    d = det_int(a)
    n = len(a)
    out = []
    for v in sig:
        w = [sum(v[k] * adj[k][j] for k in range(n)) for j in range(n)]
        if any(x % d for x in w):
            raise LadderError(f"vector {v} of a top cell lies outside M0")
        out.append(tuple(x // d for x in w))
    return canon(out)


def ladder_top(ladder: TemperamentLadder):
    """(s0, bijection): the orbit cells at s0 correspond to those of the slice at 1 under v -> v a^{-1}."""
    n = ladder.n
    a = ladder.a
    s0 = ladder.s0
    if ladder.det == 1:
        sl = ladder.slice(1, boundary=False)
        t = sl.tables[Context(SL(n))]
        ents = [(d, i, r.signature, r.signature) for d in t.dims for i, r in enumerate(t.reps[d])]
        return s0, TopBijection(s0, ents, SL(n))
    conj = HeckeSubgroup(adjugate(a))
    top = ladder.slice(s0, boundary=False)
    bottom = ladder.slice(1, boundary=False, extra=(Context(conj),))
    table = top.tables[Context(ladder.gamma_a)]
    target = bottom.tables[Context(conj)]
    geo1 = bottom.chunk.geometry
    geo0 = top.chunk.geometry
    problems = []
    entries = []
    seen = set()
    for d in table.dims:
        for i, rep in enumerate(table.reps[d]):
            try:
                T = transport_down(a, rep.signature)
            except LadderError as exc:
                problems.append(str(exc))
                continue
            if cell_dim(T) != d:
                problems.append(f"dimension changes for {rep.signature}")
                continue
            for V in top.chunk.vertices_of[rep.signature]:
                y = act_on_vec(a, geo0.vertex_form(V), n)
                m, sig1, _ = geo1.minimal_signature(y)
                if m != 1 or sig1 != transport_down(a, V):
                    problems.append(f"vertex {V} does not transport to a vertex at s=1")
            stab = [g for g in transporters(T, T) if conj.contains(g)]
            if len(stab) != rep.order:
                problems.append(f"stabilizer order {rep.order} -> {len(stab)} for {rep.signature}")
            try:
                dd, j, _ = target.locate(T)
            except KeyError:
                problems.append(f"{T} not found at s=1")
                continue
            if (dd, j) in seen:
                problems.append(f"two top orbits map to orbit {(dd, j)}")
            seen.add((dd, j))
            entries.append((d, i, rep.signature, T))
    if sum(len(v) for v in target.reps.values()) != len(entries):
        problems.append("orbit counts differ between the top slice and s=1")
    if problems:
        raise LadderError("top not detected: " + "; ".join(problems[:5]))
    return s0, TopBijection(s0, entries, conj)


def top_vertex_check(ladder: TemperamentLadder) -> bool:
    """Every structure vertex at s0 lies in M0 (the regime where the top bijection holds)."""
    sl = ladder.slice(ladder.s0, boundary=False)
    return all(ladder.weights.in_m0(v) for T in sl.chunk.vertex_reps[Context(ladder.gamma_a)] for v in T)


__all__ = [
    "LadderError",
    "TemperamentLadder",
    "Slice",
    "IntervalComplex",
    "TopBijection",
    "vertex_affine",
    "first_crossing",
    "sample_interval",
    "critical_temperaments",
    "slice_complex",
    "limit_signature",
    "limit_map",
    "interval_complex",
    "make_complex",
    "transport_down",
    "ladder_top",
]

