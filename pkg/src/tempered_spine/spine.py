"""Chunks of the weighted well-rounded retract and their orbit tables.

A chunk is a finite closed subcomplex stored as a ranked poset keyed by cell
signatures.  It is grown breadth first from a seed vertex: every new vertex
orbit representative contributes all cells through it (with their closures)
and its edge neighbours.  Each *context* (a subgroup, optionally with a flag
restricting to the subcomplex of cells well rounded inside every member)
keeps its own list of vertex representatives, and the walk stops once no
context discovers a new vertex orbit.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field

from tempered_spine.flags import Flag
from tempered_spine.geometry import (
    GeometryError,
    SliceGeometry,
    cell_dim,
    lf_rank,
    local_cells,
    orientation_sign,
)
from tempered_spine.groups import (
    Matrix,
    SL,
    Subgroup,
    act_signature,
    group_closure,
    identity_matrix,
    mat_mul,
    signature_invariant,
    transporters,
)
from tempered_spine.lattice import QForm, TemperedWeight
from tempered_spine.linalg import rat_str
from tempered_spine.retract import well_rounded_retract

log = logging.getLogger(__name__)

SUPPORTED_N = (2, 3)


class BudgetExceeded(RuntimeError):
    """Raised when a wave or event budget runs out."""


@dataclass(frozen=True)
class Cell:
    signature: tuple[tuple[int, ...], ...]
    dim: int
    s_validity: tuple = ()

    @classmethod
    def of(cls, sig, s=None) -> "Cell":
        return cls(tuple(sig), cell_dim(tuple(sig)), (s, s) if s is not None else ())


@dataclass(frozen=True)
class Context:
    """A subgroup together with an optional flag filter."""

    group: Subgroup
    flag: Flag | None = None

    def admits(self, sig) -> bool:
        return self.flag is None or self.flag.admits(sig)

    @property
    def name(self) -> str:
        return self.group.name

    def to_json(self):
        return {"group": self.group.to_json(), "flag": self.flag.to_json() if self.flag else None}


def transporter(sig1, sig2, group: Subgroup) -> Matrix | None:
    """Some g in ``group`` with g . sig1 == sig2, preferring the identity."""
    ts = transporters(sig1, sig2)
    if not ts:
        return None
    I = identity_matrix(len(sig1[0]))
    if I in ts and group.contains(I):
        return I
    for g in ts:
        if group.contains(g):
            return g
    return None


def cell_equivalent(c1: Cell, c2: Cell, group: Subgroup) -> Matrix | None:
    """gamma in ``group`` with gamma . c1 == c2, or None."""
    if c1.dim != c2.dim:
        return None
    return transporter(c1.signature, c2.signature, group)


class Chunk:
    """Closed finite subcomplex of one slice, as a ranked poset of signatures."""

    def __init__(self, geometry: SliceGeometry):
        self.geometry = geometry
        self.n = geometry.n
        self.cells: dict = {}  # sig -> dim
        self.vertices_of: dict = {}
        self.contexts: list[Context] = []
        self.vertex_reps: dict = {}
        self.waves = 0

    @property
    def w(self) -> TemperedWeight:
        return self.geometry.w

    def add_closure(self, S, start) -> None:
        if S in self.cells:
            return
        for F, verts in self.geometry.closure(S, start).items():
            if F not in self.cells:
                self.cells[F] = cell_dim(F)
                self.vertices_of[F] = verts

    def facets(self, S):
        d = self.cells[S]
        verts = self.vertices_of[S]
        Sset = set(S)
        out = set()
        for T in verts:
            for F in local_cells(T):
                if len(F) > len(S) and Sset <= set(F) and cell_dim(F) == d - 1:
                    out.add(F)
        return sorted(out)

    def faces(self, S):
        verts = self.vertices_of[S]
        Sset = set(S)
        out = set()
        for T in verts:
            for F in local_cells(T):
                if Sset < set(F):
                    out.add(F)
        return sorted(out)

    def by_dim(self, d: int):
        return sorted(s for s, k in self.cells.items() if k == d)

    @property
    def top_dim(self) -> int:
        return max(self.cells.values())

    def counts(self):
        out = defaultdict(int)
        for d in self.cells.values():
            out[d] += 1
        return dict(sorted(out.items()))

    def check_closed(self) -> bool:
        return all(F in self.cells for S in self.cells for F in self.faces(S))

    def to_json(self, tables=None):
        ids = {s: i for i, s in enumerate(sorted(self.cells, key=lambda s: (self.cells[s], s)))}
        s = rat_str(self.w.s)
        doc = {
            "n": self.n,
            "s": s,
            "cells": [
                {"id": ids[c], "dim": self.cells[c], "signature": [list(v) for v in c], "s_validity": [s, s]}
                for c in ids
            ],
            "faces": sorted([ids[f], ids[c]] for c in self.cells for f in self.facets(c)),
        }
        if tables is not None:
            doc["orbits"] = [t.to_json(ids) for t in tables]
        return doc


def seed_vertex(geometry: SliceGeometry, form: QForm | None = None):
    """Vertex reached from the retract of ``form`` (default: identity)."""
    n = geometry.n
    form = form or QForm.identity(n)
    r = well_rounded_retract(form, geometry.w).result
    return geometry.descend(r)


def _find_admitted_vertex(geometry, start, ctx: Context, budget: int = 2000):
    if ctx.admits(start):
        return start
    seen = {start}
    frontier = [start]
    while frontier and len(seen) < budget:
        nxt = []
        for T in frontier:
            for E in local_cells(T):
                if lf_rank(E) == geometry.N - 1:
                    U = geometry.edge_end(T, E)
                    if U in seen:
                        continue
                    if ctx.admits(U):
                        return U
                    seen.add(U)
                    nxt.append(U)
        frontier = nxt
    raise BudgetExceeded(f"no vertex of the flag subcomplex found for {ctx.name}")


class _Classifier:
    """Incremental orbit classification of signatures under one subgroup."""

    def __init__(self, group: Subgroup):
        self.group = group
        self.reps: list = []
        self._buckets: dict = defaultdict(list)

    def find(self, sig):
        for i in self._buckets[signature_invariant(sig)]:
            g = transporter(self.reps[i], sig, self.group)
            if g is not None:
                return i, g
        return None

    def add(self, sig) -> tuple[int, Matrix, bool]:
        hit = self.find(sig)
        if hit is not None:
            return hit[0], hit[1], False
        self.reps.append(sig)
        i = len(self.reps) - 1
        self._buckets[signature_invariant(sig)].append(i)
        return i, identity_matrix(len(sig[0])), True


def build_chunk(
    n: int,
    w: TemperedWeight,
    contexts,
    *,
    seed: QForm | None = None,
    wave_budget: int = 200,
    geometry: SliceGeometry | None = None,
) -> Chunk:
    """Breadth-first chunk containing orbit representatives for every context."""
    if n not in SUPPORTED_N:
        raise ValueError(f"unsupported n={n}; supported: {SUPPORTED_N}")
    if w.n != n:
        raise ValueError("weight dimension mismatch")
    contexts = [c if isinstance(c, Context) else Context(c) for c in contexts]
    geometry = geometry or SliceGeometry(w)
    chunk = Chunk(geometry)
    chunk.contexts = list(contexts)
    v0 = seed_vertex(geometry, seed)
    for ctx in contexts:
        start = _find_admitted_vertex(geometry, v0, ctx)
        cls = _Classifier(ctx.group)
        cls.add(start)
        frontier = [start]
        waves = 0
        while frontier:
            waves += 1
            if waves > wave_budget:
                raise BudgetExceeded(
                    f"wave budget {wave_budget} exceeded for {ctx.name}: "
                    f"{len(cls.reps)} vertex orbits, {len(chunk.cells)} cells"
                )
            nxt = []
            for T in frontier:
                for C in local_cells(T):
                    if ctx.admits(C):
                        chunk.add_closure(C, T)
                for E in local_cells(T):
                    if lf_rank(E) == geometry.N - 1 and ctx.admits(E):
                        U = geometry.edge_end(T, E)
                        _, _, new = cls.add(U)
                        if new:
                            nxt.append(U)
            frontier = nxt
        chunk.vertex_reps[ctx] = list(cls.reps)
        chunk.waves = max(chunk.waves, waves)
        log.debug("context %s: %d vertex orbits after %d waves", ctx.name, len(cls.reps), waves)
    return chunk


# --- orbit tables ---------------------------------------------------------------


@dataclass
class OrbitRep:
    signature: tuple
    dim: int
    stabilizer: tuple  # all elements
    eps: tuple  # orientation character on each element
    generators: tuple = ()

    @property
    def order(self) -> int:
        return len(self.stabilizer)

    def character(self, g) -> int:
        return self.eps[self.stabilizer.index(g)]


@dataclass
class Incidence:
    facet_rep: int  # index into reps of dim d-1
    transporter: Matrix  # facet = transporter . reps[d-1][facet_rep]
    sign: int  # [tau : facet]
    facet: tuple = ()


@dataclass
class OrbitTable:
    context: Context
    chunk: Chunk
    reps: dict = field(default_factory=dict)  # d -> list[OrbitRep]
    incidence: dict = field(default_factory=dict)  # (d, i) -> list[Incidence]
    _classifiers: dict = field(default_factory=dict)

    @property
    def group(self) -> Subgroup:
        return self.context.group

    @property
    def dims(self):
        return sorted(self.reps)

    def counts(self) -> dict:
        return {d: len(self.reps[d]) for d in self.dims}

    def locate(self, sig):
        """(d, i, gamma) with sig = gamma . reps[d][i]; raises if not found."""
        sig = tuple(sig)
        d = cell_dim(sig)
        cls = self._classifiers.get(d)
        hit = cls.find(sig) if cls is not None else None
        if hit is None:
            raise KeyError(f"cell {sig} not in any {self.context.name}-orbit of this table")
        return d, hit[0], hit[1]

    def eps(self, g, sig) -> int:
        tgt, e = orientation_sign(g, sig)
        return e

    def stabilizer_orders(self) -> dict:
        return {d: [r.order for r in self.reps[d]] for d in self.dims}

    def to_json(self, ids=None):
        def mat(g):
            return [list(r) for r in g]

        out = {"context": self.context.to_json(), "dims": {}}
        for d in self.dims:
            entries = []
            for i, r in enumerate(self.reps[d]):
                entries.append(
                    {
                        "rep": ids[r.signature] if ids else [list(v) for v in r.signature],
                        "stabilizer_order": r.order,
                        "generators": [mat(g) for g in r.generators],
                        "orientation": [r.character(g) for g in r.generators],
                        "incidence": [
                            {"facet_rep": inc.facet_rep, "transporter": mat(inc.transporter), "sign": inc.sign}
                            for inc in self.incidence.get((d, i), [])
                        ],
                    }
                )
            out["dims"][str(d)] = entries
        return out


def _generators(elems, n):
    gens: list = []
    span = {identity_matrix(n)}
    for g in sorted(elems):
        if g not in span:
            gens.append(g)
            span = group_closure(gens, n)
    return tuple(gens)


def orbit_table(chunk: Chunk, context, *, stabilizer_budget: int = 10_000) -> OrbitTable:
    """Representatives, stabilizers, orientation characters and incidences."""
    if not isinstance(context, Context):
        context = Context(context)
    if context not in chunk.contexts:
        raise KeyError(f"context {context.name} was not marked when the chunk was built")
    group = context.group
    n = chunk.n
    table = OrbitTable(context, chunk)
    cells = [s for s in chunk.cells if context.admits(s)]
    by_dim = defaultdict(list)
    for s in cells:
        by_dim[chunk.cells[s]].append(s)
    located = {}
    for d in sorted(by_dim):
        cls = _Classifier(group)
        for s in sorted(by_dim[d]):
            i, g, _ = cls.add(s)
            located[s] = (i, g)
        table._classifiers[d] = cls
        reps = []
        for sig in cls.reps:
            stab = tuple(g for g in transporters(sig, sig) if group.contains(g))
            if len(stab) > stabilizer_budget:
                raise BudgetExceeded("stabilizer exceeds budget")
            eps = tuple(orientation_sign(g, sig)[1] for g in stab)
            reps.append(OrbitRep(sig, d, stab, eps, _generators(stab, n)))
        table.reps[d] = reps
    geo = chunk.geometry
    for d in sorted(by_dim):
        if d == 0:
            continue
        for i, rep in enumerate(table.reps[d]):
            incs = []
            for F in chunk.facets(rep.signature):
                if not context.admits(F):
                    continue
                j, g = located[F]
                incs.append(Incidence(j, g, geo.incidence(rep.signature, F), F))
            table.incidence[(d, i)] = incs
    return table


def check_table_consistency(table: OrbitTable) -> None:
    """Assert that transporters really carry representatives to the recorded facets."""
    for (d, i), incs in table.incidence.items():
        for inc in incs:
            rep = table.reps[d - 1][inc.facet_rep].signature
            if act_signature(inc.transporter, rep) != inc.facet:
                raise AssertionError("incidence transporter mismatch")
    for d, reps in table.reps.items():
        for r in reps:
            for g, e in zip(r.stabilizer, r.eps):
                for h, f in zip(r.stabilizer, r.eps):
                    gh = mat_mul(g, h)
                    if r.character(gh) != e * f:
                        raise AssertionError("orientation character is not a homomorphism")


def standard_contexts(n: int, names, a=None) -> list[Context]:
    """Context list from names: ``gamma``, ``borel``, ``parabolic``, ``hecke``."""
    from tempered_spine.flags import standard_flags
    from tempered_spine.groups import FlagStabilizer, HeckeSubgroup

    out = []
    for name in names:
        if name in ("gamma", "interior"):
            out.append(Context(SL(n)))
        elif name == "borel":
            (f,) = standard_flags(n, n)
            out.append(Context(FlagStabilizer(SL(n), f), f))
        elif name == "parabolic":
            for length in range(2, n + 1):
                for f in standard_flags(n, length):
                    out.append(Context(FlagStabilizer(SL(n), f), f))
        elif name == "hecke":
            if a is None:
                raise ValueError("hecke context needs a")
            out.append(Context(HeckeSubgroup(a)))
        else:
            raise ValueError(f"unknown context {name!r}")
    return out


