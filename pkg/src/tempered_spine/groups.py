"""Arithmetic subgroups of GL_n(Z) and exact transporter search on signatures.

Group elements are tuples of integer rows.  A group element ``g`` acts on
forms by ``A -> g A g^T`` and therefore on minimal-vector signatures by
``S -> S g^{-1}``; flags move the same way as row-vector subspaces.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

from tempered_spine.integer import adjugate, det_int

Matrix = tuple[tuple[int, ...], ...]


def as_matrix(g) -> Matrix:
    return tuple(tuple(int(x) for x in r) for r in g)


def identity_matrix(n: int) -> Matrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(sum(x * y for x, y in zip(r, c)) for c in zip(*b)) for r in a)


@lru_cache(maxsize=200000)
def mat_inv(g: Matrix) -> Matrix:
    d = det_int(g)
    if d not in (1, -1):
        raise ValueError("matrix is not unimodular")
    adj = adjugate(g)
    return tuple(tuple(x * d for x in r) for r in adj)


def vec_mul(v: Sequence[int], g: Matrix) -> tuple[int, ...]:
    n = len(g)
    return tuple(sum(v[i] * g[i][j] for i in range(n) if v[i]) for j in range(n))


def sign_normalize(v) -> tuple[int, ...]:
    for x in v:
        if x:
            return tuple(v) if x > 0 else tuple(-y for y in v)
    raise ValueError("zero vector")


def canon(vectors: Iterable[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    return tuple(sorted({sign_normalize(v) for v in vectors}))


def act_signature(g: Matrix, sig) -> tuple[tuple[int, ...], ...]:
    """Signature of g . cell, i.e. S g^{-1}."""
    gi = mat_inv(g)
    return canon(vec_mul(v, gi) for v in sig)


# --- subgroup descriptions -------------------------------------------------


class Subgroup:
    """Membership-tested subgroup of GL_n(Z)."""

    n: int
    name: str

    def contains(self, g: Matrix) -> bool:
        raise NotImplementedError

    def to_json(self):
        return {"name": self.name}

    def __repr__(self):
        return self.name

    def __eq__(self, other):
        return isinstance(other, Subgroup) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def key(self):
        return (self.name,)


class TrivialGroup(Subgroup):
    def __init__(self, n: int):
        self.n = n
        self.name = "trivial"

    def contains(self, g):
        return g == identity_matrix(self.n)


class SL(Subgroup):
    """Gamma_0 = SL_n(Z)."""

    def __init__(self, n: int):
        self.n = n
        self.name = f"SL{n}(Z)"

    def contains(self, g):
        return det_int(g) == 1

    def key(self):
        return ("SL", self.n)


class HeckeSubgroup(Subgroup):
    """Gamma_a = Gamma_0 intersected with a^{-1} Gamma_0 a (stabilizer of M0 = Z^n a)."""

    def __init__(self, a):
        self.a = as_matrix(a)
        self.n = len(self.a)
        self.det_a = det_int(self.a)
        if self.det_a == 0:
            raise ValueError("a must be nonsingular")
        self.adj_a = as_matrix(adjugate(self.a))
        self.name = "Gamma_a[" + ";".join(",".join(map(str, r)) for r in self.a) + "]"

    def contains(self, g):
        if det_int(g) != 1:
            return False
        # a g a^{-1} = a g adj(a) / det(a) must be integral
        m = mat_mul(mat_mul(self.a, g), self.adj_a)
        d = self.det_a
        return all(x % d == 0 for r in m for x in r)

    def key(self):
        return ("Hecke", self.a)

    def to_json(self):
        return {"name": self.name, "a": [list(r) for r in self.a]}


class FlagStabilizer(Subgroup):
    """The intersection of a base subgroup with the stabilizer of a flag."""

    def __init__(self, base: Subgroup, flag):
        self.base = base
        self.flag = flag
        self.n = base.n
        self.name = f"{base.name}&P{flag.label()}"

    def contains(self, g):
        return self.base.contains(g) and self.flag.is_stabilized_by(g)

    def key(self):
        return ("P", self.base.key(), self.flag.members)

    def to_json(self):
        return {"name": self.name, "base": self.base.to_json(), "flag": self.flag.to_json()}


# --- transporter search ----------------------------------------------------


@lru_cache(maxsize=None)
def signature_invariant(sig) -> tuple:
    """GL_n(Z)-invariant of a vector configuration used to bucket cells."""
    n = len(sig[0])
    dets = sorted(abs(_det_small(c)) for c in combinations(sig, n))
    return (len(sig), tuple(dets))


def _det_small(M) -> int:
    n = len(M)
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    if n == 3:
        a, b, c = M
        return (
            a[0] * (b[1] * c[2] - b[2] * c[1])
            - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0])
        )
    return det_int(M)


@lru_cache(maxsize=None)
def _vector_invariants(sig):
    """Per-vector GL_n(Z)-invariant: sorted |det| of n-subsets containing the vector."""
    n = len(sig[0])
    out = []
    for i, v in enumerate(sig):
        others = [u for j, u in enumerate(sig) if j != i]
        out.append(tuple(sorted(abs(_det_small([v, *c])) for c in combinations(others, n - 1))))
    return tuple(out)


@lru_cache(maxsize=None)
def _basis_choice(sig):
    n = len(sig[0])
    inv = _vector_invariants(sig)
    # prefer basis vectors with rare invariants (stronger pruning)
    order = sorted(range(len(sig)), key=lambda i: (inv.count(inv[i]), i))
    for c in combinations(order, n):
        B = [list(sig[i]) for i in c]
        d = _det_small(B)
        if d:
            return c, B, d, adjugate(B)
    raise ValueError("signature does not span")


def _search(sig1, sig2, first_only: bool):
    """g in GL_n(Z) (as gamma = g^{-1}) with S1 g = +-S2; all of them or the first."""
    if len(sig1) != len(sig2) or signature_invariant(sig1) != signature_invariant(sig2):
        return []
    n = len(sig1[0])
    idx, B, d, adjB = _basis_choice(sig1)
    inv1 = _vector_invariants(sig1)
    inv2 = _vector_invariants(sig2)
    target = set(sig2)
    cands = []
    for i in idx:
        opts = []
        for j, u in enumerate(sig2):
            if inv2[j] == inv1[i]:
                opts.append(u)
                opts.append(tuple(-x for x in u))
        cands.append(opts)
    rest = [v for i, v in enumerate(sig1) if i not in idx]
    coords = [vec_mul(v, adjB) for v in rest]
    found = []

    def rec(level, chosen):
        if level == n:
            C = chosen
            if abs(_det_small(C)) != abs(d):
                return False
            num = [[sum(adjB[i][k] * C[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
            if any(x % d for r in num for x in r):
                return False
            for cf in coords:
                wv = [sum(cf[k] * C[k][j] for k in range(n)) for j in range(n)]
                if any(x % d for x in wv):
                    return False
                if sign_normalize(tuple(x // d for x in wv)) not in target:
                    return False
            g = tuple(tuple(x // d for x in r) for r in num)
            found.append(mat_inv(g))
            return first_only
        for u in cands[level]:
            if u in chosen or tuple(-x for x in u) in chosen:
                continue
            if rec(level + 1, chosen + [u]):
                return True
        return False

    rec(0, [])
    return found


_ANCHORS: dict = {}
_ANCHOR_BUCKETS: dict = {}


def gl_anchor(sig):
    """(anchor, h) with h . anchor == sig, anchor a fixed representative of the GL_n(Z)-class."""
    hit = _ANCHORS.get(sig)
    if hit is not None:
        return hit
    key = signature_invariant(sig)
    for anchor in _ANCHOR_BUCKETS.get(key, []):
        res = _search(anchor, sig, True)
        if res:
            _ANCHORS[sig] = (anchor, res[0])
            return _ANCHORS[sig]
    _ANCHOR_BUCKETS.setdefault(key, []).append(sig)
    _ANCHORS[sig] = (sig, identity_matrix(len(sig[0])))
    return _ANCHORS[sig]


@lru_cache(maxsize=None)
def automorphisms(anchor) -> tuple[Matrix, ...]:
    return tuple(sorted(set(_search(anchor, anchor, False))))


@lru_cache(maxsize=200000)
def transporters(sig1, sig2) -> tuple[Matrix, ...]:
    """All gamma in GL_n(Z) with gamma . sig1 == sig2."""
    a1, h1 = gl_anchor(sig1)
    a2, h2 = gl_anchor(sig2)
    if a1 != a2:
        return ()
    h1i = mat_inv(h1)
    return tuple(sorted({mat_mul(mat_mul(h2, s), h1i) for s in automorphisms(a1)}))


def transporters_bruteforce(sig1, sig2) -> tuple[Matrix, ...]:
    """Reference implementation: direct search over images of a basis."""
    return tuple(sorted(set(_search(sig1, sig2, False))))


def find_transporter(sig1, sig2, group: Subgroup) -> Matrix | None:
    for g in transporters(sig1, sig2):
        if group.contains(g):
            return g
    return None


def stabilizer(sig, group: Subgroup) -> tuple[Matrix, ...]:
    return tuple(g for g in transporters(sig, sig) if group.contains(g))


def group_closure(gens: Iterable[Matrix], n: int, budget: int = 10_000) -> set[Matrix]:
    """Finite group generated by gens (raises if the budget is exceeded)."""
    I = identity_matrix(n)
    elems = {I}
    frontier = [I]
    gens = list(gens)
    while frontier:
        new = []
        for x in frontier:
            for g in gens:
                y = mat_mul(x, g)
                if y not in elems:
                    elems.add(y)
                    new.append(y)
                    if len(elems) > budget:
                        raise OverflowError("group closure exceeded budget")
        frontier = new
    return elems
