"""Flags of saturated sublattices and their stabilizers.

A flag is stored by its proper members ``V_1 < ... < V_{l-1}`` (the last
member ``Z^n`` is implicit), each as an HNF basis.  Group elements move flags
like row-vector subspaces: ``g . F = F g^{-1}``.
"""

from __future__ import annotations

from functools import cached_property
from itertools import combinations

from tempered_spine.groups import Matrix, mat_inv, vec_mul
from tempered_spine.integer import hnf, integer_kernel, saturate


class Flag:
    __slots__ = ("n", "members", "__dict__")

    def __init__(self, n: int, members):
        self.n = n
        mem = []
        for m in members:
            basis = saturate([tuple(v) for v in m], n)
            if not basis:
                raise ValueError("flag members must be nonzero")
            mem.append(basis)
        ranks = [len(b) for b in mem]
        if any(a >= b for a, b in zip(ranks, ranks[1:])) or (ranks and ranks[-1] >= n):
            raise ValueError("flag members must be strictly increasing proper sublattices")
        for small, big in zip(mem, mem[1:]):
            eqs = _equations(big, n)
            if any(sum(a * c for a, c in zip(v, e)) for v in small for e in eqs):
                raise ValueError("flag members are not nested")
        self.members = tuple(mem)

    @classmethod
    def standard(cls, n: int, dims) -> "Flag":
        return cls(n, [[tuple(int(i == j) for j in range(n)) for i in range(d)] for d in dims])

    @property
    def length(self) -> int:
        return len(self.members) + 1

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.members)

    @cached_property
    def _eqs(self):
        return [_equations(b, self.n) for b in self.members]

    def contains_vector(self, j: int, v) -> bool:
        return not any(sum(a * c for a, c in zip(v, e)) for e in self._eqs[j])

    def admits(self, sig) -> bool:
        """Signature contains, for each member, vectors spanning it over Q."""
        from tempered_spine.lattice import span_rank

        for j, b in enumerate(self.members):
            inside = [v for v in sig if self.contains_vector(j, v)]
            if len(inside) < len(b) or span_rank(inside) != len(b):
                return False
        return True

    def is_stabilized_by(self, g: Matrix) -> bool:
        for j, b in enumerate(self.members):
            for v in b:
                if not self.contains_vector(j, vec_mul(v, g)):
                    return False
        return True

    def act(self, g: Matrix) -> "Flag":
        gi = mat_inv(g)
        return Flag(self.n, [[vec_mul(v, gi) for v in b] for b in self.members])

    def right(self, m) -> "Flag":
        """The flag with members V_j m (m any nonsingular integer matrix)."""
        return Flag(self.n, [[vec_mul(v, m) for v in b] for b in self.members])

    def delete(self, j: int) -> "Flag":
        return Flag(self.n, [b for i, b in enumerate(self.members) if i != j])

    def refines(self, other: "Flag") -> bool:
        """True when every member of ``other`` is a member of self."""
        return set(other.members) <= set(self.members)

    def label(self) -> str:
        return "|".join(";".join(",".join(map(str, v)) for v in b) for b in self.members)

    def to_json(self):
        return [[list(v) for v in b] for b in self.members]

    def __eq__(self, other):
        return isinstance(other, Flag) and self.members == other.members

    def __hash__(self):
        return hash(self.members)

    def __repr__(self):
        return f"Flag({self.label()})"


def _equations(basis, n: int):
    """Integer vectors e with v . e = 0 exactly on the Q-span of basis."""
    if not basis:
        return [tuple(int(i == j) for j in range(n)) for i in range(n)]
    return [tuple(e) for e in integer_kernel([list(c) for c in zip(*basis)])]


def adapted_basis(flag: Flag) -> Matrix:
    """Unimodular B (det 1) whose first dim V_j rows span V_j for every j."""
    n = flag.n
    rows: list[tuple[int, ...]] = []
    chain = list(flag.members) + [tuple(tuple(int(i == j) for j in range(n)) for i in range(n))]
    for big in chain:
        if not rows:
            rows = list(big)
            continue
        # coordinates of current rows in the basis of `big`
        from tempered_spine.lattice import _inverse

        r = len(big)
        # solve C * big = rows with C integral (big has full row rank)
        cols = [list(c) for c in zip(*big)]
        sel = _independent_columns(cols, r)
        Bsq = [[big[i][c] for c in sel] for i in range(r)]
        inv = _inverse(Bsq)
        C = [[int(sum(v[c] * inv[k][i] for k, c in enumerate(sel))) for i in range(r)] for v in rows]
        comp = _complete_unimodular(C, r)
        rows = rows + [tuple(sum(x * big[k][j] for k, x in enumerate(cr)) for j in range(n)) for cr in comp]
    from tempered_spine.integer import det_int

    if det_int(rows) < 0:
        rows[-1] = tuple(-x for x in rows[-1])
    return tuple(rows)


def _independent_columns(cols, r):
    from tempered_spine.lattice import span_rank

    sel: list[int] = []
    for i, c in enumerate(cols):
        if span_rank([cols[j] for j in sel] + [c]) > len(sel):
            sel.append(i)
        if len(sel) == r:
            break
    return sel


def _complete_unimodular(C, r):
    """Rows D with [C; D] unimodular, for C with saturated row lattice in Z^r."""
    from tempered_spine.integer import hnf_with_transform
    from tempered_spine.lattice import _inverse

    Ct = [list(c) for c in zip(*C)]  # r x k
    H, U, _ = hnf_with_transform(Ct)
    Ui = _inverse(U)
    UiT = [[int(Ui[j][i]) for j in range(r)] for i in range(r)]
    k = len(C)
    return [tuple(row) for row in UiT[k:]]


def flag_types(n: int, length: int):
    """Dimension tuples of proper members for flags of the given length."""
    if not 1 <= length <= n:
        raise ValueError(f"flag length must be in [1, {n}]")
    return [c for c in combinations(range(1, n), length - 1)]


def standard_flags(n: int, length: int) -> list[Flag]:
    return [Flag.standard(n, dims) for dims in flag_types(n, length)]


def parabolic_generators(n: int, dims) -> list[Matrix]:
    """Generators of SL_n(Z) intersected with the stabilizer of the standard flag."""
    blocks = []
    start = 0
    for d in list(dims) + [n]:
        blocks.append(range(start, d))
        start = d
    block_of = {}
    for b, rng in enumerate(blocks):
        for i in rng:
            block_of[i] = b
    gens = []
    I = [[int(i == j) for j in range(n)] for i in range(n)]
    for i in range(n):
        for k in range(n):
            # e_i g must stay in the span of e_0..e_{end of its block}: g_{ik} = 0 if block(k) > block(i)
            if i != k and block_of[k] <= block_of[i]:
                for e in (1, -1):
                    M = [r[:] for r in I]
                    M[i][k] = e
                    gens.append(tuple(map(tuple, M)))
    for i in range(n):
        for k in range(i + 1, n):
            M = [r[:] for r in I]
            M[i][i] = -1
            M[k][k] = -1
            gens.append(tuple(map(tuple, M)))
    return gens
