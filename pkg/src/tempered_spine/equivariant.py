"""Coefficient modules and equivariant cochain complexes.

An equivariant cochain assigns to each oriented cell a vector of the
coefficient module with ``phi(g.sigma) = eps(g, sigma) rho(g) phi(sigma)``.
It is determined by its values on orbit representatives, which must lie in
the eps-twisted stabilizer invariants; the cochain space of the complex is the
direct sum of those invariant spaces.  The same "value at an arbitrary cell"
evaluator drives the coboundary and every chain map between complexes.
"""

from __future__ import annotations

from collections import defaultdict
from itertools import combinations_with_replacement
from math import comb
from typing import Callable

from tempered_spine.geometry import orientation_sign
from tempered_spine.groups import Matrix
from tempered_spine.integer import det_int
from tempered_spine.linalg import (
    QQ,
    CohomologyData,
    cohomology_data,
    colspace_basis,
    dm,
    field_characteristic,
    field_spec,
    identity,
    induced_matrix,
    is_zero,
    matmul,
    nullspace,
    parse_field,
    zeros,
)


class BadPrimeError(ValueError):
    def __init__(self, p, orders):
        super().__init__(f"bad prime {p} for this group: stabilizer orders {sorted(set(orders))}")
        self.p = p
        self.orders = orders


class ChainMapError(ValueError):
    pass


# --- coefficient modules --------------------------------------------------------


def monomials(n: int, k: int) -> list[tuple[int, ...]]:
    """Exponent vectors of degree-k monomials in n variables (lexicographically descending)."""
    out = []
    for combo in combinations_with_replacement(range(n), k):
        e = [0] * n
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return sorted(set(out), reverse=True)


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = defaultdict(int)
    for a, x in p.items():
        for b, y in q.items():
            out[tuple(i + j for i, j in zip(a, b))] += x * y
    return out


def sym_power_matrix(g, k: int) -> list[list[int]]:
    """Matrix of P(x) -> P(x g) on degree-k polynomials (columns = images of monomials)."""
    n = len(g)
    basis = monomials(n, k)
    index = {m: i for i, m in enumerate(basis)}
    # linear forms (x g)_j = sum_i x_i g_ij
    lin = []
    for j in range(n):
        lin.append({tuple(int(t == i) for t in range(n)): g[i][j] for i in range(n) if g[i][j]})
    M = [[0] * len(basis) for _ in basis]
    for c, m in enumerate(basis):
        poly = {tuple([0] * n): 1}
        for j, e in enumerate(m):
            for _ in range(e):
                poly = _poly_mul(poly, lin[j])
        for mono, x in poly.items():
            if x:
                M[index[mono]][c] += x
    return M


class CoefficientModule:
    """A left module for integer matrices over Q or F_p.

    ``kind`` is ``"trivial"``, ``"sym"`` (degree k polynomials with
    ``(g.P)(x) = det(g)^e P(x g)``) or ``"custom"`` with a user callable
    returning an integer or rational matrix for any integral g.
    """

    def __init__(self, n: int, kind: str = "trivial", k: int = 0, e: int = 0, field="Q", action=None, dim=None):
        self.n = n
        self.kind = kind
        self.k = k
        self.e = e
        self.K = parse_field(field) if not hasattr(field, "characteristic") else field
        if kind == "trivial":
            self.dim = 1
        elif kind == "sym":
            if k < 0:
                raise ValueError("symmetric power degree must be >= 0")
            self.dim = comb(n + k - 1, k)
        elif kind == "custom":
            if action is None or dim is None:
                raise ValueError("custom modules need action and dim")
            self.dim = dim
        else:
            raise ValueError(f"unknown coefficient kind {kind!r}")
        self._action = action
        self._cache: dict = {}

    @classmethod
    def parse(cls, spec: str, n: int, field="Q") -> "CoefficientModule":
        """``trivial`` or ``sym:k`` or ``sym:k,e``."""
        spec = spec.strip()
        if spec == "trivial":
            return cls(n, "trivial", field=field)
        if spec.startswith("sym:"):
            parts = spec[4:].split(",")
            k = int(parts[0])
            e = int(parts[1]) if len(parts) > 1 else 0
            return cls(n, "sym", k=k, e=e, field=field)
        raise ValueError(f"unparseable coefficient spec {spec!r}")

    @property
    def characteristic(self) -> int:
        return field_characteristic(self.K)

    def label(self) -> str:
        if self.kind == "sym":
            return f"sym:{self.k}" + (f",{self.e}" if self.e else "")
        return self.kind

    def to_json(self):
        return {"kind": self.kind, "k": self.k, "e": self.e, "field": field_spec(self.K), "dim": self.dim}

    def raw(self, g) -> list[list]:
        if self.kind == "trivial":
            return [[det_int(g) ** self.e if self.e else 1]]
        if self.kind == "sym":
            M = sym_power_matrix(g, self.k)
            if self.e:
                d = det_int(g) ** self.e
                M = [[d * x for x in r] for r in M]
            return M
        return [list(r) for r in self._action(g)]

    def matrix(self, g) -> "DomainMatrix":  # noqa: F821
        key = tuple(tuple(int(x) for x in r) for r in g)
        M = self._cache.get(key)
        if M is None:
            M = dm(self.raw(key), self.K)
            self._cache[key] = M
        return M


def check_bad_primes(tables, p: int) -> list[int]:
    """Stabilizer orders divisible by p (empty list means p is fine)."""
    if not p:
        return []
    bad = []
    for t in tables:
        for reps in t.reps.values():
            for r in reps:
                if r.order % p == 0:
                    bad.append(r.order)
    return sorted(set(bad))


# --- cochain complexes -----------------------------------------------------------


class _Block:
    __slots__ = ("sig", "E", "L", "offset", "m")

    def __init__(self, sig, E, L, offset):
        self.sig = sig
        self.E = E
        self.L = L
        self.offset = offset
        self.m = E.shape[1]


def _left_inverse(E):
    """L with L E = I for E with independent columns (pivot-row inverse)."""
    K = E.domain
    r, m = E.shape
    if m == 0:
        return zeros(0, r, K)
    _, pivots = E.transpose().rref()
    rows = list(pivots)
    sub = E.extract(rows, list(range(m)))
    inv = sub.inv()
    sel = [[K.zero] * r for _ in range(m)]
    for i, row in enumerate(rows):
        sel[i][row] = K.one
    from sympy.polys.matrices import DomainMatrix

    return inv * DomainMatrix(sel, (m, r), K)


def twisted_invariants(rep, rho: CoefficientModule):
    """Basis (columns) of {v : rho(g) v = eps(g) v for g in Stab}."""
    K = rho.K
    d = rho.dim
    if rho.characteristic == 0:
        P = zeros(d, d, K)
        for g, e in zip(rep.stabilizer, rep.eps):
            M = rho.matrix(g)
            P = P + M if e == 1 else P - M
        P = P * K.convert(QQ(1, len(rep.stabilizer)), QQ)
        return colspace_basis(P)
    rows = None
    I = identity(d, K)
    for g in rep.generators or rep.stabilizer:
        e = rep.character(g)
        M = rho.matrix(g) - (I if e == 1 else -I)
        rows = M if rows is None else rows.vstack(M)
    if rows is None:
        return I
    return nullspace(rows)


class CochainSpace:
    """Shared interface of interior complexes and boundary total complexes."""

    K = QQ
    dims: list
    D: list

    def slots(self, m: int):
        """(flag, q, sig, offset, L) for every basis block of total degree m."""
        raise NotImplementedError

    def value(self, flag, q: int, sig):
        """(offset, k, M): the cochain value at (flag, sig) is M @ c[offset:offset+k]."""
        raise NotImplementedError

    def cohomology(self) -> list[CohomologyData]:
        if not hasattr(self, "_coh"):
            self._coh = cohomology_data(self.dims, self.D, self.K)
        return self._coh

    def betti(self) -> list[int]:
        return [h.dim for h in self.cohomology()]

    def check_d2(self) -> bool:
        for a, b in zip(self.D, self.D[1:]):
            if not is_zero(matmul(b, a)):
                return False
        return True


class EqCochainComplex(CochainSpace):
    """Equivariant cochains of one orbit table with coefficients in rho."""

    def __init__(self, table, rho: CoefficientModule, *, check_primes: bool = True, twist: bool = True):
        if check_primes:
            bad = check_bad_primes([table], rho.characteristic)
            if bad:
                raise BadPrimeError(rho.characteristic, bad)
        self.table = table
        self.rho = rho
        self.K = rho.K
        self.twist = twist
        top = max(table.dims) if table.dims else -1
        self.blocks: list[list[_Block]] = []
        self.dims = []
        for q in range(top + 1):
            off = 0
            bl = []
            for rep in table.reps.get(q, []):
                r = rep if twist else _untwisted(rep)
                E = twisted_invariants(r, rho)
                bl.append(_Block(rep.signature, E, _left_inverse(E), off))
                off += E.shape[1]
            self.blocks.append(bl)
            self.dims.append(off)
        self.D = [self._coboundary(q) for q in range(top)]

    @property
    def flag(self):
        return self.table.context.flag

    def slots(self, m):
        if m >= len(self.blocks):
            return []
        return [(self.flag, m, b.sig, b.offset, b.L) for b in self.blocks[m]]

    def local_value(self, q: int, sig):
        """(offset, k, M) in this complex's own degree-q coordinates."""
        d, i, g = self.table.locate(sig)
        if d != q:
            raise ValueError(f"cell of dimension {d} evaluated in degree {q}")
        b = self.blocks[q][i]
        if b.m == 0:
            return b.offset, 0, None
        e = orientation_sign(g, b.sig)[1] if self.twist else 1
        M = matmul(self.rho.matrix(g), b.E)
        if e == -1:
            M = -M
        return b.offset, b.m, M

    def value(self, flag, q, sig):
        return self.local_value(q, sig)

    def _coboundary(self, q: int):
        K = self.K
        out = zeros(self.dims[q + 1], self.dims[q], K)
        rows = out.to_list()
        for i, b in enumerate(self.blocks[q + 1]):
            if b.m == 0:
                continue
            acc: dict = {}
            for inc in self.table.incidence.get((q + 1, i), []):
                src = self.blocks[q][inc.facet_rep]
                if src.m == 0:
                    continue
                e = orientation_sign(inc.transporter, src.sig)[1] if self.twist else 1
                M = matmul(self.rho.matrix(inc.transporter), src.E)
                if inc.sign * e == -1:
                    M = -M
                key = src.offset
                acc[key] = acc[key] + M if key in acc else M
            _place(rows, b, acc, K)
        from sympy.polys.matrices import DomainMatrix

        return DomainMatrix(rows, (self.dims[q + 1], self.dims[q]), K)


def _untwisted(rep):
    from copy import copy

    r = copy(rep)
    r.eps = tuple(1 for _ in rep.eps)
    return r


def _place(rows, block, acc: dict, K):
    """rows[block] += L @ M for each source offset."""
    for off, M in acc.items():
        B = matmul(block.L, M).to_list()
        for a in range(len(B)):
            r = rows[block.offset + a]
            for c, x in enumerate(B[a]):
                if x:
                    r[off + c] = r[off + c] + x


class ChainMap:
    """Degree-wise matrices of a cochain map src -> dst."""

    def __init__(self, src: CochainSpace, dst: CochainSpace, mats, name: str = ""):
        self.src = src
        self.dst = dst
        self.mats = mats
        self.name = name

    def residuals(self):
        """dst.D f - f src.D per degree (zero matrices for a chain map)."""
        out = []
        for m in range(len(self.mats) - 1):
            lhs = matmul(self.dst.D[m], self.mats[m]) if m < len(self.dst.D) else None
            rhs = matmul(self.mats[m + 1], self.src.D[m]) if m < len(self.src.D) else None
            if lhs is None and rhs is None:
                continue
            if lhs is None:
                out.append(rhs)
            elif rhs is None:
                out.append(lhs)
            else:
                out.append(lhs - rhs)
        return out

    def is_chain_map(self) -> bool:
        return all(is_zero(r) for r in self.residuals())

    def induced(self, degrees=None):
        """Matrices on cohomology; raises ChainMapError if not a chain map."""
        if not self.is_chain_map():
            raise ChainMapError(f"{self.name or 'map'} does not commute with differentials")
        hs = self.src.cohomology()
        hd = self.dst.cohomology()
        n = min(len(hs), len(hd), len(self.mats))
        return [induced_matrix(self.mats[m], hs[m], hd[m]) for m in range(n)]

    def compose(self, other: "ChainMap") -> "ChainMap":
        """self o other."""
        return ChainMap(other.src, self.dst, [matmul(a, b) for a, b in zip(self.mats, other.mats)])


TermFn = Callable  # (flag, q, sig) -> list[(offset, k, M)]


def build_map(src: CochainSpace, dst: CochainSpace, terms: TermFn, name: str = "") -> ChainMap:
    """Assemble a cochain map from the value of the image cochain at each dst slot."""
    from sympy.polys.matrices import DomainMatrix

    K = dst.K
    mats = []
    for m in range(min(len(src.dims), len(dst.dims))):
        rows = [[K.zero] * src.dims[m] for _ in range(dst.dims[m])]
        for flag, q, sig, offset, L in dst.slots(m):
            k = L.shape[0]
            if k == 0:
                continue
            acc: dict = {}
            for off, kk, M in terms(flag, q, sig):
                if kk == 0 or M is None:
                    continue
                acc[off] = acc[off] + M if off in acc else M
            _place(rows, _SlotView(offset, L), acc, K)
        mats.append(DomainMatrix(rows, (dst.dims[m], src.dims[m]), K))
    return ChainMap(src, dst, mats, name)


class _SlotView:
    __slots__ = ("offset", "L")

    def __init__(self, offset, L):
        self.offset = offset
        self.L = L


def identity_map(cx: CochainSpace) -> ChainMap:
    return ChainMap(cx, cx, [identity(d, cx.K) for d in cx.dims], "identity")


def build_complex(table, rho: CoefficientModule, **kw) -> EqCochainComplex:
    return EqCochainComplex(table, rho, **kw)


def cohomology(cx: CochainSpace) -> list[CohomologyData]:
    return cx.cohomology()


def induced_map(f: ChainMap, src=None, dst=None):
    if src is not None and src is not f.src or dst is not None and dst is not f.dst:
        raise ValueError("chain map endpoints do not match the given complexes")
    return f.induced()


def scale_value(M, g: Matrix, rho: CoefficientModule, e: int):
    """e * rho(g) @ M."""
    R = matmul(rho.matrix(g), M)
    return -R if e == -1 else R
