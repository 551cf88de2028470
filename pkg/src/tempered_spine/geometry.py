"""Polyhedral geometry of the weighted well-rounded retract at one temperament.

A form is handled as its coordinate vector ``x`` in the space of symmetric
matrices (entries ``a_ij`` with ``i <= j``).  For a lattice vector ``v`` the
linear functional ``lf(v)`` satisfies ``lf(v) . x = v A v^T``.  The open cell
with signature ``S`` is the set of forms whose weighted minimal vectors are
exactly ``S``; its linear span of directions ``D_S`` (the common null space of
the ``lf(v)``, ``v`` in ``S``) does not depend on the weights.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

from gmpy2 import mpq

from tempered_spine.groups import Matrix, canon
from tempered_spine.lattice import QForm, TemperedWeight, _det, arithmetic_minimum, short_vectors
from tempered_spine.linalg import QQ, dm, nullspace, rank

Signature = tuple[tuple[int, ...], ...]


class GeometryError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def form_pairs(n: int) -> tuple[tuple[int, int], ...]:
    return tuple((i, j) for i in range(n) for j in range(i, n))


def form_dim(n: int) -> int:
    return n * (n + 1) // 2


@lru_cache(maxsize=None)
def lf(v: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(v[i] * v[j] * (1 if i == j else 2) for i, j in form_pairs(len(v)))


def vec_to_form(x, n: int) -> QForm:
    A = [[mpq(0)] * n for _ in range(n)]
    for (i, j), a in zip(form_pairs(n), x):
        A[i][j] = A[j][i] = mpq(a)
    return QForm(A, check=False)


def form_to_vec(A: QForm) -> tuple:
    return tuple(A.entries[i][j] for i, j in form_pairs(A.n))


def act_on_vec(g: Matrix, x, n: int) -> tuple:
    """Coordinates of g X g^T."""
    return form_to_vec(vec_to_form(x, n).transformed(g))


def _to_mpq(e) -> mpq:
    return mpq(int(e.numerator), int(e.denominator))


@lru_cache(maxsize=None)
def lf_rank(sig: Signature) -> int:
    return rank(dm([lf(v) for v in sig]))


def cell_dim(sig: Signature) -> int:
    return form_dim(len(sig[0])) - lf_rank(sig)


def spans(sig, n: int) -> bool:
    return rank(dm([list(v) for v in sig])) == n if sig else False


@lru_cache(maxsize=None)
def direction_basis(sig: Signature) -> tuple[tuple, ...]:
    """Canonical (RREF) basis of D_S; its order fixes the cell orientation."""
    ns = nullspace(dm([lf(v) for v in sig]))
    cols = ns.to_list()
    k = ns.shape[1]
    return tuple(tuple(_to_mpq(cols[r][c]) for r in range(ns.shape[0])) for c in range(k))


def coords_in(basis, vectors):
    """Coordinates of each vector in ``basis`` (list of rows), exact; None if outside span."""
    if not basis:
        return [[] for _ in vectors]
    from tempered_spine.linalg import solve_columns

    B = dm([list(c) for c in zip(*basis)])
    Y = dm([list(c) for c in zip(*vectors)])
    X = solve_columns(B, Y)
    if X is None:
        return None
    rows = X.to_list()
    return [[_to_mpq(rows[i][j]) for i in range(len(basis))] for j in range(len(vectors))]


def sign_det(M) -> int:
    if not M:
        return 1
    d = _det(M)
    if d == 0:
        raise GeometryError("degenerate orientation matrix")
    return 1 if d > 0 else -1


def orientation_sign(g: Matrix, sig: Signature) -> tuple[Signature, int]:
    """(g . S, eps) where eps compares g_* of the basis of D_S with the basis of D_{g.S}."""
    from tempered_spine.groups import act_signature

    n = len(sig[0])
    tgt = act_signature(g, sig)
    basis = direction_basis(sig)
    if not basis:
        return tgt, 1
    imgs = [act_on_vec(g, b, n) for b in basis]
    C = coords_in(direction_basis(tgt), imgs)
    if C is None:
        raise GeometryError("image directions leave the target cell span")
    return tgt, sign_det(C)


# --- local structure around a vertex ------------------------------------------


def _primitive(row):
    from math import gcd

    g = 0
    for x in row:
        g = gcd(g, x)
    return tuple(x // g for x in row) if g > 1 else tuple(row)


def strictly_feasible(H) -> bool:
    """Is there y with H y > 0 componentwise?  Exact Fourier-Motzkin elimination.

    H is a list of integer rows.  Positive combinations of strict inequalities
    stay strict, so eliminating a variable preserves feasibility exactly; a
    zero row left over means 0 > 0.
    """
    rows = {_primitive(r) for r in H}
    if not rows:
        return True
    m = len(next(iter(rows)))
    for j in range(m):
        if any(not any(r) for r in rows):
            return False
        pos = [r for r in rows if r[j] > 0]
        neg = [r for r in rows if r[j] < 0]
        new = {r for r in rows if r[j] == 0}
        for p in pos:
            for q in neg:
                new.add(_primitive(tuple(-q[j] * a + p[j] * b for a, b in zip(p, q))))
        rows = new
        if not rows:
            return True
    return not rows


def _face_feasible(T: Signature, S: tuple) -> bool:
    """Is cone(lf(S)) a face of cone(lf(T)) meeting T exactly in S?

    Equivalent to: some X kills lf(s) for s in S and is positive on lf(t) for
    the remaining t.  Solved exactly on the null space of lf(S).
    """
    rest = [t for t in T if t not in S]
    if not rest:
        return True
    K = nullspace(dm([list(lf(s)) for s in S]))  # columns
    if K.shape[1] == 0:
        return False
    cols = K.to_Matrix().T.tolist()
    from math import lcm

    ints = []
    for c in cols:
        den = lcm(*[int(x.denominator) for x in c])
        ints.append([int(x * den) for x in c])
    H = [[sum(a * b for a, b in zip(lf(t), c)) for c in ints] for t in rest]
    return strictly_feasible(H)


@lru_cache(maxsize=None)
def local_cells(T: Signature) -> tuple[Signature, ...]:
    """All cells whose closure contains the vertex with minimal set T.

    These are the subsets S of T that span Q^n and cut out a face of the cone
    generated by the lf(t); the weights are irrelevant once T is known.
    """
    n = len(T[0])
    independent = len(T) == lf_rank(T)
    out = []
    for k in range(n, len(T) + 1):
        for S in combinations(T, k):
            if not spans(S, n):
                continue
            if independent or _face_feasible(T, S):
                out.append(tuple(S))
    return tuple(out)


# --- slice geometry -------------------------------------------------------------


class SliceGeometry:
    """Vertex forms, edge walks and cell closures at one fixed temperament."""

    def __init__(self, w: TemperedWeight):
        self.w = w
        self.n = w.n
        self.N = form_dim(self.n)
        self._vertex_form: dict = {}
        self._edge_end: dict = {}
        self._verts: dict = {}

    # forms and minima
    def minimal_signature(self, x) -> tuple[mpq, Signature, int]:
        rep = arithmetic_minimum(vec_to_form(x, self.n), self.w)
        return rep.minimum, canon(rep.vectors), rep.span_rank

    def vertex_form(self, T: Signature) -> tuple:
        if T in self._vertex_form:
            return self._vertex_form[T]
        rows = [[self.w.phi(v) * c for c in lf(v)] for v in T]
        from tempered_spine.linalg import solve_columns

        B = dm(rows)
        if rank(B) != self.N:
            raise GeometryError(f"signature {T} does not determine a vertex")
        X = solve_columns(B, dm([[1] for _ in T]))
        if X is None:
            raise GeometryError(f"signature {T} is not a vertex at s={self.w.s}")
        x = tuple(_to_mpq(r[0]) for r in X.to_list())
        self._vertex_form[T] = x
        return x

    def check_vertex(self, T: Signature) -> None:
        m, sig, _ = self.minimal_signature(self.vertex_form(T))
        if m != 1 or sig != T:
            raise GeometryError(f"{T} is not a vertex of the slice at s={self.w.s}")

    def barycenter(self, S: Signature) -> tuple:
        vs = self.vertices(S)
        k = len(vs)
        forms = [self.vertex_form(T) for T in vs]
        return tuple(sum(col) / k for col in zip(*forms))

    def advance(self, x, X):
        """Move from normalized x along X until a new vector reaches weighted length 1."""
        n = self.n
        w = self.w
        lam = mpq(1)
        lo, hi = mpq(0), None  # no crossing up to lo; degenerate at hi
        for _ in range(400):
            F = vec_to_form(tuple(a + lam * d for a, d in zip(x, X)), n)
            if not F.is_positive_definite():
                hi = lam
                lam = (lo + hi) / 2
                continue
            roots = []
            for v in short_vectors(F, 1 / w.min_weight):
                phi = w.phi(v)
                L = lf(v)
                slope = phi * sum(c * d for c, d in zip(L, X) if c)
                if slope >= 0:
                    continue
                base = phi * sum(c * a for c, a in zip(L, x) if c)
                if base + lam * slope <= 1:
                    roots.append((1 - base) / slope)
            if roots:
                r = min(roots)
                if r <= 0:
                    raise GeometryError("direction leaves the cell immediately")
                return tuple(a + r * d for a, d in zip(x, X))
            lo = lam
            lam = 2 * lam if hi is None else (lo + hi) / 2
        raise GeometryError("no wall found along direction (unbounded cell?)")

    def descend(self, form: QForm) -> Signature:
        """Vertex reached from a well-rounded normalized form by moving inside cells."""
        x = form_to_vec(form)
        m, T, r = self.minimal_signature(x)
        if m != 1 or r != self.n:
            raise GeometryError("descend needs a normalized well-rounded form")
        while lf_rank(T) < self.N:
            X = direction_basis(T)[0]
            x = self.advance(x, X)
            _, T, _ = self.minimal_signature(x)
        return T

    def edge_end(self, T: Signature, E: Signature) -> Signature:
        key = (T, E)
        if key in self._edge_end:
            return self._edge_end[key]
        (X,) = direction_basis(E)
        t = next(v for v in T if v not in E)
        if sum(c * d for c, d in zip(lf(t), X)) < 0:
            X = tuple(-d for d in X)
        y = self.advance(self.vertex_form(T), X)
        m, T2, _ = self.minimal_signature(y)
        if m != 1 or not set(E) <= set(T2) or lf_rank(T2) != self.N:
            raise GeometryError("edge walk did not end at a vertex")
        self._edge_end[key] = T2
        self._edge_end[(T2, E)] = T
        return T2

    def vertices(self, S: Signature, start: Signature | None = None) -> tuple[Signature, ...]:
        """Vertex signatures of the closed cell with signature S."""
        if S in self._verts:
            return self._verts[S]
        if lf_rank(S) == self.N:
            self._verts[S] = (S,)
            return (S,)
        if start is None:
            raise GeometryError("need a starting vertex to enumerate cell vertices")
        Sset = set(S)
        seen = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for T in frontier:
                for E in local_cells(T):
                    if lf_rank(E) == self.N - 1 and Sset <= set(E):
                        U = self.edge_end(T, E)
                        if U not in seen:
                            seen.add(U)
                            nxt.append(U)
            frontier = nxt
        out = tuple(sorted(seen))
        self._verts[S] = out
        return out

    def closure(self, S: Signature, start: Signature) -> dict[Signature, tuple[Signature, ...]]:
        """All faces F of S (including S) mapped to their vertex lists."""
        verts = self.vertices(S, start)
        faces = set()
        Sset = set(S)
        for T in verts:
            for F in local_cells(T):
                if Sset <= set(F):
                    faces.add(F)
        out = {}
        for F in faces:
            Fset = set(F)
            vF = tuple(T for T in verts if Fset <= set(T))
            self._verts.setdefault(F, vF)
            out[F] = vF
        return out

    def incidence(self, tau: Signature, sigma: Signature) -> int:
        """[tau : sigma] for a facet sigma of tau, from outward normal + orientation."""
        bt = direction_basis(tau)
        bs = direction_basis(sigma)
        ctau = self.barycenter(tau)
        csig = self.barycenter(sigma)
        out = tuple(a - b for a, b in zip(csig, ctau))
        C = coords_in(bt, [out] + list(bs))
        if C is None:
            raise GeometryError("facet directions not inside the cell span")
        return sign_det(C)

