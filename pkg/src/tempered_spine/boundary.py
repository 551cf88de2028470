"""Flag classes, the flag-indexed double complex for the boundary, and psi.

Column ``p`` of the double complex is the sum, over classes of flags with
``p + 1`` proper members, of the equivariant cochains of the subcomplex of
cells that are well rounded inside every member of the flag (for the
stabilizer of the flag in the group).  The vertical differential is the
equivariant coboundary with sign ``(-1)^p``; the horizontal differential is
the alternating sum of restrictions over deletions of one flag member.
"""

from __future__ import annotations

from sympy.polys.matrices import DomainMatrix

from tempered_spine.cosets import act_lattice, lattice, lattice_orbit, sl_generators, split_orbits
from tempered_spine.equivariant import (
    ChainMap,
    CochainSpace,
    CoefficientModule,
    EqCochainComplex,
    build_map,
    scale_value,
)
from tempered_spine.flags import Flag, adapted_basis, flag_types, parabolic_generators
from tempered_spine.geometry import orientation_sign
from tempered_spine.groups import (
    FlagStabilizer,
    HeckeSubgroup,
    Matrix,
    SL,
    Subgroup,
    act_signature,
    identity_matrix,
    mat_inv,
    mat_mul,
)
from tempered_spine.linalg import CohomologyData, induced_matrix, is_zero, matmul, rank, zeros


class FlagClasses:
    """Flag orbit representatives for SL_n(Z) or a Hecke subgroup, with exact locating."""

    def __init__(self, group: Subgroup):
        if isinstance(group, SL):
            self.a = identity_matrix(group.n)
        elif isinstance(group, HeckeSubgroup):
            self.a = group.a
        else:
            raise ValueError("flag classes are implemented for SL_n(Z) and Hecke subgroups")
        self.group = group
        self.n = group.n
        self.M0 = lattice(self.a)
        self.lattices = lattice_orbit(self.a, sl_generators(self.n))
        self._types: dict = {}

    def _type(self, dims):
        dims = tuple(dims)
        if dims not in self._types:
            n = self.n
            gens = parabolic_generators(n, dims)
            orbits = split_orbits(self.lattices, gens)
            # put the orbit of M0 first so the standard flag is a representative
            orbits.sort(key=lambda o: (self.M0 not in o, min(o)))
            entries = []
            for orb in orbits:
                rep_lat = self.M0 if self.M0 in orb else next(iter(orb))
                # re-root the orbit at rep_lat when needed
                if orb[rep_lat] != identity_matrix(n):
                    pr = mat_inv(orb[rep_lat])
                    orb = {M: mat_mul(pr, p) for M, p in orb.items()}
                h = self.lattices[rep_lat]
                flag = Flag.standard(n, dims).right(mat_inv(h))
                entries.append((flag, h, orb))
            self._types[dims] = entries
        return self._types[dims]

    def reps(self, length: int) -> list[Flag]:
        out = []
        for dims in flag_types(self.n, length):
            out.extend(e[0] for e in self._type(dims))
        return out

    def locate(self, flag: Flag) -> tuple[int, Matrix]:
        """(index into reps(length), g in the group) with flag == g . rep."""
        entries = []
        index0 = 0
        for dims in flag_types(self.n, flag.length):
            if dims == flag.dims:
                entries = self._type(dims)
                break
            index0 += len(self._type(dims))
        B = adapted_basis(flag)
        hp = mat_inv(B)
        Mp = act_lattice(self.M0, hp)
        for r, (rep, h, orb) in enumerate(entries):
            if Mp in orb:
                p = orb[Mp]
                ginv = mat_mul(mat_mul(h, p), B)
                g = mat_inv(ginv)
                return index0 + r, g
        raise KeyError(f"flag {flag} not located")


def flag_reps(n: int, length: int, group: Subgroup) -> list[Flag]:
    if not 2 <= length <= n:
        raise ValueError(f"flag length must be in [2, {n}]")
    return FlagClasses(group).reps(length)


def flag_contexts(group: Subgroup, classes: FlagClasses | None = None):
    """Context list: the group itself and the flag stabilizers of every class."""
    from tempered_spine.spine import Context

    classes = classes or FlagClasses(group)
    out = [Context(group)]
    for length in range(2, group.n + 1):
        for f in classes.reps(length):
            out.append(Context(FlagStabilizer(group, f), f))
    return out


def subcomplex_WF(chunk, flag: Flag, tables: dict | None = None):
    """Cells of the chunk admitted by the flag, plus the matching orbit table if given."""
    cells = sorted(s for s in chunk.cells if flag.admits(s))
    table = None
    if tables is not None:
        for ctx, t in tables.items():
            if ctx.flag == flag:
                table = t
                break
        else:
            raise KeyError("flag context missing from the orbit tables")
    return cells, table


class BoundaryComplex(CochainSpace):
    """Total complex of the flag double complex, with its bigraded pieces."""

    def __init__(self, tables: dict, group: Subgroup, rho: CoefficientModule, classes: FlagClasses | None = None):
        from tempered_spine.spine import Context

        self.group = group
        self.rho = rho
        self.K = rho.K
        self.classes = classes or FlagClasses(group)
        n = group.n
        self.n = n
        self.columns: list[list[tuple[Flag, EqCochainComplex]]] = []
        for length in range(2, n + 1):
            col = []
            for f in self.classes.reps(length):
                ctx = Context(FlagStabilizer(group, f), f)
                if ctx not in tables:
                    raise KeyError(f"missing flag context {ctx.name}")
                col.append((f, EqCochainComplex(tables[ctx], rho)))
            self.columns.append(col)
        self.P = len(self.columns)
        self.Q = max((len(cx.dims) for col in self.columns for _, cx in col), default=0)
        K = self.K
        # column offsets
        self.col_off = []
        self.col_dim = []
        for col in self.columns:
            offs, dims = [], []
            for q in range(self.Q):
                o = 0
                per = []
                for _, cx in col:
                    per.append(o)
                    o += cx.dims[q] if q < len(cx.dims) else 0
                offs.append(per)
                dims.append(o)
            self.col_off.append(offs)
            self.col_dim.append(dims)
        top = self.P + self.Q - 1
        self.tot_off = {}
        self.dims = []
        for m in range(top):
            o = 0
            for p in range(self.P):
                q = m - p
                if 0 <= q < self.Q:
                    self.tot_off[(p, q)] = o
                    o += self.col_dim[p][q]
            self.dims.append(o)
        # vertical (unsigned) and horizontal differentials per (p, q)
        self.dv = {}
        for p, col in enumerate(self.columns):
            for q in range(self.Q - 1):
                M = [[K.zero] * self.col_dim[p][q] for _ in range(self.col_dim[p][q + 1])]
                for i, (_, cx) in enumerate(col):
                    if q < len(cx.D):
                        _put(M, cx.D[q], self.col_off[p][q + 1][i], self.col_off[p][q][i])
                self.dv[(p, q)] = DomainMatrix(M, (self.col_dim[p][q + 1], self.col_dim[p][q]), K)
        self.dh = {}
        for p in range(self.P - 1):
            for q in range(self.Q):
                self.dh[(p, q)] = self._horizontal(p, q)
        self.D = [self._total(m, True, True) for m in range(len(self.dims) - 1)]

    # -- evaluation ----------------------------------------------------------
    def column_of(self, flag: Flag) -> int:
        return flag.length - 2

    def value(self, flag, q, sig):
        """Value of a total cochain at an arbitrary (flag, cell)."""
        p = self.column_of(flag)
        r, g = self.classes.locate(flag)
        rep_flag, cx = self.columns[p][r]
        sig0 = act_signature(mat_inv(g), sig)
        off, k, M = cx.local_value(q, sig0)
        if k == 0:
            return off, 0, None
        e = orientation_sign(g, sig0)[1]
        return self.tot_off[(p, q)] + self.col_off[p][q][r] + off, k, scale_value(M, g, self.rho, e)

    def column_value(self, flag, q, sig):
        """Like value, but offsets inside column p at degree q."""
        p = self.column_of(flag)
        off, k, M = self.value(flag, q, sig)
        return off - self.tot_off[(p, q)], k, M

    def slots(self, m):
        out = []
        for p, col in enumerate(self.columns):
            q = m - p
            if not 0 <= q < self.Q:
                continue
            for i, (f, cx) in enumerate(col):
                base = self.tot_off[(p, q)] + self.col_off[p][q][i]
                for _, qq, sig, off, L in cx.slots(q):
                    out.append((f, qq, sig, base + off, L))
        return out

    def _horizontal(self, p: int, q: int):
        K = self.K
        rows = [[K.zero] * self.col_dim[p][q] for _ in range(self.col_dim[p + 1][q])]
        for i, (f, cx) in enumerate(self.columns[p + 1]):
            if q >= len(cx.blocks):
                continue
            for b in cx.blocks[q]:
                if b.m == 0:
                    continue
                acc = {}
                for j in range(len(f.members)):
                    off, k, M = self.column_value(f.delete(j), q, b.sig)
                    if k == 0:
                        continue
                    if j % 2:
                        M = -M
                    acc[off] = acc[off] + M if off in acc else M
                base = self.col_off[p + 1][q][i] + b.offset
                for off, M in acc.items():
                    _put(rows, matmul(b.L, M), base, off)
        return DomainMatrix(rows, (self.col_dim[p + 1][q], self.col_dim[p][q]), K)

    def _total(self, m: int, vertical: bool, horizontal: bool):
        K = self.K
        rows = [[K.zero] * self.dims[m] for _ in range(self.dims[m + 1])]
        for p in range(self.P):
            q = m - p
            if not 0 <= q < self.Q:
                continue
            if vertical and q + 1 < self.Q:
                M = self.dv[(p, q)]
                if p % 2:
                    M = -M
                _put(rows, M, self.tot_off[(p, q + 1)], self.tot_off[(p, q)])
            if horizontal and p + 1 < self.P:
                _put(rows, self.dh[(p, q)], self.tot_off[(p + 1, q)], self.tot_off[(p, q)])
        return DomainMatrix(rows, (self.dims[m + 1], self.dims[m]), K)

    # -- algebra checks ------------------------------------------------------
    def algebra_residuals(self) -> dict:
        """Ranks of d_v^2, d_h^2 and d_v d_h + d_h d_v on the total grading (all 0 when valid)."""
        Dv = [self._total(m, True, False) for m in range(len(self.dims) - 1)]
        Dh = [self._total(m, False, True) for m in range(len(self.dims) - 1)]
        out = {"dv2": 0, "dh2": 0, "anti": 0}
        for m in range(len(self.dims) - 2):
            out["dv2"] += rank(matmul(Dv[m + 1], Dv[m]))
            out["dh2"] += rank(matmul(Dh[m + 1], Dh[m]))
            out["anti"] += rank(matmul(Dv[m + 1], Dh[m]) + matmul(Dh[m + 1], Dv[m]))
        return out

    # -- spectral sequence ---------------------------------------------------
    def column_cohomology(self, p: int) -> list[CohomologyData]:
        from tempered_spine.linalg import cohomology_data

        dims = self.col_dim[p]
        diffs = [self.dv[(p, q)] for q in range(self.Q - 1)]
        return cohomology_data(dims, diffs, self.K)

    def to_json(self):
        from tempered_spine.linalg import field_spec

        def sparse(M):
            return [[i, j, _rs(x)] for i, r in enumerate(M.to_list()) for j, x in enumerate(r) if x]

        terms = []
        for p, col in enumerate(self.columns):
            for q in range(self.Q):
                labels = []
                for fi, (f, cx) in enumerate(col):
                    if q < len(cx.blocks):
                        for ci, b in enumerate(cx.blocks[q]):
                            labels.extend([fi, ci, k] for k in range(b.m))
                terms.append({"p": p, "q": q, "dimension": self.col_dim[p][q], "basis": labels})
        return {
            "field": field_spec(self.K),
            "flags": [[f.to_json() for f, _ in col] for col in self.columns],
            "terms": terms,
            "d_v": [{"p": p, "q": q, "entries": sparse(M)} for (p, q), M in sorted(self.dv.items())],
            "d_h": [{"p": p, "q": q, "entries": sparse(M)} for (p, q), M in sorted(self.dh.items())],
        }


def _rs(x):
    from tempered_spine.linalg import rat_str

    try:
        return rat_str(x)
    except (TypeError, ValueError):
        return str(x)


def _put(rows, M, r0: int, c0: int):
    L = M.to_list() if hasattr(M, "to_list") else M
    for a, r in enumerate(L):
        row = rows[r0 + a]
        for b, x in enumerate(r):
            if x:
                row[c0 + b] = row[c0 + b] + x


def boundary_double_complex(tables: dict, rho: CoefficientModule, group: Subgroup, classes=None) -> BoundaryComplex:
    return BoundaryComplex(tables, group, rho, classes)


def psi_map(interior: EqCochainComplex, boundary: BoundaryComplex) -> ChainMap:
    """Sum of restrictions into column 0."""
    if interior.table.chunk is not _any_chunk(boundary):
        raise ValueError("interior and boundary complexes come from different slices")

    def terms(flag, q, sig):
        if flag.length != 2:
            return []
        return [interior.value(None, q, sig)]

    return build_map(interior, boundary, terms, "psi")


def _any_chunk(boundary: BoundaryComplex):
    for col in boundary.columns:
        for _, cx in col:
            return cx.table.chunk
    return None


class SpectralPage:
    """E_r page of the column filtration (r = 1 or 2) with dimensions and d_r."""

    def __init__(self, r: int, terms: dict, differentials: dict):
        self.r = r
        self.terms = terms  # (p, q) -> dimension
        self.differentials = differentials  # (p, q) -> matrix E^{p,q} -> E^{p+r, q-r+1}

    def dims(self) -> dict:
        return dict(self.terms)


def e1_page(grid: BoundaryComplex) -> SpectralPage:
    coh = [grid.column_cohomology(p) for p in range(grid.P)]
    terms = {(p, q): coh[p][q].dim for p in range(grid.P) for q in range(grid.Q)}
    d1 = {}
    for p in range(grid.P - 1):
        for q in range(grid.Q):
            d1[(p, q)] = induced_matrix(grid.dh[(p, q)], coh[p][q], coh[p + 1][q])
    page = SpectralPage(1, terms, d1)
    page.column_data = coh
    return page


def e2_page(e1: SpectralPage) -> SpectralPage:
    """Homology of (E1, d1); equals E_infinity when there are at most two columns."""
    P = 1 + max(p for p, _ in e1.terms) if e1.terms else 0
    terms = {}
    for (p, q), dim in e1.terms.items():
        out_rank = rank(e1.differentials[(p, q)]) if (p, q) in e1.differentials else 0
        in_rank = rank(e1.differentials[(p - 1, q)]) if (p - 1, q) in e1.differentials else 0
        terms[(p, q)] = dim - out_rank - in_rank
    if P > 2:
        # higher differentials would be needed; report E2 only
        pass
    return SpectralPage(2, terms, {})


def abutment_dims(page: SpectralPage, top: int) -> list[int]:
    return [sum(d for (p, q), d in page.terms.items() if p + q == m) for m in range(top)]


# --- diagnostic constants ------------------------------------------------------


def _complement_form(form, basis, n):
    """Gram matrix of the projection onto the orthogonal complement of span(basis),
    written in the complementary coordinates of a unimodular adapted basis."""
    from tempered_spine.lattice import QForm
    from tempered_spine.retract import split_form

    _, A_perp = split_form(form, basis)
    B = adapted_basis(Flag(n, [basis]))
    d = len(basis)
    rows = B[d:]
    G = [[sum(rows[i][k] * A_perp[k][l] * rows[j][l] for k in range(n) for l in range(n)) for j in range(len(rows))]
         for i in range(len(rows))]
    return QForm(G, check=False), B


def lemma73_constants(form, w, flag: Flag):
    """Per flag member j: (alpha_j, beta_j, t_j).

    alpha_j is the least weighted value Phi(x) <x, x> over nonzero vectors x of
    the projection of the lattice onto the orthogonal complement of V_j (the
    weight of a projected vector is the least weight of its lifts).  beta_j is
    the product of the first dim V_j - 1 retraction scalars of the form, and
    t_j = min(1, (1/2) alpha_j beta_j / (t_1 ... t_{j-1})).  Values are exact
    rationals whenever the scalars are; otherwise floats.  Base weights are
    taken at their lower bound.
    """
    from itertools import product

    from gmpy2 import mpq

    from tempered_spine.lattice import short_vectors
    from tempered_spine.retract import well_rounded_retract

    n = form.n
    weights = w.weights
    trace = well_rounded_retract(form, w)
    mus = [st.mu for st in trace.steps]
    out = []
    t_prod = mpq(1)
    for V in flag.members:
        d = len(V)
        Q, B = _complement_form(form, V, n)
        comp = B[d:]
        idx = weights.m0_index

        def liftable(y):
            v = [sum(y[i] * comp[i][k] for i in range(len(y))) for k in range(n)]
            for x in product(range(idx), repeat=d):
                u = [v[k] + sum(x[i] * B[i][k] for i in range(d)) for k in range(n)]
                if weights.in_m0(u):
                    return True
            return False

        m_all = min(Q.entries[i][i] for i in range(Q.n))
        best = None
        for y in short_vectors(Q, w.s * m_all):
            if not any(y):
                continue
            val = Q.value(y) * (1 if w.s == 1 or liftable(y) else w.s)
            if best is None or val < best:
                best = val
        alpha = best * w.min_weight
        beta = mpq(1)
        for mu in mus[: d - 1]:
            beta = beta * mu
        if isinstance(beta, float):
            t = min(1.0, float(alpha) * beta / (2 * float(t_prod)))
        else:
            t = min(mpq(1), alpha * beta / (2 * t_prod))
        out.append((alpha, beta, t))
        t_prod = t_prod * t
    return out


__all__ = [
    "FlagClasses",
    "flag_reps",
    "flag_contexts",
    "subcomplex_WF",
    "BoundaryComplex",
    "boundary_double_complex",
    "psi_map",
    "SpectralPage",
    "e1_page",
    "e2_page",
    "abutment_dims",
    "lemma73_constants",
]

