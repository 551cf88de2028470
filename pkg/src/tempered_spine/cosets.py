"""Finite orbits of lattices under SL_n(Z) and parabolic subgroups.

Lattices are full-rank sublattices of Z^n given by their row HNF.  The group
acts on the right, ``M -> M g``; the stabilizer of ``M0 = Z^n a`` in SL_n(Z)
is the Hecke subgroup ``Gamma_a``.
"""

from __future__ import annotations

from tempered_spine.groups import Matrix, identity_matrix, mat_inv, mat_mul
from tempered_spine.integer import hnf


def sl_generators(n: int) -> list[Matrix]:
    gens = []
    for i in range(n):
        for j in range(n):
            if i != j:
                for e in (1, -1):
                    M = [[int(r == c) for c in range(n)] for r in range(n)]
                    M[i][j] = e
                    gens.append(tuple(map(tuple, M)))
    return gens


def lattice(rows) -> tuple:
    return hnf([list(r) for r in rows])


def act_lattice(M, g: Matrix) -> tuple:
    return lattice(mat_mul(M, g))


def lattice_orbit(M0, gens, budget: int = 100_000) -> dict:
    """BFS orbit: lattice -> h with lattice = M0 h."""
    n = len(gens[0])
    start = lattice(M0)
    out = {start: identity_matrix(n)}
    frontier = [start]
    while frontier:
        nxt = []
        for M in frontier:
            h = out[M]
            for g in gens:
                M2 = act_lattice(M, g)
                if M2 not in out:
                    out[M2] = mat_mul(h, g)
                    nxt.append(M2)
                    if len(out) > budget:
                        raise OverflowError("lattice orbit exceeds budget")
        frontier = nxt
    return out


def left_coset_reps(a) -> list[Matrix]:
    """g_i with SL_n(Z) = disjoint union of g_i Gamma_a."""
    n = len(a)
    orbit = lattice_orbit(a, sl_generators(n))
    return [mat_inv(h) for _, h in sorted(orbit.items())]


def coset_index(a) -> int:
    return len(lattice_orbit(a, sl_generators(len(a))))


def split_orbits(points: dict, gens) -> list[dict]:
    """Orbits of a finite invariant lattice set under right multiplication by gens.

    Each orbit is a dict lattice -> p with lattice = rep p (rep listed first).
    """
    n = len(gens[0])
    remaining = dict(points)
    out = []
    for start in sorted(points):
        if start not in remaining:
            continue
        orb = {start: identity_matrix(n)}
        frontier = [start]
        while frontier:
            nxt = []
            for M in frontier:
                p = orb[M]
                for g in gens:
                    M2 = act_lattice(M, g)
                    if M2 not in orb:
                        orb[M2] = mat_mul(p, g)
                        nxt.append(M2)
            frontier = nxt
        for M in orb:
            remaining.pop(M, None)
        out.append(orb)
    return out
