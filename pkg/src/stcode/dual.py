"""Dual diamond lattice of one check subset on the 3-torus.

For subset ``BR`` every B check becomes a bond from the center of its Z cell
(cyan vertex) to the cell corner it sits on (lime vertex); each R check
becomes the hexagon of the six B bonds it anticommutes with.  Subset ``GY``
does the same with G bonds and Y hexagons.  Bonds are oriented cyan -> lime.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .lattice import CodeLattice, LatticeError
from .pauli import commutation_matrix, product

SUBSETS = {"BR": ("B", "R"), "GY": ("G", "Y")}


@dataclass(frozen=True)
class Hexagon:
    check: int  # index of the opposite-type check
    cycle: tuple[int, ...]  # bond indices in cyclic order
    vertices: tuple[int, ...]  # vertex indices in cyclic order, starting with a cyan vertex
    signs: tuple[int, ...]  # +1 if the bond is traversed cyan -> lime


@dataclass
class DualGeometry:
    subset: str
    vertex_coords: list[tuple[int, int, int]]
    vertex_kind: list[str]  # "cyan" or "lime"
    vertex_cell: list[int | None]  # cell index for cyan vertices
    bonds: list[tuple[int, int]]  # (cyan vertex, lime vertex)
    bond_check: list[int]  # check index of each bond
    hexagons: list[Hexagon]
    gauss_stars: dict[int, tuple[int, ...]]  # vertex -> incident bonds

    @property
    def cyan(self) -> list[int]:
        return [i for i, k in enumerate(self.vertex_kind) if k == "cyan"]

    @property
    def lime(self) -> list[int]:
        return [i for i, k in enumerate(self.vertex_kind) if k == "lime"]

    def degree(self, v: int) -> int:
        return len(self.gauss_stars[v])

    def bond_of_check(self) -> dict[int, int]:
        return {c: b for b, c in enumerate(self.bond_check)}

    def hexagons_of_bond(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.bonds]
        for h, hexa in enumerate(self.hexagons):
            for b in hexa.cycle:
                out[b].append(h)
        return out


def dual_diamond_map(lattice: CodeLattice, subset: str = "BR") -> DualGeometry:
    """Diamond-lattice geometry of ``subset`` (``"BR"`` or ``"GY"``)."""
    if lattice.spec is None or not lattice.spec.boundary.periodic:
        raise LatticeError("the dual diamond lattice is only built on the 3-torus")
    if subset not in SUBSETS:
        raise LatticeError(f"subset must be one of {sorted(SUBSETS)}")
    bond_color, hex_color = SUBSETS[subset]

    coords: list[tuple[int, int, int]] = []
    kinds: list[str] = []
    vcell: list[int | None] = []
    index: dict[tuple[int, int, int], int] = {}

    def vertex(coord, kind, cell=None):
        if coord not in index:
            index[coord] = len(coords)
            coords.append(coord)
            kinds.append(kind)
            vcell.append(cell)
        return index[coord]

    for cell in lattice.cells_of_kind("Z"):
        vertex(cell.center, "cyan", cell.index)
    bond_checks = lattice.checks_of_color(bond_color)
    bonds = []
    for ch in bond_checks:
        (cell,) = ch.cells
        bonds.append((index[lattice.cells[cell].center], vertex(ch.corner, "lime")))
    bond_check = [ch.index for ch in bond_checks]

    stars: dict[int, list[int]] = {v: [] for v in range(len(coords))}
    for b, (i, j) in enumerate(bonds):
        stars[i].append(b)
        stars[j].append(b)

    hex_checks = lattice.checks_of_color(hex_color)
    M = commutation_matrix([c.word for c in hex_checks], [c.word for c in bond_checks])
    hexagons = []
    for r, ch in enumerate(hex_checks):
        members = [int(b) for b in np.flatnonzero(M[r])]
        hexagons.append(_order_cycle(ch.index, members, bonds, kinds))
    return DualGeometry(subset, coords, kinds, vcell, bonds, bond_check, hexagons,
                        {v: tuple(bs) for v, bs in stars.items()})


def _order_cycle(check: int, members: list[int], bonds, kinds) -> Hexagon:
    adj: dict[int, list[int]] = {}
    for b in members:
        for v in bonds[b]:
            adj.setdefault(v, []).append(b)
    if any(len(bs) != 2 for bs in adj.values()) or len(members) != 6:
        raise AssertionError(f"check {check} does not bound a hexagon")
    start = min((v for v in adj if kinds[v] == "cyan"))
    verts = [start]
    cyc = []
    prev_bond = None
    v = start
    while True:
        nxt = [b for b in adj[v] if b != prev_bond]
        # choose the lower bond index first for a deterministic orientation
        b = min(nxt) if prev_bond is None else nxt[0]
        i, j = bonds[b]
        w = j if v == i else i
        cyc.append(b)
        prev_bond = b
        if w == start:
            break
        verts.append(w)
        v = w
    if len(cyc) != 6:
        raise AssertionError(f"check {check}: anticommuting bonds split into several cycles")
    signs = tuple(1 if bonds[b][0] == verts[k] else -1 for k, b in enumerate(cyc))
    return Hexagon(check, tuple(cyc), tuple(verts), signs)


# --------------------------------------------------------------------------
# verification helpers


def gauss_law_report(lattice: CodeLattice, dual: DualGeometry) -> dict[str, bool]:
    """Degrees, Gauss laws and hexagon structure of a dual geometry."""
    words = [lattice.checks[c].word for c in dual.bond_check]
    n, N = lattice.n, lattice.N
    report = {
        "degree_4": all(len(bs) == 4 for bs in dual.gauss_stars.values()),
        "hexagons_6": all(len(h.cycle) == 6 for h in dual.hexagons),
        "hexagons_alternate": all(
            all(dual.vertex_kind[v] != dual.vertex_kind[h.vertices[(k + 1) % 6]]
                for k, v in enumerate(h.vertices))
            for h in dual.hexagons),
    }
    cyan_ok = lime_ok = True
    for v, bs in dual.gauss_stars.items():
        prod = product([words[b] for b in bs], n=n, N=N)
        if dual.vertex_kind[v] == "cyan":
            cyan_ok &= prod.same_operator(lattice.stabilizers[dual.vertex_cell[v]])
        else:
            lime_ok &= prod.is_identity()
    report["cyan_gauss_law"] = bool(cyan_ok)
    report["lime_gauss_law"] = bool(lime_ok)
    return report


def hexagon_phase_pattern(lattice: CodeLattice, dual: DualGeometry) -> list[tuple[int, ...]]:
    """Commutation exponents of each hexagon check with its bonds, in cyclic order."""
    out = []
    for h in dual.hexagons:
        hw = lattice.checks[h.check].word
        row = commutation_matrix([hw], [lattice.checks[dual.bond_check[b]].word for b in h.cycle])[0]
        out.append(tuple(int(c) for c in row))
    return out


def pattern_alternates(pattern, N: int) -> bool:
    """True if exponents alternate between -1 and +1 (mod N) around the cycle."""
    if len(pattern) != 6:
        return False
    vals = [p % N for p in pattern]
    if N == 2:
        return all(v == 1 for v in vals)
    return all(v in (1, N - 1) for v in vals) and all(
        vals[k] != vals[(k + 1) % 6] for k in range(6))


def subset_isomorphism(lattice: CodeLattice):
    """An affine map of doubled coordinates carrying the BR geometry onto GY.

    Returns ``(S, t, vertex_map)`` with ``p -> S @ p + t`` (mod lattice) and the
    induced vertex bijection, or ``None`` if no signed-permutation map exists.
    """
    br = dual_diamond_map(lattice, "BR")
    gy = dual_diamond_map(lattice, "GY")
    periods = np.array([2 * d for d in lattice.spec.dims])
    gy_index = {c: i for i, c in enumerate(gy.vertex_coords)}
    gy_bonds = set(gy.bonds)
    br_pts = np.array(br.vertex_coords)
    for perm in itertools.permutations(range(3)):
        if any(periods[perm[a]] != periods[a] for a in range(3)):
            continue
        for signs in itertools.product((1, -1), repeat=3):
            S = np.zeros((3, 3), dtype=np.int64)
            for a in range(3):
                S[a, perm[a]] = signs[a]
            base = br_pts @ S.T
            for t in itertools.product(*(range(0, p, 2) for p in periods)):
                mapped = (base + np.array(t)) % periods
                vmap = []
                for k, m in enumerate(map(tuple, mapped)):
                    j = gy_index.get(m)
                    if j is None or gy.vertex_kind[j] != br.vertex_kind[k]:
                        break
                    vmap.append(j)
                else:
                    if all((vmap[i], vmap[j]) in gy_bonds for i, j in br.bonds):
                        return S, np.array(t), vmap
    return None
