"""Checkerboard cubic lattice, colored checks, stabilizers and boundary variants.

Coordinates are doubled integers throughout: a vertex ``(x, y, z)`` sits at
``(2x, 2y, 2z)``, an edge midpoint is the sum of its two endpoints and a cell
with min-corner ``(x, y, z)`` has its center at ``(2x+1, 2y+1, 2z+1)``.
Periodic directions are reduced modulo ``2L``.

Cells whose min-corner has even coordinate sum are Z cells, the others X
cells.  Every cell corner carries one three-qubit check built from the three
cell edges meeting there.  Corner parity fixes the color:

* Z cell: even corner -> ``B``, odd corner -> ``G``
* X cell: even corner -> ``Y``, odd corner -> ``R``

With this assignment B/Y checks (both at even corners) overlap on zero or two
edges and G/R checks likewise, while B/R and G/Y pairs can anticommute.

Open-z variants cut the lattice at ``z = 0`` and ``z = Lz``.  A boundary plane
is "constrained" at vertices of one parity: the four in-plane edges around such
a vertex are pinned by ``Z^4 = X^4 = 1``.  Checks anticommuting with a
constraint are removed and, per cell and color, replaced by their product.
Inside the constrained space the four edges reduce to one effective qubit,
which is what the kept operators act on.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .pauli import PauliWord, product

COLORS = ("B", "G", "R", "Y")
Z_COLORS = ("B", "G")
X_COLORS = ("R", "Y")


class LatticeError(ValueError):
    """Invalid lattice parameters."""


class Boundary(str, enum.Enum):
    PERIODIC = "Periodic3Torus"
    OPEN_KV = "OpenZ_KV"
    WRONG_A = "OpenZ_WrongA"
    WRONG_B = "OpenZ_WrongB"

    @classmethod
    def parse(cls, value) -> "Boundary":
        if isinstance(value, Boundary):
            return value
        text = str(value).strip()
        for b in cls:
            if text.lower() in (b.value.lower(), b.name.lower()):
                return b
        raise LatticeError(f"unknown boundary {value!r}")

    @property
    def periodic(self) -> bool:
        return self is Boundary.PERIODIC


@dataclass(frozen=True)
class LatticeSpec:
    dims: tuple[int, int, int]
    boundary: Boundary = Boundary.PERIODIC
    N: int = 2

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) < 1:
            raise LatticeError(f"dims must be three positive integers, got {self.dims!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "boundary", Boundary.parse(self.boundary))
        if int(self.N) < 2:
            raise LatticeError("qudit dimension must be >= 2")
        object.__setattr__(self, "N", int(self.N))
        Lx, Ly, Lz = dims
        if Lx % 2 or Ly % 2:
            raise LatticeError("Lx and Ly must be even (periodic checkerboard)")
        if self.boundary.periodic:
            if Lz % 2:
                raise LatticeError("Periodic3Torus needs all dimensions even")
        else:
            if self.N != 2:
                raise LatticeError("open-z boundaries are only defined for qubits (N = 2)")
            if Lz < 2:
                raise LatticeError("open-z lattices need Lz >= 2")


@dataclass(frozen=True)
class Cell:
    index: int
    kind: str  # "Z" or "X"
    origin: tuple[int, int, int]
    center: tuple[int, int, int]

    @property
    def colors(self) -> tuple[str, str]:
        return Z_COLORS if self.kind == "Z" else X_COLORS


@dataclass(frozen=True)
class Check:
    index: int
    color: str
    cells: tuple[int, ...]
    word: PauliWord
    corner: tuple[int, int, int] | None
    shape: str  # "corner", "shared" or "product"

    @property
    def kind(self) -> str:
        return "Z" if self.color in Z_COLORS else "X"

    @property
    def weight(self) -> int:
        return self.word.weight


@dataclass
class CodeLattice:
    spec: LatticeSpec | None
    qubit_coords: list[tuple[int, int, int]]
    cells: list[Cell]
    checks: list[Check]
    stabilizers: list[PauliWord]
    N: int = 2
    stabilizer_free_cells: tuple[int, ...] = ()
    _cell_checks: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        table: dict[int, list[int]] = {c.index: [] for c in self.cells}
        for ch in self.checks:
            for c in ch.cells:
                table[c].append(ch.index)
        self._cell_checks = table

    @property
    def n(self) -> int:
        return len(self.qubit_coords)

    @cached_property
    def qubit_index(self) -> dict[tuple[int, int, int], int]:
        return {c: i for i, c in enumerate(self.qubit_coords)}

    def cell_checks(self, cell: int, color: str | None = None) -> list[Check]:
        out = [self.checks[i] for i in self._cell_checks[cell]]
        if color is not None:
            out = [c for c in out if c.color == color]
        return out

    def checks_of_color(self, *colors: str) -> list[Check]:
        return [c for c in self.checks if c.color in colors]

    def words(self, *colors: str) -> list[PauliWord]:
        if not colors:
            return [c.word for c in self.checks]
        return [c.word for c in self.checks if c.color in colors]

    def cells_of_kind(self, kind: str) -> list[Cell]:
        return [c for c in self.cells if c.kind == kind]

    def qubit_checks(self) -> list[list[int]]:
        """For each qubit, the indices of checks acting on it."""
        out: list[list[int]] = [[] for _ in range(self.n)]
        for ch in self.checks:
            for q in ch.word.support:
                out[int(q)].append(ch.index)
        return out

    def support_matrix(self, colors) -> np.ndarray:
        """0/1 matrix (checks of ``colors`` x qubits)."""
        chs = self.checks_of_color(*colors)
        m = np.zeros((len(chs), self.n), dtype=np.uint8)
        for i, ch in enumerate(chs):
            m[i, ch.word.support] = 1
        return m

    @cached_property
    def boundary_planes(self) -> dict[str, list[int]]:
        """Qubits lying in the z = 0 and z = Lz planes (open variants only)."""
        if self.spec is None or self.spec.boundary.periodic:
            return {"lower": [], "upper": []}
        top = 2 * self.spec.dims[2]
        lower = [i for i, c in enumerate(self.qubit_coords) if c[2] == 0]
        upper = [i for i, c in enumerate(self.qubit_coords) if c[2] == top]
        return {"lower": lower, "upper": upper}

    @cached_property
    def boundary_layers(self) -> dict[str, list[int]]:
        """Qubits of the boundary toric codes.

        Each open face carries one qubit per vertex: the reduced star qubit at
        constrained vertices and the adjacent vertical edge at the others.
        """
        if self.spec is None or self.spec.boundary.periodic:
            return {"lower": [], "upper": []}
        top = 2 * self.spec.dims[2]
        out = {}
        for name, zp, zv in (("lower", 0, 1), ("upper", top, top - 1)):
            plane = self.boundary_planes[name]
            stars = {self.qubit_coords[i][:2] for i in plane}
            vert = [i for i, c in enumerate(self.qubit_coords)
                    if c[2] == zv and c[0] % 2 == 0 and c[1] % 2 == 0 and c[:2] not in stars]
            out[name] = sorted(plane + vert)
        return out


# --------------------------------------------------------------------------
# geometry helpers


class _Geometry:
    def __init__(self, spec: LatticeSpec):
        self.spec = spec
        self.Lx, self.Ly, self.Lz = spec.dims
        self.periodic_z = spec.boundary.periodic

    def wrap(self, p):
        x, y, z = p
        x %= 2 * self.Lx
        y %= 2 * self.Ly
        if self.periodic_z:
            z %= 2 * self.Lz
        return (x, y, z)

    def cell_origins(self):
        return [(x, y, z) for z in range(self.Lz) for y in range(self.Ly) for x in range(self.Lx)]

    def corner_edges(self, origin, corner_offset):
        """Doubled-coordinate midpoints of the 3 cell edges at a corner."""
        v = tuple(2 * (o + d) for o, d in zip(origin, corner_offset))
        out = []
        for axis in range(3):
            step = 1 if corner_offset[axis] == 0 else -1
            e = list(v)
            e[axis] += step
            out.append(self.wrap(e))
        return self.wrap(v), out


CORNERS = list(itertools.product((0, 1), repeat=3))


def _parity(p) -> int:
    return sum(p) % 2


def _vertex_parity(v) -> int:
    """Parity of a vertex given in doubled coordinates."""
    return (sum(v) // 2) % 2


def _color(kind: str, corner_parity: int) -> str:
    if kind == "Z":
        return "B" if corner_parity == 0 else "G"
    return "Y" if corner_parity == 0 else "R"


def _constraint_parities(boundary: Boundary) -> dict[str, int | str | None]:
    """Boundary rule per plane: parity of constrained vertices, or ``"pin"``.

    ``"pin"`` freezes every in-plane edge of the plane in the Z basis, which
    removes those qubits: Z-type operators lose the factors there and X-type
    operators touching them are discarded.
    """
    if boundary is Boundary.OPEN_KV:
        return {"upper": 0, "lower": 1}
    if boundary is Boundary.WRONG_A:
        return {"upper": 1, "lower": 1}
    if boundary is Boundary.WRONG_B:
        return {"upper": "pin", "lower": 1}
    return {}


# --------------------------------------------------------------------------
# builders


def build_code_lattice(spec: LatticeSpec, qudit_rule: bool = False) -> CodeLattice:
    """Build qubits, cells, colored checks and stabilizers for ``spec``.

    On the torus the P / P^dagger edge assignment is used whenever N > 2, or
    for any N when ``qudit_rule`` is set (used to check the N = 2 reduction).
    """
    if not isinstance(spec, LatticeSpec):
        raise LatticeError("expected a LatticeSpec")
    if spec.boundary.periodic:
        return _build_torus(spec, qudit_rule)
    return _build_open(spec)


def _make_cells(geo: _Geometry) -> list[Cell]:
    cells = []
    for i, o in enumerate(geo.cell_origins()):
        kind = "Z" if _parity(o) == 0 else "X"
        cells.append(Cell(i, kind, o, tuple(2 * a + 1 for a in o)))
    return cells


def qudit_u_vector(origin) -> tuple[int, int, int]:
    """Per-cell sign vector choosing which corners carry P rather than P^dagger."""
    x, y, z = (a % 2 for a in origin)
    s = lambda b: -1 if b % 2 else 1  # noqa: E731
    if (x + y + z) % 2 == 0:
        return (s(x), s(x ^ z ^ 1), s(x ^ z))
    return (s(x ^ 1), s(x ^ z), s(x ^ z))


def _cell_edge_exponents(cell: Cell, N: int) -> dict[tuple[int, int, int], int]:
    """Exponent of P on each corner-offset/axis edge of the cell (qudit rule)."""
    u = qudit_u_vector(cell.origin)
    sign = 1 if u[2] == 1 else -1
    # corner offsets (0/1 per axis) of the corners at +u and -u
    cu = tuple(1 if a > 0 else 0 for a in u)
    cmu = tuple(1 - a for a in cu)
    out = {}
    for off in CORNERS:
        for axis in range(3):
            other = tuple(1 - o if a == axis else o for a, o in enumerate(off))
            special = off in (cu, cmu) or other in (cu, cmu)
            out[(off, axis)] = sign if special else -sign
    return out


def _build_torus(spec: LatticeSpec, qudit_rule: bool = False) -> CodeLattice:
    geo = _Geometry(spec)
    N = spec.N
    cells = _make_cells(geo)
    coords = sorted({
        e
        for c in cells
        for off in CORNERS
        for e in geo.corner_edges(c.origin, off)[1]
    })
    qidx = {c: i for i, c in enumerate(coords)}
    n = len(coords)
    checks: list[Check] = []
    stabilizers: list[PauliWord] = []
    for cell in cells:
        expo = _cell_edge_exponents(cell, N) if (N > 2 or qudit_rule) else None
        by_color: dict[str, list[PauliWord]] = {col: [] for col in cell.colors}
        for off in CORNERS:
            corner, edges = geo.corner_edges(cell.origin, off)
            color = _color(cell.kind, _vertex_parity(corner))
            vec = {}
            for axis, e in enumerate(edges):
                vec[qidx[e]] = 1 if expo is None else expo[(off, axis)] % N
            if cell.kind == "Z":
                w = PauliWord.from_sparse(n, zs=vec, N=N)
            else:
                w = PauliWord.from_sparse(n, xs=vec, N=N)
            checks.append(Check(len(checks), color, (cell.index,), w, corner, "corner"))
            by_color[color].append(w)
        stabilizers.append(product(by_color[cell.colors[0]], n=n, N=N))
    return CodeLattice(spec, coords, cells, checks, stabilizers, N)


def _build_open(spec: LatticeSpec) -> CodeLattice:
    geo = _Geometry(spec)
    Lz = spec.dims[2]
    cells = _make_cells(geo)
    planes = {"lower": 0, "upper": 2 * Lz}
    parities = _constraint_parities(spec.boundary)

    # raw operators: (kind, frozenset of edge coords)
    raw = []  # (cell, color, corner, kind, edges)
    for cell in cells:
        for off in CORNERS:
            corner, edges = geo.corner_edges(cell.origin, off)
            raw.append((cell.index, _color(cell.kind, _vertex_parity(corner)), corner, cell.kind, frozenset(edges)))

    # constrained stars: vertex -> 4 in-plane edges
    stars: dict[tuple[int, int, int], frozenset] = {}
    pinned: set = set()
    for name, zp in planes.items():
        par = parities.get(name)
        if par is None:
            continue
        if par == "pin":
            for y in range(2 * spec.dims[1]):
                for x in range(2 * spec.dims[0]):
                    if (x + y) % 2:
                        pinned.add((x, y, zp))
            continue
        for y in range(spec.dims[1]):
            for x in range(spec.dims[0]):
                v = (2 * x, 2 * y, zp)
                if _parity((x, y, zp // 2)) != par:
                    continue
                star = []
                for axis in (0, 1):
                    for step in (1, -1):
                        e = list(v)
                        e[axis] += step
                        star.append(geo.wrap(e))
                stars[v] = frozenset(star)
    edge_star = {e: v for v, s in stars.items() for e in s}

    def anticommutes_with_constraint(edges, kind) -> bool:
        if kind == "X" and not pinned.isdisjoint(edges):
            return True
        count: dict = {}
        for e in edges:
            v = edge_star.get(e)
            if v is not None:
                count[v] = count.get(v, 0) + 1
        return any(c % 2 for c in count.values())

    kept = []  # (cells tuple, color, corner, kind, edges, shape)
    dropped: dict[tuple[int, str], list] = {}
    for cidx, color, corner, kind, edges in raw:
        if anticommutes_with_constraint(edges, kind):
            dropped.setdefault((cidx, color), []).append(edges)
        else:
            kept.append(((cidx,), color, corner, kind, edges, "corner"))
    for (cidx, color), group in dropped.items():
        acc = frozenset()
        for g in group:
            acc = acc ^ g
        if anticommutes_with_constraint(acc, cells[cidx].kind):
            if not pinned.isdisjoint(acc):
                continue  # no product of this color survives the pinned plane
            raise AssertionError("product of dropped checks still violates a constraint")
        kept.append(((cidx,), color, None, cells[cidx].kind, acc, "product"))

    # reference pairs for the effective qubit at each constrained vertex
    ref_pairs: dict = {}
    for v, star in stars.items():
        pz = px = None
        for cidx, color, corner, kind, edges, shape in kept:
            if corner != v:
                continue
            pair = edges & star
            if len(pair) != 2:
                continue
            if kind == "Z" and pz is None:
                pz = pair
            if kind == "X" and px is None:
                px = pair
        if pz is None or px is None or len(pz & px) != 1:
            raise AssertionError(f"cannot identify effective qubit at {v}")
        ref_pairs[v] = (pz, px)

    def reduce(kind, edges):
        """Map an operator on raw edges to one on effective qubits."""
        out = set(e for e in edges if e not in edge_star and e not in pinned)
        for v, star in stars.items():
            part = edges & star
            if not part:
                continue
            pz, px = ref_pairs[v]
            a_pair, b_pair = (pz, px) if kind == "Z" else (px, pz)
            found = None
            for a, b, full in itertools.product((0, 1), repeat=3):
                acc = frozenset()
                if a:
                    acc ^= a_pair
                if b:
                    acc ^= b_pair
                if full:
                    acc ^= star
                if acc == part:
                    found = (a, b)
                    break
            if found is None:
                raise AssertionError("operator does not commute with boundary constraints")
            if found[1]:
                raise AssertionError("reduced operator acts on the frozen boundary mode")
            if found[0]:
                out.add(v)
        return frozenset(out)

    reduced = [(cs, color, corner, kind, reduce(kind, edges), shape)
               for cs, color, corner, kind, edges, shape in kept]

    # merge identical operators shared between cells
    merged: dict = {}
    order = []
    for cs, color, corner, kind, support, shape in reduced:
        key = (color, support)
        if key in merged:
            prev = merged[key]
            merged[key] = (prev[0] + cs, color, prev[2], kind, support, "shared")
        else:
            merged[key] = (cs, color, corner, kind, support, shape)
            order.append(key)

    coords = sorted({q for key in order for q in merged[key][4]})
    qidx = {c: i for i, c in enumerate(coords)}
    n = len(coords)
    checks: list[Check] = []
    for key in sorted(order, key=lambda k: (min(merged[k][0]), COLORS.index(k[0]),
                                             sorted(qidx[q] for q in k[1]))):
        cs, color, corner, kind, support, shape = merged[key]
        vec = {qidx[q]: 1 for q in support}
        w = PauliWord.from_sparse(n, zs=vec) if kind == "Z" else PauliWord.from_sparse(n, xs=vec)
        checks.append(Check(len(checks), color, tuple(sorted(cs)), w, corner, shape))
    lat = CodeLattice(spec, coords, cells, checks, [], 2)
    stabs = []
    broken = []
    for cell in cells:
        first, second = (product([c.word for c in lat.cell_checks(cell.index, col)], n=n, N=2)
                         for col in cell.colors)
        if first.same_operator(second):
            stabs.append(first)
        else:
            # the two color products disagree once the pinned plane is removed
            stabs.append(PauliWord.identity(n))
            broken.append(cell.index)
    lat.stabilizers = stabs
    lat.stabilizer_free_cells = tuple(broken)
    return lat


# --------------------------------------------------------------------------
# listing and verification


def check_table(lattice: CodeLattice) -> list[dict]:
    """Deterministic listing of all checks (by index) with support and owners."""
    rows = []
    for ch in lattice.checks:
        w = ch.word
        rows.append({
            "index": ch.index,
            "color": ch.color,
            "cells": list(ch.cells),
            "shape": ch.shape,
            "support": [int(q) for q in w.support],
            "x": [int(w.x[q]) for q in w.support],
            "z": [int(w.z[q]) for q in w.support],
        })
    return rows


def cell_identity_holds(lattice: CodeLattice, cell: int) -> bool:
    """Both color products of a cell equal its stabilizer (modulo phase)."""
    c = lattice.cells[cell]
    s = lattice.stabilizers[cell]
    for color in c.colors:
        prod = product([ch.word for ch in lattice.cell_checks(cell, color)], n=lattice.n, N=lattice.N)
        if not prod.same_operator(s):
            return False
    return True


def commutation_report(lattice: CodeLattice) -> dict[str, bool]:
    """Exact algebraic checks on a built lattice."""
    from .pauli import commutation_matrix

    checks = lattice.words()
    stabs = lattice.stabilizers
    report = {}
    report["stabilizers_commute"] = not np.any(commutation_matrix(stabs, stabs))
    report["checks_commute_with_stabilizers"] = not np.any(commutation_matrix(checks, stabs))
    b, g, r, y = (lattice.words(c) for c in COLORS)
    report["B_Y_commute"] = not np.any(commutation_matrix(b, y))
    report["G_R_commute"] = not np.any(commutation_matrix(g, r))
    report["cell_products"] = all(cell_identity_holds(lattice, c.index) for c in lattice.cells
                                  if c.index not in lattice.stabilizer_free_cells)
    return report

