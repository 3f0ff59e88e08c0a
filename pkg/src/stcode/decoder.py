"""Three-step flux decoder: repair flux loops, locate charges, pair charges.

A sector is a pair of same-type check colors: ``"RY"`` (X checks, detects Z
errors as charges on X cells) or ``"BG"`` (Z checks, detects X errors on Z
cells).  Detection nodes are the local parity relations among the sector's
outcomes:

* one *cell node* per cell of the detected type: the product of both colors'
  checks of the cell is the identity, so an odd parity means the two fluxes
  do not end together there;
* one *vertex node* per (color, corner) Gauss law: the product of that
  color's checks meeting at a corner is the identity.

Every check lies in two such relations, or in one near an open boundary, in
which case it connects to a virtual boundary node.  A flipped outcome thus
toggles exactly two nodes, and step 1 is a matching problem on the relation
graph.  After repair the per-cell product of one color gives the charges.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .lattice import CodeLattice
from .matching import DefectGraph, min_weight_match
from .pauli import PauliWord, product

SECTORS = {
    "RY": {"colors": ("R", "Y"), "cell_kind": "X", "correction": "Z"},
    "BG": {"colors": ("B", "G"), "cell_kind": "Z", "correction": "X"},
}


class DecoderError(ValueError):
    pass


@dataclass
class DecodeResult:
    sector: str
    endpoints: list[int]  # detection nodes (relation-graph indices)
    repair_pairs: list[tuple[int, int | None]]
    repaired_checks: list[int]  # lattice check indices whose outcome was flipped back
    charges: list[int]  # lattice cell indices
    charge_pairs: list[tuple[int, int]]
    correction_qubits: list[int]
    correction: PauliWord

    def to_json(self) -> str:
        return json.dumps({
            "sector": self.sector,
            "endpoints": self.endpoints,
            "repaired_segments": self.repaired_checks,
            "charges": self.charges,
            "matched_pairs": [list(p) for p in self.charge_pairs],
            "repair_pairs": [[a, b] for a, b in self.repair_pairs],
            "correction_support": self.correction_qubits,
            "correction_kind": SECTORS[self.sector]["correction"],
        }, indent=1)


def _bfs_tree(adj: list[list[tuple[int, int]]], src: int):
    """Distances and (parent node, edge) pointers; neighbours visited in list order."""
    dist = np.full(len(adj), -1, dtype=np.int64)
    par = [(-1, -1)] * len(adj)
    dist[src] = 0
    dq = deque([src])
    while dq:
        u = dq.popleft()
        for v, e in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                par[v] = (u, e)
                dq.append(v)
    return dist, par


@dataclass
class SectorDecoder:
    """Decoder for one sector of a lattice (built once, reused every call)."""

    lattice: CodeLattice
    sector: str
    mode: str = "exact"
    checks: list[int] = field(init=False)
    rel: np.ndarray = field(init=False)  # nodes x sector-checks (0/1)
    cell_rel: np.ndarray = field(init=False)  # cells x sector-checks, first color only

    def __post_init__(self):
        if self.sector not in SECTORS:
            raise DecoderError(f"sector must be one of {sorted(SECTORS)}")
        info = SECTORS[self.sector]
        lat = self.lattice
        c1, c2 = info["colors"]
        chs = lat.checks_of_color(c1, c2)
        self.checks = [c.index for c in chs]
        pos = {c: i for i, c in enumerate(self.checks)}
        self.cells = [c.index for c in lat.cells_of_kind(info["cell_kind"])]
        cell_pos = {c: i for i, c in enumerate(self.cells)}

        relations: list[list[int]] = []
        self.node_label: list[tuple] = []
        for cell in self.cells:
            relations.append([pos[c.index] for c in chs if cell in c.cells])
            self.node_label.append(("cell", cell))
        verts: dict = {}
        for c in chs:
            if c.shape == "corner":
                verts.setdefault((c.color, c.corner), []).append(pos[c.index])
        for key in sorted(verts):
            members = verts[key]
            if product([chs[i].word for i in members], n=lat.n, N=lat.N).is_identity():
                relations.append(members)
                self.node_label.append(("vertex",) + key)
        m = len(chs)
        # checks in a single local relation: on open lattices their product over
        # each boundary plane is itself a relation, so it becomes a real node
        seen = np.zeros(m, dtype=np.int64)
        for r in relations:
            seen[r] += 1
        lonely = [j for j in range(m) if seen[j] == 1]
        if lonely:
            zmid = lat.spec.dims[2] if lat.spec is not None else 0
            groups = {}
            for j in lonely:
                zs = [lat.qubit_coords[q][2] for q in chs[j].word.support]
                groups.setdefault("lower" if min(zs) < zmid else "upper", []).append(j)
            parts = list(groups.values())
            ident = lambda js: product([chs[i].word for i in js], n=lat.n, N=lat.N).is_identity()
            if not all(ident(js) for js in parts):
                parts = [lonely] if ident(lonely) else []
            for js, name in zip(parts, sorted(groups) if len(parts) > 1 else ["boundary"]):
                relations.append(js)
                self.node_label.append(("boundary", name))
        for r in relations:
            if not product([chs[i].word for i in r], n=lat.n, N=lat.N).is_identity():
                raise DecoderError("relation is not the identity")
        self.rel = np.zeros((len(relations), m), dtype=np.uint8)
        for a, r in enumerate(relations):
            self.rel[a, r] = 1
        counts = self.rel.sum(0)
        if np.any(counts > 2):
            raise DecoderError("a check lies in more than two relations")
        self.n_nodes = len(relations)
        self.sink = self.n_nodes  # virtual boundary node
        self.check_nodes: list[tuple[int, int]] = []
        for j in range(m):
            nodes = list(np.flatnonzero(self.rel[:, j]))
            if len(nodes) == 2:
                self.check_nodes.append((int(nodes[0]), int(nodes[1])))
            elif len(nodes) == 1:
                self.check_nodes.append((int(nodes[0]), self.sink))
            else:
                self.check_nodes.append((self.sink, self.sink))  # unconstrained check
        self.has_boundary = any(b == self.sink and a != self.sink for a, b in self.check_nodes)

        self.cell_rel = np.zeros((len(self.cells), m), dtype=np.uint8)
        for j, c in enumerate(chs):
            if c.color == c1:
                for cell in c.cells:
                    self.cell_rel[cell_pos[cell], j] = 1

        # relation graph (with sink) for repair paths
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes + 1)]
        for j, (a, b) in enumerate(self.check_nodes):
            if a != b:
                adj[a].append((b, j))
                adj[b].append((a, j))
        self._rel_adj = adj
        self._first_color = np.array([c.color == c1 for c in chs], dtype=np.int8)
        self._rel_trees: dict[int, tuple] = {}

        # charge graph: cells joined by qubits (each qubit lies in two cubes of this kind)
        attr = "z" if info["cell_kind"] == "Z" else "x"
        stab = np.array([getattr(lat.stabilizers[c], attr) != 0 for c in self.cells])
        cadj: list[list[tuple[int, int]]] = [[] for _ in self.cells]
        centers = [np.array(lat.cells[c].center) for c in self.cells]
        for q in range(lat.n):
            owners = np.flatnonzero(stab[:, q])
            if len(owners) == 2:
                a, b = int(owners[0]), int(owners[1])
                cadj[a].append((b, q))
                cadj[b].append((a, q))
            elif len(owners) > 2:
                raise DecoderError("qubit in more than two cubes")
        for a in range(len(cadj)):
            cadj[a].sort(key=lambda t: self._direction_key(centers[a], centers[t[0]], t[1]))
        self._cell_adj = cadj
        self._cell_trees: dict[int, tuple] = {}
        self.cell_dist = np.stack([self._cell_tree(a)[0] for a in range(len(self.cells))]) \
            if self.cells else np.zeros((0, 0), dtype=np.int64)
        self.rel_dist = np.stack([self._rel_tree(a)[0] for a in range(self.n_nodes + 1)])

    # ------------------------------------------------------------------
    def _direction_key(self, a, b, q):
        d = b - a
        if self.lattice.spec is not None:
            periods = [2 * L if per else 0 for L, per in zip(
                self.lattice.spec.dims, (True, True, self.lattice.spec.boundary.periodic))]
            for k, p in enumerate(periods):
                if p:
                    d[k] = (d[k] + p // 2) % p - p // 2
        # x moves before y before z, positive before negative
        if not np.any(d):
            return (3, 0, q)
        axis = int(np.argmax(np.abs(d)))
        return (axis, 0 if d[axis] > 0 else 1, q)

    def _cell_tree(self, a: int):
        if a not in self._cell_trees:
            self._cell_trees[a] = _bfs_tree(self._cell_adj, a)
        return self._cell_trees[a]

    def _rel_tree(self, a: int):
        if a not in self._rel_trees:
            self._rel_trees[a] = _bfs_tree(self._rel_adj, a)
        return self._rel_trees[a]

    @staticmethod
    def _path_edges(tree, target: int) -> list[int]:
        dist, par = tree
        if dist[target] < 0:
            raise DecoderError("no path between matched nodes")
        out = []
        v = target
        while par[v][0] >= 0:
            out.append(par[v][1])
            v = par[v][0]
        return out

    def _repair_path(self, src: int, dst: int, parity: np.ndarray) -> tuple[int, list[int]]:
        """Geodesic from ``src`` to ``dst`` leaving as few charges as possible.

        ``parity`` is the first-color parity per cell of the reported outcomes.
        Passing a cell through one first-color and one second-color check
        toggles its parity; the secondary cost counts charges created minus
        charges removed.  Reference outcomes carry no charges, so the choice
        depends only on flips and errors.  Remaining ties follow adjacency order.
        """
        D = int(self.rel_dist[src, dst])
        if D < 0:
            raise DecoderError("no path between matched nodes")
        ds, dd = self.rel_dist[src], self.rel_dist[dst]
        ncell = len(self.cells)

        def term(v, toggle):
            if v >= ncell or not toggle:
                return 0
            return -1 if parity[v] else 1

        first = self._first_color
        best = {(dst, 0): term(dst, 0), (dst, 1): term(dst, 1)}
        step: dict = {}
        for k in range(D - 1, -1, -1):
            nxt, best = best, {}
            for v in np.flatnonzero((ds == k) & (dd == D - k)).tolist():
                for into in ((0,) if k == 0 else (0, 1)):
                    choice = None
                    for w, e in self._rel_adj[v]:
                        f = int(first[e])
                        if (w, f) in nxt:
                            c = term(v, into ^ f) + nxt[w, f]
                            if choice is None or c < choice[0]:
                                choice = (c, (w, f), e)
                    if choice is not None:
                        best[v, into] = choice[0]
                        step[v, into] = choice[1:]
        if D == 0:
            return 0, []
        out, state = [], (src, 0)
        total = best[state]
        while state[0] != dst:
            state, e = step[state]
            out.append(e)
        return total, out

    # ------------------------------------------------------------------
    def endpoints(self, bits: np.ndarray) -> np.ndarray:
        """Detection nodes (odd relations) for sector outcome bits (1 = nontrivial)."""
        return np.flatnonzero((self.rel.astype(np.int64) @ bits) % 2)

    def pair_endpoints(self, ends, bits: np.ndarray):
        """Match endpoints and return ``(src, dst, path)`` triples (``dst = None``: boundary).

        Pair costs are lexicographic: relation-graph length first, then the
        net number of charges the repair path creates.  Endpoints
        are sorted first, so the result does not depend on their input order.
        """
        ends = np.unique(np.asarray(ends, dtype=np.int64))
        if ends.size == 0:
            return []
        nodes = ends.tolist() + ([self.sink] if self.has_boundary else [])
        K = 2 * int(self.rel_dist.max()) + 2
        parity = (self.cell_rel.astype(np.int64) @ bits) % 2
        paths = {}
        for a in range(ends.size):
            for b in range(a + 1, len(nodes)):
                u, v = nodes[a], nodes[b]
                if self.rel_dist[u, v] >= 0:
                    paths[u, v] = self._repair_path(u, v, parity)
        big = 10**9

        def cost(u, v):
            if (u, v) not in paths:
                return big
            return int(self.rel_dist[u, v]) * K + paths[u, v][0] + K // 2

        n = ends.size
        W = np.zeros((n, n), dtype=np.int64)
        for a in range(n):
            for b in range(a + 1, n):
                W[a, b] = W[b, a] = cost(nodes[a], nodes[b])
        bd = np.array([cost(u, self.sink) for u in nodes[:n]]) if self.has_boundary else None
        out = []
        for i, j in min_weight_match(DefectGraph(W, bd), self.mode):
            u = nodes[i]
            v = self.sink if j is None else nodes[j]
            if (u, v) not in paths:
                raise DecoderError("no path between matched nodes")
            out.append((u, None if j is None else v, paths[u, v][1]))
        return out

    def repair(self, bits: np.ndarray):
        """Step 1: pair endpoints on the relation graph and flip the connecting checks."""
        ends = self.endpoints(bits)
        fixed = bits.copy()
        flipped: list[int] = []
        out_pairs = []
        for u, v, path in self.pair_endpoints(ends, bits):
            for e in path:
                fixed[e] ^= 1
                flipped.append(e)
            out_pairs.append((int(u), None if v is None else int(v)))
        return fixed, out_pairs, flipped, ends

    def charges_of(self, repaired_bits: np.ndarray) -> np.ndarray:
        """Step 2: cells whose repaired first-color flux has odd parity."""
        return np.flatnonzero((self.cell_rel.astype(np.int64) @ repaired_bits) % 2)

    def correct(self, charges: np.ndarray):
        """Step 3: pair charges and build the connecting correction string."""
        if charges.size == 0:
            return [], np.zeros(self.lattice.n, dtype=np.uint8)
        W = self.cell_dist[np.ix_(charges, charges)]
        if np.any(W < 0):
            raise DecoderError("charges in disconnected components")
        pairs = min_weight_match(DefectGraph(W), self.mode)
        mask = np.zeros(self.lattice.n, dtype=np.uint8)
        out = []
        for i, j in pairs:
            a, b = int(charges[i]), int(charges[j])
            for q in self._path_edges(self._cell_tree(a), b):
                mask[q] ^= 1
            out.append((self.cells[a], self.cells[b]))
        return out, mask

    def decode(self, bits: np.ndarray) -> DecodeResult:
        """Full three-step decode of sector outcome bits (ordered as ``self.checks``)."""
        bits = np.asarray(bits, dtype=np.int64) % 2
        if bits.shape != (len(self.checks),):
            raise DecoderError("outcome vector has the wrong length")
        fixed, rpairs, flipped, ends = self.repair(bits)
        charges = self.charges_of(fixed)
        cpairs, mask = self.correct(charges)
        kind = SECTORS[self.sector]["correction"]
        qs = [int(q) for q in np.flatnonzero(mask)]
        vec = {q: 1 for q in qs}
        word = PauliWord.from_sparse(self.lattice.n, xs=vec) if kind == "X" \
            else PauliWord.from_sparse(self.lattice.n, zs=vec)
        return DecodeResult(
            self.sector, [int(e) for e in ends], rpairs,
            sorted({self.checks[e] for e in flipped if flipped.count(e) % 2}),
            [self.cells[c] for c in charges], cpairs, qs, word)

    def decode_mask(self, bits: np.ndarray) -> np.ndarray:
        """Correction as a 0/1 qubit mask (fast path used by the simulator)."""
        bits = np.asarray(bits, dtype=np.int64) % 2
        fixed, _, _, _ = self.repair(bits)
        charges = self.charges_of(fixed)
        return self.correct(charges)[1]


def reconstruct_stabilizer_syndrome(decoder: SectorDecoder, bits: np.ndarray) -> list[int]:
    """Charge cells after loop repair (cross-color confirmation built in)."""
    fixed, _, _, _ = decoder.repair(np.asarray(bits, dtype=np.int64) % 2)
    return [decoder.cells[c] for c in decoder.charges_of(fixed)]


def locate_charges(decoder: SectorDecoder, repaired_bits: np.ndarray) -> list[int]:
    """Charges of an already closed flux configuration."""
    bits = np.asarray(repaired_bits, dtype=np.int64) % 2
    if decoder.endpoints(bits).size:
        raise DecoderError("flux configuration is not closed")
    return [decoder.cells[c] for c in decoder.charges_of(bits)]


def repair_loops(decoder: SectorDecoder, bits: np.ndarray):
    """Step 1 alone: repaired outcome bits and the matched endpoint pairs."""
    fixed, pairs, _, _ = decoder.repair(np.asarray(bits, dtype=np.int64) % 2)
    return fixed, pairs


def correction_from_matching(decoder: SectorDecoder, pairs) -> PauliWord:
    """Product of single-qubit Paulis along the geodesic of each (cell, cell) pair."""
    pos = {c: i for i, c in enumerate(decoder.cells)}
    mask = np.zeros(decoder.lattice.n, dtype=np.uint8)
    for a, b in pairs:
        if a not in pos or b not in pos:
            raise DecoderError("pair connects cells of different type")
        for q in decoder._path_edges(decoder._cell_tree(pos[a]), pos[b]):
            mask[q] ^= 1
    vec = {int(q): 1 for q in np.flatnonzero(mask)}
    n = decoder.lattice.n
    if SECTORS[decoder.sector]["correction"] == "X":
        return PauliWord.from_sparse(n, xs=vec)
    return PauliWord.from_sparse(n, zs=vec)
