import json
from pathlib import Path

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stcode.decoder import (
    DecoderError,
    SectorDecoder,
    correction_from_matching,
    locate_charges,
    reconstruct_stabilizer_syndrome,
    repair_loops,
)
from stcode.matching import DefectGraph, matching_weight, min_weight_match
from stcode.ssec import SSECContext

from conftest import lattice

GOLDEN = Path(__file__).parent / "golden"
_DECODERS = {}


def decoder(dims=(4, 4, 4), boundary="Periodic3Torus", sector="RY"):
    key = (dims, boundary, sector)
    if key not in _DECODERS:
        _DECODERS[key] = SectorDecoder(lattice(dims, boundary), sector)
    return _DECODERS[key]


def sector_bits(dec, err):
    """Perfect outcomes of the sector checks for a Z (RY) or X (BG) error mask."""
    lat = dec.lattice
    attr = "x" if dec.sector == "RY" else "z"
    M = np.array([getattr(lat.checks[c].word, attr) % 2 for c in dec.checks], dtype=np.int64)
    return (M @ err.astype(np.int64)) % 2


def stabilizer_syndrome(dec, err):
    lat = dec.lattice
    attr = "x" if dec.sector == "RY" else "z"
    return [c for c in dec.cells if int(getattr(lat.stabilizers[c], attr) % 2 @ err) % 2]


def z_error(n, *qs):
    e = np.zeros(n, dtype=np.uint8)
    e[list(qs)] ^= 1
    return e


def test_no_outcomes_no_charges():
    dec = decoder()
    res = dec.decode(np.zeros(len(dec.checks), dtype=np.int64))
    assert res.endpoints == [] and res.charges == [] and res.correction_qubits == []
    assert res.correction.is_identity()


@pytest.mark.parametrize("sector", ["RY", "BG"])
def test_single_error_two_charges(sector):
    dec = decoder(sector=sector)
    q = 17
    err = z_error(dec.lattice.n, q)
    bits = sector_bits(dec, err)
    assert bits.any()
    res = dec.decode(bits)
    assert res.endpoints == []
    # oracle: the two cells of the detected type whose cube contains the qubit
    assert sorted(res.charges) == sorted(stabilizer_syndrome(dec, err))
    assert len(res.charges) == 2
    assert res.correction_qubits == [q]


def test_single_flipped_check_is_repaired():
    dec = decoder()
    bits = np.zeros(len(dec.checks), dtype=np.int64)
    bits[5] = 1
    res = dec.decode(bits)
    assert len(res.endpoints) == 2
    assert res.repaired_checks == [dec.checks[5]]
    assert res.charges == [] and res.correction_qubits == []


def test_single_color_loop_has_no_charges():
    dec = decoder()
    lat = dec.lattice
    G = nx.MultiGraph()
    for j, (a, b) in enumerate(dec.check_nodes):
        if lat.checks[dec.checks[j]].color == "R":
            G.add_edge(a, b, key=j)
    cycle = nx.find_cycle(G)
    bits = np.zeros(len(dec.checks), dtype=np.int64)
    bits[[j for _, _, j in cycle]] = 1
    assert bits.sum() >= 4
    assert locate_charges(dec, bits) == []


def test_colocated_r_and_y_endpoints():
    dec = decoder()
    lat = dec.lattice
    cell = dec.cells[3]
    r = next(j for j, c in enumerate(dec.checks) if cell in lat.checks[c].cells and lat.checks[c].color == "R")
    y = next(j for j, c in enumerate(dec.checks) if cell in lat.checks[c].cells and lat.checks[c].color == "Y")
    bits = np.zeros(len(dec.checks), dtype=np.int64)
    bits[[r, y]] = 1
    ends = dec.endpoints(bits)
    assert dec.node_label[dec.cells.index(cell)] == ("cell", cell)
    assert dec.cells.index(cell) not in ends.tolist()
    res = dec.decode(bits)
    assert res.charges == [] and res.correction_qubits == []


def test_gap_filled_along_geodesic():
    dec = decoder()
    G = nx.Graph()
    for j, (a, b) in enumerate(dec.check_nodes):
        G.add_edge(a, b)
    # pick two vertex nodes at distance 3 on the relation graph (independent BFS)
    src = next(i for i, lab in enumerate(dec.node_label) if lab[0] == "vertex" and lab[1] == "R")
    dist = nx.single_source_shortest_path_length(G, src)
    dst = min(v for v, d in dist.items() if d == 3)
    path = nx.shortest_path(G, src, dst)
    edge = {frozenset(ab): j for j, ab in enumerate(dec.check_nodes)}
    gap = [edge[frozenset((u, v))] for u, v in zip(path, path[1:])]
    bits = np.zeros(len(dec.checks), dtype=np.int64)
    bits[gap] = 1
    assert sorted(dec.endpoints(bits).tolist()) == sorted([src, dst])
    fixed, pairs = repair_loops(dec, bits)
    assert pairs == [(min(src, dst), max(src, dst))] or pairs == [(src, dst)]
    flipped = np.flatnonzero(fixed != bits)
    assert len(flipped) == 3
    assert dec.endpoints(fixed).size == 0


def test_correction_from_matching():
    dec = decoder()
    lat = dec.lattice
    q = 40
    cells = stabilizer_syndrome(dec, z_error(lat.n, q))
    w = correction_from_matching(dec, [tuple(cells)])
    assert w.support.tolist() == [q]
    assert not w.x.any() and w.z[q] == 1
    assert correction_from_matching(dec, []).is_identity()
    zcell = lat.cells_of_kind("Z")[0].index
    with pytest.raises(DecoderError):
        correction_from_matching(dec, [(cells[0], zcell)])


def test_locate_charges_rejects_open_flux():
    dec = decoder()
    bits = np.zeros(len(dec.checks), dtype=np.int64)
    bits[0] = 1
    with pytest.raises(DecoderError):
        locate_charges(dec, bits)


def test_wrong_length_and_sector():
    with pytest.raises(DecoderError):
        decoder().decode(np.zeros(3))
    with pytest.raises(DecoderError):
        SectorDecoder(lattice((2, 2, 2)), "RB")


@pytest.mark.parametrize("dims,boundary", [((4, 4, 4), "Periodic3Torus"), ((4, 4, 3), "OpenZ_KV")])
@pytest.mark.parametrize("sector", ["RY", "BG"])
def test_residual_syndrome_zero(dims, boundary, sector):
    dec = decoder(dims, boundary, sector)
    rng = np.random.default_rng(11)
    for _ in range(30):
        err = (rng.random(dec.lattice.n) < 0.04).astype(np.uint8)
        bits = sector_bits(dec, err)
        flips = (rng.random(bits.size) < 0.03).astype(np.int64)
        res = dec.decode(bits ^ flips)
        total = err.copy()
        total[res.correction_qubits] ^= 1
        if not flips.any():
            assert stabilizer_syndrome(dec, total) == []
        assert dec.endpoints(np.zeros_like(bits)).size == 0


def charges_with_order(dec, bits, order):
    """Repair + locate with the endpoint list fed to the matcher in ``order``."""
    ends = dec.endpoints(bits)[order]
    fixed = bits.copy()
    for _, _, path in dec.pair_endpoints(ends, bits):
        fixed[path] ^= 1
    return sorted(dec.cells[c] for c in dec.charges_of(fixed))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 255), min_size=1, max_size=4, unique=True), st.randoms(use_true_random=False))
def test_repair_locate_permutation_invariant(flipped, rnd):
    dec = decoder()
    bits = np.zeros(len(dec.checks), dtype=np.int64)
    bits[flipped] = 1
    n = dec.endpoints(bits).size
    perm = list(range(n))
    rnd.shuffle(perm)
    base = charges_with_order(dec, bits, list(range(n)))
    assert charges_with_order(dec, bits, perm) == base
    assert reconstruct_stabilizer_syndrome(dec, bits) == base
    if len(flipped) <= 2:
        # isolated readout flips are undone, not mistaken for charges
        assert base == []


def test_fast_mode_decodes_single_error():
    dec = SectorDecoder(lattice((4, 4, 4)), "RY", mode="fast")
    err = z_error(dec.lattice.n, 3)
    assert dec.decode(sector_bits(dec, err)).correction_qubits == [3]


@pytest.mark.parametrize("d", [1, 2])
def test_short_charge_pairs_are_corrected(d):
    """Two charges a distance d < L/2 apart: the correction has trivial logical action."""
    lat = lattice((6, 6, 3), "OpenZ_KV")
    ctx = SSECContext.build(lat)
    for sector, dec in ctx.decoders.items():
        a = len(dec.cells) // 2
        dist, par = dec._cell_tree(a)
        b = int(np.flatnonzero(dist == d)[0])
        err = np.zeros(lat.n, dtype=np.uint8)
        for q in dec._path_edges((dist, par), b):
            err[q] ^= 1
        assert int(err.sum()) == d
        res = dec.decode(sector_bits(dec, err))
        total = err.copy()
        total[res.correction_qubits] ^= 1
        zero = np.zeros_like(total)
        ex, ez = (total, zero) if sector == "BG" else (zero, total)
        assert not ctx.action(ex, ez).any()


def test_golden_dump():
    dec = decoder()
    rng = np.random.default_rng(2024)
    err = (rng.random(dec.lattice.n) < 0.03).astype(np.uint8)
    bits = sector_bits(dec, err)
    bits[[7, 60]] ^= 1
    got = json.loads(dec.decode(bits).to_json())
    path = GOLDEN / "decode_ry_444.json"
    assert got == json.loads(path.read_text())
