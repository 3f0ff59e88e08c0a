import numpy as np
import pytest

from stcode.analysis import (
    AnalysisError,
    analyze,
    analyze_subspace_limit,
    code_info,
    constructed_logicals,
    identity_suite,
    logical_action,
    membrane_identity,
    plane_operator,
    verify_identity,
    zn_verify,
)
from stcode.lattice import LatticeError
from stcode.pauli import PauliError, PauliWord, commutation_matrix, compose, row_reduce

from conftest import lattice, structure


@pytest.mark.parametrize("dims,boundary,k", [
    ((2, 2, 2), "Periodic3Torus", 0),
    ((4, 4, 4), "Periodic3Torus", 0),
    ((2, 2, 3), "OpenZ_KV", 2),
    ((4, 4, 3), "OpenZ_KV", 2),
    ((2, 2, 4), "OpenZ_KV", 2),
    ((2, 2, 3), "OpenZ_WrongA", 0),
    ((2, 2, 3), "OpenZ_WrongB", 0),
    ((4, 4, 3), "OpenZ_WrongB", 0),
])
def test_logical_counts(dims, boundary, k):
    assert structure(dims, boundary).k == k


@pytest.mark.parametrize("dims,boundary", [((2, 2, 2), "Periodic3Torus"), ((2, 2, 3), "OpenZ_KV"),
                                           ((4, 4, 3), "OpenZ_KV"), ((2, 2, 3), "OpenZ_WrongA")])
def test_structure_invariants(dims, boundary):
    lat = lattice(dims, boundary)
    s = structure(dims, boundary)
    G, S, ZG = s.gauge_group, s.stabilizer_group, s.gauge_centralizer
    assert all(ZG.contains(w) for w in S.generators)
    assert all(G.contains(w) for w in S.generators)
    assert all(G.contains(w) for w in lat.stabilizers)
    assert len(s.bare_basis.generators) == len(s.dressed_basis.generators) == 2 * s.k
    # 2k from both quotients
    ZS_rank = 2 * s.n - S.rank
    assert 2 * s.k == ZG.rank - S.rank == ZS_rank - G.rank
    if s.k:
        assert not np.any(commutation_matrix(s.bare_basis.generators, lat.words()))
        assert not np.any(commutation_matrix(s.dressed_basis.generators, S.generators))


@pytest.mark.parametrize("L", [2, 4])
@pytest.mark.parametrize("keep", ["Zchecks+Xcubes", "Xchecks+Zcubes"])
def test_subspace_limits(L, keep):
    assert analyze_subspace_limit(lattice((L, L, L)), keep).k == 3


def test_subspace_limit_errors():
    with pytest.raises(LatticeError):
        analyze_subspace_limit(lattice((2, 2, 3), "OpenZ_KV"), "Zchecks+Xcubes")
    with pytest.raises(AnalysisError):
        analyze_subspace_limit(lattice((2, 2, 2)), "everything")


def test_composite_dimension_rejected():
    with pytest.raises(PauliError):
        analyze(lattice((2, 2, 2), "Periodic3Torus", 4))


def test_verify_identity_trivial():
    lat = lattice((2, 2, 2))
    ws = lat.words()[:5]
    assert verify_identity(ws, ws)
    assert not verify_identity(ws[:1], ws[1:2])


@pytest.mark.parametrize("L", [2, 4])
def test_torus_membrane_slab(L):
    lat = lattice((L, L, L))
    for z in range(1, L + 1):
        assert membrane_identity(lat, z, "X")
        assert membrane_identity(lat, z, "Z")


def test_torus_single_plane_not_in_cube_group():
    lat = lattice((4, 4, 4))
    cubes = row_reduce(lat.stabilizers)
    plane = plane_operator(lat, 1, "X")
    assert not cubes.contains(plane)
    assert structure((4, 4, 4)).gauge_group.contains(plane)


@pytest.mark.parametrize("dims", [(2, 2, 3), (4, 4, 3)])
def test_kv_membrane(dims):
    lat = lattice(dims, "OpenZ_KV")
    for z in range(1, dims[2]):
        assert membrane_identity(lat, z, "X")


@pytest.mark.parametrize("dims", [(2, 2, 3), (4, 4, 3)])
def test_bare_logical_structure(dims):
    lat = lattice(dims, "OpenZ_KV")
    s = structure(dims, "OpenZ_KV")
    cons = constructed_logicals(lat, s)
    words = lat.words()
    for fam in ("by", "gr"):
        for kind in ("X", "Z"):
            assert len(cons[fam][kind]) == 2
            assert not np.any(commutation_matrix(cons[fam][kind], words))
    C = commutation_matrix(cons["by"]["X"], cons["by"]["Z"]) % 2
    assert np.array_equal(C, np.eye(2, dtype=C.dtype))
    for kind in ("X", "Z"):
        for a, b in zip(cons["by"][kind], cons["gr"][kind]):
            assert verify_identity([a], [b], s.gauge_group)
    # the BY X representative is X on lower-boundary qubits times Y checks
    lower = [PauliWord.single(lat.n, q, "X") for q in lat.boundary_layers["lower"]]
    span = row_reduce(lat.words("Y") + lower)
    assert all(span.contains(w) for w in cons["by"]["X"])
    assert not any(row_reduce(lat.words("Y")).contains(w) for w in cons["by"]["X"])


def test_logical_action():
    lat = lattice((2, 2, 3), "OpenZ_KV")
    s = structure((2, 2, 3), "OpenZ_KV")
    for stab in lat.stabilizers:
        assert not logical_action(stab, s).any()
    rng = np.random.default_rng(1)
    words = lat.words()
    for _ in range(20):
        pick = rng.random(len(words)) < 0.3
        g = PauliWord.identity(lat.n)
        for w, p in zip(words, pick):
            if p:
                g = compose(g, w)
        assert not logical_action(g, s).any()
    a1, b1 = s.bare_pairs()[0]
    act = logical_action(a1, s)
    assert act.tolist() == [0, 1, 0, 0]
    single = PauliWord.single(lat.n, lat.n // 2, "X")
    with pytest.raises(AnalysisError):
        logical_action(single, s)


@pytest.mark.parametrize("dims", [(2, 2, 3), (4, 4, 3)])
def test_identity_suite(dims):
    rep = identity_suite(lattice(dims, "OpenZ_KV"), structure(dims, "OpenZ_KV"))
    assert all(rep.values()), rep


def test_code_info():
    info = code_info(lattice((2, 2, 3), "OpenZ_KV"), structure((2, 2, 3), "OpenZ_KV"))
    assert info["k"] == 2
    assert info["qubits"] == 32
    assert len(info["bare_logicals"]) == 4
    assert sum(info["checks_by_color"].values()) == info["checks"]


@pytest.mark.parametrize("N", [2, 3, 5])
def test_zn_verify(N):
    rep = zn_verify(N, 2)
    assert rep["all commutation identities hold"] is True
