import numpy as np
import pytest

from stcode.decoder import SECTORS
from stcode.lattice import LatticeSpec
from stcode.pauli import product
from stcode.ssec import (
    FrameSimulator,
    MeasurementSequence,
    NoiseModel,
    SimulationError,
    SSECContext,
    get_sequence,
    init_state,
    noisy_step,
    run_protocol,
    run_trials,
    trial_rngs,
    wilson_interval,
)

from conftest import lattice

KV = ((2, 2, 3), "OpenZ_KV")
_CTX = {}


def context(dims=KV[0], boundary=KV[1]):
    if (dims, boundary) not in _CTX:
        _CTX[dims, boundary] = SSECContext.build(lattice(dims, boundary))
    return _CTX[dims, boundary]


def cube_syndrome(lat, ex, ez):
    out = []
    for s in lat.stabilizers:
        if s.is_identity():
            continue
        out.append(int((s.x % 2) @ ez + (s.z % 2) @ ex) % 2)
    return out


# ---------------------------------------------------------------- state preparation


def test_init_state_torus():
    lat = lattice((2, 2, 2))
    sim = init_state(lat, "RY")
    x_checks = lat.checks_of_color("R", "Y")
    assert len(x_checks) == 32
    assert all(sim.expectation_sign(c.word) == 1 for c in x_checks)
    z_cubes = [lat.stabilizers[c.index] for c in lat.cells_of_kind("Z")]
    assert len(lat.stabilizers) == 8
    assert all(sim.expectation_sign(s) == 1 for s in lat.stabilizers)
    # BG checks are random individually but their cell products are the Z cubes
    rng = np.random.default_rng(0)
    for cell in lat.cells_of_kind("Z"):
        b = product([c.word for c in lat.cell_checks(cell.index, "B")], n=lat.n)
        assert sim.expectation_sign(b) == 1
    assert sim.expectation_sign(lat.checks_of_color("B")[0].word) is None
    # measuring RY again is deterministic and trivial
    assert all(sim.measure(c.word.x, c.word.z, rng) == 0 for c in x_checks)
    assert z_cubes


def test_init_state_errors():
    with pytest.raises(SimulationError):
        init_state(lattice((2, 2, 2)), "RB")
    with pytest.raises(SimulationError):
        init_state(lattice((2, 2, 2), "Periodic3Torus", 3))
    with pytest.raises(SimulationError):
        FrameSimulator(lattice((2, 2, 2), "Periodic3Torus", 3))
    with pytest.raises(SimulationError):
        SSECContext.build(lattice((2, 2, 2), "Periodic3Torus", 5))


# ---------------------------------------------------------------- one step


def test_noisy_step_examples():
    lat = lattice((2, 2, 2))
    f = FrameSimulator(lat)
    _, flips, gauge = trial_rngs(0, 0)
    rec = noisy_step(f, "RY", 0.0, flips, gauge)
    assert rec.checks.size == 32 and not rec.measured.any()
    rec = noisy_step(f, "BG", 1.0, flips, gauge)
    assert rec.measured.all() and not rec.true.any()
    f.apply(np.zeros(lat.n, np.uint8), np.eye(lat.n, dtype=np.uint8)[5])
    rec = noisy_step(f, "R", 0.0, flips, gauge, rnd=3)
    expect = [int(lat.checks[c].word.x[5] % 2) for c in rec.checks]
    assert rec.measured.tolist() == expect and rec.round == 3


# ---------------------------------------------------------------- sequences


def test_sequences():
    assert get_sequence("standard").steps == ("RY", "BG")
    assert get_sequence("ybgr").steps == ("Y", "B", "G", "R")
    assert get_sequence("ybrg").decode_after == {"RY": 3, "BG": 3}
    with pytest.raises(SimulationError):
        get_sequence("rgby")
    with pytest.raises(SimulationError):
        MeasurementSequence("short", ("RY", "B"), {})
    with pytest.raises(SimulationError):
        MeasurementSequence("early", ("Y", "B", "G", "R"), {"RY": 1})


def test_noise_model_validation():
    m = NoiseModel(0.1, 0.2)
    assert m.pX == m.pZ == 0.05
    assert NoiseModel(0.1, pX=0.0).pX == 0.0
    for kw in (dict(p=1.5), dict(q=-0.1), dict(pX=2.0)):
        with pytest.raises(SimulationError):
            NoiseModel(**kw)


def test_standard_sequence_decodes_each_sector_once_per_round():
    lat = lattice(*KV)
    res = run_protocol(lat, "standard", 3, NoiseModel(0.05, 0.05), 1, context=context(), record=True)
    order = [(d["round"], d["sector"]) for d in res.decisions]
    assert order == [(r, s) for r in range(4) for s in ("RY", "BG")]


# ---------------------------------------------------------------- protocol


def test_noiseless_memory_never_fails():
    lat = lattice(*KV)
    for seq in ("standard", "ybgr", "ybrg"):
        for t in range(5):
            res = run_protocol(lat, seq, 2, NoiseModel(), 3, t, context=context(), record=True)
            assert not res.failed
            assert all(not d["charges"] and not d["correction"] for d in res.decisions)


@pytest.mark.parametrize("seq", ["standard", "ybgr", "ybrg"])
def test_frame_matches_tableau(seq):
    lat = lattice(*KV)
    for t in range(6):
        a = run_protocol(lat, seq, 2, NoiseModel(0.04, 0.03), 5, t, "frame", context(), record=True)
        b = run_protocol(lat, seq, 2, NoiseModel(0.04, 0.03), 5, t, "tableau", context(), record=True)
        assert a.decisions == b.decisions
        assert a.failed == b.failed
        assert np.array_equal(a.residual_action, b.residual_action)


def test_deterministic_given_seed():
    lat = lattice(*KV)
    a = run_protocol(lat, "ybgr", 3, NoiseModel(0.05, 0.05), 9, 4, context=context(), record=True)
    b = run_protocol(lat, "ybgr", 3, NoiseModel(0.05, 0.05), 9, 4, context=context(), record=True)
    assert a.decisions == b.decisions
    c = run_protocol(lat, "ybgr", 3, NoiseModel(0.05, 0.05), 10, 4, context=context(), record=True)
    assert c.decisions != a.decisions


def test_css_decoupling():
    """Z-error decoding does not depend on the X error rate."""
    lat = lattice(*KV)
    runs = []
    for px in (0.0, 0.1):
        noise = NoiseModel(q=0.02, pX=px, pZ=0.03)
        res = run_protocol(lat, "standard", 3, noise, 2, 1, context=context(), record=True)
        runs.append(res)
    ry = [[d for d in r.decisions if d["sector"] == "RY"] for r in runs]
    assert ry[0] == ry[1]
    assert np.array_equal(runs[0].frame[1], runs[1].frame[1])


@pytest.mark.parametrize("backend", ["frame", "tableau"])
def test_stabilizers_restored_after_final_round(backend):
    lat = lattice(*KV)
    for t in range(5):
        res = run_protocol(lat, "standard", 2, NoiseModel(0.05, 0.05), 7, t, backend, context(), record=True)
        ex, ez = res.frame
        assert not any(cube_syndrome(lat, ex, ez))


def test_gauss_law_closure_of_true_outcomes():
    lat = lattice(*KV)
    ctx = context()
    res = run_protocol(lat, "ybrg", 3, NoiseModel(0.05, 0.0), 2, 0, "tableau", ctx, record=True)
    for rnd in range(4):
        for sector, dec in ctx.decoders.items():
            bits = res.history.latest(dec.checks, rnd)
            assert dec.endpoints(bits).size == 0


def test_alternative_sequences_agree_without_flips():
    lat = lattice(*KV)
    for t in range(5):
        runs = [run_protocol(lat, s, 2, NoiseModel(0.05, 0.0), 4, t, context=context(), record=True)
                for s in ("ybgr", "ybrg")]
        assert [d["charges"] for d in runs[0].decisions] == [d["charges"] for d in runs[1].decisions]


def test_wilson_interval():
    lo, hi = wilson_interval(5, 10)
    assert lo == pytest.approx(0.236593, abs=1e-6) and hi == pytest.approx(0.763407, abs=1e-6)
    lo, hi = wilson_interval(0, 10)
    assert lo == 0.0 and hi == pytest.approx(0.277533, abs=1e-6)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_run_trials_thread_independent():
    spec = LatticeSpec((2, 2, 3), "OpenZ_KV")
    a = run_trials(spec, "standard", 2, NoiseModel(0.03, 0.03), 40, 8, threads=1)
    b = run_trials(spec, "standard", 2, NoiseModel(0.03, 0.03), 40, 8, threads=2)
    assert a == b
    assert 0 <= a["failures"] <= 40 and a["wilson_lo"] <= a["rate"] <= a["wilson_hi"]


def test_unknown_backend():
    with pytest.raises(SimulationError):
        run_protocol(lattice(*KV), "standard", 1, NoiseModel(), 0, backend="gpu", context=context())


def test_sector_table():
    assert SECTORS["RY"]["correction"] == "Z" and SECTORS["BG"]["correction"] == "X"
