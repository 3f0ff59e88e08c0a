"""Single-shot error correction with sequenced noisy check measurements.

Two backends share one protocol driver:

* ``tableau``: an exact stabilizer-tableau simulation of the code state, with
  projective check measurements (random gauge outcomes included);
* ``frame``: tracks only the Pauli error frame E.  A check outcome on
  E|psi> is the reference outcome times (-1)^c(E, check).  The reference
  outcomes of any color form closed flux loops (Gauss laws hold exactly in
  the noiseless state), and the decoder only reads loop endpoints, so the
  frame backend sets the reference outcomes to +1 and yields the same
  decoder decisions as the tableau backend.

Random streams: trial ``t`` of a run with seed ``s`` draws errors from
``SeedSequence(s, spawn_key=(t, 0))``, measurement flips from ``(t, 1)`` and
tableau gauge outcomes from ``(t, 2)``, each through a Philox generator.
Errors therefore do not depend on the sequence or the backend.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import analyze, constructed_logicals
from .decoder import SECTORS, SectorDecoder
from .lattice import CodeLattice, LatticeSpec, build_code_lattice
from .pauli import PauliWord, centralizer, row_reduce


class SimulationError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration types


@dataclass(frozen=True)
class NoiseModel:
    """Independent X and Z errors per qubit per round, and outcome flips per check."""

    p: float = 0.0
    q: float = 0.0
    pX: float | None = None
    pZ: float | None = None

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SimulationError(f"{name} must lie in [0, 1]")
        if self.pX is None:
            object.__setattr__(self, "pX", self.p / 2)
        if self.pZ is None:
            object.__setattr__(self, "pZ", self.p / 2)
        for name in ("pX", "pZ"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise SimulationError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class MeasurementSequence:
    """Color steps of one round and, per sector, the step after which it is decoded."""

    name: str
    steps: tuple[str, ...]
    decode_after: dict

    def __post_init__(self):
        seen = "".join(self.steps)
        if sorted(seen) != sorted("BGRY"):
            raise SimulationError("every round must measure each color exactly once")
        for sector, step in self.decode_after.items():
            need = set(SECTORS[sector]["colors"])
            have = set("".join(self.steps[: step + 1]))
            if not need <= have:
                raise SimulationError(f"sector {sector} decoded before both colors are measured")


SEQUENCES = {
    "standard": MeasurementSequence("standard", ("RY", "BG"), {"RY": 0, "BG": 1}),
    "ybgr": MeasurementSequence("ybgr", ("Y", "B", "G", "R"), {"RY": 3, "BG": 3}),
    "ybrg": MeasurementSequence("ybrg", ("Y", "B", "R", "G"), {"RY": 3, "BG": 3}),
}


def get_sequence(name: str | MeasurementSequence) -> MeasurementSequence:
    if isinstance(name, MeasurementSequence):
        return name
    try:
        return SEQUENCES[name]
    except KeyError:
        raise SimulationError(f"unknown sequence {name!r}; choose from {sorted(SEQUENCES)}") from None


@dataclass
class StepRecord:
    round: int
    colors: str
    checks: np.ndarray  # lattice check indices
    measured: np.ndarray  # reported bits (1 = outcome -1)
    true: np.ndarray  # outcome before the readout flip
    flips: np.ndarray


@dataclass
class SyndromeHistory:
    steps: list[StepRecord] = field(default_factory=list)

    def latest(self, check_indices, round_: int) -> np.ndarray:
        """Most recent reported bits of ``check_indices`` within ``round_``."""
        out = {}
        for rec in self.steps:
            if rec.round != round_:
                continue
            for c, b in zip(rec.checks.tolist(), rec.measured.tolist()):
                out[c] = b
        try:
            return np.array([out[c] for c in check_indices], dtype=np.int64)
        except KeyError:
            raise SimulationError("a sector color was not measured in this round") from None


@dataclass
class TrialResult:
    rounds: int
    decisions: list[dict]
    residual_action: np.ndarray
    failed: bool
    history: SyndromeHistory | None = None
    frame: tuple | None = None  # final (ex, ez) error frame, set when recording


# --------------------------------------------------------------------------
# random streams


def trial_rngs(seed: int, trial: int):
    make = lambda k: np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial, k))))
    return make(0), make(1), make(2)


# --------------------------------------------------------------------------
# backends


class FrameSimulator:
    """Pauli-frame state: reference outcomes fixed to +1."""

    def __init__(self, lattice: CodeLattice):
        if lattice.N != 2:
            raise SimulationError("SSEC simulation is qubit-only (N = 2)")
        self.lattice = lattice
        self.ex = np.zeros(lattice.n, dtype=np.uint8)
        self.ez = np.zeros(lattice.n, dtype=np.uint8)
        self._mats = {}
        for color in "BGRY":
            chs = lattice.checks_of_color(color)
            kind = chs[0].kind if chs else "Z"
            m = np.zeros((len(chs), lattice.n), dtype=np.uint8)
            for i, c in enumerate(chs):
                m[i] = (c.word.z if kind == "Z" else c.word.x) % 2
            self._mats[color] = (np.array([c.index for c in chs], dtype=np.int64), m, kind)

    def apply(self, x: np.ndarray, z: np.ndarray):
        self.ex ^= x.astype(np.uint8)
        self.ez ^= z.astype(np.uint8)

    def measure(self, color: str, rng=None):
        idx, m, kind = self._mats[color]
        err = self.ex if kind == "Z" else self.ez
        return idx, (m.astype(np.int64) @ err) % 2


class TableauSimulator:
    """Exact stabilizer state of ``n`` qubits (rows: i^r X^x Z^z)."""

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((n, n), dtype=np.uint8)
        self.z = np.eye(n, dtype=np.uint8)
        self.r = np.zeros(n, dtype=np.int64)
        # error frame bookkeeping (for logical accounting)
        self.ex = np.zeros(n, dtype=np.uint8)
        self.ez = np.zeros(n, dtype=np.uint8)

    @classmethod
    def from_generators(cls, words: list[PauliWord]) -> "TableauSimulator":
        sim = cls(words[0].n)
        if len(words) != sim.n:
            raise SimulationError("a pure state needs exactly n generators")
        for i, w in enumerate(words):
            sim.x[i] = w.x % 2
            sim.z[i] = w.z % 2
            sim.r[i] = int(np.dot(w.x % 2, w.z % 2)) % 2  # Hermitian with +1 eigenvalue
        return sim

    def _rowmult(self, i: int, j: int):
        self.r[i] = (self.r[i] + self.r[j] + 2 * int(np.dot(self.z[i], self.x[j]))) % 4
        self.x[i] ^= self.x[j]
        self.z[i] ^= self.z[j]

    def _solve(self, px: np.ndarray, pz: np.ndarray) -> list[int]:
        """Generator subset whose product is P up to phase."""
        n = self.n
        rows = [int("".join(map(str, np.concatenate([self.x[i], self.z[i]])[::-1])), 2) | (1 << (2 * n + i))
                for i in range(n)]
        target = int("".join(map(str, np.concatenate([px, pz])[::-1].astype(int))), 2)
        mask = (1 << (2 * n)) - 1
        piv: dict[int, int] = {}
        for v in rows:
            for b, pv in piv.items():
                if (v >> b) & 1:
                    v ^= pv
            low = v & mask
            if low:
                b = low.bit_length() - 1
                for k in list(piv):
                    if (piv[k] >> b) & 1:
                        piv[k] ^= v
                piv[b] = v
        acc = 0
        t = target
        for b, pv in sorted(piv.items(), reverse=True):
            if (t >> b) & 1:
                t ^= pv & mask
                acc ^= pv >> (2 * n)
        if t & mask:
            raise SimulationError("deterministic measurement target not in stabilizer group")
        return [i for i in range(n) if (acc >> i) & 1]

    def measure(self, px: np.ndarray, pz: np.ndarray, rng) -> int:
        """Measure the Hermitian Pauli X^px Z^pz (px.pz even); returns 1 for outcome -1."""
        px = px.astype(np.uint8) % 2
        pz = pz.astype(np.uint8) % 2
        anti = ((self.x.astype(np.int64) @ pz + self.z.astype(np.int64) @ px) % 2).astype(bool)
        rows = np.flatnonzero(anti)
        if rows.size:
            p = int(rows[0])
            for j in rows[1:]:
                self._rowmult(int(j), p)
            b = int(rng.integers(2))
            self.x[p] = px
            self.z[p] = pz
            self.r[p] = 2 * b + int(np.dot(px, pz)) % 2
            return b
        subset = self._solve(px, pz)
        acc_x = np.zeros(self.n, dtype=np.uint8)
        acc_z = np.zeros(self.n, dtype=np.uint8)
        r = 0
        for j in subset:
            r = (r + int(self.r[j]) + 2 * int(np.dot(acc_z, self.x[j]))) % 4
            acc_x ^= self.x[j]
            acc_z ^= self.z[j]
        r = (r - int(np.dot(px, pz))) % 4  # compare against the Hermitian form of P
        if r % 2:
            raise SimulationError("non-Hermitian product in tableau")
        return r // 2

    def apply(self, x: np.ndarray, z: np.ndarray):
        x = x.astype(np.int64) % 2
        z = z.astype(np.int64) % 2
        anti = (self.x.astype(np.int64) @ z + self.z.astype(np.int64) @ x) % 2
        self.r = (self.r + 2 * anti) % 4
        self.ex ^= x.astype(np.uint8)
        self.ez ^= z.astype(np.uint8)

    def expectation_sign(self, word: PauliWord) -> int | None:
        """+1/-1 if ``word`` is (up to sign) a stabilizer, else None."""
        px, pz = word.x % 2, word.z % 2
        anti = (self.x.astype(np.int64) @ pz + self.z.astype(np.int64) @ px) % 2
        if anti.any():
            return None
        return -1 if self.measure(px, pz, None) else 1


def init_state(lattice: CodeLattice, seed_gauge: str = "RY", structure=None) -> TableauSimulator:
    """Tableau stabilized by one color pair's checks, all cubes and Z-type logicals, all +1."""
    if lattice.N != 2:
        raise SimulationError("SSEC simulation is qubit-only (N = 2)")
    if seed_gauge not in ("RY", "BG"):
        raise SimulationError("seed gauge must be 'RY' or 'BG'")
    gens = lattice.words(*SECTORS[seed_gauge]["colors"])
    gens += [s for s in lattice.stabilizers if not s.is_identity()]
    logicals = []
    if lattice.spec is not None and not lattice.spec.boundary.periodic:
        structure = structure or analyze(lattice)
        if structure.k:
            cons = constructed_logicals(lattice, structure)
            logicals = cons["by"]["Z"] if seed_gauge == "RY" else cons["by"]["X"]
    basis = row_reduce(gens + logicals, lattice.n, 2)
    words = list(basis.generators)
    if len(words) < lattice.n:
        cz = centralizer(basis)
        ech = row_reduce(words, lattice.n, 2)
        for w in cz.generators:
            if len(words) == lattice.n:
                break
            if not ech.contains(w):
                words.append(w)
                ech = row_reduce(words, lattice.n, 2)
    return TableauSimulator.from_generators(words)


class _TableauBackend:
    def __init__(self, lattice: CodeLattice, seed_gauge: str, structure):
        self.sim = init_state(lattice, seed_gauge, structure)
        self.lattice = lattice
        self._by_color = {c: lattice.checks_of_color(c) for c in "BGRY"}

    @property
    def ex(self):
        return self.sim.ex

    @property
    def ez(self):
        return self.sim.ez

    def apply(self, x, z):
        self.sim.apply(x, z)

    def measure(self, color: str, rng):
        chs = self._by_color[color]
        out = np.array([self.sim.measure(c.word.x, c.word.z, rng) for c in chs], dtype=np.int64)
        return np.array([c.index for c in chs], dtype=np.int64), out


# --------------------------------------------------------------------------
# protocol


@dataclass
class SSECContext:
    """Everything reusable across trials of one lattice."""

    lattice: CodeLattice
    decoders: dict
    bare_x: np.ndarray  # bare basis generators' x parts (rows)
    bare_z: np.ndarray
    structure: object

    @classmethod
    def build(cls, lattice: CodeLattice, mode: str = "exact") -> "SSECContext":
        if lattice.N != 2:
            raise SimulationError("SSEC simulation is qubit-only (N = 2)")
        structure = analyze(lattice)
        gens = structure.bare_basis.generators
        bx = np.array([g.x % 2 for g in gens], dtype=np.int64).reshape(len(gens), lattice.n)
        bz = np.array([g.z % 2 for g in gens], dtype=np.int64).reshape(len(gens), lattice.n)
        decs = {s: SectorDecoder(lattice, s, mode) for s in SECTORS}
        return cls(lattice, decs, bx, bz, structure)

    def action(self, ex: np.ndarray, ez: np.ndarray) -> np.ndarray:
        return (self.bare_z @ ex.astype(np.int64) + self.bare_x @ ez.astype(np.int64)) % 2


def noisy_step(backend, colors: str, q: float, flip_rng, gauge_rng, rnd: int = 0) -> StepRecord:
    """Measure every check of ``colors`` and flip each reported bit with probability ``q``.

    Errors are injected by the caller once per round, before the first step.
    """
    idxs, trues = [], []
    for color in colors:
        i, t = backend.measure(color, gauge_rng)
        idxs.append(i)
        trues.append(t)
    idx = np.concatenate(idxs)
    true = np.concatenate(trues).astype(np.int64)
    flips = (flip_rng.random(idx.size) < q).astype(np.int64) if q > 0 else np.zeros(idx.size, np.int64)
    return StepRecord(rnd, colors, idx, true ^ flips, true, flips)


def _decode_sector(ctx: SSECContext, backend, history: SyndromeHistory, sector: str, rnd: int,
                   record: bool):
    dec = ctx.decoders[sector]
    bits = history.latest(dec.checks, rnd)
    if record:
        res = dec.decode(bits)
        mask = np.zeros(ctx.lattice.n, dtype=np.uint8)
        mask[res.correction_qubits] = 1
        info = {"round": rnd, "sector": sector, "charges": res.charges,
                "pairs": res.charge_pairs, "correction": res.correction_qubits}
    else:
        mask = dec.decode_mask(bits)
        info = None
    if mask.any():
        zero = np.zeros_like(mask)
        if SECTORS[sector]["correction"] == "X":
            backend.apply(mask, zero)
        else:
            backend.apply(zero, mask)
    return info


def run_protocol(lattice: CodeLattice, sequence, rounds: int, noise: NoiseModel, seed: int,
                 trial: int = 0, backend: str = "frame", context: SSECContext | None = None,
                 record: bool = False, seed_gauge: str = "RY") -> TrialResult:
    """One memory experiment: ``rounds`` noisy rounds then a perfect round."""
    seq = get_sequence(sequence)
    ctx = context or SSECContext.build(lattice)
    err_rng, flip_rng, gauge_rng = trial_rngs(seed, trial)
    if backend == "frame":
        state = FrameSimulator(lattice)
    elif backend == "tableau":
        state = _TableauBackend(lattice, seed_gauge, ctx.structure)
    else:
        raise SimulationError(f"unknown backend {backend!r}")
    history = SyndromeHistory()
    decisions = []
    n = lattice.n
    for rnd in range(rounds + 1):
        final = rnd == rounds
        if not final and (noise.pX > 0 or noise.pZ > 0):
            ex = (err_rng.random(n) < noise.pX).astype(np.uint8)
            ez = (err_rng.random(n) < noise.pZ).astype(np.uint8)
            if ex.any() or ez.any():
                state.apply(ex, ez)
        q = 0.0 if final else noise.q
        for k, colors in enumerate(seq.steps):
            history.steps.append(noisy_step(state, colors, q, flip_rng, gauge_rng, rnd))
            for sector, at in seq.decode_after.items():
                if at == k:
                    info = _decode_sector(ctx, state, history, sector, rnd, record)
                    if info is not None:
                        decisions.append(info)
        if not record:
            history.steps.clear()
    action = ctx.action(state.ex, state.ez)
    frame = (state.ex.copy(), state.ez.copy()) if record else None
    return TrialResult(rounds, decisions, action, bool(action.any()), history if record else None, frame)


# --------------------------------------------------------------------------
# batches


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    ph = k / n
    den = 1 + z * z / n
    mid = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


def _chunk(args):
    spec, seq, rounds, noise, seed, lo, hi, backend, mode = args
    lat = build_code_lattice(spec)
    ctx = SSECContext.build(lat, mode)
    fails = 0
    for t in range(lo, hi):
        fails += run_protocol(lat, seq, rounds, noise, seed, t, backend, ctx).failed
    return fails


def run_trials(spec: LatticeSpec, sequence, rounds: int, noise: NoiseModel, trials: int, seed: int,
               backend: str = "frame", threads: int = 1, mode: str = "exact") -> dict:
    """Failure count over ``trials`` independent trials (order-independent aggregate)."""
    seq = get_sequence(sequence)
    threads = max(1, int(threads))
    size = max(1, math.ceil(trials / (threads * 4)))
    chunks = [(spec, seq, rounds, noise, seed, lo, min(trials, lo + size), backend, mode)
              for lo in range(0, trials, size)]
    if threads == 1 or len(chunks) <= 1:
        fails = sum(_chunk(c) for c in chunks)
    else:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            fails = sum(ex.map(_chunk, chunks))
    lo, hi = wilson_interval(fails, trials)
    return {"dims": "x".join(map(str, spec.dims)), "boundary": spec.boundary.value,
            "sequence": seq.name, "p": noise.p, "q": noise.q, "rounds": rounds,
            "trials": trials, "failures": int(fails),
            "rate": fails / trials if trials else 0.0, "wilson_lo": lo, "wilson_hi": hi}
