"""Generalized Pauli operators on N-level qudits and symplectic linear algebra.

A :class:`PauliWord` is stored as ``xi^phase * prod_i X_i^x[i] Z_i^z[i]`` where
``xi = exp(i*pi/N)`` (so ``omega = xi**2``).  Keeping the phase in half-units of
omega makes Hermitian bookkeeping exact for even N; for odd N the phase is
always even.

Group computations (rank, centralizer, quotients) ignore phases.  For N = 2
vectors are packed into Python integers and eliminated with word-parallel XOR;
for odd prime N a dense numpy path is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SUPPORTED_PRIMES = (2, 3, 5, 7, 11, 13)


class PauliError(ValueError):
    """Raised on mismatched or unsupported Pauli operations."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, int(n**0.5) + 1))


class PauliWord:
    """Generalized Pauli operator ``xi^phase X^x Z^z`` on ``n`` qudits of dimension ``N``."""

    __slots__ = ("n", "N", "x", "z", "phase", "_hash")

    def __init__(self, x, z, N: int = 2, phase: int = 0):
        x = np.asarray(x, dtype=np.int64) % N
        z = np.asarray(z, dtype=np.int64) % N
        if x.shape != z.shape or x.ndim != 1:
            raise PauliError("x and z exponent vectors must be 1-d and equal length")
        self.n = int(x.shape[0])
        self.N = int(N)
        self.x = x
        self.z = z
        self.x.setflags(write=False)
        self.z.setflags(write=False)
        self.phase = int(phase) % (2 * N)
        self._hash = None

    # construction helpers
    @classmethod
    def identity(cls, n: int, N: int = 2) -> "PauliWord":
        return cls(np.zeros(n, np.int64), np.zeros(n, np.int64), N)

    @classmethod
    def from_sparse(cls, n: int, xs: dict | None = None, zs: dict | None = None,
                    N: int = 2, phase: int = 0) -> "PauliWord":
        x = np.zeros(n, np.int64)
        z = np.zeros(n, np.int64)
        for q, e in (xs or {}).items():
            x[q] += e
        for q, e in (zs or {}).items():
            z[q] += e
        return cls(x, z, N, phase)

    @classmethod
    def single(cls, n: int, q: int, kind: str, N: int = 2, power: int = 1) -> "PauliWord":
        if kind == "X":
            return cls.from_sparse(n, xs={q: power}, N=N)
        if kind == "Z":
            return cls.from_sparse(n, zs={q: power}, N=N)
        raise PauliError(f"unknown single-qudit Pauli {kind!r}")

    # basic properties
    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero((self.x != 0) | (self.z != 0))

    @property
    def weight(self) -> int:
        return int(np.count_nonzero((self.x != 0) | (self.z != 0)))

    def is_identity(self, ignore_phase: bool = True) -> bool:
        trivial = not (self.x.any() or self.z.any())
        return trivial if ignore_phase else trivial and self.phase == 0

    def is_x_type(self) -> bool:
        return not self.z.any()

    def is_z_type(self) -> bool:
        return not self.x.any()

    def same_operator(self, other: "PauliWord") -> bool:
        """Equality modulo phase."""
        _check_compatible(self, other)
        return bool(np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z))

    def __eq__(self, other):
        if not isinstance(other, PauliWord):
            return NotImplemented
        return (self.N == other.N and self.n == other.n and self.phase == other.phase
                and np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z))

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.N, self.phase, self.x.tobytes(), self.z.tobytes()))
        return self._hash

    def __mul__(self, other: "PauliWord") -> "PauliWord":
        return compose(self, other)

    def __repr__(self):
        return f"PauliWord({to_text(self)!r}, n={self.n}, N={self.N})"

    def restricted(self, qubits: Sequence[int]) -> "PauliWord":
        """Operator on the listed qudits only (phase dropped)."""
        idx = np.asarray(qubits, dtype=np.int64)
        return PauliWord(self.x[idx], self.z[idx], self.N)

    def embedded(self, n: int, mapping: Sequence[int]) -> "PauliWord":
        """Place this operator into an ``n``-qudit register, qudit i -> mapping[i]."""
        x = np.zeros(n, np.int64)
        z = np.zeros(n, np.int64)
        idx = np.asarray(mapping, dtype=np.int64)
        np.add.at(x, idx, self.x)
        np.add.at(z, idx, self.z)
        return PauliWord(x, z, self.N, self.phase)

    def symplectic(self) -> np.ndarray:
        return np.concatenate([self.x, self.z])


def _check_compatible(a: PauliWord, b: PauliWord) -> None:
    if a.n != b.n:
        raise PauliError(f"qudit count mismatch: {a.n} vs {b.n}")
    if a.N != b.N:
        raise PauliError(f"local dimension mismatch: {a.N} vs {b.N}")


def commutation_exponent(a: PauliWord, b: PauliWord) -> int:
    """Return c (mod N) with ``a b = omega^c b a``.

    From ``X^p Z^q = omega^(-pq) Z^q X^p`` one gets
    ``c = sum_i (a.z_i b.x_i - a.x_i b.z_i)``; e.g. ``X Z^2 = omega^(-2) Z^2 X``.
    """
    _check_compatible(a, b)
    c = int(np.dot(a.z, b.x) - np.dot(a.x, b.z))
    return c % a.N


def commutes(a: PauliWord, b: PauliWord) -> bool:
    return commutation_exponent(a, b) == 0


def compose(a: PauliWord, b: PauliWord) -> PauliWord:
    """Operator product ``a * b`` with exact phase."""
    _check_compatible(a, b)
    # Z^p X^q = omega^(pq) X^q Z^p moves b's X past a's Z.
    extra = 2 * int(np.dot(a.z, b.x))
    return PauliWord(a.x + b.x, a.z + b.z, a.N, a.phase + b.phase + extra)


def inverse(a: PauliWord) -> PauliWord:
    extra = 2 * int(np.dot(a.x, a.z))
    return PauliWord(-a.x, -a.z, a.N, -a.phase + extra)


def power(a: PauliWord, k: int) -> PauliWord:
    k %= a.N
    out = PauliWord.identity(a.n, a.N)
    for _ in range(k):
        out = compose(out, a)
    return out


def product(words: Iterable[PauliWord], n: int | None = None, N: int | None = None) -> PauliWord:
    words = list(words)
    if not words:
        if n is None or N is None:
            raise PauliError("empty product needs n and N")
        return PauliWord.identity(n, N)
    out = words[0]
    for w in words[1:]:
        out = compose(out, w)
    return out


def commutation_matrix(rows: Sequence[PauliWord], cols: Sequence[PauliWord]) -> np.ndarray:
    """Matrix of commutation exponents, entry [i, j] = c(rows[i], cols[j])."""
    if not rows or not cols:
        return np.zeros((len(rows), len(cols)), dtype=np.int64)
    N = rows[0].N
    rx = np.stack([r.x for r in rows])
    rz = np.stack([r.z for r in rows])
    cx = np.stack([c.x for c in cols])
    cz = np.stack([c.z for c in cols])
    return (rz @ cx.T - rx @ cz.T) % N


# ----------------------------------------------------------------------------
# text form
# ----------------------------------------------------------------------------

def to_text(p: PauliWord) -> str:
    """``w^k X[i:e,...] Z[j:f,...]`` with ``k`` counted in units of omega (may be half-integer)."""
    xs = ",".join(f"{i}:{int(p.x[i])}" for i in np.flatnonzero(p.x))
    zs = ",".join(f"{i}:{int(p.z[i])}" for i in np.flatnonzero(p.z))
    k = p.phase / 2
    k_txt = str(int(k)) if p.phase % 2 == 0 else f"{k:g}"
    return f"ω^{k_txt} X[{xs}] Z[{zs}]"


def from_text(text: str, n: int, N: int = 2) -> PauliWord:
    text = text.strip()
    try:
        head, rest = text.split(" ", 1)
        if not head.startswith(("ω^", "w^")):
            raise ValueError
        k = float(head.split("^", 1)[1])
        xpart, zpart = rest.split("] ")
        xs = _parse_sparse(xpart.strip()[2:])
        zs = _parse_sparse(zpart.strip()[2:].rstrip("]"))
    except ValueError as exc:
        raise PauliError(f"cannot parse Pauli text {text!r}") from exc
    return PauliWord.from_sparse(n, xs, zs, N=N, phase=int(round(2 * k)))


def _parse_sparse(body: str) -> dict:
    body = body.strip().rstrip("]")
    if not body:
        return {}
    out = {}
    for item in body.split(","):
        q, e = item.split(":")
        out[int(q)] = int(e)
    return out


# ----------------------------------------------------------------------------
# linear algebra over Z_N (N prime), phases ignored
# ----------------------------------------------------------------------------

def _require_prime(N: int) -> None:
    if not _is_prime(N):
        raise PauliError(f"linear algebra needs prime N, got {N}")


def _to_int(p: PauliWord) -> int:
    bits = np.concatenate([p.x, p.z]).astype(bool)
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def _from_int(v: int, n: int) -> PauliWord:
    raw = np.frombuffer(v.to_bytes((2 * n + 7) // 8, "little"), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")[: 2 * n].astype(np.int64)
    return PauliWord(bits[:n], bits[n:], 2)


class _GF2Echelon:
    """Incremental echelon form over GF(2) with rows packed into Python ints."""

    def __init__(self):
        self.rows: dict[int, int] = {}  # pivot bit -> row

    def reduce(self, v: int) -> int:
        rows = self.rows
        while v:
            top = v.bit_length() - 1
            r = rows.get(top)
            if r is None:
                return v
            v ^= r
        return 0

    def add(self, v: int) -> bool:
        v = self.reduce(v)
        if not v:
            return False
        self.rows[v.bit_length() - 1] = v
        return True

    @property
    def rank(self) -> int:
        return len(self.rows)

    def copy(self) -> "_GF2Echelon":
        e = _GF2Echelon()
        e.rows = dict(self.rows)
        return e


class _GFpEchelon:
    """Incremental echelon form over GF(p) with dense numpy rows."""

    def __init__(self, p: int, width: int):
        self.p = p
        self.width = width
        self.rows: dict[int, np.ndarray] = {}  # pivot col -> row normalized to 1 at pivot
        self._inv = [0] + [pow(a, p - 2, p) for a in range(1, p)]

    def reduce(self, v: np.ndarray) -> np.ndarray:
        v = np.array(v, dtype=np.int64) % self.p
        # scan in increasing column order; pivots eliminate their column
        col = 0
        while True:
            nz = np.flatnonzero(v[col:])
            if nz.size == 0:
                return v
            col += int(nz[0])
            r = self.rows.get(col)
            if r is None:
                col += 1
                continue
            v = (v - v[col] * r) % self.p
            col += 1

    def add(self, v: np.ndarray) -> bool:
        v = self.reduce(v)
        nz = np.flatnonzero(v)
        if nz.size == 0:
            return False
        c = int(nz[0])
        v = (v * self._inv[int(v[c])]) % self.p
        self.rows[c] = v
        return True

    @property
    def rank(self) -> int:
        return len(self.rows)

    def copy(self) -> "_GFpEchelon":
        e = _GFpEchelon(self.p, self.width)
        e.rows = dict(self.rows)
        return e


def _new_echelon(n: int, N: int):
    return _GF2Echelon() if N == 2 else _GFpEchelon(N, 2 * n)


def _vec(p: PauliWord):
    return _to_int(p) if p.N == 2 else p.symplectic()


def _is_zero(v) -> bool:
    return (v == 0) if isinstance(v, int) else not np.any(v)


@dataclass
class SymplecticBasis:
    """Independent generators of a Pauli group modulo phases."""

    generators: list[PauliWord]
    n: int
    N: int = 2
    kind: str = "group basis"
    _ech: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._ech is None:
            self._ech = _new_echelon(self.n, self.N)
            for g in self.generators:
                self._ech.add(_vec(g))

    @property
    def rank(self) -> int:
        return len(self.generators)

    def __len__(self):
        return self.rank

    def contains(self, word: PauliWord) -> bool:
        """Membership modulo phases."""
        return _is_zero(self._ech.reduce(_vec(word)))

    def reduce(self, word: PauliWord) -> PauliWord:
        """Canonical residual of ``word`` modulo the group (phase dropped)."""
        v = self._ech.reduce(_vec(word))
        if self.N == 2:
            return _from_int(v, self.n)
        return PauliWord(v[: self.n], v[self.n:], self.N)


def row_reduce(words: Sequence[PauliWord], n: int | None = None, N: int | None = None) -> SymplecticBasis:
    """Greedy independent subset of ``words`` (input order), with rank."""
    words = list(words)
    if words:
        n, N = words[0].n, words[0].N
    elif n is None or N is None:
        n = 0 if n is None else n
        N = 2 if N is None else N
    _require_prime(N)
    ech = _new_echelon(n, N)
    gens = [w for w in words if ech.add(_vec(w))]
    return SymplecticBasis(gens, n, N, "group basis", ech)


def _nullspace_gf2(rows: list[int], width: int) -> list[int]:
    """Basis of {v : popcount(r & v) even for all rows}."""
    piv: dict[int, int] = {}
    for r in rows:
        for c, pr in piv.items():
            if (r >> c) & 1:
                r ^= pr
        if not r:
            continue
        c = (r & -r).bit_length() - 1
        for c2 in list(piv):
            if (piv[c2] >> c) & 1:
                piv[c2] ^= r
        piv[c] = r
    out = []
    for f in range(width):
        if f in piv:
            continue
        v = 1 << f
        for c, pr in piv.items():
            if (pr >> f) & 1:
                v |= 1 << c
        out.append(v)
    return out


def _nullspace_gfp(mat: np.ndarray, p: int) -> np.ndarray:
    """Basis (rows) of the right null space of ``mat`` over GF(p)."""
    m = np.array(mat, dtype=np.int64) % p
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        nz = np.flatnonzero(m[r:, c])
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            m[[r, k]] = m[[k, r]]
        m[r] = (m[r] * pow(int(m[r, c]), p - 2, p)) % p
        col = m[:, c].copy()
        col[r] = 0
        m = (m - np.outer(col, m[r])) % p
        pivots.append(c)
        r += 1
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for j, c in enumerate(pivots):
            basis[i, c] = (-m[j, f]) % p
    return basis


def centralizer(group: SymplecticBasis, n: int | None = None) -> SymplecticBasis:
    """All Pauli operators (mod phases) commuting with every generator of ``group``."""
    n = group.n if n is None else n
    N = group.N
    _require_prime(N)
    if N == 2:
        # <g, v> = g_x.v_z + g_z.v_x = swap(g) . v
        swapped = []
        mask = (1 << n) - 1
        for g in group.generators:
            v = _to_int(g)
            swapped.append(((v & mask) << n) | (v >> n))
        gens = [_from_int(v, n) for v in _nullspace_gf2(swapped, 2 * n)]
    else:
        if group.generators:
            # c(g, v) = g.z.v_x - g.x.v_z
            mat = np.stack([np.concatenate([g.z, -g.x]) for g in group.generators])
        else:
            mat = np.zeros((0, 2 * n), dtype=np.int64)
        null = _nullspace_gfp(mat, N)
        gens = [PauliWord(v[:n], v[n:], N) for v in null]
    return SymplecticBasis(gens, n, N, "centralizer basis")


def quotient_representatives(big: SymplecticBasis, small: SymplecticBasis,
                             reduce: bool = True) -> SymplecticBasis:
    """Generators of ``big`` independent modulo ``small``.

    With ``reduce`` each representative is reduced against ``small`` so the
    output depends only on the span of ``small``; this keeps representatives
    inside ``big`` only when ``small`` is a subgroup of ``big``.
    """
    ech = small._ech.copy()
    reps = []
    for g in big.generators:
        if ech.add(_vec(g)):
            reps.append(small.reduce(g) if reduce else g)
    return SymplecticBasis(reps, big.n, big.N, "quotient representatives")


def span_intersection(a: SymplecticBasis, b: SymplecticBasis) -> SymplecticBasis:
    """Basis of span(a) ∩ span(b) (mod phases)."""
    n, N = a.n, a.N
    if not a.generators or not b.generators:
        return SymplecticBasis([], n, N)
    if N == 2:
        # Solve sum alpha_i a_i = sum beta_j b_j via null space of [A; B]^T
        va = [_to_int(g) for g in a.generators]
        vb = [_to_int(g) for g in b.generators]
        cols = va + vb
        width = len(cols)
        rows = []
        for bit in range(2 * n):
            r = 0
            for i, v in enumerate(cols):
                if (v >> bit) & 1:
                    r |= 1 << i
            rows.append(r)
        out = []
        for coeff in _nullspace_gf2(rows, width):
            v = 0
            for i in range(len(va)):
                if (coeff >> i) & 1:
                    v ^= va[i]
            if v:
                out.append(_from_int(v, n))
        return row_reduce(out, n, N)
    A = np.stack([g.symplectic() for g in a.generators])
    B = np.stack([g.symplectic() for g in b.generators])
    M = np.concatenate([A, -B]).T
    null = _nullspace_gfp(M, N)
    out = []
    for coeff in null:
        v = (coeff[: len(A)] @ A) % N
        if v.any():
            out.append(PauliWord(v[:n], v[n:], N))
    return row_reduce(out, n, N)


def solve_combination(target: PauliWord, words: Sequence[PauliWord]) -> np.ndarray | None:
    """Exponents e with prod words[i]^e[i] = target (mod phases), or None."""
    n, N = target.n, target.N
    if not words:
        return np.zeros(0, np.int64) if target.is_identity() else None
    W = np.stack([w.symplectic() for w in words]).T  # 2n x m
    aug = np.concatenate([W, target.symplectic()[:, None]], axis=1)
    # null space of [W | -t] with last coordinate 1
    aug[:, -1] = -aug[:, -1]
    null = _nullspace_gfp(aug, N) if N != 2 else None
    if N == 2:
        m = W.shape[1]
        rows = []
        for bit in range(2 * n):
            r = 0
            for j in range(m + 1):
                if aug[bit, j] % 2:
                    r |= 1 << j
            rows.append(r)
        # some basis vector of the null space has last bit set iff target is in span
        for v in _nullspace_gf2(rows, m + 1):
            if (v >> m) & 1:
                return np.array([(v >> j) & 1 for j in range(m)], dtype=np.int64)
        return None
    for v in null:
        if v[-1] % N:
            s = pow(int(v[-1]), N - 2, N)
            return (v[:-1] * s) % N
    return None
