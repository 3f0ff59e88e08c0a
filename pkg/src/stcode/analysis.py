"""Gauge/stabilizer structure, logical counts and logical operators of a lattice."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import CodeLattice, LatticeError
from .pauli import (
    PauliError,
    PauliWord,
    SymplecticBasis,
    _is_prime,
    _nullspace_gfp,
    centralizer,
    commutation_exponent,
    commutation_matrix,
    compose,
    inverse,
    power,
    product,
    quotient_representatives,
    row_reduce,
    span_intersection,
    to_text,
)


class AnalysisError(ValueError):
    pass


@dataclass
class CodeStructure:
    """Group data of a subsystem code.

    ``stabilizer_group`` is the center of the gauge group, which is the group
    the bare logicals are taken modulo; ``cube_group`` is the span of the
    per-cell stabilizers (the two coincide on open-z lattices but not on the
    3-torus).
    """

    n: int
    N: int
    gauge_group: SymplecticBasis
    stabilizer_group: SymplecticBasis
    cube_group: SymplecticBasis
    gauge_centralizer: SymplecticBasis
    bare_basis: SymplecticBasis
    dressed_basis: SymplecticBasis
    k: int

    def bare_pairs(self) -> list[tuple[PauliWord, PauliWord]]:
        g = self.bare_basis.generators
        return [(g[2 * i], g[2 * i + 1]) for i in range(self.k)]


# --------------------------------------------------------------------------
# helpers


def _combine(words: list[PauliWord], coeffs, n: int, N: int) -> PauliWord:
    """Product of words[i]^coeffs[i], phase discarded."""
    x = np.zeros(n, np.int64)
    z = np.zeros(n, np.int64)
    for w, c in zip(words, coeffs):
        c = int(c) % N
        if c:
            x += c * w.x
            z += c * w.z
    return PauliWord(x, z, N)


def _inv_mod(M: np.ndarray, p: int) -> np.ndarray:
    """Inverse of a square matrix over GF(p)."""
    M = np.array(M, dtype=np.int64) % p
    k = M.shape[0]
    A = np.concatenate([M, np.eye(k, dtype=np.int64)], axis=1)
    for c in range(k):
        piv = next((r for r in range(c, k) if A[r, c] % p), None)
        if piv is None:
            raise AnalysisError("matrix is singular")
        A[[c, piv]] = A[[piv, c]]
        A[c] = (A[c] * pow(int(A[c, c]), p - 2, p)) % p
        for r in range(k):
            if r != c and A[r, c]:
                A[r] = (A[r] - A[r, c] * A[c]) % p
    return A[:, k:]


def symplectic_pairs(words: list[PauliWord], N: int) -> list[PauliWord]:
    """Symplectic Gram-Schmidt: returns [a1, b1, a2, b2, ...] with c(a_i, b_j) = delta_ij.

    Inputs are assumed independent modulo a group that commutes with all of
    them; any element commuting with every remaining element is an error.
    """
    pool = list(words)
    out: list[PauliWord] = []
    while pool:
        a = pool.pop(0)
        j = next((j for j, w in enumerate(pool) if commutation_exponent(a, w) % N), None)
        if j is None:
            raise AnalysisError("representative commutes with all others; not a logical")
        b = pool.pop(j)
        c = commutation_exponent(a, b) % N
        b = power(b, pow(c, N - 2, N)) if N > 2 else b
        rest = []
        for w in pool:
            ca = commutation_exponent(w, a) % N
            cb = commutation_exponent(w, b) % N
            # w' = w a^alpha b^beta with c(w', a) = c(w', b) = 0
            w2 = compose(compose(w, power(a, (-cb) % N)), power(b, ca))
            rest.append(PauliWord(w2.x, w2.z, N))
        pool = rest
        out.extend([PauliWord(a.x, a.z, N), PauliWord(b.x, b.z, N)])
    return out


def _require_prime(N: int):
    if not _is_prime(N):
        raise PauliError(f"composite dimension N={N} is not supported")


# --------------------------------------------------------------------------
# main analysis


def analyze(lattice: CodeLattice) -> CodeStructure:
    """Gauge group, its center, bare and dressed logical bases and k."""
    _require_prime(lattice.N)
    n, N = lattice.n, lattice.N
    G = row_reduce(lattice.words(), n, N)
    ZG = centralizer(G)
    center = span_intersection(G, ZG)
    center.kind = "group basis"
    cubes = row_reduce([s for s in lattice.stabilizers if not s.is_identity()], n, N)
    bare = quotient_representatives(ZG, center)
    k2 = bare.rank
    if k2 % 2:
        raise AnalysisError("odd number of bare representatives")
    paired = symplectic_pairs(bare.generators, N) if k2 else []
    bare_basis = SymplecticBasis(paired, n, N, "quotient representatives")
    ZS = centralizer(center)
    dressed = quotient_representatives(ZS, G)
    if dressed.rank != k2:
        raise AnalysisError("bare and dressed logical counts disagree")
    return CodeStructure(n, N, G, center, cubes, ZG, bare_basis, dressed, k2 // 2)


def analyze_subspace_limit(lattice: CodeLattice, keep: str) -> CodeStructure:
    """Treat Z checks + X cubes (or X checks + Z cubes) as a stabilizer group."""
    if lattice.spec is None or not lattice.spec.boundary.periodic:
        raise LatticeError("subspace limits are defined on the 3-torus")
    _require_prime(lattice.N)
    key = keep.replace(" ", "").lower()
    cubes = {c.index: s for c, s in zip(lattice.cells, lattice.stabilizers)}
    if key in ("zchecks+xcubes", "z"):
        words = [c.word for c in lattice.checks if c.kind == "Z"]
        words += [cubes[c.index] for c in lattice.cells_of_kind("X")]
    elif key in ("xchecks+zcubes", "x"):
        words = [c.word for c in lattice.checks if c.kind == "X"]
        words += [cubes[c.index] for c in lattice.cells_of_kind("Z")]
    else:
        raise AnalysisError(f"unknown subspace limit {keep!r}")
    if np.any(commutation_matrix(words, words)):
        raise AnalysisError("kept operators do not commute")
    n, N = lattice.n, lattice.N
    S = row_reduce(words, n, N)
    ZS = centralizer(S)
    bare = quotient_representatives(ZS, S)
    paired = symplectic_pairs(bare.generators, N) if bare.rank else []
    basis = SymplecticBasis(paired, n, N, "quotient representatives")
    return CodeStructure(n, N, S, S, S, ZS, basis, basis, n - S.rank)


def verify_identity(lhs: list[PauliWord], rhs: list[PauliWord],
                    modulo: SymplecticBasis | None = None) -> bool:
    """True iff prod(lhs) * prod(rhs)^-1 is trivial modulo ``modulo`` (phases ignored)."""
    ref = (lhs or rhs)[0]
    n, N = ref.n, ref.N
    diff = compose(product(lhs, n=n, N=N), inverse(product(rhs, n=n, N=N)))
    if modulo is None:
        return diff.is_identity()
    return modulo.contains(diff)


def identity_phase(lhs: list[PauliWord], rhs: list[PauliWord]) -> int:
    """Phase exponent (units of pi/N) of prod(lhs) * prod(rhs)^-1 when it is trivial."""
    ref = (lhs or rhs)[0]
    diff = compose(product(lhs, n=ref.n, N=ref.N), inverse(product(rhs, n=ref.n, N=ref.N)))
    return diff.phase


def logical_action(op: PauliWord, structure: CodeStructure) -> np.ndarray:
    """Commutation exponents of ``op`` with each bare-basis generator."""
    stabs = structure.stabilizer_group.generators
    if stabs and np.any(commutation_matrix([op], stabs)):
        raise AnalysisError("operator does not commute with the stabilizer group")
    gens = structure.bare_basis.generators
    if not gens:
        return np.zeros(0, dtype=np.int64)
    return commutation_matrix([op], gens)[0]


# --------------------------------------------------------------------------
# constructive logical representatives


def _centralizer_combinations(lattice: CodeLattice, words: list[PauliWord]) -> list[PauliWord]:
    """Products of ``words`` that commute with every check."""
    n, N = lattice.n, lattice.N
    if not words:
        return []
    A = commutation_matrix(words, lattice.words())  # |W| x checks
    null = _nullspace_gfp(A.T, N)
    return [_combine(words, c, n, N) for c in null]


def _boundary_singles(lattice: CodeLattice, plane: str, kind: str) -> list[PauliWord]:
    qs = lattice.boundary_layers[plane]
    return [PauliWord.single(lattice.n, q, kind, lattice.N) for q in qs]


def constructed_logicals(lattice: CodeLattice, structure: CodeStructure | None = None) -> dict:
    """Bare logicals built from boundary strings and check membranes.

    Each family spans the logicals reachable that way (one conjugate pair on
    OpenZ_KV).  ``by``: X on lower-plane qubits times Y checks (conjugates: Z on
    lower-plane qubits times B checks).  ``gr``: X on upper-plane qubits times
    R checks (conjugates: Z on upper-plane qubits times G checks).  Both sets
    are normalized so that ``c(X_i, Z_j) = delta_ij`` against the BY
    conjugates, which makes ``by["X"][i]`` and ``gr["X"][i]`` the same logical.
    """
    if lattice.spec is None or lattice.spec.boundary.periodic:
        raise LatticeError("boundary-string logicals need an open-z lattice")
    structure = structure or analyze(lattice)
    G = structure.gauge_group
    N = lattice.N

    def reps(plane, kind, color):
        cands = _centralizer_combinations(
            lattice, _boundary_singles(lattice, plane, kind) + lattice.words(color))
        basis = row_reduce(cands, lattice.n, N) if cands else SymplecticBasis([], lattice.n, N)
        return quotient_representatives(basis, G, reduce=False).generators

    by_x = reps("lower", "X", "Y")
    by_z = reps("lower", "Z", "B")
    gr_x = reps("upper", "X", "R")
    gr_z = reps("upper", "Z", "G")
    k = len(by_x)
    if not (len(by_z) == len(gr_x) == len(gr_z) == k):
        raise AnalysisError("boundary logical families have different sizes")
    if k == 0:
        return {"by": {"X": [], "Z": []}, "gr": {"X": [], "Z": []}}
    C = commutation_matrix(by_x, by_z) % N
    T = _inv_mod(C, N)  # by_x . (by_z T) = identity
    by_z = [_combine(by_z, T[:, j], lattice.n, N) for j in range(k)]

    def matched(words, against):
        A = commutation_matrix(words, against) % N
        M = _inv_mod(A, N)  # M @ A = identity
        return [_combine(words, M[i], lattice.n, N) for i in range(k)]

    gr_x = matched(gr_x, by_z)
    by_x_norm = matched(by_x, by_z)
    gr_z = matched(gr_z, by_x_norm)
    return {"by": {"X": by_x_norm, "Z": by_z}, "gr": {"X": gr_x, "Z": gr_z}}


def plane_operator(lattice: CodeLattice, z_plane: int, kind: str = "X") -> PauliWord:
    """X (or Z) on every in-plane qubit at height ``z_plane`` (vertex units)."""
    zc = 2 * z_plane
    if lattice.spec.boundary.periodic:
        zc %= 2 * lattice.spec.dims[2]
    qs = [i for i, c in enumerate(lattice.qubit_coords)
          if c[2] == zc and (c[0] % 2 or c[1] % 2)]
    vec = {q: 1 for q in qs}
    if kind == "X":
        return PauliWord.from_sparse(lattice.n, xs=vec, N=lattice.N)
    return PauliWord.from_sparse(lattice.n, zs=vec, N=lattice.N)


def cubes_between(lattice: CodeLattice, z_lo: int, z_hi: int, kind: str = "X") -> list[PauliWord]:
    """Stabilizers of ``kind`` cells in layers z_lo <= z < z_hi."""
    return [s for c, s in zip(lattice.cells, lattice.stabilizers)
            if c.kind == kind and z_lo <= c.origin[2] < z_hi]


def membrane_identity(lattice: CodeLattice, z_plane: int, kind: str = "X") -> bool:
    """Plane membrane equals the product of cube stabilizers below it.

    On an open-z lattice the membrane is a single plane and the product runs
    over all layers below it.  On the 3-torus there is no "below", so the
    membrane is the pair of planes bounding the slab ``0 <= z < z_plane`` and
    the product runs over the cubes of that slab.
    """
    if lattice.spec.boundary.periodic:
        lhs = [plane_operator(lattice, 0, kind), plane_operator(lattice, z_plane, kind)]
    else:
        lhs = [plane_operator(lattice, z_plane, kind)]
    rhs = cubes_between(lattice, 0, z_plane, kind)
    return verify_identity(lhs, rhs, None)


# --------------------------------------------------------------------------
# boundary operator identities


def syndrome_of(lattice: CodeLattice, op: PauliWord) -> dict:
    """Checks and stabilizers that fail to commute with ``op``."""
    chk = commutation_matrix([op], lattice.words())[0]
    st = commutation_matrix([op], lattice.stabilizers)[0]
    return {
        "checks": [int(i) for i in np.flatnonzero(chk)],
        "colors": sorted(lattice.checks[int(i)].color for i in np.flatnonzero(chk)),
        "stabilizers": [int(i) for i in np.flatnonzero(st)],
    }


def _lower_dressed_loops(lattice: CodeLattice, structure: CodeStructure) -> list[PauliWord]:
    """X operators on lower-plane qubits that commute with all stabilizers but lie outside G."""
    singles = _boundary_singles(lattice, "lower", "X")
    stabs = structure.stabilizer_group.generators
    A = commutation_matrix(singles, stabs)
    null = _nullspace_gfp(A.T, lattice.N)
    cands = [_combine(singles, c, lattice.n, lattice.N) for c in null]
    return quotient_representatives(row_reduce(cands, lattice.n, lattice.N),
                                    structure.gauge_group, reduce=False).generators


def boundary_flux_detector(lattice: CodeLattice) -> list[PauliWord]:
    """Products of B and G checks supported only on the two boundary planes."""
    bg = row_reduce(lattice.words("B", "G"), lattice.n, lattice.N)
    planes = lattice.boundary_planes["lower"] + lattice.boundary_planes["upper"]
    singles = row_reduce([PauliWord.single(lattice.n, q, "Z", lattice.N) for q in planes],
                         lattice.n, lattice.N)
    inter = span_intersection(bg, singles)
    cubes = row_reduce([s for s in lattice.stabilizers if not s.is_identity()], lattice.n, lattice.N)
    return quotient_representatives(inter, cubes).generators


def identity_suite(lattice: CodeLattice, structure: CodeStructure | None = None) -> dict[str, bool]:
    """Excitation and operator identities of an OpenZ_KV lattice.

    Every fixture is generated from the lattice itself (qubit and check
    indices), never from hand-typed coordinates.
    """
    if lattice.spec is None or lattice.spec.boundary.value != "OpenZ_KV":
        raise LatticeError("the identity suite is defined for OpenZ_KV lattices")
    structure = structure or analyze(lattice)
    n = lattice.n
    out: dict[str, bool] = {}
    Lz = lattice.spec.dims[2]

    # bulk single X: 2 B + 2 G checks and the two Z cubes sharing the edge
    mid = 2 * (Lz // 2) + 1
    bulk = next(i for i, c in enumerate(lattice.qubit_coords) if c[2] == mid)
    syn = syndrome_of(lattice, PauliWord.single(n, bulk, "X"))
    z_cells = [c.index for c in lattice.cells_of_kind("Z")]
    out["bulk_X_syndrome"] = (syn["colors"] == ["B", "B", "G", "G"]
                              and len(syn["stabilizers"]) == 2
                              and all(s in z_cells for s in syn["stabilizers"]))

    # bulk R / Y check: hexagon of six B (resp. G) checks, no stabilizer
    def hexagon_ok(color, partner):
        # a check whose whole neighbourhood is unmodified bulk
        for ch in lattice.checks_of_color(color):
            if ch.shape != "corner":
                continue
            s = syndrome_of(lattice, ch.word)
            if any(lattice.checks[i].shape != "corner" for i in s["checks"]):
                continue
            return s["colors"] == [partner] * 6 and not s["stabilizers"]
        return False

    out["R_check_hexagon"] = hexagon_ok("R", "B")
    out["Y_check_hexagon"] = hexagon_ok("Y", "G")

    # lower 2-qubit R check: open blue flux ending on a boundary B check
    lower = set(lattice.boundary_planes["lower"])
    two_r = next(ch for ch in lattice.checks_of_color("R")
                 if ch.shape == "shared" and lower.intersection(int(q) for q in ch.word.support))
    s = syndrome_of(lattice, two_r.word)
    hit = [lattice.checks[i] for i in s["checks"]]
    out["lower_R2_open_blue_flux"] = (not s["stabilizers"] and all(c.color == "B" for c in hit)
                                      and any(c.shape == "product" or c.weight == 4 for c in hit))

    # single X on a lower boundary qubit: two e charges, green flux, blue boundary fluxes
    q = lattice.boundary_planes["lower"][0]
    s = syndrome_of(lattice, PauliWord.single(n, q, "X"))
    hit = [lattice.checks[i] for i in s["checks"]]
    out["lower_X_charges"] = (len(s["stabilizers"]) == 2
                              and {c.color for c in hit} == {"B", "G"}
                              and any(c.color == "B" and c.weight == 4 for c in hit))

    # dressed loop on the lower plane, its equality with the bare logical, and P_BG(S)
    loops = _lower_dressed_loops(lattice, structure)
    out["dressed_loops_count"] = len(loops) == structure.k
    if structure.k:
        cons = constructed_logicals(lattice, structure)
        span_ok = True
        for loop in loops:
            # each dressed loop matches a bare logical with the same action modulo G
            act = commutation_matrix([loop], cons["by"]["Z"])[0] % lattice.N
            bare = _combine(cons["by"]["X"], act, n, lattice.N)
            span_ok &= verify_identity([loop], [bare], structure.gauge_group)
        out["dressed_equals_bare_mod_G"] = bool(span_ok)
        detectors = boundary_flux_detector(lattice)
        out["P_BG_detects_flux"] = any(
            commutation_exponent(p, loop) % lattice.N == 1 for p in detectors for loop in loops)
        out["P_BG_boundary_only"] = bool(detectors) and all(
            set(int(i) for i in p.support) <= set(lattice.boundary_planes["lower"]
                                                  + lattice.boundary_planes["upper"])
            for p in detectors)
    # a string of X through the bulk along z hits stabilizers
    x0, y0 = 1, 0
    zs = [i for i, c in enumerate(lattice.qubit_coords) if c[0] == 2 * x0 and c[1] == 2 * y0 and c[2] % 2]
    zstring = PauliWord.from_sparse(n, xs={i: 1 for i in zs})
    out["z_string_not_dressed"] = bool(zs) and bool(syndrome_of(lattice, zstring)["stabilizers"])
    return out


# --------------------------------------------------------------------------
# report


def code_info(lattice: CodeLattice, structure: CodeStructure | None = None) -> dict:
    structure = structure or analyze(lattice)
    colors = {c: len(lattice.checks_of_color(c)) for c in ("B", "G", "R", "Y")}
    info = {
        "dims": list(lattice.spec.dims) if lattice.spec else None,
        "boundary": lattice.spec.boundary.value if lattice.spec else None,
        "N": lattice.N,
        "qubits": lattice.n,
        "cells": len(lattice.cells),
        "checks": len(lattice.checks),
        "checks_by_color": colors,
        "stabilizers": sum(1 for s in lattice.stabilizers if not s.is_identity()),
        "gauge_rank": structure.gauge_group.rank,
        "center_rank": structure.stabilizer_group.rank,
        "cube_rank": structure.cube_group.rank,
        "k": structure.k,
        "bare_logicals": [to_text(w) for w in structure.bare_basis.generators],
        "dressed_logicals": [to_text(w) for w in structure.dressed_basis.generators],
    }
    return info


def zn_verify(N: int, L: int) -> dict:
    """Commutation suite of the Z_N code on the (L, L, L) torus.

    Checks that stabilizers commute, checks commute with stabilizers, and every
    X check has the alternating w^{-1}, w^{+1} pattern against the six Z checks
    of its hexagon (both BR and GY pairings).  For N = 2 the qudit edge rule is
    also compared with the qubit builder check by check.
    """
    from .dual import dual_diamond_map, hexagon_phase_pattern, pattern_alternates
    from .lattice import LatticeSpec, build_code_lattice, commutation_report

    spec = LatticeSpec((L, L, L), "Periodic3Torus", N)
    lat = build_code_lattice(spec)
    rep = commutation_report(lat)
    out = {"N": N, "L": L, "qudits": lat.n, "checks": len(lat.checks)}
    out.update({k: bool(v) for k, v in rep.items()})
    for subset in ("BR", "GY"):
        dual = dual_diamond_map(lat, subset)
        pats = hexagon_phase_pattern(lat, dual)
        out[f"hexagons_{subset}"] = len(pats)
        out[f"alternating_{subset}"] = all(pattern_alternates(p, N) for p in pats)
    if N == 2:
        rule = build_code_lattice(spec, qudit_rule=True)
        out["n2_reduction_matches"] = len(rule.checks) == len(lat.checks) and all(
            a.color == b.color and a.word.same_operator(b.word) for a, b in zip(rule.checks, lat.checks))
    keys = [k for k, v in out.items() if isinstance(v, bool)]
    out["all commutation identities hold"] = all(out[k] for k in keys)
    return out
