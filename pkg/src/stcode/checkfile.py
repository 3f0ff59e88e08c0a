"""Plain-text check-definition files.

One operator per line::

    color cell-id[,cell-id...] : q:X^a q:Z^b ...

``color`` is B, G, R or Y for checks and S for a cell stabilizer.  A qubit
carrying both X and Z exponents appears twice.  An optional leading token
``w^k`` records a phase exponent in units of pi/N.  Lines starting with ``#``
form the header::

    # stcode-checks 1
    # dims 2 2 3
    # boundary OpenZ_KV
    # N 2
    # qubits 24
    # qubit <index> <x> <y> <z>          (optional, doubled coordinates)
    # cell <index> <Z|X> <ox> <oy> <oz>  (optional)
    # corner <check> <x> <y> <z> <shape> (optional)
    # free-cells <i> <j> ...             (optional)

Only ``N`` and ``qubits`` are required, so hand-written codes can be loaded
and passed to the analyzer.
"""

from __future__ import annotations

from pathlib import Path

from .lattice import Cell, Check, CodeLattice, LatticeSpec, Z_COLORS
from .pauli import PauliWord

MAGIC = "stcode-checks 1"


class CheckFileError(ValueError):
    pass


def _word_tokens(w: PauliWord) -> list[str]:
    out = []
    if w.phase:
        out.append(f"w^{w.phase}")
    for q in w.support:
        q = int(q)
        if w.x[q]:
            out.append(f"{q}:X^{int(w.x[q])}")
        if w.z[q]:
            out.append(f"{q}:Z^{int(w.z[q])}")
    return out


def export_checks(lattice: CodeLattice) -> str:
    lines = [f"# {MAGIC}"]
    if lattice.spec is not None:
        lines.append("# dims " + " ".join(map(str, lattice.spec.dims)))
        lines.append(f"# boundary {lattice.spec.boundary.value}")
    lines.append(f"# N {lattice.N}")
    lines.append(f"# qubits {lattice.n}")
    for i, c in enumerate(lattice.qubit_coords):
        lines.append(f"# qubit {i} {c[0]} {c[1]} {c[2]}")
    for c in lattice.cells:
        lines.append(f"# cell {c.index} {c.kind} {c.origin[0]} {c.origin[1]} {c.origin[2]}")
    for ch in lattice.checks:
        if ch.corner is not None:
            lines.append(f"# corner {ch.index} {ch.corner[0]} {ch.corner[1]} {ch.corner[2]} {ch.shape}")
        elif ch.shape != "corner":
            lines.append(f"# corner {ch.index} - - - {ch.shape}")
    if lattice.stabilizer_free_cells:
        lines.append("# free-cells " + " ".join(map(str, lattice.stabilizer_free_cells)))
    for ch in lattice.checks:
        lines.append(f"{ch.color} {','.join(map(str, ch.cells))} : " + " ".join(_word_tokens(ch.word)))
    for c, s in zip(lattice.cells, lattice.stabilizers):
        lines.append(f"S {c.index} : " + " ".join(_word_tokens(s)))
    return "\n".join(lines) + "\n"


def _parse_word(tokens: list[str], n: int, N: int, lineno: int) -> PauliWord:
    xs: dict[int, int] = {}
    zs: dict[int, int] = {}
    phase = 0
    for tok in tokens:
        try:
            if tok.startswith(("w^", "ω^")):
                phase = int(tok.split("^", 1)[1])
                continue
            q, op = tok.split(":")
            kind, e = op.split("^") if "^" in op else (op, "1")
            q, e = int(q), int(e)
        except ValueError:
            raise CheckFileError(f"line {lineno}: bad token {tok!r}") from None
        if not 0 <= q < n:
            raise CheckFileError(f"line {lineno}: qubit {q} out of range")
        target = {"X": xs, "Z": zs}.get(kind)
        if target is None:
            raise CheckFileError(f"line {lineno}: unknown Pauli {kind!r}")
        target[q] = (target.get(q, 0) + e) % N
    return PauliWord.from_sparse(n, xs, zs, N=N, phase=phase)


def import_checks(text: str) -> CodeLattice:
    header: dict[str, list[str]] = {}
    qcoords: dict[int, tuple[int, int, int]] = {}
    cell_info: dict[int, tuple[str, tuple[int, int, int]]] = {}
    corners: dict[int, tuple] = {}
    body: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if not parts:
                continue
            key, vals = parts[0], parts[1:]
            if key == "qubit":
                qcoords[int(vals[0])] = tuple(int(v) for v in vals[1:4])
            elif key == "cell":
                cell_info[int(vals[0])] = (vals[1], tuple(int(v) for v in vals[2:5]))
            elif key == "corner":
                c = None if vals[1] == "-" else tuple(int(v) for v in vals[1:4])
                corners[int(vals[0])] = (c, vals[4])
            else:
                header[key] = vals
            continue
        body.append((lineno, line))
    try:
        N = int(header["N"][0])
        n = int(header["qubits"][0])
    except (KeyError, IndexError, ValueError):
        raise CheckFileError("header must give N and qubits") from None

    spec = None
    if "dims" in header and "boundary" in header:
        spec = LatticeSpec(tuple(int(v) for v in header["dims"]), header["boundary"][0], N)

    checks: list[Check] = []
    stabs: dict[int, PauliWord] = {}
    kinds: dict[int, str] = {}
    for lineno, line in body:
        if " : " in line:
            head, ops = line.split(" : ", 1)
        elif line.endswith(" :"):
            head, ops = line[:-2], ""
        else:
            raise CheckFileError(f"line {lineno}: expected 'color cell : ops'")
        try:
            color, cells_txt = head.split()
            cells = tuple(int(c) for c in cells_txt.split(","))
        except ValueError:
            raise CheckFileError(f"line {lineno}: bad operator label {head!r}") from None
        word = _parse_word(ops.split(), n, N, lineno)
        if color == "S":
            stabs[cells[0]] = word
            continue
        if color not in "BGRY" or len(color) != 1:
            raise CheckFileError(f"line {lineno}: unknown color {color!r}")
        idx = len(checks)
        corner, shape = corners.get(idx, (None, "corner" if len(cells) == 1 else "shared"))
        checks.append(Check(idx, color, cells, word, corner, shape))
        for c in cells:
            kinds.setdefault(c, "Z" if color in Z_COLORS else "X")

    ids = sorted(set(kinds) | set(stabs) | set(cell_info))
    if ids != list(range(len(ids))):
        raise CheckFileError("cell ids must be 0..m-1")
    cells_out = []
    for i in ids:
        kind, origin = cell_info.get(i, (kinds.get(i, "Z"), (0, 0, 0)))
        cells_out.append(Cell(i, kind, origin, tuple(2 * a + 1 for a in origin)))
    stab_list = [stabs.get(i, PauliWord.identity(n, N)) for i in ids]
    coords = [qcoords.get(q, (q, 0, 0)) for q in range(n)]
    free = tuple(int(v) for v in header.get("free-cells", []))
    return CodeLattice(spec, coords, cells_out, checks, stab_list, N, free)


def write_check_file(lattice: CodeLattice, path) -> None:
    Path(path).write_text(export_checks(lattice), encoding="utf-8")


def read_check_file(path) -> CodeLattice:
    return import_checks(Path(path).read_text(encoding="utf-8"))
