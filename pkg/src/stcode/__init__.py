"""Subsystem toric code toolkit: lattices, code analysis, single-shot decoding and gauge Monte Carlo."""

__version__ = "0.1.0"

from .lattice import Boundary, CodeLattice, LatticeSpec, build_code_lattice  # noqa: E402
from .pauli import PauliWord  # noqa: E402

__all__ = ["Boundary", "CodeLattice", "LatticeSpec", "PauliWord", "build_code_lattice", "__version__"]
