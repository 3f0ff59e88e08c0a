"""Minimum-weight perfect matching with an optional shared boundary node."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import networkx as nx
import numpy as np

DP_LIMIT = 12  # subset DP up to this many nodes, blossom above


class MatchingError(ValueError):
    pass


@dataclass
class DefectGraph:
    """Complete graph on defects.

    ``weights[i, j]`` is the path metric between defects ``i`` and ``j``;
    ``boundary[i]`` (optional) is the cost of matching ``i`` to the boundary.
    Any number of defects may match the boundary.
    """

    weights: np.ndarray
    boundary: np.ndarray | None = None
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.int64)
        if self.weights.ndim != 2 or self.weights.shape[0] != self.weights.shape[1]:
            raise MatchingError("weights must be a square matrix")
        if self.boundary is not None:
            self.boundary = np.asarray(self.boundary, dtype=np.int64)
            if self.boundary.shape != (self.size,):
                raise MatchingError("boundary costs must have one entry per node")

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])


Pair = tuple[int, "int | None"]  # (i, j) or (i, None) for a boundary match


def matching_weight(graph: DefectGraph, pairs: list[Pair]) -> int:
    total = 0
    for i, j in pairs:
        total += int(graph.boundary[i]) if j is None else int(graph.weights[i, j])
    return total


def _validate(graph: DefectGraph, pairs: list[Pair]) -> None:
    seen = []
    for i, j in pairs:
        seen.append(i)
        if j is not None:
            seen.append(j)
    if sorted(seen) != list(range(graph.size)):
        raise MatchingError("matching is not perfect")


def min_weight_match(graph: DefectGraph, mode: str = "exact", algorithm: str = "auto") -> list[Pair]:
    """Perfect matching of all defects.

    ``mode="exact"`` returns a minimum-weight matching (subset DP for small
    graphs, blossom otherwise; ``algorithm`` forces one).  ``mode="fast"`` is
    a greedy nearest-pair heuristic.
    """
    n = graph.size
    if graph.boundary is None and n % 2:
        raise MatchingError("odd number of defects and no boundary")
    if n == 0:
        return []
    if mode == "fast":
        pairs = _greedy(graph)
    elif mode == "exact":
        if algorithm == "auto":
            algorithm = "dp" if n <= DP_LIMIT else "blossom"
        if algorithm == "dp":
            pairs = _subset_dp(graph)
        elif algorithm == "blossom":
            pairs = _blossom(graph)
        else:
            raise MatchingError(f"unknown algorithm {algorithm!r}")
    else:
        raise MatchingError(f"unknown mode {mode!r}")
    _validate(graph, pairs)
    return sorted(pairs, key=lambda p: (p[0], -1 if p[1] is None else p[1]))


def _subset_dp(graph: DefectGraph) -> list[Pair]:
    n = graph.size
    W = graph.weights.tolist()
    B = None if graph.boundary is None else graph.boundary.tolist()
    full = (1 << n) - 1

    @lru_cache(maxsize=None)
    def best(mask: int):
        if mask == full:
            return 0, ()
        i = (~mask & full & -(~mask & full)).bit_length() - 1  # lowest unmatched
        m = mask | (1 << i)
        opts = []
        if B is not None:
            w, rest = best(m)
            opts.append((w + B[i], ((i, None),) + rest))
        for j in range(i + 1, n):
            if not (m >> j) & 1:
                w, rest = best(m | (1 << j))
                opts.append((w + W[i][j], ((i, j),) + rest))
        if not opts:
            return float("inf"), ()
        return min(opts, key=lambda t: t[0])

    w, pairs = best(0)
    if w == float("inf"):
        raise MatchingError("no perfect matching")
    return list(pairs)


def _blossom(graph: DefectGraph) -> list[Pair]:
    n = graph.size
    G = nx.Graph()
    big = int(graph.weights.max(initial=0)) + (0 if graph.boundary is None else int(graph.boundary.max())) + 1
    for i in range(n):
        for j in range(i + 1, n):
            G.add_edge(i, j, weight=big - int(graph.weights[i, j]))
    if graph.boundary is not None:
        # boundary copies: i <-> b_i costs boundary[i]; copies pair freely
        for i in range(n):
            G.add_edge(i, ("b", i), weight=big - int(graph.boundary[i]))
            for j in range(i + 1, n):
                G.add_edge(("b", i), ("b", j), weight=big)
    mate = nx.max_weight_matching(G, maxcardinality=True)
    pairs = []
    for u, v in mate:
        if isinstance(u, tuple) and isinstance(v, tuple):
            continue
        if isinstance(u, tuple):
            u, v = v, u
        pairs.append((u, None) if isinstance(v, tuple) else (min(u, v), max(u, v)))
    return pairs


def _greedy(graph: DefectGraph) -> list[Pair]:
    n = graph.size
    left = set(range(n))
    cands = []
    for i in range(n):
        for j in range(i + 1, n):
            cands.append((int(graph.weights[i, j]), i, j))
        if graph.boundary is not None:
            cands.append((int(graph.boundary[i]), i, None))
    cands.sort(key=lambda t: (t[0], t[1], -1 if t[2] is None else t[2]))
    pairs = []
    for w, i, j in cands:
        if i in left and (j is None or j in left):
            pairs.append((i, j))
            left.discard(i)
            if j is not None:
                left.discard(j)
    if left:
        raise MatchingError("greedy matching left nodes unmatched")
    return pairs


def brute_force_match(graph: DefectGraph) -> tuple[int, list[Pair]]:
    """Exhaustive enumeration of all perfect matchings (reference oracle)."""
    n = graph.size
    best_w = None
    best_p: list[Pair] = []

    def rec(remaining: list[int], acc: list[Pair], w: int):
        nonlocal best_w, best_p
        if not remaining:
            if best_w is None or w < best_w:
                best_w, best_p = w, list(acc)
            return
        i, rest = remaining[0], remaining[1:]
        if graph.boundary is not None:
            rec(rest, acc + [(i, None)], w + int(graph.boundary[i]))
        for k, j in enumerate(rest):
            rec(rest[:k] + rest[k + 1:], acc + [(i, j)], w + int(graph.weights[i, j]))

    if graph.boundary is None and n % 2:
        raise MatchingError("odd number of defects and no boundary")
    rec(list(range(n)), [], 0)
    return int(best_w if best_w is not None else 0), best_p
