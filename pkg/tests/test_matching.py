import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stcode.matching import (
    DefectGraph,
    MatchingError,
    brute_force_match,
    matching_weight,
    min_weight_match,
)


def manhattan(points):
    P = np.asarray(points)
    return np.abs(P[:, None, :] - P[None, :, :]).sum(-1)


@st.composite
def graphs(draw, max_nodes=10, boundary=None):
    n = draw(st.integers(0, max_nodes))
    use_boundary = draw(st.booleans()) if boundary is None else boundary
    if not use_boundary and n % 2:
        n -= 1
    w = np.zeros((n, n), dtype=np.int64)
    for i, j in itertools.combinations(range(n), 2):
        w[i, j] = w[j, i] = draw(st.integers(0, 20))
    bd = np.array(draw(st.lists(st.integers(0, 20), min_size=n, max_size=n))) if use_boundary else None
    return DefectGraph(w, bd)


def test_empty():
    assert min_weight_match(DefectGraph(np.zeros((0, 0)))) == []


def test_two_nodes():
    assert min_weight_match(DefectGraph([[0, 5], [5, 0]])) == [(0, 1)]


def test_rectangle_short_sides():
    g = DefectGraph(manhattan([(0, 0), (1, 0), (0, 2), (1, 2)]))
    pairs = min_weight_match(g)
    assert pairs == [(0, 1), (2, 3)]
    assert matching_weight(g, pairs) == 2
    assert brute_force_match(g)[0] == 2


def test_boundary_cheaper_than_pairing():
    g = DefectGraph([[0, 10], [10, 0]], boundary=[1, 2])
    assert min_weight_match(g) == [(0, None), (1, None)]


def test_odd_without_boundary_raises():
    with pytest.raises(MatchingError):
        min_weight_match(DefectGraph(np.zeros((3, 3))))
    with pytest.raises(MatchingError):
        brute_force_match(DefectGraph(np.zeros((3, 3))))


def test_bad_inputs():
    with pytest.raises(MatchingError):
        DefectGraph(np.zeros((2, 3)))
    with pytest.raises(MatchingError):
        DefectGraph(np.zeros((2, 2)), boundary=[1])
    g = DefectGraph(np.zeros((2, 2)))
    with pytest.raises(MatchingError):
        min_weight_match(g, mode="slow")
    with pytest.raises(MatchingError):
        min_weight_match(g, algorithm="simplex")


@settings(max_examples=200, deadline=None)
@given(graphs())
def test_exact_equals_brute_force(g):
    best, _ = brute_force_match(g)
    pairs = min_weight_match(g)
    assert matching_weight(g, pairs) == best


@settings(max_examples=100, deadline=None)
@given(graphs(max_nodes=9))
def test_blossom_matches_dp(g):
    dp = min_weight_match(g, algorithm="dp")
    bl = min_weight_match(g, algorithm="blossom")
    assert matching_weight(g, dp) == matching_weight(g, bl)


@settings(max_examples=100, deadline=None)
@given(graphs())
def test_fast_never_beats_exact(g):
    assert matching_weight(g, min_weight_match(g, "fast")) >= matching_weight(g, min_weight_match(g))


def test_large_graph_uses_blossom():
    rng = np.random.default_rng(3)
    pts = rng.integers(0, 30, size=(20, 2))
    g = DefectGraph(manhattan(pts))
    pairs = min_weight_match(g)
    assert len(pairs) == 10
    assert matching_weight(g, pairs) <= matching_weight(g, min_weight_match(g, "fast"))
