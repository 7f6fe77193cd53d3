"""Finite graph families: sizes, degrees, neighbor structure, parsing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_

from agelab import graphs


def test_segment_shape():
    g = graphs.segment(3)
    assert g.n == 7
    assert graphs.vertex_label(g, g.origin) == 0
    assert sorted(graphs.neighbors(g, g.origin)) == [g.origin - 1,
                                                     g.origin + 1]
    left_end = graphs.vertex_index(g, -3)
    assert graphs.degree(g, left_end) == 1


def test_segment_labels_are_signed_offsets():
    g = graphs.segment(2)
    labels = [graphs.vertex_label(g, x) for x in range(g.n)]
    assert sorted(labels) == [-2, -1, 0, 1, 2]
    for x in range(g.n):
        assert graphs.vertex_index(g, graphs.vertex_label(g, x)) == x


def test_torus_shape_and_wraparound():
    g = graphs.torus2d(5)
    assert g.n == 25
    for x in range(g.n):
        assert graphs.degree(g, x) == 4
    corner = graphs.vertex_index(g, (0, 0))
    got = {graphs.vertex_label(g, y) for y in graphs.neighbors(g, corner)}
    assert got == {(4, 0), (1, 0), (0, 4), (0, 1)}


def test_complete_shape():
    g = graphs.complete(6)
    assert g.n == 6
    for x in range(6):
        nbrs = graphs.neighbors(g, x)
        assert graphs.degree(g, x) == 5
        assert x not in set(nbrs)
        assert len(set(nbrs)) == 5


def test_hypercube_shape():
    g = graphs.hypercube(4)
    assert g.n == 16
    for x in (0, 5, 15):
        nbrs = set(graphs.neighbors(g, x))
        assert nbrs == {x ^ (1 << j) for j in range(4)}


def test_hypercube_cap():
    with pytest.raises(ValueError):
        graphs.hypercube(graphs.MAX_HYPERCUBE_BITS + 1)
    with pytest.raises(ValueError):
        graphs.parse_graph("hypercube:30")


@pytest.mark.parametrize("text,kind,n", [
    ("segment:4", "segment", 9),
    ("torus:3", "torus", 9),
    ("complete:5", "complete", 5),
    ("hypercube:3", "hypercube", 8),
])
def test_parse_graph(text, kind, n):
    g = graphs.parse_graph(text)
    assert g.kind == kind
    assert g.n == n


@pytest.mark.parametrize("text", [
    "ring:4", "segment", "segment:", "segment:x", "segment:-1",
    "complete:1", "torus:2", "hypercube:0",
])
def test_parse_graph_rejects(text):
    with pytest.raises(ValueError):
        graphs.parse_graph(text)


@given(st_.sampled_from(["segment:5", "torus:4", "complete:7", "hypercube:4"]),
       st_.integers(min_value=0, max_value=10**6))
@settings(max_examples=60, deadline=None)
def test_neighbor_relation_is_symmetric(text, pick):
    g = graphs.parse_graph(text)
    x = pick % g.n
    for y in graphs.neighbors(g, x):
        assert x in set(graphs.neighbors(g, int(y)))


def test_degree_sums_match_edge_count():
    for text, edges in (("segment:3", 6), ("torus:4", 32),
                        ("complete:5", 10), ("hypercube:3", 12)):
        g = graphs.parse_graph(text)
        total = sum(graphs.degree(g, x) for x in range(g.n))
        assert total == 2 * edges
