import io

import numpy as np
import pytest
from scipy import stats as sstats

from spinchain.graphs import (Graph, GraphFormatError, IsolatedVertexError,
                              complete_graph, cycle_graph, generate_random_max_degree,
                              generate_random_regular, graph_from_edges, load_graph,
                              path_graph, random_neighbor, save_graph)


def test_edge_list_path():
    g = load_graph(b"0 1\n1 2", fmt="edge-list")
    assert g.n == 3
    assert list(g.degrees) == [1, 2, 1]
    assert list(g.neighbors(1)) == [0, 2]


def test_edge_list_comments_whitespace_dedup():
    g = load_graph(b"# a comment\n 0\t1 \n\n1 0\n1 2  # trailing\n", fmt="edge-list")
    assert g.num_edges == 2
    assert list(g.degrees) == [1, 2, 1]


def test_self_loop_rejected():
    with pytest.raises(GraphFormatError, match="self-loop"):
        load_graph(b"3 3", fmt="edge-list")


def test_parse_error_reports_line():
    with pytest.raises(GraphFormatError, match="line 2"):
        load_graph(b"0 1\n0 1 2", fmt="edge-list")


def test_binary_roundtrip_byte_exact():
    rng = np.random.default_rng(3)
    g = generate_random_regular(8, 3, rng)
    buf = io.BytesIO()
    save_graph(g, buf, fmt="binary")
    data = buf.getvalue()
    g2 = load_graph(data, fmt="binary")
    buf2 = io.BytesIO()
    save_graph(g2, buf2, fmt="binary")
    assert buf2.getvalue() == data


def test_binary_vertex_out_of_range():
    bad = graph_from_edges([(0, 1)], n=2)
    buf = io.BytesIO()
    save_graph(bad, buf, fmt="binary")
    raw = bytearray(buf.getvalue())
    raw[16:20] = (7).to_bytes(4, "little")  # first neighbor id -> 7
    with pytest.raises(GraphFormatError, match="out of range"):
        load_graph(bytes(raw), fmt="binary")


def test_adjacency_symmetry():
    rng = np.random.default_rng(5)
    for g in (path_graph(6), cycle_graph(7), generate_random_regular(10, 3, rng),
              generate_random_max_degree(6, 3, rng)):
        for u in range(g.n):
            for w in g.neighbors(u):
                assert u in g.neighbors(int(w))
        assert g.max_degree == max(g.degrees)
        assert all(g.degree(v) == len(g.neighbors(v)) for v in range(g.n))


def test_random_neighbor_uniform_chi_square():
    # star center: each of the 5 leaves should appear ~uniformly over 1e5 draws
    g = graph_from_edges([(0, i) for i in range(1, 6)], n=6)
    rng = np.random.default_rng(11)
    draws = np.array([random_neighbor(g, 0, rng) for _ in range(100000)])
    counts = np.bincount(draws, minlength=6)[1:]
    _, pval = sstats.chisquare(counts)
    assert pval > 1e-4


def test_random_neighbor_uniform_every_vertex():
    # uniformity at significance 1e-4 for every vertex of a fixed graph
    g = generate_random_regular(8, 3, np.random.default_rng(21))
    rng = np.random.default_rng(22)
    for v in range(g.n):
        draws = np.array([random_neighbor(g, v, rng) for _ in range(100000)])
        counts = np.array([np.sum(draws == int(w)) for w in g.neighbors(v)])
        assert counts.sum() == 100000  # only true neighbors are drawn
        _, pval = sstats.chisquare(counts)
        assert pval > 1e-4


def test_random_neighbor_degree_one_and_isolated():
    g = graph_from_edges([(0, 1)], n=3)
    rng = np.random.default_rng(0)
    assert all(random_neighbor(g, 0, rng) == 1 for _ in range(10))
    with pytest.raises(IsolatedVertexError):
        random_neighbor(g, 2, rng)


def test_random_regular_k4_forced():
    rng = np.random.default_rng(1)
    g = generate_random_regular(4, 3, rng)
    k4 = complete_graph(4)
    assert list(g.indices) == list(k4.indices)


def test_random_regular_degrees():
    rng = np.random.default_rng(2)
    g = generate_random_regular(8, 3, rng)
    assert all(d == 3 for d in g.degrees)
    assert g.n == 8


def test_random_regular_infeasible():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        generate_random_regular(3, 3, rng)
    with pytest.raises(ValueError):
        generate_random_regular(5, 3, rng)  # odd n*d


def test_graphs_immutable():
    g = path_graph(3)
    with pytest.raises(ValueError):
        g.indices[0] = 2
