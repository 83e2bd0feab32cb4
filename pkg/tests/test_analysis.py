import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdpk.analysis import (
    average_neighbour_degree,
    closeness,
    compute_stats,
    debias,
    degree_centrality,
    detect_biases,
    undirected_adjacency,
)
from pdpk.errors import EmptyGraphError
from pdpk.kg import REPRESENTATIONS, KnowledgeGraph


def kg_of(edges, relation="r:x"):
    return KnowledgeGraph.from_iri_triples("ch_e", [(f"e:{h}", relation, f"e:{t}") for h, t in edges])


def floyd_closeness(nodes, edges):
    """Wasserman-Faust closeness from an all-pairs distance matrix."""
    idx = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0)
    for a, b in edges:
        if a != b:
            d[idx[a], idx[b]] = d[idx[b], idx[a]] = 1
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    out = {}
    for v in nodes:
        row = d[idx[v]]
        finite = row[np.isfinite(row)]
        reach = len(finite) - 1
        out[v] = 0.0 if reach == 0 else (reach / finite.sum()) * (reach / (n - 1))
    return out


class TestExamples:
    def test_path(self):
        adj = undirected_adjacency([("a", "b"), ("b", "c")])
        assert closeness(adj)["b"] == pytest.approx(1.0)
        dc = degree_centrality(adj)
        assert dc["b"] == pytest.approx(1.0) and dc["a"] == pytest.approx(2.0)
        assert average_neighbour_degree(adj)["b"] == pytest.approx(1.0)
        st_ = compute_stats(kg_of([("a", "b"), ("b", "c")]))
        assert st_.avg_degree_mean == pytest.approx(4 / 3)

    def test_single_edge(self):
        st_ = compute_stats(kg_of([("a", "b")]))
        assert st_.closeness_mean == 1.0 and st_.closeness_std == 0.0
        assert st_.avg_degree_mean == 1.0

    def test_standard_variant(self):
        adj = undirected_adjacency([("a", "b"), ("b", "c")])
        assert degree_centrality(adj, "standard") == {"a": 0.5, "b": 1.0, "c": 0.5}
        with pytest.raises(ValueError):
            degree_centrality(adj, "other")

    def test_empty(self):
        with pytest.raises(EmptyGraphError):
            compute_stats(KnowledgeGraph.from_iri_triples("ch_e", []))


small_graphs = st.integers(2, 8).flatmap(
    lambda n: st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), min_size=1, max_size=16)
)


@settings(max_examples=150, deadline=None)
@given(small_graphs)
def test_centrality_oracles(edges):
    adj = undirected_adjacency(edges)
    nodes = sorted(adj)
    g = nx.Graph()
    g.add_nodes_from(nodes)
    g.add_edges_from((a, b) for a, b in edges if a != b)
    ours = closeness(adj)
    theirs = nx.closeness_centrality(g, wf_improved=True)
    brute = floyd_closeness(nodes, edges)
    for v in nodes:
        assert ours[v] == pytest.approx(theirs[v]) == pytest.approx(brute[v])
    std = degree_centrality(adj, "standard")
    nx_dc = nx.degree_centrality(g)
    # networkx defines a lone vertex as fully central
    for v in nodes if len(nodes) > 1 else ():
        assert std[v] == pytest.approx(nx_dc[v])
        if g.degree(v):
            assert degree_centrality(adj)[v] == pytest.approx(1 / nx_dc[v])
    nx_and = nx.average_neighbor_degree(g)
    for v, x in average_neighbour_degree(adj).items():
        assert x == pytest.approx(nx_and[v])


def test_table_magnitudes(benchmark):
    for rep in REPRESENTATIONS:
        s = compute_stats(benchmark.kgs[rep])
        assert 0 < s.closeness_mean < 1
        assert s.degree_centrality_mean > 1
        for name in ("closeness_std", "degree_centrality_std", "avg_neighbour_degree_std", "avg_degree_std"):
            assert getattr(s, name) >= 0


def _b1_toy():
    edges = [(f"h{i}", "r:x", "e") for i in range(10)] + [("h10", "r:x", "u"), ("h11", "r:x", "w")]
    return KnowledgeGraph.from_iri_triples("ch_e", [(f"e:{h}", r, f"e:{t}") for h, r, t in edges])


class TestBiases:
    def test_b1_toy(self):
        kg = _b1_toy()
        rep = detect_biases(kg)
        shared = {tr for tr in kg.triples if kg.entities[tr[2]] == "e:e"}
        assert len(shared) == 10
        for tr, b1 in zip(rep.triples, rep.b1):
            assert b1 == pytest.approx(10 / 12 if tr in shared else 1 / 12)
        assert rep.flagged["b1"] == shared

    def test_b1_debias_then_recheck(self):
        cleaned = debias(_b1_toy())
        assert len(cleaned.triples) == 2
        assert not detect_biases(cleaned).flagged_any()

    def test_b3_full_overlap(self):
        pairs = [("a", "b"), ("c", "d"), ("e", "f")]
        triples = [(f"e:{h}", r, f"e:{t}") for h, t in pairs for r in ("r:x", "r:y")]
        rep = detect_biases(KnowledgeGraph.from_iri_triples("ch_e", triples))
        assert set(rep.b3) == {1.0}
        assert len(rep.flagged["b3"]) == 6

    def test_b2_one_to_many_default_answer(self):
        # every head of the 1-N relation links to tail z
        triples = [(f"e:h{i}", "r:x", f"e:{t}") for i in range(4) for t in ("z", f"t{i}a", f"t{i}b")]
        rep = detect_biases(KnowledgeGraph.from_iri_triples("ch_e", triples))
        kg = KnowledgeGraph.from_iri_triples("ch_e", triples)
        for tr, b2 in zip(rep.triples, rep.b2):
            assert b2 == pytest.approx(1.0 if kg.entities[tr[2]] == "e:z" else 0.25)
        assert len(rep.flagged["b2"]) == 4

    @pytest.mark.parametrize("rep", REPRESENTATIONS)
    def test_benchmark_bias_free(self, benchmark, rep):
        kg = benchmark.kgs[rep]
        assert not detect_biases(kg).flagged_any()
        assert debias(kg) is kg

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 2), st.integers(0, 5)), min_size=1, max_size=20,
                    unique=True), st.randoms())
    def test_scores_bounded_and_order_invariant(self, triples, random):
        iri = [(f"e:{h}", f"r:{r}", f"e:{t}") for h, r, t in triples]
        rep = detect_biases(KnowledgeGraph.from_iri_triples("ch_e", iri))
        for scores in (rep.b1, rep.b2, rep.b3):
            assert all(0.0 <= s <= 1.0 for s in scores)
        random.shuffle(iri)
        again = detect_biases(KnowledgeGraph.from_iri_triples("ch_e", iri))
        assert again.flagged == rep.flagged and again.b1 == rep.b1
        for name, thr, scores in zip(("b1", "b2", "b3"), rep.thresholds, (rep.b1, rep.b2, rep.b3)):
            assert rep.flagged[name] == {tr for tr, s in zip(rep.triples, scores) if s > thr}
