import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iriscd import graph as G
from iriscd.graph import CausalGraph, EdgeDelta, GraphError, Mark, Variable, name_key

from conftest import random_graph


def test_add_directed_edge():
    g = CausalGraph(["a", "b"]).add_edge("a", "b", Mark.DIRECTED)
    assert g.edges == {("a", "b"): Mark.DIRECTED}


def test_directed_replaces_undirected():
    g = CausalGraph(["a", "b"]).add_edge("a", "b", Mark.UNDIRECTED).add_edge("a", "b", Mark.DIRECTED)
    assert g.edges == {("a", "b"): Mark.DIRECTED}
    g = CausalGraph(["a", "b"]).add_edge("b", "a", Mark.UNDIRECTED).add_edge("b", "a")
    assert g.edges == {("b", "a"): Mark.DIRECTED}


def test_self_loop_and_unknown_node_rejected():
    g = CausalGraph(["a", "b"])
    with pytest.raises(GraphError):
        g.add_edge("a", "a")
    with pytest.raises(GraphError):
        g.add_edge("a", "zzz")


def test_add_edge_is_idempotent_and_pure():
    g0 = CausalGraph(["a", "b"])
    g1 = g0.add_edge("a", "b")
    assert g1.add_edge("a", "b") == g1
    assert g0.edges == {}


def test_undirected_after_directed_replaces_both_orientations():
    g = CausalGraph(["a", "b"]).add_edge("a", "b").add_edge("b", "a")
    g = g.add_edge("b", "a", Mark.UNDIRECTED)
    assert g.count_marks() == (0, 1)
    assert g.directed_edge_set() == {("a", "b"), ("b", "a")}


def test_directed_edge_set_examples():
    assert CausalGraph(["a", "b"]).add_edge("a", "b").directed_edge_set() == {("a", "b")}
    assert CausalGraph(["a", "b"]).add_edge("a", "b", "undirected").directed_edge_set() == {("a", "b"), ("b", "a")}
    assert CausalGraph().directed_edge_set() == set()


def test_names_match_case_insensitively_keep_first_casing():
    g = CausalGraph(["Lung Cancer", "smoking"]).add_edge("SMOKING", " lung  cancer ")
    assert g.directed_edge_set() == {("smoking", "Lung Cancer")}
    assert g.add_node("lung cancer").nodes == g.nodes
    assert name_key("  Air   Quality ") == "air quality"


def test_remove_one_orientation_of_undirected():
    g = CausalGraph(["a", "b"]).add_edge("a", "b", Mark.UNDIRECTED).remove_edge("a", "b")
    assert g.edges == {("b", "a"): Mark.DIRECTED}
    assert CausalGraph(["a", "b"]).add_edge("a", "b").remove_edge("b", "a").directed_edge_set() == {("a", "b")}


def test_edge_delta_disjoint():
    with pytest.raises(ValueError):
        EdgeDelta({("a", "b")}, {("a", "b")})
    g = CausalGraph(["a", "b", "c"]).add_edge("b", "c").apply(EdgeDelta({("a", "b")}, {("b", "c")}))
    assert g.directed_edge_set() == {("a", "b")}


def test_is_acyclic_directed_part():
    g = CausalGraph(["a", "b", "c"]).add_edge("a", "b").add_edge("b", "c")
    assert g.is_acyclic()
    assert not g.add_edge("c", "a").is_acyclic()
    assert g.add_edge("c", "a", Mark.UNDIRECTED).is_acyclic()


def test_variable_validation():
    with pytest.raises(ValueError):
        Variable("x", domain=("True",))
    with pytest.raises(ValueError):
        Variable("x", domain=("a", "a"))
    with pytest.raises(ValueError):
        G.check_unique_names([Variable("Smoker"), Variable("smoker ")])
    v = Variable("smoker", synonyms=("tobacco", "Smoker"))
    assert v.terms == ("smoker", "tobacco")
    assert Variable.from_dict(v.to_dict()) == v


def test_round_trip_three_nodes_two_edges():
    g = CausalGraph(["x", "y", "z"]).add_edge("x", "y").add_edge("y", "z", Mark.UNDIRECTED)
    assert G.parse(G.serialize(g)) == g
    assert G.from_json(G.to_json(g)).edges == g.edges


def test_empty_graph_documents():
    doc = json.loads(G.to_json(CausalGraph()))
    assert doc == {"nodes": [], "edges": []}
    assert G.to_dot(CausalGraph()) == "digraph G {\n}\n"


def test_json_layout_exact():
    g = CausalGraph(["b", "a"]).add_edge("b", "a")
    assert json.loads(G.to_json(g)) == {"nodes": ["a", "b"], "edges": [{"from": "b", "to": "a", "mark": "directed"}]}


def test_from_json_rejects_bad_documents():
    for bad in ('{"nodes": []}', '{"nodes": [], "edges": [], "x": 1}',
                '{"nodes": ["a","b"], "edges": [{"from": "a", "to": "b", "mark": "sideways"}]}',
                '{"nodes": ["a"], "edges": [{"from": "a", "to": "q", "mark": "directed"}]}', "[]"):
        with pytest.raises((GraphError, ValueError)):
            G.from_json(bad)


def test_cancer_fixture_dot_has_four_edge_lines(cancer_truth):
    dot = G.to_dot(cancer_truth)
    assert len(cancer_truth.nodes) == 5
    assert sum("->" in line for line in dot.splitlines()) == 4
    lines = dot.splitlines()
    node_lines = [l for l in lines if l.strip().endswith(";") and "->" not in l]
    assert node_lines == sorted(node_lines)
    assert lines.index(node_lines[-1]) < min(i for i, l in enumerate(lines) if "->" in l)


def test_dot_marks_undirected_both_ways():
    dot = G.to_dot(CausalGraph(["a", "b"]).add_edge("b", "a", Mark.UNDIRECTED))
    assert '"a" -> "b" [dir=both];' in dot


def test_save_and_load(tmp_path):
    g = CausalGraph(["p", "q"]).add_edge("q", "p")
    G.save_graph(g, tmp_path / "g.json")
    assert G.load_graph(tmp_path / "g.json") == g
    G.save_graph(g, tmp_path / "g.dot", fmt="dot")
    assert (tmp_path / "g.dot").read_text().startswith("digraph")


NAMES = ["a", "b", "c", "d", "e"]
edits = st.lists(
    st.tuples(st.sampled_from(["add", "remove"]), st.sampled_from(NAMES), st.sampled_from(NAMES),
              st.sampled_from([Mark.DIRECTED, Mark.UNDIRECTED])),
    max_size=40,
)


def _check_invariants(g):
    keys = {name_key(n) for n in g.nodes}
    assert len(keys) == len(g.nodes)
    n_dir, n_und = g.count_marks()
    assert len(g.directed_edge_set()) == n_dir + 2 * n_und
    for (u, v), m in g.edges.items():
        assert u != v and name_key(u) in keys and name_key(v) in keys
        if m is Mark.UNDIRECTED:
            assert name_key(u) < name_key(v)
            assert (v, u) not in g.edges
        else:
            other = tuple(sorted((u, v), key=name_key))
            assert g.edges.get(other) is not Mark.UNDIRECTED


@settings(max_examples=200, deadline=None)
@given(edits)
def test_random_edit_sequences_keep_invariants(ops):
    g = CausalGraph(NAMES)
    for op, u, v, mark in ops:
        if u == v:
            continue
        before = g.directed_edge_set()
        if op == "add":
            pair = tuple(sorted((u, v)))
            overrides = mark is Mark.DIRECTED and g.edges.get(pair) is Mark.UNDIRECTED
            g = g.add_edge(u, v, mark)
            assert (u, v) in g.directed_edge_set()
            if not overrides and mark is Mark.DIRECTED:
                assert before <= g.directed_edge_set()
        else:
            g = g.remove_edge(u, v)
            assert (u, v) not in g.directed_edge_set()
        _check_invariants(g)
    assert G.parse(G.serialize(g)) == g


def test_serialization_deterministic_across_insertion_order():
    rng = np.random.default_rng(7)
    for _ in range(50):
        g = random_graph(rng, 5)
        edges = list(g)
        rng.shuffle(edges)
        h = CausalGraph(reversed(g.nodes), edges)
        assert G.to_json(h) == G.to_json(g)
        assert G.to_dot(h) == G.to_dot(g)
