import itertools
import math
from collections import Counter

import numpy as np
import pytest

from iriscd.discovery import BICScorer, discrete_bic, ges_search, run_ges
from iriscd.discovery import pdag
from iriscd.graph import CausalGraph, Mark
from iriscd.table import TableError

from conftest import sample_bn, table_from_codes


def direct_bic(codes, sizes, D):
    """Textbook BIC from raw counts, written without any package helper."""
    n = len(codes)
    total = 0.0
    for j in range(D.shape[0]):
        pa = list(np.flatnonzero(D[:, j]))
        joint = Counter((tuple(row[pa]), row[j]) for row in codes)
        marg = Counter(tuple(row[pa]) for row in codes)
        total += sum(c * math.log(c / marg[cfg]) for (cfg, _), c in joint.items())
        q = int(np.prod([sizes[p] for p in pa])) if pa else 1
        total -= 0.5 * math.log(n) * (sizes[j] - 1) * q
    return total


def _graph(D, names):
    return pdag.to_causal_graph(D, names)


def test_bic_matches_direct_formula_all_dags():
    rng = np.random.default_rng(10)
    sizes = [2, 3, 2]
    codes = np.c_[rng.integers(0, 2, 300), rng.integers(0, 3, 300), rng.integers(0, 2, 300)]
    t = table_from_codes(codes, sizes)
    for D in pdag.all_dags(3):
        assert discrete_bic(t, _graph(D, t.names)) == pytest.approx(direct_bic(codes, sizes, D), rel=1e-12)


def test_decomposable():
    rng = np.random.default_rng(11)
    t = table_from_codes(rng.integers(0, 2, size=(200, 4)))
    D = np.zeros((4, 4), dtype=bool)
    D[0, 1] = D[0, 2] = D[1, 3] = D[2, 3] = True
    total = discrete_bic(t, _graph(D, t.names))
    parts = [BICScorer(t).local(j, np.flatnonzero(D[:, j])) for j in range(4)]
    assert total == pytest.approx(sum(parts), rel=1e-12)


def test_likelihood_never_decreases_when_adding_an_edge():
    rng = np.random.default_rng(12)
    codes = rng.integers(0, 3, size=(150, 3))
    sizes = [3, 3, 3]
    for D in pdag.all_dags(3):
        base = direct_bic(codes, sizes, D) + _penalty(len(codes), sizes, D)
        for i, j in itertools.permutations(range(3), 2):
            if D[i, j] or D[j, i]:
                continue
            E = D.copy()
            E[i, j] = True
            if pdag.is_dag(E):
                assert direct_bic(codes, sizes, E) + _penalty(len(codes), sizes, E) >= base - 1e-9


def _penalty(n, sizes, D):
    return sum(0.5 * math.log(n) * (sizes[j] - 1) * int(np.prod([sizes[p] for p in np.flatnonzero(D[:, j])] or [1]))
               for j in range(D.shape[0]))


def test_empty_graph_wins_on_independent_uniform_data():
    rng = np.random.default_rng(13)
    t = table_from_codes(rng.integers(0, 2, size=(2000, 3)))
    empty = discrete_bic(t, CausalGraph(t.names))
    for u, v in itertools.permutations(t.names, 2):
        assert empty > discrete_bic(t, CausalGraph(t.names).add_edge(u, v))


def test_score_invariant_to_column_order():
    rng = np.random.default_rng(14)
    codes = rng.integers(0, 2, size=(300, 3))
    t = table_from_codes(codes, names=["a", "b", "c"])
    t2 = table_from_codes(codes[:, [2, 0, 1]], names=["c", "a", "b"])
    g = CausalGraph(["a", "b", "c"]).add_edge("a", "b").add_edge("c", "b")
    assert discrete_bic(t, g) == pytest.approx(discrete_bic(t2, g), rel=1e-12)


def test_bic_errors():
    t = table_from_codes([[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        discrete_bic(t, CausalGraph(["a", "b"]).add_edge("a", "b", Mark.UNDIRECTED))
    with pytest.raises(ValueError):
        discrete_bic(t, CausalGraph(["a", "b"]).add_edge("a", "b").add_edge("b", "a"))
    t.codes[:, 0] = -1
    with pytest.raises(TableError):
        discrete_bic(t, CausalGraph(["a", "b"]))


def chain_table(seed, n=2000):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, n)
    b = np.where(rng.random(n) < 0.8, a, 1 - a)
    c = np.where(rng.random(n) < 0.8, b, 1 - b)
    return table_from_codes(np.c_[a, b, c])


def test_chain_gives_undirected_chain_class():
    for seed in range(5):
        g = run_ges(chain_table(seed))
        assert g.edges == {("a", "b"): Mark.UNDIRECTED, ("b", "c"): Mark.UNDIRECTED}


def test_independent_data_gives_empty_graph():
    rng = np.random.default_rng(15)
    assert run_ges(table_from_codes(rng.integers(0, 2, size=(2000, 3)))).edges == {}


def test_ges_trace_and_score_consistency():
    rng = np.random.default_rng(16)
    for seed in range(20):
        D = list(pdag.all_dags(4))[int(rng.integers(543))]
        t = table_from_codes(sample_bn(np.random.default_rng(seed), D, [2, 2, 3, 2], 800), sizes=[2, 2, 3, 2])
        res = ges_search(t)
        empty = discrete_bic(t, CausalGraph(t.names))
        assert res.score >= empty
        assert res.score == pytest.approx(discrete_bic(t, res.dag), rel=1e-12)
        assert res.dag.is_acyclic()
        prev = empty
        for step in res.trace:
            assert step["gain"] > 0
            assert step["score"] == pytest.approx(prev + step["gain"], rel=1e-9, abs=1e-9)
            prev = step["score"]
        assert np.array_equal(pdag.dag_to_cpdag(pdag.from_causal_graph(res.dag, t.names)),
                              pdag.from_causal_graph(res.graph, t.names))


def test_ges_listwise_deletion_under_missing():
    t = chain_table(0, n=400)
    t.codes[:50, 0] = -1
    res = ges_search(t)
    full = table_from_codes(t.codes[50:], names=t.names)
    assert res.score == pytest.approx(discrete_bic(full, res.dag), rel=1e-12)


def test_ges_matches_exhaustive_on_random_three_node_data():
    dags = list(pdag.all_dags(3))
    for seed in range(30):
        rng = np.random.default_rng(1000 + seed)
        sizes = [int(k) for k in rng.integers(2, 4, size=3)]
        truth = dags[int(rng.integers(len(dags)))]
        t = table_from_codes(sample_bn(rng, truth, sizes, 1000), sizes=sizes)
        scorer = BICScorer(t)
        best = max(scorer.score_dag(D) for D in dags)
        got = discrete_bic(t, ges_search(t).dag)
        assert got == pytest.approx(best, rel=1e-9, abs=1e-9), seed
