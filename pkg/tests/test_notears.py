import math
import warnings

import numpy as np
import pytest

from iriscd.discovery import NotearsConfig, notears_h, run_notears
from iriscd.discovery.notears import threshold_graph
from iriscd.metrics import shd

from conftest import linear_sem


def test_h_zero_exact():
    h, g = notears_h(np.zeros((4, 4)))
    assert h == 0.0
    assert not g.any()


def test_h_vanishes_on_dag_adjacency():
    rng = np.random.default_rng(0)
    for _ in range(20):
        order = rng.permutation(5)
        W = np.zeros((5, 5))
        for a in range(5):
            for b in range(a + 1, 5):
                if rng.random() < 0.6:
                    W[order[a], order[b]] = 1.0
        assert abs(notears_h(W)[0]) <= 1e-8


def test_h_two_cycle_closed_form():
    W = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert notears_h(W)[0] == pytest.approx(2 * math.cosh(1) - 2, abs=1e-6)


def test_h_rejects_non_finite():
    with pytest.raises(ValueError):
        notears_h(np.array([[0.0, np.nan], [0.0, 0.0]]))


def fd_gradient(W, step=1e-5):
    G = np.zeros_like(W)
    for i in range(W.shape[0]):
        for j in range(W.shape[1]):
            E = np.zeros_like(W)
            E[i, j] = step
            G[i, j] = (notears_h(W + E)[0] - notears_h(W - E)[0]) / (2 * step)
    return G


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_central_differences(seed):
    W = np.random.default_rng(seed).normal(size=(4, 4))
    _, g = notears_h(W)
    fd = fd_gradient(W)
    assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-5


def test_two_variable_recovery():
    rng = np.random.default_rng(1)
    x1 = rng.normal(size=500)
    x2 = 2 * x1 + 0.3 * rng.normal(size=500)
    X = np.c_[x1, x2]
    res = run_notears(X, names=["x1", "x2"])
    beta = float(x1 @ x2 / (x1 @ x1))
    assert res.converged and res.h <= 1e-8
    assert res.graph.directed_edge_set() == {("x1", "x2")}
    assert abs(res.W[0, 1]) > 0.3
    # lasso shrinks the coefficient a little below the least-squares value
    assert 0.9 * beta < res.W[0, 1] <= beta + 1e-6
    assert np.all(np.diag(res.W) == 0.0)


def test_pure_noise_gives_empty_graph():
    X = np.random.default_rng(2).normal(size=(500, 4))
    res = run_notears(X, NotearsConfig(lambda1=0.1))
    assert res.graph.edges == {}
    assert res.acyclic


def test_trajectory_and_threshold():
    X, _ = linear_sem(0)
    res = run_notears(X)
    assert res.trajectory and res.trajectory[-1]["h"] == pytest.approx(res.h)
    rhos = [t["rho"] for t in res.trajectory]
    assert rhos == sorted(rhos)
    assert threshold_graph(res.W, ["a", "b", "c", "d"], 1e9).edges == {}


def test_warns_when_fewer_rows_than_columns():
    X = np.random.default_rng(3).normal(size=(3, 4))
    with pytest.warns(RuntimeWarning):
        run_notears(X, NotearsConfig(max_outer=2))


def test_recovery_on_linear_sem():
    hits = 0
    for seed in range(10):
        X, B = linear_sem(seed)
        names = ["a", "b", "c", "d"]
        res = run_notears(X, names=names)
        hits += shd(res.graph, threshold_graph(B, names, 0.0)) <= 1
    assert hits >= 8
