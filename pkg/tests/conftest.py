import itertools
from pathlib import Path

import numpy as np
import pytest

from iriscd.graph import CausalGraph, Mark, Variable
from iriscd.table import ObservationTable

FIXTURES = Path(__file__).parent / "fixtures"


def random_graph(rng, n_nodes, p_edge=0.3, p_undirected=0.3, prefix="v"):
    names = [f"{prefix}{i}" for i in range(n_nodes)]
    g = CausalGraph(names)
    for u, v in itertools.permutations(names, 2):
        if rng.random() < p_edge:
            mark = Mark.UNDIRECTED if rng.random() < p_undirected else Mark.DIRECTED
            g = g.add_edge(u, v, mark)
    return g


def table_from_codes(codes, sizes=None, names=None):
    """Table over integer-coded columns; labels are the codes as strings."""
    codes = np.asarray(codes, dtype=np.int64)
    d = codes.shape[1]
    sizes = sizes if sizes is not None else [max(2, int(codes[:, j].max()) + 1) for j in range(d)]
    names = names or [chr(ord("a") + j) for j in range(d)]
    variables = [Variable(n, domain=tuple(str(k) for k in range(s))) for n, s in zip(names, sizes)]
    t = ObservationTable(variables, [f"r{i}" for i in range(len(codes))])
    t.codes[:] = codes
    return t


def sample_bn(rng, dag, sizes, n, concentration=0.5):
    """Ancestral sampling from a random discrete Bayesian network; dag[i, j] means i -> j."""
    d = len(sizes)
    order = _topological(dag)
    data = np.zeros((n, d), dtype=np.int64)
    for j in order:
        pa = np.flatnonzero(dag[:, j])
        n_cfg = int(np.prod([sizes[p] for p in pa])) if len(pa) else 1
        cpt = rng.dirichlet([concentration] * sizes[j], size=n_cfg)
        cfg = np.zeros(n, dtype=np.int64)
        for p in pa:
            cfg = cfg * sizes[p] + data[:, p]
        u = rng.random(n)
        cum = np.cumsum(cpt[cfg], axis=1)
        data[:, j] = np.minimum((u[:, None] > cum).sum(axis=1), sizes[j] - 1)
    return data


def _topological(dag):
    d = dag.shape[0]
    indeg = dag.sum(axis=0).astype(int)
    order, stack = [], [i for i in range(d) if indeg[i] == 0]
    while stack:
        i = stack.pop()
        order.append(i)
        for j in np.flatnonzero(dag[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                stack.append(j)
    assert len(order) == d
    return order


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cancer_truth():
    from iriscd.graph import load_graph

    return load_graph(FIXTURES / "ablation" / "truth.json")


def linear_sem(seed, d=4, n=500, p_edge=0.5, sigma=0.5):
    """Random linear-Gaussian SEM: weights in +-[1, 2], random DAG over a random node order."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(d)
    B = np.zeros((d, d))
    for a in range(d):
        for b in range(a + 1, d):
            if rng.random() < p_edge:
                B[order[a], order[b]] = rng.uniform(1.0, 2.0) * rng.choice([-1.0, 1.0])
    X = np.zeros((n, d))
    for j in order:
        X[:, j] = X @ B[:, j] + sigma * rng.normal(size=n)
    return X, B


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
