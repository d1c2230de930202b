"""Decomposable BIC score for categorical Bayesian networks."""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .. import kernels
from ..graph import CausalGraph, Mark
from ..table import ObservationTable, TableError
from .citest import strata_ids


class BICScorer:
    """Per-family BIC with a cache keyed on (child, parent set)."""

    def __init__(self, table: ObservationTable):
        self.table = table
        self.sizes = table.domain_sizes()
        self._cache: dict[tuple[int, frozenset], float] = {}

    def local(self, child: int, parents: Iterable[int]) -> float:
        parents = frozenset(int(p) for p in parents)
        key = (int(child), parents)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        pa = sorted(parents)
        cols = [child, *pa]
        mask = (self.table.codes[:, cols] >= 0).all(axis=1)
        n = int(mask.sum())
        if n == 0:
            raise TableError(
                f"no complete rows for family of {self.table.variables[child].name!r}"
            )
        codes = self.table.codes[mask]
        config, n_cfg = strata_ids(codes[:, pa], self.sizes[pa])
        r = int(self.sizes[child])
        ll = kernels.family_loglik(codes[:, child], config, r, n_cfg)
        value = ll - 0.5 * math.log(n) * (r - 1) * n_cfg
        self._cache[key] = value
        return value

    def score_dag(self, D: np.ndarray) -> float:
        return sum(self.local(j, np.flatnonzero(D[:, j])) for j in range(D.shape[0]))


def dag_matrix(table: ObservationTable, graph: CausalGraph) -> np.ndarray:
    d = len(table.variables)
    D = np.zeros((d, d), dtype=bool)
    for u, v, m in graph:
        if m is not Mark.DIRECTED:
            raise ValueError("discrete_bic needs a DAG; found an undirected edge")
        D[table.column(u), table.column(v)] = True
    return D


def discrete_bic(table: ObservationTable, graph: CausalGraph, scorer: BICScorer | None = None) -> float:
    """Sum over nodes of family log-likelihood minus (log n / 2) times free parameters."""
    for node in graph.nodes:
        table.column(node)
    if not graph.is_acyclic():
        raise ValueError("discrete_bic needs an acyclic graph")
    scorer = scorer or BICScorer(table)
    return scorer.score_dag(dag_matrix(table, graph))
