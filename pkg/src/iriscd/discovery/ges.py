"""Greedy equivalence search over CPDAGs with the discrete BIC score.

Forward phase applies the best valid Insert(x, y, T) operator while the score
improves; backward phase applies the best Delete(x, y, H). After each step the
state is re-completed through a consistent DAG extension, which is checked to
be acyclic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..graph import CausalGraph
from ..table import ObservationTable
from . import pdag
from .score import BICScorer

MIN_GAIN = 1e-9
TIE_TOL = 1e-9


@dataclass
class GESResult:
    graph: CausalGraph
    dag: CausalGraph
    score: float
    trace: list = field(default_factory=list)


def _powerset(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def _is_clique(A, nodes) -> bool:
    return all(pdag.adjacent(A, a, b) for a, b in itertools.combinations(nodes, 2))


def _semidirected_path(A, src, dst, blocked) -> bool:
    """True if a path src ~> dst exists along i->j or i-j edges avoiding ``blocked``."""
    seen = {src}
    stack = [src]
    while stack:
        a = stack.pop()
        for b in np.flatnonzero(A[a]):
            b = int(b)
            if b == dst:
                return True
            if b in seen or b in blocked:
                continue
            seen.add(b)
            stack.append(b)
    return False


def _pick(cands, names):
    """Largest gain; near-ties resolved by (from, to, set) names."""
    if not cands:
        return None
    best = max(c[0] for c in cands)
    tol = TIE_TOL * max(1.0, abs(best))
    tied = [c for c in cands if c[0] >= best - tol]
    return min(tied, key=lambda c: (names[c[1]], names[c[2]], sorted(names[k] for k in c[3])))


def _recomplete(A):
    D = pdag.pdag_to_dag(A)
    if D is None or not pdag.is_dag(D):
        raise AssertionError("GES state has no acyclic extension")
    return pdag.dag_to_cpdag(D), D


def _forward_candidates(A, scorer):
    n = A.shape[0]
    out = []
    for x in range(n):
        for y in range(n):
            if x == y or pdag.adjacent(A, x, y):
                continue
            ne_y = pdag.neighbors(A, y)
            na = [t for t in ne_y if pdag.adjacent(A, t, x)]
            free = [t for t in ne_y if not pdag.adjacent(A, t, x)]
            pa = pdag.parents(A, y)
            for T in _powerset(free):
                S = set(na) | set(T)
                if not _is_clique(A, S):
                    continue
                if _semidirected_path(A, y, x, S):
                    continue
                base = set(pa) | S
                gain = scorer.local(y, base | {x}) - scorer.local(y, base)
                out.append((gain, x, y, T))
    return out


def _backward_candidates(A, scorer):
    n = A.shape[0]
    out = []
    for x in range(n):
        for y in range(n):
            if x == y or not A[x, y]:
                continue
            na = [h for h in pdag.neighbors(A, y) if pdag.adjacent(A, h, x)]
            pa = set(pdag.parents(A, y)) - {x}
            for H in _powerset(na):
                rest = set(na) - set(H)
                if not _is_clique(A, rest):
                    continue
                base = pa | rest
                gain = scorer.local(y, base) - scorer.local(y, base | {x})
                out.append((gain, x, y, H))
    return out


def ges_search(table: ObservationTable, scorer: BICScorer | None = None) -> GESResult:
    names = table.names
    if len(names) < 2:
        raise ValueError("GES needs at least two variables")
    # listwise deletion keeps the score equivalent across a class; per-family
    # deletion would let orientation change the row count
    scorer = scorer or BICScorer(table.complete_cases())
    n = len(names)
    A = np.zeros((n, n), dtype=bool)
    D = A.copy()
    score = scorer.score_dag(D)
    trace = []

    for phase in ("forward", "backward"):
        while True:
            cands = _forward_candidates(A, scorer) if phase == "forward" else _backward_candidates(A, scorer)
            cands = [c for c in cands if c[0] > MIN_GAIN]
            choice = _pick(cands, names)
            if choice is None:
                break
            gain, x, y, S = choice
            A = A.copy()
            if phase == "forward":
                pdag.orient(A, x, y)
                for t in S:
                    pdag.orient(A, t, y)
            else:
                A[x, y] = A[y, x] = False
                for h in S:
                    pdag.orient(A, y, h)
                    if pdag.is_undirected(A, x, h):
                        pdag.orient(A, x, h)
            A, D = _recomplete(A)
            score = scorer.score_dag(D)
            trace.append({
                "phase": phase,
                "from": names[x],
                "to": names[y],
                "set": sorted(names[k] for k in S),
                "gain": gain,
                "score": score,
            })

    dag = pdag.to_causal_graph(D, names)
    return GESResult(pdag.to_causal_graph(A, names), dag, score, trace)


def run_ges(table: ObservationTable) -> CausalGraph:
    return ges_search(table).graph
