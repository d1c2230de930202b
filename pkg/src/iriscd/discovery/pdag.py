"""Partially directed graphs as boolean adjacency matrices.

``A[i, j] and not A[j, i]`` is i -> j; ``A[i, j] and A[j, i]`` is i - j.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from ..graph import CausalGraph, Mark


def is_directed(A: np.ndarray, i: int, j: int) -> bool:
    return bool(A[i, j] and not A[j, i])


def is_undirected(A: np.ndarray, i: int, j: int) -> bool:
    return bool(A[i, j] and A[j, i])


def adjacent(A: np.ndarray, i: int, j: int) -> bool:
    return bool(A[i, j] or A[j, i])


def neighbors(A: np.ndarray, i: int) -> list[int]:
    """Nodes joined to i by an undirected edge."""
    return [int(j) for j in np.flatnonzero(A[i] & A[:, i])]


def parents(A: np.ndarray, i: int) -> list[int]:
    return [int(j) for j in np.flatnonzero(A[:, i] & ~A[i])]


def adjacents(A: np.ndarray, i: int) -> list[int]:
    return [int(j) for j in np.flatnonzero(A[i] | A[:, i])]


def orient(A: np.ndarray, i: int, j: int) -> None:
    A[i, j] = True
    A[j, i] = False


def meek_closure(A: np.ndarray) -> np.ndarray:
    """Apply Meek rules R1-R3 until no undirected edge changes."""
    A = A.copy()
    n = A.shape[0]
    changed = True
    while changed:
        changed = False
        for b in range(n):
            for c in range(n):
                if not is_undirected(A, b, c):
                    continue
                # R1: a -> b - c, a and c nonadjacent  =>  b -> c
                if any(is_directed(A, a, b) and not adjacent(A, a, c) and a != c for a in range(n)):
                    orient(A, b, c)
                    changed = True
                    continue
                # R2: b -> a -> c and b - c  =>  b -> c
                if any(is_directed(A, b, a) and is_directed(A, a, c) for a in range(n)):
                    orient(A, b, c)
                    changed = True
                    continue
                # R3: b - x, b - y, x -> c <- y, x and y nonadjacent  =>  b -> c
                cands = [x for x in range(n) if is_undirected(A, b, x) and is_directed(A, x, c)]
                if any(not adjacent(A, x, y) for x, y in itertools.combinations(cands, 2)):
                    orient(A, b, c)
                    changed = True
    return A


def dag_to_cpdag(D: np.ndarray) -> np.ndarray:
    """Completed PDAG of the Markov equivalence class of DAG ``D``."""
    D = np.asarray(D, dtype=bool)
    n = D.shape[0]
    A = D | D.T
    for b in range(n):
        pa = [int(a) for a in np.flatnonzero(D[:, b])]
        for a, c in itertools.combinations(pa, 2):
            if not (D[a, c] or D[c, a]):
                orient(A, a, b)
                orient(A, c, b)
    return meek_closure(A)


def pdag_to_dag(A: np.ndarray) -> np.ndarray | None:
    """A consistent DAG extension of a PDAG, or None when none exists."""
    A = np.asarray(A, dtype=bool)
    n = A.shape[0]
    out = A & ~A.T  # directed part
    alive = list(range(n))
    work = A.copy()
    while alive:
        for x in alive:
            if any(is_directed(work, x, y) for y in alive if y != x):
                continue
            nb = [y for y in alive if y != x and is_undirected(work, x, y)]
            adj = [y for y in alive if y != x and adjacent(work, x, y)]
            if all(adjacent(work, y, z) for y in nb for z in adj if z != y):
                for y in nb:
                    out[y, x] = True
                    out[x, y] = False
                alive.remove(x)
                work[x, :] = False
                work[:, x] = False
                break
        else:
            return None
    return out


def is_dag(D: np.ndarray) -> bool:
    D = np.asarray(D, dtype=bool)
    indeg = D.sum(axis=0).astype(int)
    stack = [i for i in range(D.shape[0]) if indeg[i] == 0]
    seen = 0
    while stack:
        i = stack.pop()
        seen += 1
        for j in np.flatnonzero(D[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                stack.append(int(j))
    return seen == D.shape[0]


def to_causal_graph(A: np.ndarray, names: Sequence[str]) -> CausalGraph:
    edges = []
    n = len(names)
    for i in range(n):
        for j in range(n):
            if is_directed(A, i, j):
                edges.append((names[i], names[j], Mark.DIRECTED))
            elif i < j and is_undirected(A, i, j):
                edges.append((names[i], names[j], Mark.UNDIRECTED))
    return CausalGraph(names, edges)


def from_causal_graph(graph: CausalGraph, names: Sequence[str]) -> np.ndarray:
    idx = {graph.canonical(n): k for k, n in enumerate(names)}
    A = np.zeros((len(names), len(names)), dtype=bool)
    for u, v, m in graph:
        A[idx[u], idx[v]] = True
        if m is Mark.UNDIRECTED:
            A[idx[v], idx[u]] = True
    return A


def all_dags(n: int):
    """Every DAG on n labelled nodes (brute force; small n only)."""
    pairs = list(itertools.combinations(range(n), 2))
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        D = np.zeros((n, n), dtype=bool)
        for (i, j), s in zip(pairs, states):
            if s == 1:
                D[i, j] = True
            elif s == 2:
                D[j, i] = True
        if is_dag(D):
            yield D
