"""PC algorithm (order-independent skeleton phase) producing a CPDAG."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..graph import CausalGraph
from ..table import ObservationTable
from . import pdag
from .citest import ci_test

log = logging.getLogger(__name__)

# (x, y, conditioning tuple) -> independent?
IndependenceOracle = Callable[[str, str, tuple], bool]


@dataclass
class PCResult:
    graph: CausalGraph
    sepsets: dict = field(default_factory=dict)
    tests: list = field(default_factory=list)

    def sepsets_json(self) -> list[dict]:
        return [
            {"x": x, "y": y, "sepset": sorted(s)}
            for (x, y), s in sorted(self.sepsets.items())
        ]


def pc_search(names: Sequence[str], independent: IndependenceOracle, max_cond: int | None = None) -> PCResult:
    names = list(names)
    n = len(names)
    A = ~np.eye(n, dtype=bool)
    sepsets: dict[tuple[str, str], frozenset] = {}
    level = 0
    while True:
        snapshot = {i: pdag.adjacents(A, i) for i in range(n)}
        if all(len(snapshot[i]) - 1 < level for i in range(n)):
            break
        if max_cond is not None and level > max_cond:
            break
        for x in range(n):
            for y in snapshot[x]:
                if not A[x, y]:
                    continue
                cands = [k for k in snapshot[x] if k != y]
                if len(cands) < level:
                    continue
                for S in itertools.combinations(cands, level):
                    if independent(names[x], names[y], tuple(names[k] for k in S)):
                        A[x, y] = A[y, x] = False
                        sep = frozenset(names[k] for k in S)
                        sepsets[(names[x], names[y])] = sep
                        sepsets[(names[y], names[x])] = sep
                        break
        level += 1

    # Unshielded colliders.
    for z in range(n):
        adj = pdag.adjacents(A, z)
        for x, y in itertools.combinations(adj, 2):
            if pdag.adjacent(A, x, y):
                continue
            if names[z] in sepsets.get((names[x], names[y]), frozenset()):
                continue
            for a in (x, y):
                if pdag.is_directed(A, z, a):
                    log.debug("conflicting collider orientation %s <- %s skipped", names[a], names[z])
                    continue
                pdag.orient(A, a, z)

    A = pdag.meek_closure(A)
    return PCResult(pdag.to_causal_graph(A, names), sepsets)


def pc_from_table(table: ObservationTable, significance: float = 0.05, max_cond: int | None = None) -> PCResult:
    if len(table.variables) < 2:
        raise ValueError("PC needs at least two variables")
    tests = []

    def independent(x, y, S):
        res = ci_test(table, x, y, S, significance)
        tests.append(res)
        return res.independent

    result = pc_search(table.names, independent, max_cond=max_cond)
    result.tests = tests
    return result


def run_pc(table: ObservationTable, significance: float = 0.05) -> CausalGraph:
    return pc_from_table(table, significance).graph
