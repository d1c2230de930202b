"""Stratified G-test of conditional independence for categorical columns."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .. import kernels
from ..table import ObservationTable, TableError

LOW_POWER_ROWS = 5


@dataclass(frozen=True)
class CITestResult:
    x: str
    y: str
    conditioning_set: frozenset
    statistic: float
    degrees_of_freedom: int
    p_value: float
    independent: bool
    n_rows: int = 0
    low_power: bool = False
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "conditioning_set": sorted(self.conditioning_set),
            "statistic": self.statistic,
            "dof": self.degrees_of_freedom,
            "p_value": self.p_value,
            "independent": self.independent,
            "n_rows": self.n_rows,
            "low_power": self.low_power,
            "degenerate": self.degenerate,
        }


def strata_ids(codes: np.ndarray, sizes: np.ndarray) -> tuple[np.ndarray, int]:
    """Mixed-radix id of each row's configuration over the given columns."""
    ids = np.zeros(codes.shape[0], dtype=np.int64)
    n = 1
    for j in range(codes.shape[1]):
        ids = ids * sizes[j] + codes[:, j]
        n *= int(sizes[j])
    return ids, n


def ci_test(table: ObservationTable, x: str, y: str, Z=(), significance: float = 0.05) -> CITestResult:
    """Test x independent of y given Z on the rows complete over {x, y} and Z."""
    Z = [table.variable(z).name for z in Z]
    xv, yv = table.variable(x), table.variable(y)
    if xv.key == yv.key:
        raise ValueError("ci_test needs two distinct variables")
    if any(table.variable(z).key in (xv.key, yv.key) for z in Z):
        raise ValueError("conditioning set must not contain x or y")
    cols = [table.column(xv.name), table.column(yv.name), *(table.column(z) for z in Z)]
    mask = table.complete_mask([xv.name, yv.name, *Z])
    n_rows = int(mask.sum())
    if n_rows == 0:
        raise TableError(f"no complete rows for ci_test({xv.name}, {yv.name} | {Z})")
    codes = table.codes[mask][:, cols]
    sizes = table.domain_sizes()[cols]
    kx, ky = int(sizes[0]), int(sizes[1])
    zset = frozenset(Z)

    if len(np.unique(codes[:, 0])) < 2 or len(np.unique(codes[:, 1])) < 2:
        return CITestResult(xv.name, yv.name, zset, 0.0, (kx - 1) * (ky - 1), 1.0, True,
                            n_rows=n_rows, degenerate=True)

    strata, n_strata = strata_ids(codes[:, 2:], sizes[2:])
    counts = kernels.stratified_counts(codes[:, 0], codes[:, 1], strata, kx, ky, n_strata)
    g, used, min_n = kernels.g_statistic(counts)
    dof = used * (kx - 1) * (ky - 1)
    p = float(chi2.sf(g, dof))
    p = min(max(p, 0.0), 1.0)
    return CITestResult(
        xv.name, yv.name, zset, g, dof, p, p > significance,
        n_rows=n_rows, low_power=min_n < LOW_POWER_ROWS,
    )
