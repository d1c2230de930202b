"""Linear NOTEARS: least squares with L1 under the trace-exponential acyclicity constraint."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.optimize as sopt

from .. import kernels
from ..graph import CausalGraph, Mark

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NotearsConfig:
    lambda1: float = 0.1
    h_tolerance: float = 1e-8
    max_outer: int = 100
    rho_init: float = 1.0
    rho_growth: float = 10.0
    rho_max: float = 1e16
    edge_threshold: float = 0.3


@dataclass
class NotearsResult:
    W: np.ndarray
    graph: CausalGraph
    h: float
    converged: bool
    trajectory: list = field(default_factory=list)
    acyclic: bool = True


def notears_h(W: np.ndarray) -> tuple[float, np.ndarray]:
    """h(W) = tr(exp(W * W)) - d and its gradient exp(W * W)^T * 2W."""
    W = np.asarray(W, dtype=np.float64)
    if not np.all(np.isfinite(W)):
        raise ValueError("notears_h: W has non-finite entries")
    E = kernels.expm(W * W)
    h = float(np.trace(E)) - W.shape[0]
    return h, E.T * W * 2.0


def threshold_graph(W: np.ndarray, names: Sequence[str], threshold: float) -> CausalGraph:
    edges = [
        (names[i], names[j], Mark.DIRECTED)
        for i in range(W.shape[0])
        for j in range(W.shape[1])
        if i != j and abs(W[i, j]) > threshold
    ]
    return CausalGraph(names, edges)


def run_notears(X: np.ndarray, config: NotearsConfig | None = None, names: Sequence[str] | None = None) -> NotearsResult:
    cfg = config or NotearsConfig()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or not np.all(np.isfinite(X)):
        raise ValueError("run_notears expects a finite 2-D data matrix")
    n, d = X.shape
    names = list(names) if names is not None else [f"x{i + 1}" for i in range(d)]
    if len(names) != d:
        raise ValueError("names must match the number of columns")
    if n < d:
        warnings.warn(f"NOTEARS with fewer samples ({n}) than variables ({d})", RuntimeWarning, stacklevel=2)
    X = X - X.mean(axis=0)
    XtX = X.T @ X

    def unpack(w):
        return (w[: d * d] - w[d * d:]).reshape(d, d)

    def objective(w, rho, alpha):
        W = unpack(w)
        R = X - X @ W
        loss = 0.5 / n * float((R * R).sum())
        g_loss = (XtX @ W - XtX) / n
        h, g_h = notears_h(W)
        obj = loss + 0.5 * rho * h * h + alpha * h + cfg.lambda1 * w.sum()
        g_smooth = g_loss + (rho * h + alpha) * g_h
        grad = np.concatenate([(g_smooth + cfg.lambda1).ravel(), (-g_smooth + cfg.lambda1).ravel()])
        return obj, grad

    bounds = [(0, 0) if i == j else (0, None) for _ in range(2) for i in range(d) for j in range(d)]
    w = np.zeros(2 * d * d)
    rho, alpha, h = cfg.rho_init, 0.0, np.inf
    trajectory = []
    converged = False
    for it in range(cfg.max_outer):
        w_new, h_new = w, h
        while rho < cfg.rho_max:
            sol = sopt.minimize(objective, w, args=(rho, alpha), method="L-BFGS-B", jac=True, bounds=bounds)
            w_new = sol.x
            h_new, _ = notears_h(unpack(w_new))
            if h_new > 0.25 * h:
                rho *= cfg.rho_growth
            else:
                break
        w, h = w_new, h_new
        alpha += rho * h
        trajectory.append({"iteration": it, "rho": rho, "alpha": alpha, "h": h})
        if h <= cfg.h_tolerance:
            converged = True
            break
        if rho >= cfg.rho_max:
            break

    W = unpack(w)
    np.fill_diagonal(W, 0.0)
    if not converged:
        log.warning("NOTEARS stopped before reaching h <= %g (h = %g)", cfg.h_tolerance, h)
    graph = threshold_graph(W, names, cfg.edge_threshold)
    acyclic = graph.is_acyclic()
    if converged and not acyclic:
        log.warning("thresholded NOTEARS graph contains a cycle")
    return NotearsResult(W, graph, float(h), converged, trajectory, acyclic)
