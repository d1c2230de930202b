"""Graph and classification evaluation metrics."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from .graph import CausalGraph, name_key


@dataclass(frozen=True)
class GraphEvalReport:
    precision: float
    recall: float
    f1: float
    n_predicted_edges: int
    n_true_edges: int
    nhd: float
    baseline_nhd: float
    nhd_ratio: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    def to_table(self) -> str:
        header = ("P", "R", "F1", "pred_edges", "nhd_ratio")
        row = (
            f"{self.precision:.2f}",
            f"{self.recall:.2f}",
            f"{self.f1:.2f}",
            str(self.n_predicted_edges),
            f"{self.nhd_ratio:.2f}",
        )
        widths = [max(len(h), len(c)) for h, c in zip(header, row)]
        fmt = "  ".join(f"{{:>{w}}}" for w in widths)
        return fmt.format(*header) + "\n" + fmt.format(*row) + "\n"


def _edge_keys(graph: CausalGraph) -> set[tuple[str, str]]:
    return {(name_key(u), name_key(v)) for u, v in graph.directed_edge_set()}


def _n_nodes(predicted: CausalGraph, truth: CausalGraph) -> int:
    return len({name_key(n) for n in predicted.nodes} | {name_key(n) for n in truth.nodes})


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def prf1(predicted: CausalGraph, truth: CausalGraph) -> tuple[float, float, float]:
    pred, true = _edge_keys(predicted), _edge_keys(truth)
    tp = len(pred & true)
    p = tp / len(pred) if pred else 0.0
    r = tp / len(true) if true else 0.0
    return p, r, f1_score(p, r)


def hamming(predicted: CausalGraph, truth: CausalGraph) -> int:
    return len(_edge_keys(predicted) ^ _edge_keys(truth))


def nhd(predicted: CausalGraph, truth: CausalGraph) -> float:
    """Size of the directed-edge symmetric difference over N squared."""
    n = _n_nodes(predicted, truth)
    return hamming(predicted, truth) / (n * n) if n else 0.0


def baseline_nhd(predicted: CausalGraph, truth: CausalGraph) -> float:
    """NHD of a prediction with the same edge count that shares no edge with the truth."""
    n = _n_nodes(predicted, truth)
    p, t = len(_edge_keys(predicted)), len(_edge_keys(truth))
    if n and p + t > n * n - n:
        raise ValueError(
            f"{p} predicted + {t} true edges exceed the {n * n - n} ordered pairs on {n} nodes; "
            "the worst-case baseline is not attainable"
        )
    return (p + t) / (n * n) if n else 0.0


def nhd_ratio(predicted: CausalGraph, truth: CausalGraph) -> float:
    base = baseline_nhd(predicted, truth)
    return nhd(predicted, truth) / base if base > 0 else 0.0


def evaluate_graphs(predicted: CausalGraph, truth: CausalGraph) -> GraphEvalReport:
    p, r, f = prf1(predicted, truth)
    base = baseline_nhd(predicted, truth)
    d = nhd(predicted, truth)
    return GraphEvalReport(
        precision=p,
        recall=r,
        f1=f,
        n_predicted_edges=len(_edge_keys(predicted)),
        n_true_edges=len(_edge_keys(truth)),
        nhd=d,
        baseline_nhd=base,
        nhd_ratio=d / base if base > 0 else 0.0,
    )


def shd(predicted: CausalGraph, truth: CausalGraph) -> int:
    """Structural Hamming distance; a reversed edge counts once."""
    pred, true = _edge_keys(predicted), _edge_keys(truth)
    pairs = {frozenset(e) for e in pred | true}
    dist = 0
    for pair in pairs:
        a, b = sorted(pair)
        if ((a, b) in pred, (b, a) in pred) != ((a, b) in true, (b, a) in true):
            dist += 1
    return dist


def success_rate(trials: Iterable[tuple[str, Iterable[str]]]) -> float:
    """Fraction of (removed variable, proposed names) trials where the removed name was proposed."""
    trials = list(trials)
    if not trials:
        raise ValueError("success_rate needs at least one trial")
    hits = sum(name_key(removed) in {name_key(p) for p in proposed} for removed, proposed in trials)
    return hits / len(trials)


def classification_report(pairs: Sequence[tuple[str, str | None]], labels: Sequence[str]) -> dict:
    """Per-label precision/recall/F1 from (gold, predicted) pairs; None predictions never match."""
    report = {}
    for label in labels:
        tp = sum(g == label and p == label for g, p in pairs)
        fp = sum(g != label and p == label for g, p in pairs)
        fn = sum(g == label and p != label for g, p in pairs)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        report[label] = {"precision": prec, "recall": rec, "f1": f1_score(prec, rec), "support": tp + fn}
    return report
