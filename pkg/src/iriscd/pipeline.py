"""End-to-end runs: collect, extract, discover, verify, merge, propose, repeat."""

from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import graph as G
from .backends import (
    BackendError,
    CachedLLM,
    CachedSearch,
    CacheMode,
    CountingLLM,
    Document,
    FixtureSearch,
    HTTPChatLLM,
    HTTPSearch,
    ReplayCache,
    ScriptedLLM,
    SynonymRegistry,
)
from .config import ConfigError, PipelineConfig
from .discovery import ges_search, pc_from_table, run_notears
from .extraction import extract_table
from .graph import CausalGraph, Variable, name_key
from .metrics import evaluate_graphs, success_rate
from .prompts import load_template
from .proposal import propose
from .retrieval import collect_corpus, generate_queries
from .table import ObservationTable, TableError, encode_numeric
from .verification import build_verified_graph, merge_conflicts, merge_graphs

log = logging.getLogger(__name__)


class InvariantViolation(AssertionError):
    pass


@dataclass
class Backends:
    llm: object
    search: object
    synonyms: SynonymRegistry
    llm_counter: CountingLLM
    cache: ReplayCache | None = None

    def stats(self) -> dict:
        out = {
            "llm_calls": self.llm_counter.calls,
            "llm_failures": self.llm_counter.failures,
            "search_calls": dict(getattr(self.search, "calls", {})),
        }
        if self.cache is not None:
            out["cache"] = self.cache.stats()
        return out


def build_backends(cfg: PipelineConfig) -> Backends:
    synonyms = SynonymRegistry()
    replaying = cfg.cache.mode == CacheMode.REPLAY.value

    llm = None
    spec = cfg.llm
    if spec.kind == "scripted":
        if not spec.path:
            raise ConfigError("scripted LLM needs llm.path")
        llm = ScriptedLLM.from_file(spec.path)
    elif spec.kind == "http":
        if not (spec.endpoint and spec.model):
            raise ConfigError("http LLM needs llm.endpoint and llm.model")
        llm = HTTPChatLLM(spec.endpoint, spec.model, api_key_env=spec.api_key_env or "IRISCD_LLM_API_KEY", **spec.options)
    elif spec.kind != "none":
        raise ConfigError(f"unknown llm kind {spec.kind!r}")

    search = None
    spec = cfg.search
    if spec.kind == "fixture":
        if not spec.path:
            raise ConfigError("fixture search needs search.path")
        search = FixtureSearch.from_jsonl(spec.path, synonyms)
    elif spec.kind == "http":
        if not spec.endpoint:
            raise ConfigError("http search needs search.endpoint")
        search = HTTPSearch(spec.endpoint, api_key_env=spec.api_key_env or "IRISCD_SEARCH_API_KEY",
                            synonyms=synonyms, **spec.options)
    elif spec.kind != "none":
        raise ConfigError(f"unknown search kind {spec.kind!r}")

    cache = None
    if cfg.cache.mode != CacheMode.PASSTHROUGH.value:
        cache = ReplayCache(cfg.cache.dir, cfg.cache.mode)
        llm = CachedLLM(None if replaying else llm, cache)
        search = CachedSearch(None if replaying else search, cache)
    if llm is None or search is None:
        raise ConfigError("both an LLM and a search backend are required outside replay mode")
    counter = CountingLLM(llm)
    return Backends(counter, search, synonyms, counter, cache)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _jsonl(records) -> str:
    return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in records)


def _usable_subtable(table: ObservationTable) -> ObservationTable | None:
    keep = [j for j in range(len(table.variables)) if (table.codes[:, j] >= 0).any()]
    if len(keep) < 2:
        return None
    sub = ObservationTable([table.variables[j] for j in keep], table.doc_ids)
    sub.codes[:] = table.codes[:, keep]
    return sub


def statistical_graph(table: ObservationTable | None, variables: Sequence[Variable], cfg: PipelineConfig) -> tuple[CausalGraph, dict]:
    empty = CausalGraph([v.name for v in variables])
    if table is None:
        return empty, {"skipped": "empty corpus"}
    sub = _usable_subtable(table)
    if sub is None:
        return empty, {"skipped": "fewer than two observed variables"}
    try:
        if cfg.algo == "pc":
            res = pc_from_table(sub, cfg.significance)
            g, trace = res.graph, {"sepsets": res.sepsets_json()}
        elif cfg.algo == "ges":
            res = ges_search(sub)
            g, trace = res.graph, {"operators": res.trace, "score": res.score}
        else:
            X = encode_numeric(sub)
            res = run_notears(X, cfg.notears, names=sub.names)
            g = res.graph
            trace = {"trajectory": res.trajectory, "converged": res.converged, "h": res.h, "acyclic": res.acyclic}
    except TableError as exc:
        log.warning("statistical discovery skipped: %s", exc)
        return empty, {"skipped": str(exc)}
    if any(u == v for u, v in g.directed_edge_set()):
        raise InvariantViolation("statistical graph has a self-loop")
    return g.with_nodes(empty.nodes), trace


class _Timer:
    def __init__(self):
        self.timings: dict[str, float] = {}

    @contextmanager
    def __call__(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0


def run_pipeline(cfg: PipelineConfig, backends: Backends | None = None) -> dict:
    """Run every iteration, writing artifacts under ``cfg.output_dir``; returns the manifest."""
    cfg.validate()
    np.random.seed(cfg.seed)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    backends = backends or build_backends(cfg)
    templates = {name: load_template(name, path) for name, path in cfg.templates.items()}
    timer = _Timer()
    variables = list(cfg.variables)
    backends.synonyms.register_variables(variables)
    truth = G.load_graph(cfg.truth_graph) if cfg.truth_graph else None
    manifest: dict = {"config": cfg.to_dict(), "iterations": [], "timings": timer.timings}
    final = None

    try:
        for it in range(cfg.iterations + 1):
            it_dir = out / f"iter_{it}"
            rec: dict = {"iteration": it, "variables": [v.name for v in variables], "artifacts": {}}
            manifest["iterations"].append(rec)

            def artifact(name, text):
                _write(it_dir / name, text)
                rec["artifacts"][name.split(".")[0]] = str((it_dir / name).relative_to(out))

            with timer(f"iter_{it}.collect"):
                plan = generate_queries(variables)
                corpus = collect_corpus(plan, backends.search, cfg.corpus_threshold, cfg.domain_allowlist)
            rec["corpus"] = {
                "queries": len(plan),
                "documents": len(corpus),
                "threshold": cfg.corpus_threshold,
                "shortfall": max(0, cfg.corpus_threshold - len(corpus)),
            }
            artifact("corpus.jsonl", _jsonl(d.to_record() for d in corpus))

            table = None
            if corpus:
                with timer(f"iter_{it}.extract"):
                    table = extract_table(corpus, variables, backends.llm,
                                          templates.get("value_extraction"), max_in_flight=cfg.max_in_flight)
                rec["missing_cells"] = table.missing_counts()
                artifact("table.csv", table.to_csv())

            with timer(f"iter_{it}.statistical"):
                g_s, trace = statistical_graph(table, variables, cfg)
            rec["statistical"] = {"algo": cfg.algo, **trace}
            artifact("graph_statistical.json", G.to_json(g_s))

            with timer(f"iter_{it}.verify"):
                ver = build_verified_graph(
                    variables, backends.search, backends.llm, cfg.alpha, cfg.beta, cfg.evidence_k,
                    cfg.evidence_allowlist, templates.get("claim_verification"), cfg.max_in_flight,
                )
            artifact("graph_verified.json", G.to_json(ver.graph))
            artifact("verdicts.jsonl", _jsonl(v.to_record() for v in ver.verdicts))
            artifact("aggregates.jsonl", _jsonl(a.to_record() for a in ver.aggregates))
            rec["remove_edges"] = sorted([list(e) for e in ver.remove_edges])

            g_hat = merge_graphs(g_s, ver.graph, ver.remove_edges)
            rec["merge_conflicts"] = [list(e) for e in merge_conflicts(ver.graph, ver.remove_edges)]
            if g_hat.directed_edge_set() & set(ver.remove_edges):
                raise InvariantViolation("merged graph still holds a removed edge")
            artifact("graph.json", G.to_json(g_hat))
            artifact("graph.dot", G.to_dot(g_hat))
            if truth is not None:
                rec["evaluation"] = json.loads(evaluate_graphs(g_hat, truth).to_json())
            final = g_hat

            if it < cfg.iterations:
                with timer(f"iter_{it}.propose"):
                    prop = propose(
                        corpus, variables, backends.search, backends.llm, cfg.proposal_alpha, cfg.pmi_topk,
                        cfg.evidence_k, cfg.evidence_allowlist, templates, cfg.max_in_flight,
                    )
                artifact("candidates.jsonl", _jsonl(c.to_record() for c in prop.candidates))
                artifact("proposal_verdicts.jsonl", _jsonl(v.to_record() for v in prop.verdicts))
                rec["proposed"] = [c.name for c in prop.added]
                if not {v.key for v in variables} <= {v.key for v in prop.variables}:
                    raise InvariantViolation("proposal dropped an initial variable")
                variables = prop.variables
                backends.synonyms.register_variables(variables)

        _write(out / "final_graph.json", G.to_json(final))
        _write(out / "final_graph.dot", G.to_dot(final))
        manifest["final_graph"] = "final_graph.json"
        manifest["final_variables"] = [v.to_dict() for v in variables]
    finally:
        manifest["backend_stats"] = backends.stats()
        _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest


def evaluate_files(predicted_path, truth_path):
    return evaluate_graphs(G.load_graph(predicted_path), G.load_graph(truth_path))


def ablate_missing_variable(truth: CausalGraph, cfg: PipelineConfig, backends: Backends | None = None) -> dict:
    """Drop each node in turn and check whether the proposal stage recovers it."""
    nodes = sorted(truth.nodes, key=name_key)
    if len(nodes) < 2:
        raise ValueError("ablation needs a truth graph with at least two nodes")
    backends = backends or build_backends(cfg)
    defined = {v.key: v for v in cfg.variables}
    templates = {name: load_template(name, path) for name, path in cfg.templates.items()}
    trials = []
    for removed in nodes:
        initial = [
            defined.get(name_key(n)) or Variable(n, domain=("True", "False"))
            for n in nodes if n != removed
        ]
        backends.synonyms.register_variables(initial)
        corpus = collect_corpus(generate_queries(initial), backends.search, cfg.corpus_threshold, cfg.domain_allowlist)
        prop = propose(
            corpus, initial, backends.search, backends.llm, cfg.proposal_alpha, cfg.pmi_topk,
            cfg.evidence_k, cfg.evidence_allowlist, templates, cfg.max_in_flight,
        )
        proposed = [c.name for c in prop.added]
        trials.append({
            "removed": removed,
            "proposed": proposed,
            "hit": name_key(removed) in {name_key(p) for p in proposed},
            "documents": len(corpus),
        })
    rate = success_rate((t["removed"], t["proposed"]) for t in trials)
    return {"trials": trials, "successes": sum(t["hit"] for t in trials), "total": len(trials), "success_rate": rate}
