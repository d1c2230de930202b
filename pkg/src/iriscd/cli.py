"""Command-line entry point: run, record, replay, evaluate, ablate."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from . import graph as G
from .backends import BackendError
from .config import CacheSpec, ConfigError, PipelineConfig, load_config
from .graph import GraphError
from .pipeline import ablate_missing_variable, evaluate_files, run_pipeline

EXIT_OK, EXIT_CONFIG, EXIT_BACKEND, EXIT_INVARIANT = 0, 1, 2, 3


def _csv(value: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in value.split(",") if s.strip())


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="YAML or JSON pipeline config")
    p.add_argument("--output", help="output directory")
    p.add_argument("--corpus-threshold", type=int)
    p.add_argument("--fixture-corpus", help="JSONL corpus for the fixture search backend")
    p.add_argument("--scripted-llm", help="JSON transcript for the scripted LLM backend")
    p.add_argument("--domain-allowlist", type=_csv, help="comma-separated hosts for corpus collection")
    p.add_argument("--algo", choices=("pc", "ges", "notears"))
    p.add_argument("--significance", type=float)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--edge-threshold", type=float)
    p.add_argument("--h-tol", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--evidence-k", type=int)
    p.add_argument("--proposal-alpha", type=float)
    p.add_argument("--pmi-topk", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--cache-dir")
    p.add_argument("--truth", help="ground-truth graph-json for per-iteration evaluation")


def _apply_flags(cfg: PipelineConfig, a: argparse.Namespace, cache_mode: str | None = None) -> PipelineConfig:
    notears = cfg.notears
    nt = {"lambda1": a.lambda1, "edge_threshold": a.edge_threshold, "h_tolerance": a.h_tol}
    nt = {k: v for k, v in nt.items() if v is not None}
    if nt:
        notears = replace(notears, **nt)
    search, llm, cache = cfg.search, cfg.llm, cfg.cache
    if a.fixture_corpus:
        search = replace(search, kind="fixture", path=a.fixture_corpus)
    if a.scripted_llm:
        llm = replace(llm, kind="scripted", path=a.scripted_llm)
    if a.cache_dir:
        cache = replace(cache, dir=a.cache_dir)
    if cache_mode:
        cache = CacheSpec(cache.dir, cache_mode)
    return cfg.override(
        output_dir=a.output, corpus_threshold=a.corpus_threshold, domain_allowlist=a.domain_allowlist,
        algo=a.algo, significance=a.significance, alpha=a.alpha, beta=a.beta, evidence_k=a.evidence_k,
        proposal_alpha=a.proposal_alpha, pmi_topk=a.pmi_topk, iterations=a.iterations, seed=a.seed,
        truth_graph=a.truth, notears=notears, search=search, llm=llm, cache=cache,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iriscd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (
        ("run", "run the pipeline with the configured backends"),
        ("record", "run the pipeline, recording every backend response into the cache"),
        ("replay", "re-run the pipeline from the cache only; a cache miss is an error"),
    ):
        _add_run_flags(sub.add_parser(name, help=help_))

    ev = sub.add_parser("evaluate", help="compare a predicted graph against a ground-truth graph")
    ev.add_argument("predicted")
    ev.add_argument("truth")
    ev.add_argument("--json", action="store_true", help="print the report as JSON")

    ab = sub.add_parser("ablate", help="missing-variable success rate over a ground-truth graph")
    ab.add_argument("truth_file", metavar="truth")
    _add_run_flags(ab)
    ab.add_argument("--report", help="write the JSON report here as well")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "evaluate":
            report = evaluate_files(args.predicted, args.truth)
            print(report.to_json() if args.json else report.to_table(), end="")
            return EXIT_OK

        mode = {"record": "record", "replay": "replay"}.get(args.command)
        cfg = _apply_flags(load_config(args.config), args, mode)
        if args.command == "ablate":
            report = ablate_missing_variable(G.load_graph(args.truth_file), cfg)
            text = json.dumps(report, indent=2, sort_keys=True) + "\n"
            if args.report:
                with open(args.report, "w", encoding="utf-8") as fh:
                    fh.write(text)
            print(text, end="")
            return EXIT_OK

        manifest = run_pipeline(cfg)
        print(f"final graph: {cfg.output_dir}/{manifest['final_graph']}")
        return EXIT_OK
    except (ConfigError, GraphError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except AssertionError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
