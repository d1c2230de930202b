"""Claim verification over retrieved evidence, and merging with the statistical graph."""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .backends import BackendError, CompletionRequest, Document, LLMClient, SearchBackend
from .extraction import DOC_CHAR_BUDGET, answer_pattern, clean_token, truncate
from .graph import CausalGraph, EdgeDelta, Mark, Variable, name_key
from .prompts import PromptTemplate, default_template

log = logging.getLogger(__name__)

ACADEMIC_HOSTS = (
    "jstor.org",
    "springer.com",
    "ieee.org",
    "ncbi.nlm.nih.gov",
    "sciencedirect.com",
    "scholar.google.com",
    "arxiv.org",
)
EVIDENCE_K = 10


class Veracity(str, enum.Enum):
    SUPPORTS = "supports"
    REFUTES = "refutes"
    UNRELATED = "unrelated"


class Decision(str, enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    ABSTAIN = "abstain"


@dataclass(frozen=True)
class CausalClaim:
    cause: str
    effect: str

    @property
    def text(self) -> str:
        return f"{self.cause} causes {self.effect}"


def build_claim(cause: str, effect: str) -> CausalClaim:
    if name_key(cause) == name_key(effect):
        raise ValueError(f"a claim needs two distinct variables, got {cause!r} twice")
    return CausalClaim(cause.strip(), effect.strip())


@dataclass(frozen=True)
class VeracityVerdict:
    claim: CausalClaim
    doc_id: str
    label: Veracity
    raw_response: str
    fingerprint: str = ""
    failed: bool = False

    def to_record(self) -> dict:
        return {
            "claim": self.claim.text,
            "doc_id": self.doc_id,
            "label": self.label.value,
            "fingerprint": self.fingerprint,
        }


@dataclass(frozen=True)
class AggregateVerdict:
    claim: CausalClaim
    n_total: int
    n_support: int
    n_refute: int
    n_unrelated: int
    decision: Decision
    alpha: float
    beta: float

    def to_record(self) -> dict:
        return {
            "cause": self.claim.cause,
            "effect": self.claim.effect,
            "n_total": self.n_total,
            "n_support": self.n_support,
            "n_refute": self.n_refute,
            "n_unrelated": self.n_unrelated,
            "decision": self.decision.value,
            "alpha": self.alpha,
            "beta": self.beta,
        }


def _search_terms(var: Variable | str) -> str:
    return var.name if isinstance(var, Variable) else var


def retrieve_evidence(
    cause: Variable | str,
    effect: Variable | str,
    search: SearchBackend,
    k: int = EVIDENCE_K,
    allowlist: Sequence[str] | None = ACADEMIC_HOSTS,
) -> list[Document]:
    """Documents mentioning both terms, from allowlisted hosts, at most ``k``."""
    if k < 1:
        raise ValueError("evidence k must be >= 1")
    hits = search.search((_search_terms(cause), _search_terms(effect)), k, allowlist)
    docs, seen = [], set()
    for hit in hits:
        if hit.url in seen:
            continue
        seen.add(hit.url)
        try:
            doc = search.fetch(hit.url)
        except BackendError as exc:
            log.warning("evidence fetch failed for %s: %s", hit.url, exc)
            continue
        if doc.id not in {d.id for d in docs}:
            docs.append(doc)
        if len(docs) == k:
            break
    return docs


_LABELS = {"true": Veracity.SUPPORTS, "false": Veracity.REFUTES, "unknown": Veracity.UNRELATED}


def parse_veracity(response: str, claim: CausalClaim) -> Veracity:
    matches = answer_pattern("The veracity of claim", claim.text).findall(response or "")
    if not matches:
        return Veracity.UNRELATED
    return _LABELS.get(clean_token(matches[-1]).casefold(), Veracity.UNRELATED)


def build_judge_prompt(claim: CausalClaim, doc: Document, template: PromptTemplate | None = None,
                       budget: int = DOC_CHAR_BUDGET) -> str:
    template = template or default_template("claim_verification")
    return template.render(doc=truncate(doc.text, budget), claim=claim.text)


def judge_claim(claim: CausalClaim, doc: Document, llm: LLMClient,
                template: PromptTemplate | None = None) -> VeracityVerdict:
    req = CompletionRequest(build_judge_prompt(claim, doc, template))
    try:
        raw = llm.complete(req)
    except BackendError as exc:
        log.warning("verification failed for %r on %s: %s", claim.text, doc.id, exc)
        return VeracityVerdict(claim, doc.id, Veracity.UNRELATED, "", req.fingerprint, failed=True)
    return VeracityVerdict(claim, doc.id, parse_veracity(raw, claim), raw, req.fingerprint)


def aggregate(verdicts: Iterable[VeracityVerdict], alpha: float = 0.5, beta: float = 0.5,
              claim: CausalClaim | None = None) -> AggregateVerdict:
    """Accept if supports > alpha * total, else reject if refutes > beta * total, else abstain."""
    if not (0 < alpha <= 1 and 0 < beta <= 1):
        raise ValueError("alpha and beta must lie in (0, 1]")
    verdicts = list(verdicts)
    if claim is None:
        if not verdicts:
            raise ValueError("aggregate needs a claim when there are no verdicts")
        claim = verdicts[0].claim
    n = len(verdicts)
    s = sum(v.label is Veracity.SUPPORTS for v in verdicts)
    r = sum(v.label is Veracity.REFUTES for v in verdicts)
    if n and s > alpha * n:
        decision = Decision.ACCEPT
    elif n and r > beta * n:
        decision = Decision.REJECT
    else:
        decision = Decision.ABSTAIN
    return AggregateVerdict(claim, n, s, r, n - s - r, decision, alpha, beta)


def gather_verdicts(
    claim: CausalClaim,
    cause: Variable | str,
    effect: Variable | str,
    search: SearchBackend,
    llm: LLMClient,
    k: int = EVIDENCE_K,
    allowlist: Sequence[str] | None = ACADEMIC_HOSTS,
    template: PromptTemplate | None = None,
    max_in_flight: int = 8,
) -> list[VeracityVerdict]:
    docs = retrieve_evidence(cause, effect, search, k, allowlist)
    if not docs:
        return []
    with ThreadPoolExecutor(max_workers=max(1, min(max_in_flight, len(docs)))) as pool:
        return list(pool.map(lambda d: judge_claim(claim, d, llm, template), docs))


@dataclass
class VerificationResult:
    graph: CausalGraph
    remove_edges: set = field(default_factory=set)
    verdicts: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)

    @property
    def delta(self) -> EdgeDelta:
        return EdgeDelta(self.graph.directed_edge_set(), self.remove_edges)


def build_verified_graph(
    variables: Sequence[Variable],
    search: SearchBackend,
    llm: LLMClient,
    alpha: float = 0.5,
    beta: float = 0.5,
    k: int = EVIDENCE_K,
    allowlist: Sequence[str] | None = ACADEMIC_HOSTS,
    template: PromptTemplate | None = None,
    max_in_flight: int = 8,
) -> VerificationResult:
    """Judge every ordered pair; accepted pairs form the graph, rejected pairs are removals."""
    variables = list(variables)
    if len(variables) < 2:
        raise ValueError("verification needs at least two variables")
    graph = CausalGraph([v.name for v in variables])
    remove: set[tuple[str, str]] = set()
    all_verdicts, aggregates = [], []
    for ci in variables:
        for ej in variables:
            if ci.key == ej.key:
                continue
            claim = build_claim(ci.name, ej.name)
            try:
                verdicts = gather_verdicts(claim, ci, ej, search, llm, k, allowlist, template, max_in_flight)
            except BackendError as exc:
                log.warning("evidence retrieval failed for %r: %s", claim.text, exc)
                verdicts = []
            agg = aggregate(verdicts, alpha, beta, claim=claim)
            all_verdicts.extend(verdicts)
            aggregates.append(agg)
            if agg.decision is Decision.ACCEPT:
                graph = graph.add_edge(ci.name, ej.name, Mark.DIRECTED)
            elif agg.decision is Decision.REJECT:
                remove.add((ci.name, ej.name))
    return VerificationResult(graph, remove, all_verdicts, aggregates)


def merge_graphs(g_s: CausalGraph, g_v: CausalGraph, remove_edges: Iterable[tuple[str, str]] = ()) -> CausalGraph:
    """Statistical graph plus verified edges (as directed), minus refuted directed pairs."""
    merged = g_s.with_nodes(g_v.nodes)
    for u, v in sorted(g_v.directed_edge_set()):
        merged = merged.add_edge(u, v, Mark.DIRECTED)
    for u, v in sorted(remove_edges):
        if merged.has_node(u) and merged.has_node(v):
            merged = merged.remove_edge(u, v)
    return merged


def merge_conflicts(g_v: CausalGraph, remove_edges: Iterable[tuple[str, str]]) -> list[tuple[str, str]]:
    """Directed pairs both added by verification and listed for removal (removal wins)."""
    added = {(name_key(u), name_key(v)): (u, v) for u, v in g_v.directed_edge_set()}
    return sorted(added[k] for k in {(name_key(u), name_key(v)) for u, v in remove_edges} if k in added)
