"""Missing-variable proposal: abstract candidates from documents, then select them."""

from __future__ import annotations

import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .backends import BackendError, CompletionRequest, Document, LLMClient, SearchBackend
from .extraction import DOC_CHAR_BUDGET, truncate
from .graph import Variable, name_key
from .prompts import PromptTemplate, default_template
from .verification import ACADEMIC_HOSTS, EVIDENCE_K, Veracity, build_claim, gather_verdicts

log = logging.getLogger(__name__)

NO_PMI = float("-inf")
_VAR_MARKER = re.compile(r"<var>(.*?)</var>", re.IGNORECASE | re.DOTALL)


@dataclass
class ProposalCandidate:
    name: str
    source_doc_ids: set = field(default_factory=set)
    verification_accepted: bool = False
    pmi_scores: dict = field(default_factory=dict)
    routes: set = field(default_factory=set)

    @property
    def key(self) -> str:
        return name_key(self.name)

    @property
    def aggregate_pmi(self) -> float:
        return sum(s for s in self.pmi_scores.values() if math.isfinite(s))

    @property
    def has_finite_pmi(self) -> bool:
        return any(math.isfinite(s) for s in self.pmi_scores.values())

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "sources": sorted(self.source_doc_ids),
            "routes": sorted(self.routes),
            "verification_accepted": self.verification_accepted,
            "pmi_scores": {k: (v if math.isfinite(v) else None) for k, v in sorted(self.pmi_scores.items())},
            "aggregate_pmi": self.aggregate_pmi,
        }


def build_abstraction_prompt(doc: Document, initial: Sequence[Variable],
                             template: PromptTemplate | None = None, budget: int = DOC_CHAR_BUDGET) -> str:
    template = template or default_template("variable_abstraction")
    return template.render(doc=truncate(doc.text, budget), initial_variables=", ".join(v.name for v in initial))


def parse_abstraction(response: str) -> str | None:
    matches = _VAR_MARKER.findall(response or "")
    if not matches:
        return None
    name = " ".join(matches[-1].split()).strip(" '\"‘’“”.")
    return name or None


def abstract_variable(doc: Document, initial: Sequence[Variable], llm: LLMClient,
                      template: PromptTemplate | None = None) -> str | None:
    try:
        raw = llm.complete(CompletionRequest(build_abstraction_prompt(doc, initial, template)))
    except BackendError as exc:
        log.warning("abstraction failed for %s: %s", doc.id, exc)
        return None
    return parse_abstraction(raw)


def normalize_candidates(raw: Iterable[tuple[str, str]], initial: Sequence[Variable] = ()) -> list[ProposalCandidate]:
    """Merge (name, doc_id) pairs by normalized name, dropping names of known variables."""
    taken = {name_key(t) for v in initial for t in v.terms}
    by_key: dict[str, ProposalCandidate] = {}
    for name, doc_id in raw:
        if not name or not name.strip():
            continue
        key = name_key(name)
        if key in taken:
            continue
        cand = by_key.get(key)
        if cand is None:
            cand = by_key[key] = ProposalCandidate(" ".join(name.split()))
        if doc_id is not None:
            cand.source_doc_ids.add(doc_id)
    return list(by_key.values())


def select_by_verification(
    candidates: Sequence[ProposalCandidate],
    initial: Sequence[Variable],
    search: SearchBackend,
    llm: LLMClient,
    alpha: float = 1.0,
    k: int = EVIDENCE_K,
    allowlist: Sequence[str] | None = ACADEMIC_HOSTS,
    template: PromptTemplate | None = None,
    ledger: list | None = None,
) -> list[ProposalCandidate]:
    """Accept a candidate when, for some initial variable and direction, supports > alpha * refutes."""
    accepted = []
    for cand in candidates:
        for var in initial:
            for cause, effect in ((cand.name, var), (var, cand.name)):
                cause_name = cause.name if isinstance(cause, Variable) else cause
                effect_name = effect.name if isinstance(effect, Variable) else effect
                claim = build_claim(cause_name, effect_name)
                try:
                    verdicts = gather_verdicts(claim, cause, effect, search, llm, k, allowlist, template)
                except BackendError as exc:
                    log.warning("proposal evidence failed for %r: %s", claim.text, exc)
                    verdicts = []
                if ledger is not None:
                    ledger.extend(verdicts)
                if not verdicts:
                    continue
                s = sum(v.label is Veracity.SUPPORTS for v in verdicts)
                r = sum(v.label is Veracity.REFUTES for v in verdicts)
                if s > alpha * r:
                    cand.verification_accepted = True
            if cand.verification_accepted:
                break
        if cand.verification_accepted:
            cand.routes.add("verification")
            accepted.append(cand)
    return accepted


def pmi_from_counts(o_ij: int, o_i: int, o_j: int) -> float:
    """log(o_ij / (o_i * o_j)); the corpus-size constant cancels."""
    if o_ij <= 0 or o_i <= 0 or o_j <= 0:
        return NO_PMI
    return math.log(o_ij) - math.log(o_i) - math.log(o_j)


def pmi(z_i: str, z_j: str, search: SearchBackend) -> float:
    try:
        o_ij = search.count((z_i, z_j))
        o_i = search.count((z_i,))
        o_j = search.count((z_j,))
    except BackendError as exc:
        log.warning("count query failed for (%s, %s): %s", z_i, z_j, exc)
        return NO_PMI
    return pmi_from_counts(o_ij, o_i, o_j)


def select_by_pmi(
    candidates: Sequence[ProposalCandidate],
    initial: Sequence[Variable],
    search: SearchBackend,
    k: int,
    max_in_flight: int = 8,
) -> list[ProposalCandidate]:
    """Top-k candidates by summed finite PMI against the initial variables."""
    if k < 0:
        raise ValueError("k must be >= 0")
    jobs = [(c, v) for c in candidates for v in initial]
    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        scores = list(pool.map(lambda job: pmi(job[0].name, job[1].name, search), jobs))
    for (c, v), s in zip(jobs, scores):
        c.pmi_scores[v.name] = s
    ranked = sorted(candidates, key=lambda c: (not c.has_finite_pmi, -c.aggregate_pmi, c.key))
    chosen = ranked[: min(k, len(ranked))]
    for c in chosen:
        c.routes.add("pmi")
    return chosen


def new_variable(name: str) -> Variable:
    return Variable(
        name=name,
        description=f"the existence of {name} can be inferred from the document",
        domain=("True", "False"),
    )


@dataclass
class ProposalResult:
    variables: list
    candidates: list
    added: list
    verdicts: list = field(default_factory=list)


def propose(
    corpus: Sequence[Document],
    initial: Sequence[Variable],
    search: SearchBackend,
    llm: LLMClient,
    alpha: float = 1.0,
    pmi_k: int = 5,
    evidence_k: int = EVIDENCE_K,
    allowlist: Sequence[str] | None = ACADEMIC_HOSTS,
    templates: dict | None = None,
    max_in_flight: int = 8,
) -> ProposalResult:
    """Initial variables plus candidates accepted by verification or ranked top-k by PMI."""
    templates = templates or {}
    initial = list(initial)
    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        names = list(pool.map(
            lambda d: abstract_variable(d, initial, llm, templates.get("variable_abstraction")), corpus
        ))
    candidates = normalize_candidates(
        ((n, d.id) for n, d in zip(names, corpus) if n is not None), initial
    )
    ledger: list = []
    verified = select_by_verification(
        candidates, initial, search, llm, alpha, evidence_k, allowlist,
        templates.get("claim_verification"), ledger,
    )
    by_pmi = select_by_pmi(candidates, initial, search, pmi_k, max_in_flight)
    chosen = {c.key for c in verified} | {c.key for c in by_pmi}
    added = [c for c in candidates if c.key in chosen]
    variables = initial + [new_variable(c.name) for c in added]
    return ProposalResult(variables, candidates, added, ledger)
