"""Query planning by stepwise variable removal, and corpus assembly up to a threshold."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Sequence

from .backends import BackendError, Document, SearchBackend
from .graph import Variable, name_key

log = logging.getLogger(__name__)

MAX_TERM_VARIANTS = 3
MAX_QUERIES = 256
HITS_PER_VARIABLE = 20


@dataclass(frozen=True)
class PlannedQuery:
    terms: tuple[str, ...]
    n_variables: int


@dataclass(frozen=True)
class QueryPlan:
    queries: tuple[PlannedQuery, ...]

    def __len__(self) -> int:
        return len(self.queries)

    def __iter__(self):
        return iter(self.queries)


def generate_queries(
    variables: Sequence[Variable],
    max_variants: int = MAX_TERM_VARIANTS,
    max_queries: int = MAX_QUERIES,
) -> QueryPlan:
    """All-variable conjunction first, then every smaller subset, down to single terms.

    Subsets come in descending size and lexicographic (input-order) position
    within a size; each subset expands into every choice of name or synonym.
    """
    variables = list(variables)
    if not variables:
        raise ValueError("generate_queries needs at least one variable")
    variants = [v.terms[:max_variants] for v in variables]
    out, seen = [], set()
    for size in range(len(variables), 0, -1):
        for subset in itertools.combinations(range(len(variables)), size):
            for choice in itertools.product(*(variants[i] for i in subset)):
                key = tuple(name_key(t) for t in choice)
                if key in seen:
                    continue
                seen.add(key)
                out.append(PlannedQuery(tuple(choice), size))
                if len(out) == max_queries:
                    return QueryPlan(tuple(out))
    return QueryPlan(tuple(out))


def collect_corpus(
    plan: QueryPlan,
    search: SearchBackend,
    threshold: int,
    domain_allowlist: Sequence[str] | None = None,
) -> list[Document]:
    """Run the plan in order, fetching unseen hits until ``threshold`` documents are held."""
    if threshold < 1:
        raise ValueError("corpus threshold must be >= 1")
    corpus: list[Document] = []
    seen_urls: set[str] = set()
    seen_ids: set[str] = set()
    for q in plan:
        k = HITS_PER_VARIABLE * q.n_variables
        hits = search.search(q.terms, k, domain_allowlist)
        for hit in hits:
            if hit.url in seen_urls:
                continue
            seen_urls.add(hit.url)
            try:
                doc = search.fetch(hit.url)
            except BackendError as exc:
                log.warning("skipping %s: %s", hit.url, exc)
                continue
            if doc.id in seen_ids:
                continue
            seen_ids.add(doc.id)
            corpus.append(Document(doc.id, doc.url, doc.text, q.terms, doc.tags))
            if len(corpus) >= threshold:
                return corpus
    if len(corpus) < threshold:
        log.warning("corpus threshold %d not reached; collected %d documents", threshold, len(corpus))
    return corpus
