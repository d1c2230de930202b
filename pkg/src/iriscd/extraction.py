"""Per-document value extraction with a completion backend."""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from .backends import BackendError, CompletionRequest, Document, LLMClient
from .graph import Variable
from .metrics import classification_report
from .prompts import PromptTemplate, default_template
from .table import MISSING, ObservationTable

log = logging.getLogger(__name__)

DOC_CHAR_BUDGET = 24000
MAX_IN_FLIGHT = 8
QUOTES = "'‘’\"“”`"
_LEAD = QUOTES + "*([{<_ "
_TRAIL = QUOTES + "*)]}>_.,;:!? "


def truncate(text: str, budget: int = DOC_CHAR_BUDGET) -> str:
    return text if len(text) <= budget else text[:budget]


def _value_meanings(var: Variable) -> str:
    if var.value_descriptions:
        return "\n".join(f"'{lbl}': {var.value_descriptions[lbl]}" for lbl in var.domain if lbl in var.value_descriptions) + "\n"
    return ""


def build_value_prompt(
    doc: Document,
    var: Variable,
    template: PromptTemplate | None = None,
    budget: int = DOC_CHAR_BUDGET,
) -> str:
    template = template or default_template("value_extraction")
    return template.render(
        doc=truncate(doc.text, budget),
        var=var.name,
        description=var.description or f"whether '{var.name}' applies according to the document",
        labels=", ".join(var.domain),
        value_meanings=_value_meanings(var),
    )


def answer_pattern(lead: str, subject: str) -> re.Pattern:
    """Regex for ``<lead> '<subject>' is <token>`` tolerant of quote style and spacing."""
    q = f"[{re.escape(QUOTES)}]?"
    words = r"\s+".join(re.escape(w) for w in lead.split())
    subj = r"\s+".join(re.escape(w) for w in subject.split())
    return re.compile(rf"{words}\s+{q}\s*{subj}\s*{q}\s+is\s+(\S+)", re.IGNORECASE)


def clean_token(token: str) -> str:
    return token.lstrip(_LEAD).rstrip(_TRAIL)


def parse_value(response: str, var: Variable) -> str | None:
    """Domain label named in the last answer sentence, or Missing."""
    matches = answer_pattern("The value of", var.name).findall(response or "")
    if not matches:
        return MISSING
    token = clean_token(matches[-1]).casefold()
    for label in var.domain:
        if label.casefold() == token:
            return label
    return MISSING


def extract_table(
    docs: Sequence[Document],
    variables: Sequence[Variable],
    llm: LLMClient,
    template: PromptTemplate | None = None,
    budget: int = DOC_CHAR_BUDGET,
    max_in_flight: int = MAX_IN_FLIGHT,
) -> ObservationTable:
    """One completion per (document, variable); failed or unparseable cells stay Missing."""
    if not docs or not variables:
        raise ValueError("extract_table needs at least one document and one variable")
    template = template or default_template("value_extraction")
    table = ObservationTable(variables, [d.id for d in docs])
    jobs = [(d, v) for d in docs for v in variables]

    def run(job):
        d, v = job
        req = CompletionRequest(build_value_prompt(d, v, template, budget))
        try:
            return parse_value(llm.complete(req), v)
        except BackendError as exc:
            log.warning("extraction failed for doc %s, variable %s: %s", d.id, v.name, exc)
            return MISSING

    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        values = list(pool.map(run, jobs))
    for (d, v), value in zip(jobs, values):
        table.set_cell(d.id, v.name, value)
    return table


def evaluate_extraction(gold: ObservationTable, predicted: ObservationTable) -> dict:
    """Per-variable, per-label precision/recall/F1 of predicted cells against gold cells.

    Rows are matched by document id; gold-Missing cells are skipped and a
    predicted Missing counts as a miss for the gold label.
    """
    out = {}
    for var in gold.variables:
        pairs = []
        for doc_id in gold.doc_ids:
            g = gold.get(doc_id, var.name)
            if g is MISSING:
                continue
            p = predicted.get(doc_id, var.name) if doc_id in predicted.doc_ids else MISSING
            pairs.append((g, p))
        out[var.name] = classification_report(pairs, var.domain)
    return out
