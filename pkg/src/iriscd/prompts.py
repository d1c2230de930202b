"""Prompt templates with named slots; defaults ship in ``iriscd/templates``."""

from __future__ import annotations

import string
from dataclasses import dataclass
from importlib import resources

SLOTS = {
    "value_extraction": {"doc", "var", "description", "labels", "value_meanings"},
    "claim_verification": {"doc", "claim"},
    "variable_abstraction": {"doc", "initial_variables"},
}


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    text: str

    def __post_init__(self):
        fields = {f for _, f, _, _ in string.Formatter().parse(self.text) if f}
        unknown = fields - SLOTS.get(self.name, fields)
        if unknown:
            raise ValueError(f"template {self.name!r} uses unknown slots {sorted(unknown)}")

    def render(self, **values: str) -> str:
        return self.text.format_map(values)


def default_template(name: str) -> PromptTemplate:
    text = resources.files("iriscd").joinpath("templates", f"{name}.txt").read_text(encoding="utf-8")
    return PromptTemplate(name, text)


def load_template(name: str, path=None) -> PromptTemplate:
    """Template from ``path`` (literal braces doubled), or the packaged default."""
    if path is None:
        return default_template(name)
    with open(path, encoding="utf-8") as fh:
        return PromptTemplate(name, fh.read())
