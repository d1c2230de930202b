"""Pipeline configuration: one declarative YAML/JSON document, overridable by CLI flags."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .discovery.notears import NotearsConfig
from .graph import Variable, check_unique_names
from .verification import ACADEMIC_HOSTS

ALGORITHMS = ("pc", "ges", "notears")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BackendSpec:
    """``kind`` is scripted/http/none for the LLM and fixture/http/none for search."""

    kind: str = "none"
    path: str | None = None
    endpoint: str | None = None
    model: str | None = None
    api_key_env: str | None = None
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CacheSpec:
    dir: str | None = None
    mode: str = "passthrough"


@dataclass(frozen=True)
class PipelineConfig:
    variables: tuple[Variable, ...]
    corpus_threshold: int = 100
    algo: str = "ges"
    significance: float = 0.05
    notears: NotearsConfig = field(default_factory=NotearsConfig)
    alpha: float = 0.5
    beta: float = 0.5
    proposal_alpha: float = 1.0
    pmi_topk: int = 5
    evidence_k: int = 10
    iterations: int = 0
    domain_allowlist: tuple[str, ...] | None = None
    evidence_allowlist: tuple[str, ...] | None = ACADEMIC_HOSTS
    llm: BackendSpec = field(default_factory=BackendSpec)
    search: BackendSpec = field(default_factory=BackendSpec)
    cache: CacheSpec = field(default_factory=CacheSpec)
    templates: dict = field(default_factory=dict)
    output_dir: str = "iriscd-run"
    truth_graph: str | None = None
    seed: int = 0
    max_in_flight: int = 8

    def validate(self) -> "PipelineConfig":
        if not self.variables:
            raise ConfigError("at least one variable is required")
        try:
            check_unique_names(self.variables)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.corpus_threshold < 1:
            raise ConfigError("corpus_threshold must be >= 1")
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"algo must be one of {ALGORITHMS}")
        if not 0 < self.significance < 1:
            raise ConfigError("significance must lie in (0, 1)")
        for name in ("alpha", "beta"):
            if not 0 < getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in (0, 1]")
        if self.proposal_alpha < 0:
            raise ConfigError("proposal_alpha must be >= 0")
        if self.pmi_topk < 0 or self.evidence_k < 1 or self.iterations < 0 or self.max_in_flight < 1:
            raise ConfigError("pmi_topk >= 0, evidence_k >= 1, iterations >= 0 and max_in_flight >= 1 are required")
        n = self.notears
        if n.lambda1 < 0 or n.h_tolerance <= 0 or n.max_outer < 1 or n.rho_init <= 0 or n.rho_growth <= 1 or n.edge_threshold < 0:
            raise ConfigError("invalid NOTEARS hyperparameters")
        if self.cache.mode not in ("record", "replay", "passthrough"):
            raise ConfigError("cache.mode must be record, replay or passthrough")
        if self.cache.mode != "passthrough" and not self.cache.dir:
            raise ConfigError("cache.dir is required for record/replay")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variables"] = [v.to_dict() for v in self.variables]
        for key in ("domain_allowlist", "evidence_allowlist"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "PipelineConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            d["variables"] = tuple(Variable.from_dict(v) for v in d.get("variables", ()))
            d["notears"] = NotearsConfig(**d.get("notears", {}))
            d["llm"] = BackendSpec(**d.get("llm", {}))
            d["search"] = BackendSpec(**d.get("search", {}))
            d["cache"] = CacheSpec(**d.get("cache", {}))
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None
        for key in ("domain_allowlist", "evidence_allowlist"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        cfg = cls(**d)
        if base_dir is not None:
            cfg = cfg.resolve_paths(base_dir)
        return cfg.validate()

    def resolve_paths(self, base: Path) -> "PipelineConfig":
        """Make relative file paths relative to the config file location."""

        def fix(p):
            if p is None:
                return None
            p = Path(p)
            return str(p if p.is_absolute() else (base / p))

        return replace(
            self,
            llm=replace(self.llm, path=fix(self.llm.path)),
            search=replace(self.search, path=fix(self.search.path)),
            cache=replace(self.cache, dir=fix(self.cache.dir)),
            truth_graph=fix(self.truth_graph),
            templates={k: fix(v) for k, v in self.templates.items()},
        )

    def override(self, **changes: Any) -> "PipelineConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes).validate()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    return PipelineConfig.from_dict(doc, base_dir=path.parent)
