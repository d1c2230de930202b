"""Variables and directed (possibly cyclic) causal graphs."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping


def name_key(name: str) -> str:
    """Comparison key for variable names: trimmed and case-folded."""
    return " ".join(name.split()).casefold()


@dataclass(frozen=True)
class Variable:
    name: str
    description: str = ""
    domain: tuple[str, ...] = ("True", "False")
    synonyms: tuple[str, ...] = ()
    value_descriptions: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        name = self.name.strip() if isinstance(self.name, str) else ""
        if not name:
            raise ValueError("variable name must be a non-empty string")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "domain", tuple(str(v) for v in self.domain))
        object.__setattr__(self, "synonyms", tuple(s.strip() for s in self.synonyms if s.strip()))
        object.__setattr__(self, "value_descriptions", dict(self.value_descriptions))
        if len(self.domain) < 2:
            raise ValueError(f"variable {name!r}: domain needs at least 2 labels")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError(f"variable {name!r}: domain labels must be distinct")
        unknown = set(self.value_descriptions) - set(self.domain)
        if unknown:
            raise ValueError(f"variable {name!r}: descriptions for unknown labels {sorted(unknown)}")

    @property
    def key(self) -> str:
        return name_key(self.name)

    @property
    def terms(self) -> tuple[str, ...]:
        """Name followed by synonyms, deduplicated case-insensitively."""
        seen, out = set(), []
        for t in (self.name, *self.synonyms):
            if name_key(t) not in seen:
                seen.add(name_key(t))
                out.append(t)
        return tuple(out)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "description": self.description,
            "domain": list(self.domain),
            "synonyms": list(self.synonyms),
        }
        if self.value_descriptions:
            d["value_descriptions"] = dict(self.value_descriptions)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Variable":
        return cls(
            name=d["name"],
            description=d.get("description", ""),
            domain=tuple(d.get("domain", ("True", "False"))),
            synonyms=tuple(d.get("synonyms", ())),
            value_descriptions=d.get("value_descriptions", {}),
        )


def check_unique_names(variables: Iterable[Variable]) -> None:
    seen: dict[str, str] = {}
    for v in variables:
        if v.key in seen:
            raise ValueError(f"duplicate variable name {v.name!r} (clashes with {seen[v.key]!r})")
        seen[v.key] = v.name


class Mark(str, enum.Enum):
    DIRECTED = "directed"
    UNDIRECTED = "undirected"


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeDelta:
    add: frozenset = frozenset()
    remove: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "add", frozenset(self.add))
        object.__setattr__(self, "remove", frozenset(self.remove))
        if self.add & self.remove:
            raise ValueError(f"edges both added and removed: {sorted(self.add & self.remove)}")


class CausalGraph:
    """Directed graph over variable names with directed or undirected edge marks.

    Values are treated as immutable: ``add_edge``/``remove_edge``/``add_node``
    return new graphs. Names are matched case-insensitively after trimming and
    stored with their first-seen casing. An undirected edge is stored once, with
    endpoints in key order, and reads as both orientations.
    """

    __slots__ = ("_names", "_edges")

    def __init__(self, nodes: Iterable[str] = (), edges: Iterable = ()):
        self._names: dict[str, str] = {}
        self._edges: dict[tuple[str, str], Mark] = {}
        for n in nodes:
            self._add_node(n)
        for e in edges:
            if len(e) == 2:
                u, v = e
                mark = Mark.DIRECTED
            else:
                u, v, mark = e
            self._add_edge(u, v, Mark(mark))

    # -- internal mutation, used only while constructing a new value

    def _add_node(self, name: str) -> str:
        if not isinstance(name, str) or not name.strip():
            raise GraphError("node names must be non-empty strings")
        return self._names.setdefault(name_key(name), name.strip())

    def _resolve(self, name: str) -> str:
        try:
            return self._names[name_key(name)]
        except KeyError:
            raise GraphError(f"unknown node {name!r}") from None

    def _add_edge(self, cause: str, effect: str, mark: Mark) -> None:
        u, v = self._resolve(cause), self._resolve(effect)
        if u == v:
            raise GraphError(f"self-loop on {u!r} is not allowed")
        a, b = sorted((u, v), key=name_key)
        if mark is Mark.DIRECTED:
            if (a, b) in self._edges and self._edges[(a, b)] is Mark.UNDIRECTED:
                del self._edges[(a, b)]
            self._edges[(u, v)] = Mark.DIRECTED
        else:
            self._edges.pop((u, v), None)
            self._edges.pop((v, u), None)
            self._edges[(a, b)] = Mark.UNDIRECTED

    def _remove_directed(self, cause: str, effect: str) -> None:
        u, v = self._resolve(cause), self._resolve(effect)
        if self._edges.get((u, v)) is Mark.DIRECTED:
            del self._edges[(u, v)]
            return
        a, b = sorted((u, v), key=name_key)
        if self._edges.get((a, b)) is Mark.UNDIRECTED:
            del self._edges[(a, b)]
            self._edges[(v, u)] = Mark.DIRECTED

    def _copy(self) -> "CausalGraph":
        g = CausalGraph.__new__(CausalGraph)
        g._names = dict(self._names)
        g._edges = dict(self._edges)
        return g

    # -- public value API

    @property
    def nodes(self) -> list[str]:
        return list(self._names.values())

    @property
    def edges(self) -> dict[tuple[str, str], Mark]:
        return dict(self._edges)

    def has_node(self, name: str) -> bool:
        return name_key(name) in self._names

    def canonical(self, name: str) -> str:
        return self._resolve(name)

    def mark(self, cause: str, effect: str) -> Mark | None:
        u, v = self._resolve(cause), self._resolve(effect)
        if (u, v) in self._edges:
            return self._edges[(u, v)]
        if self._edges.get((v, u)) is Mark.UNDIRECTED:
            return Mark.UNDIRECTED
        return None

    def add_node(self, name: str) -> "CausalGraph":
        g = self._copy()
        g._add_node(name)
        return g

    def with_nodes(self, names: Iterable[str]) -> "CausalGraph":
        g = self._copy()
        for n in names:
            g._add_node(n)
        return g

    def add_edge(self, cause: str, effect: str, mark: Mark | str = Mark.DIRECTED) -> "CausalGraph":
        g = self._copy()
        g._add_edge(cause, effect, Mark(mark))
        return g

    def remove_edge(self, cause: str, effect: str) -> "CausalGraph":
        """Delete the directed pair (cause, effect).

        Removing one orientation of an undirected edge leaves the other one as
        a directed edge.
        """
        g = self._copy()
        g._remove_directed(cause, effect)
        return g

    def apply(self, delta: EdgeDelta) -> "CausalGraph":
        g = self._copy()
        for u, v in sorted(delta.add):
            g._add_node(u)
            g._add_node(v)
            g._add_edge(u, v, Mark.DIRECTED)
        for u, v in sorted(delta.remove):
            if g.has_node(u) and g.has_node(v):
                g._remove_directed(u, v)
        return g

    def directed_edge_set(self) -> set[tuple[str, str]]:
        out = set()
        for (u, v), m in self._edges.items():
            out.add((u, v))
            if m is Mark.UNDIRECTED:
                out.add((v, u))
        return out

    def count_marks(self) -> tuple[int, int]:
        n_dir = sum(m is Mark.DIRECTED for m in self._edges.values())
        return n_dir, len(self._edges) - n_dir

    def is_acyclic(self) -> bool:
        """Acyclicity of the directed part (undirected edges ignored)."""
        succ: dict[str, list[str]] = {n: [] for n in self._names.values()}
        indeg = {n: 0 for n in succ}
        for (u, v), m in self._edges.items():
            if m is Mark.DIRECTED:
                succ[u].append(v)
                indeg[v] += 1
        stack = [n for n, k in indeg.items() if k == 0]
        seen = 0
        while stack:
            n = stack.pop()
            seen += 1
            for m in succ[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    stack.append(m)
        return seen == len(succ)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CausalGraph):
            return NotImplemented
        return set(self._names) == set(other._names) and self._edge_keys() == other._edge_keys()

    def _edge_keys(self) -> set:
        return {(name_key(u), name_key(v), m) for (u, v), m in self._edges.items()}

    def __hash__(self):
        return hash((frozenset(self._names), frozenset(self._edge_keys())))

    def __iter__(self) -> Iterator[tuple[str, str, Mark]]:
        for (u, v), m in sorted(self._edges.items(), key=_edge_sort_key):
            yield u, v, m

    def __len__(self) -> int:
        return len(self._edges)

    def __repr__(self) -> str:
        parts = [f"{u}{'->' if m is Mark.DIRECTED else '--'}{v}" for u, v, m in self]
        return f"CausalGraph(nodes={sorted(self.nodes, key=name_key)}, edges=[{', '.join(parts)}])"


def _edge_sort_key(item):
    (u, v), m = item
    return (u, v, m.value)


def sorted_nodes(graph: CausalGraph) -> list[str]:
    return sorted(graph.nodes)


def to_json(graph: CausalGraph) -> str:
    doc = {
        "nodes": sorted_nodes(graph),
        "edges": [{"from": u, "to": v, "mark": m.value} for u, v, m in graph],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def from_json(text: str) -> CausalGraph:
    doc = json.loads(text)
    if not isinstance(doc, dict) or set(doc) != {"nodes", "edges"}:
        raise GraphError("graph-json must be an object with exactly 'nodes' and 'edges'")
    edges = []
    for e in doc["edges"]:
        if set(e) != {"from", "to", "mark"}:
            raise GraphError(f"malformed edge record {e!r}")
        edges.append((e["from"], e["to"], Mark(e["mark"])))
    return CausalGraph(doc["nodes"], edges)


def _dot_id(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(graph: CausalGraph, name: str = "G") -> str:
    lines = [f"digraph {name} {{"]
    for n in sorted_nodes(graph):
        lines.append(f"  {_dot_id(n)};")
    for u, v, m in graph:
        attr = " [dir=both]" if m is Mark.UNDIRECTED else ""
        lines.append(f"  {_dot_id(u)} -> {_dot_id(v)}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def serialize(graph: CausalGraph, fmt: str = "graph-json") -> str:
    if fmt in ("graph-json", "json"):
        return to_json(graph)
    if fmt == "dot":
        return to_dot(graph)
    raise ValueError(f"unknown graph format {fmt!r}")


def parse(text: str, fmt: str = "graph-json") -> CausalGraph:
    if fmt in ("graph-json", "json"):
        return from_json(text)
    raise ValueError(f"cannot parse format {fmt!r}")


def load_graph(path) -> CausalGraph:
    with open(path, encoding="utf-8") as fh:
        return from_json(fh.read())


def save_graph(graph: CausalGraph, path, fmt: str = "graph-json") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize(graph, fmt))
