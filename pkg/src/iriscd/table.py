"""Documents-by-variables table of categorical observations."""

from __future__ import annotations

import io
from typing import Iterable, Sequence

import numpy as np

from .graph import Variable, check_unique_names, name_key

MISSING = None
NA_TOKEN = "NA"


class TableError(ValueError):
    pass


class ObservationTable:
    """Categorical cells stored as integer codes into each variable's domain; -1 is Missing."""

    def __init__(self, variables: Sequence[Variable], doc_ids: Sequence[str]):
        variables = list(variables)
        check_unique_names(variables)
        if len(set(doc_ids)) != len(doc_ids):
            raise TableError("duplicate document ids")
        self.variables = variables
        self.doc_ids = list(doc_ids)
        self._col = {v.key: j for j, v in enumerate(variables)}
        self._row = {d: i for i, d in enumerate(self.doc_ids)}
        self.codes = np.full((len(self.doc_ids), len(variables)), -1, dtype=np.int64)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape

    def column(self, var_name: str) -> int:
        try:
            return self._col[name_key(var_name)]
        except KeyError:
            raise TableError(f"unknown variable {var_name!r}") from None

    def variable(self, var_name: str) -> Variable:
        return self.variables[self.column(var_name)]

    def _rowidx(self, doc_id: str) -> int:
        try:
            return self._row[doc_id]
        except KeyError:
            raise TableError(f"unknown document {doc_id!r}") from None

    def set_cell(self, doc_id: str, var_name: str, value: str | None) -> "ObservationTable":
        i, j = self._rowidx(doc_id), self.column(var_name)
        if value is MISSING:
            self.codes[i, j] = -1
            return self
        domain = self.variables[j].domain
        try:
            self.codes[i, j] = domain.index(value)
        except ValueError:
            raise TableError(
                f"{value!r} is not in the domain {list(domain)} of {self.variables[j].name!r}"
            ) from None
        return self

    def get(self, doc_id: str, var_name: str) -> str | None:
        i, j = self._rowidx(doc_id), self.column(var_name)
        c = self.codes[i, j]
        return MISSING if c < 0 else self.variables[j].domain[c]

    def complete_mask(self, var_subset: Iterable[str] = ()) -> np.ndarray:
        cols = [self.column(n) for n in var_subset]
        if not cols:
            return np.ones(len(self.doc_ids), dtype=bool)
        return (self.codes[:, cols] >= 0).all(axis=1)

    def complete_rows(self, var_subset: Iterable[str] = ()) -> list[str]:
        mask = self.complete_mask(var_subset)
        return [d for d, ok in zip(self.doc_ids, mask) if ok]

    def complete_cases(self) -> "ObservationTable":
        """Copy holding only the rows with no Missing cell."""
        mask = self.complete_mask(self.names)
        out = ObservationTable(self.variables, [d for d, ok in zip(self.doc_ids, mask) if ok])
        out.codes[:] = self.codes[mask]
        return out

    def missing_counts(self) -> dict[str, int]:
        return {v.name: int((self.codes[:, j] < 0).sum()) for j, v in enumerate(self.variables)}

    def domain_sizes(self) -> np.ndarray:
        return np.array([len(v.domain) for v in self.variables], dtype=np.int64)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(["doc_id", *self.names]) + "\n")
        for i, d in enumerate(self.doc_ids):
            row = [d]
            for j, v in enumerate(self.variables):
                c = self.codes[i, j]
                row.append(NA_TOKEN if c < 0 else v.domain[c])
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, variables: Sequence[Variable]) -> "ObservationTable":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise TableError("empty CSV")
        header = lines[0].split(",")
        if header[0] != "doc_id":
            raise TableError("first CSV column must be doc_id")
        by_key = {v.key: v for v in variables}
        try:
            ordered = [by_key[name_key(h)] for h in header[1:]]
        except KeyError as exc:
            raise TableError(f"CSV column {exc.args[0]!r} has no variable definition") from None
        rows = [ln.split(",") for ln in lines[1:]]
        table = cls(ordered, [r[0] for r in rows])
        for r in rows:
            if len(r) != len(header):
                raise TableError(f"row {r[0]!r} has {len(r)} fields, expected {len(header)}")
            for v, cell in zip(ordered, r[1:]):
                table.set_cell(r[0], v.name, MISSING if cell == NA_TOKEN else cell)
        return table

    def __eq__(self, other) -> bool:
        if not isinstance(other, ObservationTable):
            return NotImplemented
        return (
            self.variables == other.variables
            and self.doc_ids == other.doc_ids
            and np.array_equal(self.codes, other.codes)
        )


def _label_values(var: Variable) -> np.ndarray:
    try:
        return np.array([float(lbl) for lbl in var.domain])
    except ValueError:
        pass
    lowered = [lbl.casefold() for lbl in var.domain]
    if sorted(lowered) == ["false", "true"]:
        return np.array([1.0 if lbl == "true" else 0.0 for lbl in lowered])
    return np.arange(len(var.domain), dtype=float)


def encode_numeric(table: ObservationTable) -> np.ndarray:
    """Numeric, column-standardized matrix over the fully observed rows."""
    mask = table.complete_mask(table.names)
    if not mask.any():
        raise TableError("table has no complete rows")
    codes = table.codes[mask]
    X = np.empty(codes.shape, dtype=float)
    for j, v in enumerate(table.variables):
        X[:, j] = _label_values(v)[codes[:, j]]
    X -= X.mean(axis=0)
    sd = X.std(axis=0)
    nonconst = sd > 1e-12
    X[:, nonconst] /= sd[nonconst]
    X[:, ~nonconst] = 0.0
    return X
