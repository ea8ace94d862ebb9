"""Column-major tables with typed feature columns and CSV ingestion."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError

CONTINUOUS = "continuous"
CONFOUND = "confound"
CATEGORICAL = "categorical"
REMOVED_CONFOUND = "removed_confound"


def _freeze(values) -> np.ndarray:
    values.flags.writeable = False
    return values


def _as_column(name, values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DataError(f"column {name!r} must be one-dimensional")
    if arr.dtype.kind in "biuf":
        arr = arr.astype(float)
        if not np.all(np.isfinite(arr)):
            raise DataError(f"column {name!r} contains NaN or Inf")
    elif arr.dtype.kind in "UO":
        arr = np.array([str(v) for v in arr], dtype=object)
    else:
        raise DataError(f"column {name!r} has unsupported dtype {arr.dtype}")
    return _freeze(arr.copy())


class Table:
    """Immutable table of named columns of equal length.

    Numeric columns are float64 arrays; categorical columns are object arrays
    of ``str``.  All arrays are read-only.
    """

    __slots__ = ("_columns", "_names", "n_rows")

    def __init__(self, columns: Mapping[str, Iterable] | Sequence[tuple[str, Iterable]]):
        items = list(columns.items()) if isinstance(columns, Mapping) else list(columns)
        names = [name for name, _ in items]
        for name in names:
            if not isinstance(name, str) or not name:
                raise DataError("column names must be non-empty strings")
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise DataError(f"duplicate column names: {dup}")
        cols = {}
        n_rows = None
        for name, values in items:
            col = values if _is_frozen(values) else _as_column(name, values)
            if n_rows is None:
                n_rows = len(col)
            elif len(col) != n_rows:
                raise DataError(f"column {name!r} has {len(col)} rows, expected {n_rows}")
            cols[name] = col
        self._columns = cols
        self._names = tuple(names)
        self.n_rows = n_rows or 0

    @property
    def column_names(self) -> tuple[str, ...]:
        return self._names

    def __contains__(self, name):
        return name in self._columns

    def __getitem__(self, name) -> np.ndarray:
        try:
            return self._columns[name]
        except KeyError:
            raise KeyError(f"no column named {name!r}") from None

    def __len__(self):
        return self.n_rows

    def __eq__(self, other):
        if not isinstance(other, Table) or other.column_names != self.column_names:
            return NotImplemented if not isinstance(other, Table) else False
        return all(
            self[c].dtype == other[c].dtype and np.array_equal(self[c], other[c]) for c in self._names
        )

    def __reduce__(self):
        # rebuild through the constructor so unpickled arrays are read-only again
        return (Table, ([(n, np.array(self[n])) for n in self._names],))

    def __repr__(self):
        return f"Table(n_rows={self.n_rows}, columns={list(self._names)})"

    def is_numeric(self, name) -> bool:
        return self[name].dtype.kind == "f"

    def select(self, names: Sequence[str]) -> Table:
        return Table([(n, self[n]) for n in names])

    def drop(self, names: Iterable[str]) -> Table:
        gone = set(names)
        return Table([(n, self[n]) for n in self._names if n not in gone])

    def take(self, rows) -> Table:
        rows = np.asarray(rows, dtype=np.int64)
        return Table([(n, _freeze(self[n][rows])) for n in self._names])

    def with_columns(self, new: Mapping[str, Iterable]) -> Table:
        """Replace existing columns in place, append unknown ones at the end."""
        new = dict(new)
        items = [(n, new.pop(n) if n in new else self[n]) for n in self._names]
        items.extend(new.items())
        return Table(items)

    def to_matrix(self, names: Sequence[str] | None = None) -> np.ndarray:
        names = list(self._names if names is None else names)
        for n in names:
            if not self.is_numeric(n):
                raise DataError(f"column {n!r} is categorical; numeric input required")
        if not names:
            return np.zeros((self.n_rows, 0))
        return np.column_stack([self[n] for n in names])


def _is_frozen(values) -> bool:
    return (
        isinstance(values, np.ndarray)
        and values.ndim == 1
        and not values.flags.writeable
        and (values.dtype == np.float64 or values.dtype == object)
    )


@dataclass(frozen=True)
class FeatureTypeMap:
    """Assignment of columns to named feature types.

    Columns not mentioned anywhere are of type ``"continuous"``.
    """

    assignments: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def __init__(self, assignments: Mapping[str, Iterable[str]] | None = None):
        assignments = dict(assignments or {})
        seen = {}
        frozen = []
        for type_name, cols in assignments.items():
            if not type_name:
                raise ConfigError("feature type names must be non-empty")
            if isinstance(cols, str):
                cols = [cols]
            cols = tuple(dict.fromkeys(cols))
            for c in cols:
                if c in seen and seen[c] != type_name:
                    raise ConfigError(f"column {c!r} assigned to both {seen[c]!r} and {type_name!r}")
                seen[c] = type_name
            frozen.append((type_name, cols))
        object.__setattr__(self, "assignments", tuple(frozen))

    def as_dict(self) -> dict[str, list[str]]:
        return {t: list(cols) for t, cols in self.assignments}

    @property
    def type_names(self) -> set[str]:
        return {t for t, _ in self.assignments} | {CONTINUOUS}

    def type_of(self, column: str) -> str:
        for t, cols in self.assignments:
            if column in cols:
                return t
        return CONTINUOUS

    def validate(self, columns: Iterable[str]) -> None:
        columns = set(columns)
        for t, cols in self.assignments:
            missing = [c for c in cols if c not in columns]
            if missing:
                raise ConfigError(f"feature type {t!r} names unknown feature columns {missing}")

    def retag(self, columns: Iterable[str], type_name: str) -> FeatureTypeMap:
        columns = set(columns)
        d = {t: [c for c in cols if c not in columns] for t, cols in self.assignments}
        d.setdefault(type_name, [])
        d[type_name] = d[type_name] + sorted(columns)
        return FeatureTypeMap({t: c for t, c in d.items() if c})

    def without(self, columns: Iterable[str]) -> FeatureTypeMap:
        columns = set(columns)
        d = {t: [c for c in cols if c not in columns] for t, cols in self.assignments}
        return FeatureTypeMap({t: c for t, c in d.items() if c})


@dataclass(frozen=True)
class ColumnSelector:
    """Which feature columns a step applies to.

    ``mode`` is one of ``"by_type"`` (``value`` is a type name or a tuple of
    them), ``"by_name"`` (``value`` is a tuple of columns), ``"all_features"``
    or ``"wildcard"``.  Use :meth:`parse` for the string/list shorthand.
    """

    mode: str
    value: tuple[str, ...] = ()

    def __post_init__(self):
        if self.mode not in ("by_type", "by_name", "all_features", "wildcard"):
            raise ConfigError(f"unknown selector mode {self.mode!r}")

    @classmethod
    def parse(cls, spec) -> ColumnSelector:
        """``"*"`` -> wildcard, ``"name"`` -> by_type, ``[..]`` -> by_name.

        A dict ``{"types": [...]}`` selects several types, ``{"columns": [...]}``
        names columns explicitly.
        """
        if isinstance(spec, ColumnSelector):
            return spec
        if spec == "*":
            return cls("wildcard")
        if isinstance(spec, str):
            return cls("by_type", (spec,))
        if isinstance(spec, Mapping):
            if set(spec) == {"types"}:
                return cls("by_type", tuple(spec["types"]))
            if set(spec) == {"columns"}:
                return cls("by_name", tuple(spec["columns"]))
            raise ConfigError(f"invalid selector {spec!r}")
        if isinstance(spec, (list, tuple)):
            return cls("by_name", tuple(spec))
        raise ConfigError(f"invalid selector {spec!r}")

    def to_json(self):
        if self.mode in ("wildcard", "all_features"):
            return "*"
        if self.mode == "by_type":
            return self.value[0] if len(self.value) == 1 else {"types": list(self.value)}
        return list(self.value)


def resolve_selector(
    sel: ColumnSelector,
    table: Table,
    types: FeatureTypeMap,
    features: Sequence[str] | None = None,
) -> list[str]:
    """Resolve ``sel`` to feature columns in table order.

    ``features`` limits the candidate columns (target and grouping columns
    are never features); by default every column of ``table`` is a feature.
    Wildcards skip confounds that have already been removed.
    """
    sel = ColumnSelector.parse(sel)
    feature_set = set(table.column_names if features is None else features)
    candidates = [c for c in table.column_names if c in feature_set]
    if sel.mode in ("wildcard", "all_features"):
        out = [c for c in candidates if types.type_of(c) != REMOVED_CONFOUND]
    elif sel.mode == "by_type":
        known = types.type_names | {CATEGORICAL, CONFOUND, REMOVED_CONFOUND}
        for t in sel.value:
            if t not in known:
                raise ConfigError(f"unknown feature type {t!r}")
        wanted = set(sel.value)
        out = [c for c in candidates if types.type_of(c) in wanted]
    else:
        missing = [c for c in sel.value if c not in feature_set or c not in table]
        if missing:
            raise ConfigError(f"selector names unknown feature columns {missing}")
        wanted = set(sel.value)
        out = [c for c in candidates if c in wanted]
    if not out:
        raise ConfigError(f"selector {sel.to_json()!r} matches no columns")
    return out


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _parse_float(text):
    try:
        return float(text)
    except ValueError:
        return None


def read_csv(path, schema: Mapping[str, str] | None = None) -> Table:
    """Read an RFC-4180 CSV file with a header row.

    Columns whose every cell parses as a float are numeric; others are
    categorical.  ``schema`` may force a column to ``"numeric"`` or
    ``"categorical"``.  Empty cells and non-finite numbers are errors.
    """
    schema = dict(schema or {})
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: no header") from None
        except csv.Error as exc:
            raise DataError(f"{path}: {exc}") from None
        if not header or header == [""]:
            raise DataError(f"{path}: no header")
        if any(not h for h in header):
            raise DataError(f"{path}: empty column name in header")
        dups = sorted({h for h in header if header.count(h) > 1})
        if dups:
            raise DataError(f"{path}: duplicate header names {dups}")
        unknown = [c for c in schema if c not in header]
        if unknown:
            raise DataError(f"{path}: schema names unknown columns {unknown}")
        raw = [[] for _ in header]
        lines = []
        try:
            for row in reader:
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(f"{path}: ragged row at line {reader.line_num}")
                lines.append(reader.line_num)
                for j, cell in enumerate(row):
                    raw[j].append(cell)
        except csv.Error as exc:
            raise DataError(f"{path}: {exc}") from None

    columns = []
    for name, cells in zip(header, raw):
        declared = schema.get(name)
        if declared not in (None, "numeric", "categorical"):
            raise DataError(f"{path}: unknown declared type {declared!r} for column {name!r}")
        for cell, line in zip(cells, lines):
            if cell == "":
                raise DataError(f"{path}: missing value in column {name!r} at line {line}")
        if declared == "categorical":
            columns.append((name, np.array(cells, dtype=object)))
            continue
        parsed = [_parse_float(c) for c in cells]
        numeric = all(v is not None for v in parsed)
        if declared == "numeric" and not numeric:
            bad = next(i for i, v in enumerate(parsed) if v is None)
            raise DataError(f"{path}: non-numeric value {cells[bad]!r} in numeric column {name!r} at line {lines[bad]}")
        if numeric:
            for v, line in zip(parsed, lines):
                if not math.isfinite(v):
                    raise DataError(f"{path}: non-finite value in column {name!r} at line {line}")
            columns.append((name, np.array(parsed, dtype=float)))
        else:
            columns.append((name, np.array(cells, dtype=object)))
    return Table(columns)


def format_value(v) -> str:
    """Shortest round-trip text for floats, verbatim text otherwise."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(table: Table, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.column_names)
        cols = [table[c] for c in table.column_names]
        for i in range(table.n_rows):
            writer.writerow([format_value(col[i]) for col in cols])
