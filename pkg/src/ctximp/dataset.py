"""Categorical data tables, CSV ingestion, and the built-in benchmark generators.

A :class:`Dataset` is a columnar table of integer-coded categorical variables
(the target column may instead be numeric) with one designated target column
and an optional designated context column.  Categorical values are stored as
dense codes ``0..arity-1`` together with a code-to-label mapping.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

CATEGORICAL = "categorical"
NUMERIC = "numeric"


@dataclass(frozen=True)
class ColumnSchema:
    """Declared name/kind of one CSV column.

    ``declared_labels`` optionally fixes the label-to-code mapping; otherwise
    codes are assigned in order of first appearance.  Only the target column
    may be numeric.
    """

    name: str
    kind: str = CATEGORICAL
    declared_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.name:
            raise DataError("column name must be a non-empty string")
        if self.kind not in (CATEGORICAL, NUMERIC):
            raise DataError(f"unknown column kind {self.kind!r}")
        if self.declared_labels is not None:
            if self.kind == NUMERIC:
                raise DataError("declared_labels only applies to categorical columns")
            if len(set(self.declared_labels)) != len(self.declared_labels):
                raise DataError(f"duplicate labels declared for column {self.name!r}")
            if any(not lab for lab in self.declared_labels):
                raise DataError(f"empty label declared for column {self.name!r}")


class Dataset:
    """Immutable sample table with a designated target and optional context.

    Parameters
    ----------
    names:
        Ordered column names.
    codes:
        Mapping from categorical column name to an integer code array.
    labels:
        Mapping from categorical column name to its ordered label tuple
        (``labels[name][c]`` is the label of code ``c``).
    target:
        Name of the output column.
    context:
        Optional name of the context column (must be categorical).
    numeric_values:
        Mapping from numeric column name to a float array.  Only the target
        column may appear here.
    """

    def __init__(self, names, codes, labels, target, context=None, numeric_values=None):
        self.names: tuple[str, ...] = tuple(names)
        self._codes = {k: np.asarray(v, dtype=np.int64) for k, v in codes.items()}
        self._labels = {k: tuple(v) for k, v in labels.items()}
        self._numeric = {k: np.asarray(v, dtype=np.float64)
                         for k, v in (numeric_values or {}).items()}
        self.target = target
        self.context = context
        self._validate()

    def _validate(self):
        if len(set(self.names)) != len(self.names):
            raise DataError("duplicate column names")
        covered = set(self._codes) | set(self._numeric)
        if covered != set(self.names) or set(self._codes) & set(self._numeric):
            raise DataError("every column needs exactly one of codes or numeric values")
        if self.target not in self.names:
            raise DataError(f"target column {self.target!r} does not exist")
        if self._numeric and set(self._numeric) != {self.target}:
            raise DataError("only the target column may be numeric")
        if self.context is not None:
            if self.context not in self.names:
                raise DataError(f"context column {self.context!r} does not exist")
            if self.context == self.target:
                raise DataError("context and target must be distinct columns")
            if self.context in self._numeric:
                raise DataError("context column must be categorical")
        lengths = {len(self._codes.get(n, self._numeric.get(n, ()))) for n in self.names}
        if len(lengths) != 1:
            raise DataError("all columns must have the same number of entries")
        self.n_samples = lengths.pop()
        if self.n_samples < 1:
            raise DataError("a dataset needs at least one sample")
        for name, arr in self._codes.items():
            labs = self._labels.get(name)
            if not labs:
                raise DataError(f"categorical column {name!r} has no labels")
            if any(not lab for lab in labs):
                raise DataError(f"column {name!r} has an empty label")
            if arr.min() < 0 or arr.max() >= len(labs):
                raise DataError(f"column {name!r} has codes outside 0..{len(labs) - 1}")

    # -- basic accessors ---------------------------------------------------

    @property
    def target_kind(self) -> str:
        return NUMERIC if self.target in self._numeric else CATEGORICAL

    @property
    def input_names(self) -> tuple[str, ...]:
        """All columns except the target and the context."""
        return tuple(n for n in self.names if n != self.target and n != self.context)

    def column_kind(self, name: str) -> str:
        return NUMERIC if name in self._numeric else CATEGORICAL

    def codes(self, name: str) -> np.ndarray:
        if name not in self._codes:
            raise DataError(f"column {name!r} is not categorical")
        return self._codes[name]

    def numeric(self, name: str) -> np.ndarray:
        if name not in self._numeric:
            raise DataError(f"column {name!r} is not numeric")
        return self._numeric[name]

    def labels(self, name: str) -> tuple[str, ...]:
        if name not in self._labels:
            raise DataError(f"column {name!r} is not categorical")
        return self._labels[name]

    def arity(self, name: str) -> int:
        return len(self.labels(name))

    def context_arity(self) -> int:
        if self.context is None:
            raise DataError("no context column designated")
        return self.arity(self.context)

    # -- derived tables ----------------------------------------------------

    def take_rows(self, indices) -> "Dataset":
        """New dataset restricted to the given rows (labels are preserved)."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.names,
            {k: v[idx] for k, v in self._codes.items()},
            self._labels,
            self.target,
            self.context,
            {k: v[idx] for k, v in self._numeric.items()},
        )

    def replace_codes(self, name: str, new_codes: np.ndarray) -> "Dataset":
        """New dataset with one categorical column's codes replaced."""
        codes = dict(self._codes)
        codes[name] = np.asarray(new_codes, dtype=np.int64)
        return Dataset(self.names, codes, self._labels, self.target,
                       self.context, self._numeric)

    def code_table(self) -> np.ndarray:
        """All-categorical view as an (n_samples, n_columns) code matrix."""
        if self._numeric:
            raise DataError("code_table requires an all-categorical dataset")
        return np.column_stack([self._codes[n] for n in self.names])


# ---------------------------------------------------------------------------
# CSV ingestion / serialization
#
# Deliberately restrictive dialect: UTF-8, comma separated, header row, no
# quoting.  Cells containing commas cannot be represented and are rejected.
# ---------------------------------------------------------------------------


def _read_rows(path):
    p = Path(path)
    if not p.exists():
        raise DataError(f"no such file: {p}")
    lines = p.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataError(f"empty file: {p}")
    return [line.split(",") for line in lines]


def load_csv(path, schema, target, context=None) -> Dataset:
    """Load a CSV file against a declared schema.

    The header row must match the schema names in order.  Categorical labels
    are mapped to dense codes in first-appearance order unless the schema
    declares a fixed label order.  Raises :class:`DataError` on a missing
    file, header mismatch, ragged or empty cells, unparsable numerics, labels
    outside a declared set, or a numeric context column.
    """
    schema = [s if isinstance(s, ColumnSchema) else ColumnSchema(*s) for s in schema]
    names = [s.name for s in schema]
    if len(set(names)) != len(names):
        raise DataError("duplicate column names in schema")
    by_name = {s.name: s for s in schema}
    if target not in by_name:
        raise DataError(f"target column {target!r} not in schema")
    if context is not None:
        if context not in by_name:
            raise DataError(f"context column {context!r} not in schema")
        if by_name[context].kind == NUMERIC:
            raise DataError("context column declared numeric")
    for s in schema:
        if s.kind == NUMERIC and s.name != target:
            raise DataError(f"non-target column {s.name!r} declared numeric")

    rows = _read_rows(path)
    if rows[0] != names:
        raise DataError(f"header {rows[0]!r} does not match schema columns {names!r}")
    body = rows[1:]
    if not body:
        raise DataError("no data rows")
    for i, row in enumerate(body):
        if len(row) != len(names):
            raise DataError(f"row {i + 2} has {len(row)} cells, expected {len(names)}")
        if any(cell == "" for cell in row):
            raise DataError(f"row {i + 2} has an empty cell (missing values are rejected)")

    codes, labels, numeric = {}, {}, {}
    for j, s in enumerate(schema):
        cells = [row[j] for row in body]
        if s.kind == NUMERIC:
            try:
                numeric[s.name] = np.array([float(c) for c in cells])
            except ValueError as exc:
                raise DataError(f"column {s.name!r}: unparsable numeric value ({exc})")
        else:
            if s.declared_labels is not None:
                mapping = {lab: c for c, lab in enumerate(s.declared_labels)}
                labs = list(s.declared_labels)
                for cell in cells:
                    if cell not in mapping:
                        raise DataError(
                            f"column {s.name!r}: label {cell!r} not in declared labels")
            else:
                mapping, labs = {}, []
                for cell in cells:
                    if cell not in mapping:
                        mapping[cell] = len(labs)
                        labs.append(cell)
            codes[s.name] = np.array([mapping[c] for c in cells], dtype=np.int64)
            labels[s.name] = tuple(labs)
    return Dataset(names, codes, labels, target, context, numeric)


def save_csv(dataset: Dataset, path) -> None:
    """Write a dataset as CSV (labels, not codes).  Round-trips with load_csv."""
    cols = []
    for name in dataset.names:
        if not name or "," in name:
            raise DataError(f"column name {name!r} cannot be written to CSV")
        if dataset.column_kind(name) == NUMERIC:
            cols.append([repr(v) for v in dataset.numeric(name)])
        else:
            labs = dataset.labels(name)
            if any("," in lab for lab in labs):
                raise DataError(f"column {name!r} has labels containing commas")
            cols.append([labs[c] for c in dataset.codes(name)])
    lines = [",".join(dataset.names)]
    lines.extend(",".join(row) for row in zip(*cols))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Built-in benchmark generators (all deterministic, enumerated tables)
# ---------------------------------------------------------------------------

# Classic seven-segment display truth table: digit -> (top, top-left,
# top-right, middle, bottom-left, bottom-right, bottom).
SEVEN_SEGMENTS = {
    0: (1, 1, 1, 0, 1, 1, 1),
    1: (0, 0, 1, 0, 0, 1, 0),
    2: (1, 0, 1, 1, 1, 0, 1),
    3: (1, 0, 1, 1, 0, 1, 1),
    4: (0, 1, 1, 1, 0, 1, 0),
    5: (1, 1, 0, 1, 0, 1, 1),
    6: (1, 1, 0, 1, 1, 1, 1),
    7: (1, 0, 1, 0, 0, 1, 0),
    8: (1, 1, 1, 1, 1, 1, 1),
    9: (1, 1, 1, 1, 0, 1, 1),
}


def _from_rows(names, rows, target, context):
    rows = np.asarray(rows, dtype=np.int64)
    codes = {n: rows[:, j] for j, n in enumerate(names)}
    labels = {n: tuple(str(v) for v in range(int(codes[n].max()) + 1)) for n in names}
    return Dataset(names, codes, labels, target, context)


def generate_example1() -> Dataset:
    """Two binary inputs, a binary context, and a quaternary output.

    All eight (Xc, X1, X2) combinations are equiprobable.  When X2 equals the
    context the output copies X1; otherwise it is uniform over {2, 3}.  Each
    combination is expanded into two rows of weight 1/16 so the empirical
    table realizes the distribution exactly.
    """
    rows = []
    for xc, x1, x2 in itertools.product((0, 1), repeat=3):
        if x2 == xc:
            rows += [(xc, x1, x2, x1)] * 2
        else:
            rows += [(xc, x1, x2, 2), (xc, x1, x2, 3)]
    return _from_rows(("Xc", "X1", "X2", "Y"), rows, "Y", "Xc")


def generate_problem1() -> Dataset:
    """Three binary inputs whose roles switch with a binary context.

    Sixteen equiprobable rows: Y=2 whenever X1=0; otherwise Y copies X2 in
    context 0 and X3 in context 1.  X1 carries the same information in both
    contexts while X2 and X3 are each useful in only one of them.
    """
    rows = []
    for xc, x1, x2, x3 in itertools.product((0, 1), repeat=4):
        y = 2 if x1 == 0 else (x2 if xc == 0 else x3)
        rows.append((xc, x1, x2, x3, y))
    return _from_rows(("Xc", "X1", "X2", "X3", "Y"), rows, "Y", "Xc")


def generate_problem2() -> Dataset:
    """Two-context digit recognition benchmark (320 rows, 160 per context).

    Context 0 is the classic seven-segment digit problem: X1..X7 encode the
    digit Y, X8 is an independent uniform binary distractor; the 20 distinct
    (digit, X8) rows are replicated 8 times each.  In context 1 the segments
    X5..X7 are decoupled from the digit: for every digit the full factorial
    of their 8 combinations appears once per X8 value, so X5..X7 carry no
    information about Y in that context while X1..X4 still encode it.
    """
    names = ("Xc",) + tuple(f"X{i}" for i in range(1, 9)) + ("Y",)
    rows = []
    for y in range(10):
        for x8 in (0, 1):
            rows += [(0, *SEVEN_SEGMENTS[y], x8, y)] * 8
    for y in range(10):
        for x567 in itertools.product((0, 1), repeat=3):
            for x8 in (0, 1):
                rows.append((1, *SEVEN_SEGMENTS[y][:4], *x567, x8, y))
    return _from_rows(names, rows, "Y", "Xc")


GENERATORS = {
    "example1": generate_example1,
    "problem1": generate_problem1,
    "problem2": generate_problem2,
}
