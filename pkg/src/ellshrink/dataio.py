"""CSV ingestion with precise error positions.

All loaders reject rows containing missing or non-numeric fields, naming
the 1-based line (and column where it applies) in the raised
:class:`CsvFormatError`.
"""

from __future__ import annotations

import numpy as np

from .applications import LabeledDataset
from .errors import CsvFormatError

_MISSING = {"", "na", "nan", "null", "none"}


def _read_rows(path):
    """Yield (line_number, fields) for non-empty lines of a CSV file."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.rstrip("\r\n")
            if stripped.strip() == "":
                continue
            yield lineno, [f.strip() for f in stripped.split(",")]


def _parse_float(token: str, lineno: int, col: int) -> float:
    if token.lower() in _MISSING:
        raise CsvFormatError(
            f"missing value at line {lineno}, column {col}", line=lineno, column=col
        )
    try:
        value = float(token)
    except ValueError:
        raise CsvFormatError(
            f"non-numeric value {token!r} at line {lineno}, column {col}",
            line=lineno,
            column=col,
        ) from None
    if not np.isfinite(value):
        raise CsvFormatError(
            f"non-finite value {token!r} at line {lineno}, column {col}",
            line=lineno,
            column=col,
        )
    return value


def _looks_numeric(fields) -> bool:
    for f in fields:
        if f.lower() in _MISSING:
            continue
        try:
            float(f)
        except ValueError:
            return False
    return True


def _parse_numeric_rows(rows, expect_cols=None):
    data, first_line = [], None
    for lineno, fields in rows:
        if expect_cols is None:
            expect_cols, first_line = len(fields), lineno
        if len(fields) != expect_cols:
            raise CsvFormatError(
                f"line {lineno} has {len(fields)} fields, expected {expect_cols}",
                line=lineno,
            )
        data.append([_parse_float(f, lineno, c + 1) for c, f in enumerate(fields)])
    if not data:
        raise CsvFormatError("file contains no data rows", line=first_line)
    return np.asarray(data, dtype=float)


def load_matrix_csv(path) -> np.ndarray:
    """Numeric CSV as an (n, p) array; a non-numeric first row is treated
    as a header and skipped."""
    rows = list(_read_rows(path))
    if not rows:
        raise CsvFormatError("file is empty")
    if not _looks_numeric(rows[0][1]):
        rows = rows[1:]
    return _parse_numeric_rows(rows)


def load_returns_csv(path):
    """Returns file: a header row of asset identifiers, then one row of net
    returns (decimals) per trading day.

    Returns
    -------
    (names, returns) : (list of str, (T, p) ndarray)
    """
    rows = list(_read_rows(path))
    if not rows:
        raise CsvFormatError("file is empty")
    header_line, names = rows[0]
    if not names or all(n == "" for n in names):
        raise CsvFormatError(
            f"header row of asset identifiers missing at line {header_line}",
            line=header_line,
        )
    data = _parse_numeric_rows(rows[1:], expect_cols=len(names))
    return list(names), data


def load_labeled_csv(path) -> LabeledDataset:
    """Labeled data: numeric features with the final column an integer
    class label.  Distinct raw labels are relabeled to 1..K in sorted
    order."""
    rows = list(_read_rows(path))
    if not rows:
        raise CsvFormatError("file is empty")
    if not _looks_numeric(rows[0][1]):
        rows = rows[1:]
    data = _parse_numeric_rows(rows)
    if data.shape[1] < 2:
        raise CsvFormatError("labeled data needs at least one feature column")
    raw_labels = data[:, -1]
    if not np.all(raw_labels == np.round(raw_labels)):
        bad = int(np.nonzero(raw_labels != np.round(raw_labels))[0][0])
        raise CsvFormatError(
            f"class label {raw_labels[bad]!r} at data row {bad + 1} is not an integer"
        )
    values = np.unique(raw_labels.astype(int))
    remap = {v: i + 1 for i, v in enumerate(values.tolist())}
    labels = np.array([remap[v] for v in raw_labels.astype(int)])
    return LabeledDataset(samples=data[:, :-1], labels=labels)
