"""Embedded benchmark tables and CSV ingestion.

The two classic tables are stored as literal values and checked against a
pinned SHA-256 digest of their float64 bytes on every load.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .candidates import CandidateSet, all_subsets_with_intercept
from .errors import MissingColumn, NonNumericCell, ParseError
from .regression import Dataset

# columns: stack loss, air flow, cooling water inlet temperature, acid concentration
_STACKLOSS = (
    (42, 80, 27, 89), (37, 80, 27, 88), (37, 75, 25, 90), (28, 62, 24, 87),
    (18, 62, 22, 87), (18, 62, 23, 87), (19, 62, 24, 93), (20, 62, 24, 93),
    (15, 58, 23, 87), (14, 58, 18, 80), (14, 58, 18, 89), (13, 58, 17, 88),
    (11, 58, 18, 82), (12, 58, 19, 93), (8, 50, 18, 89), (7, 50, 18, 86),
    (8, 50, 19, 72), (8, 50, 19, 79), (9, 50, 20, 80), (15, 56, 20, 82),
    (15, 70, 20, 91),
)

# columns: y, x1, x2, x3, x4
_HALD = (
    (78.5, 7, 26, 6, 60), (74.3, 1, 29, 15, 52), (104.3, 11, 56, 8, 20),
    (87.6, 11, 31, 8, 47), (95.9, 7, 52, 6, 33), (109.2, 11, 55, 9, 22),
    (102.7, 3, 71, 17, 6), (72.5, 1, 31, 22, 44), (93.1, 2, 54, 18, 22),
    (115.9, 21, 47, 4, 26), (83.8, 1, 40, 23, 34), (113.3, 11, 66, 9, 12),
    (109.4, 10, 68, 8, 12),
)

CHECKSUMS = {
    "stackloss": "d999d98d68f6cd1ad64dec41476b32961a63e60a3e81433bca361601b5612e6d",
    "hald": "6c987f6ea9957d31cf6aa7a5399c09c170299d48d1df70b93e4813229381a299",
}


def table_digest(table) -> str:
    """SHA-256 of the row-major little-endian float64 bytes of ``table``."""
    return hashlib.sha256(np.asarray(table, dtype="<f8").tobytes(order="C")).hexdigest()


@dataclass(frozen=True)
class NamedDataset:
    name: str
    data: Dataset
    outlier_indices: frozenset[int] = field(default_factory=frozenset)
    provenance: str = ""

    def __post_init__(self):
        idx = frozenset(int(i) for i in self.outlier_indices)
        bad = [i for i in idx if not 0 <= i < self.data.n]
        if bad:
            raise ValueError(f"outlier indices out of range: {sorted(bad)}")
        object.__setattr__(self, "outlier_indices", idx)

    def candidates(self) -> CandidateSet:
        """Every predictor subset plus an intercept; indexes ``data.with_intercept()``."""
        return all_subsets_with_intercept(self.data.p)


def _embedded(name, table, names, outliers, provenance) -> NamedDataset:
    arr = np.array(table, dtype=float)
    digest = table_digest(arr)
    if digest != CHECKSUMS[name]:
        raise RuntimeError(f"embedded table {name!r} failed its checksum ({digest})")
    data = Dataset(arr[:, 1:], arr[:, 0], names)
    return NamedDataset(name, data, frozenset(outliers), provenance)


def stackloss() -> NamedDataset:
    """Ammonia oxidation plant data: 21 runs, 3 predictors.

    Row 21 (index 20) is flagged as a suspected outlier.
    """
    return _embedded("stackloss", _STACKLOSS,
                     ("Air Flow", "Cooling Water Inlet Temperature", "Acid Concentration"),
                     {20}, "Brownlee (1965), ammonia oxidation plant")


def hald_cement() -> NamedDataset:
    """Hald cement heat data: 13 mixes, 4 ingredient predictors, no flagged rows."""
    return _embedded("hald", _HALD, ("x1", "x2", "x3", "x4"), (),
                     "Hald (1952), heat evolved by cement mixes")


EMBEDDED = {"stackloss": stackloss, "hald": hald_cement}


def _cell(text: str, row: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise NonNumericCell(f"row {row}, column {column!r}: cannot parse {text!r}",
                             row=row, column=column) from None
    if not math.isfinite(v):
        raise NonNumericCell(f"row {row}, column {column!r}: non-finite value {text!r}",
                             row=row, column=column)
    return v


def load_csv(path, response_column: str, outlier_indices=(), name: str | None = None,
             predictors=None) -> NamedDataset:
    """Read a comma-separated numeric table with a header row.

    ``predictors`` defaults to every column other than the response.  Row
    numbers in errors count data rows from 1; ``outlier_indices`` are
    0-based row positions.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if not body:
        raise ParseError(f"{path}: header but no data rows", row=0)
    if response_column not in header:
        raise MissingColumn(f"{path}: no column named {response_column!r}", column=response_column)
    if predictors is None:
        predictors = [h for h in header if h != response_column]
    for col in predictors:
        if col not in header:
            raise MissingColumn(f"{path}: no column named {col!r}", column=col)
    values = np.empty((len(body), len(header)))
    for i, r in enumerate(body, start=1):
        if len(r) != len(header):
            raise ParseError(f"{path}: row {i} has {len(r)} cells, header has {len(header)}", row=i)
        for j, text in enumerate(r):
            values[i - 1, j] = _cell(text.strip(), i, header[j])
    X = values[:, [header.index(c) for c in predictors]]
    y = values[:, header.index(response_column)]
    return NamedDataset(name or path.stem, Dataset(X, y, tuple(predictors)),
                        frozenset(outlier_indices), str(path))


def write_csv(named: NamedDataset, path, response_column: str = "y") -> None:
    data = named.data
    names = data.column_names or tuple(f"x{j + 1}" for j in range(data.p))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([response_column, *names])
        for yi, xi in zip(data.response, data.design):
            w.writerow([repr(float(yi)), *(repr(float(v)) for v in xi)])


def resolve(selector: str, outliers=None, response: str = "y") -> NamedDataset:
    """``stackloss``, ``hald`` or ``csv:PATH`` to a dataset.

    ``outliers`` (0-based) replaces the embedded default when given.
    """
    if selector in EMBEDDED:
        ds = EMBEDDED[selector]()
        if outliers is not None:
            ds = NamedDataset(ds.name, ds.data, frozenset(outliers), ds.provenance)
        return ds
    if selector.startswith("csv:") and len(selector) > 4:
        return load_csv(selector[4:], response, outliers or ())
    raise ValueError(f"unknown dataset {selector!r}; use stackloss, hald or csv:PATH")
