"""Labelling matrices and the labelling-function engine.

A labelling matrix holds one row per data point and one column per
labelling function (LF).  Entries are integers: 1 is a positive vote,
0 a negative vote and -1 an abstention.  Matrices are either ingested
from CSV (the usual route for externally produced LF outputs) or built
by applying simple keyword/regex labelling functions to text records.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

ABSTAIN = -1
VALID_ENTRIES = (-1, 0, 1)


def _frozen_array(values, dtype) -> np.ndarray:
    raw = np.asarray(values)
    if dtype is np.int64 and raw.dtype.kind == "f":
        if not np.isfinite(raw).all() or not (raw == np.rint(raw)).all():
            raise ValidationError("entries must be integers")
    arr = raw.astype(dtype).copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LabelMatrix:
    """n x m matrix of labelling-function votes with entries in {-1, 0, 1}."""

    values: np.ndarray
    lf_names: tuple[str, ...]

    def __post_init__(self):
        values = _frozen_array(self.values, np.int64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lf_names", tuple(self.lf_names))
        if values.ndim != 2:
            raise ValidationError(f"label matrix must be 2-dimensional, got shape {values.shape}")
        n, m = values.shape
        if n < 1 or m < 1:
            raise ValidationError(f"label matrix must be at least 1x1, got {n}x{m}")
        if len(self.lf_names) != m:
            raise ValidationError(
                f"{m} columns but {len(self.lf_names)} LF names"
            )
        if len(set(self.lf_names)) != m:
            dupes = sorted({x for x in self.lf_names if self.lf_names.count(x) > 1})
            raise ValidationError(f"duplicate LF names: {dupes}")
        bad = ~np.isin(values, VALID_ENTRIES)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValidationError(
                f"entry {values[i, j]} at row {i}, column '{self.lf_names[j]}' "
                f"is not in {{-1, 0, 1}}"
            )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, LabelMatrix):
            return NotImplemented
        return self.lf_names == other.lf_names and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.lf_names, self.values.tobytes()))


@dataclass(frozen=True)
class LFSpec:
    """A keyword or regex labelling function.

    Matching records receive ``vote_on_match`` (0 or 1); everything else
    abstains.  Keyword matching is case-insensitive substring search;
    regex patterns are compiled as given (use inline flags such as
    ``(?i)`` for case-insensitive regexes).
    """

    name: str
    kind: str  # "keyword" | "regex"
    pattern: str
    vote_on_match: int

    def __post_init__(self):
        if not self.name:
            raise ValidationError("LF name must be non-empty")
        if self.kind not in ("keyword", "regex"):
            raise ValidationError(f"LF '{self.name}': kind must be 'keyword' or 'regex', got {self.kind!r}")
        if not self.pattern:
            raise ValidationError(f"LF '{self.name}': pattern must be non-empty")
        if self.vote_on_match not in (0, 1):
            raise ValidationError(f"LF '{self.name}': vote_on_match must be 0 or 1")
        if self.kind == "regex":
            try:
                re.compile(self.pattern)
            except re.error as exc:
                raise ValidationError(f"LF '{self.name}': invalid regex: {exc}") from exc

    def matches(self, record: str) -> bool:
        if self.kind == "keyword":
            return self.pattern.lower() in record.lower()
        return re.search(self.pattern, record) is not None


@dataclass(frozen=True)
class GoldLabels:
    """Ground-truth binary labels, used only for evaluation.

    ``mask`` marks labelled rows; ``None`` means every row is labelled.
    """

    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        values = _frozen_array(self.values, np.int64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.shape[0] < 1:
            raise ValidationError("gold labels must be a non-empty 1-d vector")
        bad = ~np.isin(values, (0, 1))
        if bad.any():
            i = int(np.argwhere(bad)[0][0])
            raise ValidationError(f"gold label {values[i]} at row {i} is not in {{0, 1}}")
        if self.mask is not None:
            mask = _frozen_array(self.mask, bool)
            if mask.shape != values.shape:
                raise ValidationError("gold label mask length must match values")
            object.__setattr__(self, "mask", mask)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def labelled_values(self) -> np.ndarray:
        if self.mask is None:
            return self.values
        return self.values[self.mask]


@dataclass(frozen=True)
class MatrixStats:
    """Per-LF vote counts and row-level abstention summary."""

    n_rows: int
    n_lfs: int
    lf_names: tuple[str, ...]
    counts: np.ndarray = field(repr=False)  # (m, 3): abstain / negative / positive
    n_all_abstain_rows: int = 0
    all_abstain_fraction: float = 0.0

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_lfs": self.n_lfs,
            "n_all_abstain_rows": self.n_all_abstain_rows,
            "all_abstain_fraction": self.all_abstain_fraction,
            "per_lf": {
                name: {"abstain": int(a), "negative": int(neg), "positive": int(pos)}
                for name, (a, neg, pos) in zip(self.lf_names, self.counts)
            },
        }


def load_label_matrix(path, format: str = "csv") -> LabelMatrix:
    """Read a labelling matrix from CSV: header = LF names, body = integers.

    Raises ValidationError naming the offending cell for out-of-range or
    non-integer entries, and for ragged rows or duplicate LF names.
    """
    if format != "csv":
        raise ValidationError(f"unsupported format {format!r}, only 'csv'")
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"label matrix file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        names = [h.strip() for h in header]
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(names):
                raise ValidationError(
                    f"{path}: line {line_no} has {len(row)} fields, expected {len(names)}"
                )
            parsed = []
            for j, cell in enumerate(row):
                try:
                    value = int(cell.strip())
                except ValueError:
                    raise ValidationError(
                        f"{path}: non-integer entry {cell!r} at row {line_no - 1}, "
                        f"column '{names[j]}'"
                    ) from None
                if value not in VALID_ENTRIES:
                    raise ValidationError(
                        f"{path}: entry {value} at row {line_no - 1}, column '{names[j]}' "
                        f"is not in {{-1, 0, 1}}"
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return LabelMatrix(values=np.array(rows, dtype=np.int64), lf_names=tuple(names))


def save_label_matrix(matrix: LabelMatrix, path) -> None:
    """Write the canonical CSV form (UTF-8, '\\n' line endings)."""
    lines = [",".join(matrix.lf_names)]
    for row in matrix.values:
        lines.append(",".join(str(int(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_gold_labels(path) -> GoldLabels:
    """Read gold labels from a single-column CSV with header 'y'."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"gold labels file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        if [h.strip() for h in header] != ["y"]:
            raise ValidationError(f"{path}: expected single header column 'y', got {header}")
        values = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 1:
                raise ValidationError(f"{path}: line {line_no} has {len(row)} fields, expected 1")
            try:
                value = int(row[0].strip())
            except ValueError:
                raise ValidationError(f"{path}: non-integer label {row[0]!r} at line {line_no}") from None
            if value not in (0, 1):
                raise ValidationError(f"{path}: label {value} at line {line_no} is not in {{0, 1}}")
            values.append(value)
    if not values:
        raise ValidationError(f"{path}: no data rows")
    return GoldLabels(values=np.array(values, dtype=np.int64))


def save_gold_labels(gold: GoldLabels, path) -> None:
    lines = ["y"] + [str(int(v)) for v in gold.values]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_lf_specs(path) -> list[LFSpec]:
    """Read labelling functions from a JSON array of spec objects."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"LF spec file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ValidationError(f"{path}: expected a JSON array of LF specs")
    specs = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ValidationError(f"{path}: spec {i} is not an object")
        try:
            specs.append(
                LFSpec(
                    name=entry["name"],
                    kind=entry["kind"],
                    pattern=entry["pattern"],
                    vote_on_match=entry["vote_on_match"],
                )
            )
        except KeyError as exc:
            raise ValidationError(f"{path}: spec {i} missing field {exc}") from None
    return specs


def apply_lfs(records: list[str], specs: list[LFSpec]) -> LabelMatrix:
    """Vote each labelling function on each record.

    Entry (i, j) is ``specs[j].vote_on_match`` when record i matches
    pattern j and -1 (abstain) otherwise.  Column order follows spec
    order; each column depends only on its own spec.
    """
    if not specs:
        raise ValidationError("at least one LF spec is required")
    if not records:
        raise ValidationError("at least one record is required (n >= 1)")
    names = tuple(s.name for s in specs)
    if len(set(names)) != len(names):
        raise ValidationError("LF spec names must be unique")
    values = np.full((len(records), len(specs)), ABSTAIN, dtype=np.int64)
    for j, spec in enumerate(specs):
        for i, record in enumerate(records):
            if spec.matches(record):
                values[i, j] = spec.vote_on_match
    return LabelMatrix(values=values, lf_names=names)


def matrix_stats(matrix: LabelMatrix) -> MatrixStats:
    """Count votes per LF and fully-abstaining rows."""
    values = matrix.values
    counts = np.stack(
        [(values == v).sum(axis=0) for v in VALID_ENTRIES], axis=1
    )  # columns: abstain, negative, positive
    all_abstain = int((values == ABSTAIN).all(axis=1).sum())
    return MatrixStats(
        n_rows=matrix.n,
        n_lfs=matrix.m,
        lf_names=matrix.lf_names,
        counts=counts,
        n_all_abstain_rows=all_abstain,
        all_abstain_fraction=all_abstain / matrix.n,
    )


def covariance_matrix(matrix: LabelMatrix) -> np.ndarray:
    """Sample covariance of the LF columns (entries taken as reals, n-1 normalization)."""
    if matrix.n < 2:
        raise ValidationError(f"covariance requires n >= 2 rows, got {matrix.n}")
    cov = np.cov(matrix.values.astype(float), rowvar=False, ddof=1)
    return np.atleast_2d(cov)
