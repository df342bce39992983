"""Labeled datasets and the CSV exchange format.

CSV layout is fixed: header ``x1,...,xd,label``, one row per observation.
Feature values are floats; labels are kept as strings on disk and mapped to
class indices in first-appearance order when a model is fit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["LabeledDataset", "read_csv", "read_features", "write_csv"]


@dataclass
class LabeledDataset:
    """Feature matrix plus per-row labels.

    Attributes
    ----------
    X : ndarray of shape (n, d)
        Feature values, float64.
    labels : list of str
        Row labels; arbitrary non-empty strings.
    """

    X: np.ndarray
    labels: list[str]

    def __post_init__(self) -> None:
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        if len(self.labels) != self.X.shape[0]:
            raise ValueError(
                f"label count {len(self.labels)} does not match row count {self.X.shape[0]}"
            )
        if not np.isfinite(self.X).all():
            raise ValueError("X contains non-finite values")
        self.labels = [str(lab) for lab in self.labels]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def class_order(self) -> list[str]:
        """Distinct labels in first-appearance order."""
        seen: dict[str, None] = {}
        for lab in self.labels:
            seen.setdefault(lab, None)
        return list(seen)

    def rows_for(self, label: str) -> np.ndarray:
        """All feature rows carrying the given label."""
        mask = np.array([lab == label for lab in self.labels], dtype=bool)
        return self.X[mask]

    def subset(self, keep_labels) -> "LabeledDataset":
        keep = set(str(k) for k in keep_labels)
        mask = [lab in keep for lab in self.labels]
        return LabeledDataset(
            self.X[np.array(mask, dtype=bool)],
            [lab for lab, m in zip(self.labels, mask) if m],
        )


def _expected_header(d: int) -> list[str]:
    return [f"x{j}" for j in range(1, d + 1)] + ["label"]


def write_csv(path, data: LabeledDataset) -> None:
    """Write a dataset with the ``x1..xd,label`` header.

    Floats are written with ``repr`` so they round-trip exactly.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_expected_header(data.d))
        for row, lab in zip(data.X, data.labels):
            writer.writerow([repr(float(v)) for v in row] + [lab])


def _read(path, allow_unlabeled: bool):
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        has_label = header[-1] == "label" if header else False
        if not has_label and not allow_unlabeled:
            raise ValueError(f"{path}: line 1: header must be x1..xd,label")
        d = len(header) - 1 if has_label else len(header)
        if d < 1 or header[:d] != _expected_header(d)[:d]:
            raise ValueError(f"{path}: line 1: header must be x1..xd,label")
        width = d + 1 if has_label else d

        rows: list[list[float]] = []
        labels: list[str] = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} fields, got {len(rec)}"
                )
            try:
                rows.append([float(v) for v in rec[:d]])
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: non-numeric feature value"
                ) from None
            if has_label:
                lab = rec[d].strip()
                if not lab:
                    raise ValueError(f"{path}: line {lineno}: empty label")
                labels.append(lab)

    if not rows:
        raise ValueError(f"{path}: no data rows")
    X = np.asarray(rows, dtype=np.float64)
    if not np.isfinite(X).all():
        raise ValueError(f"{path}: non-finite feature value")
    return X, (labels if has_label else None)


def read_csv(path) -> LabeledDataset:
    """Read a labeled dataset, validating the header and every row.

    Raises
    ------
    ValueError
        On a malformed header, a non-numeric feature value, an empty label,
        or a row of the wrong width; messages carry the 1-based line number.
    """
    X, labels = _read(path, allow_unlabeled=False)
    return LabeledDataset(X, labels)


def read_features(path):
    """Read features from a CSV whose label column is optional.

    Returns ``(X, labels)`` with ``labels`` None when the file has no label
    column.
    """
    return _read(path, allow_unlabeled=True)
