"""Synthetic benchmark generators with counter-based reproducibility.

Every (seed, replication, split, class, column) tuple owns an independent
Philox substream, so regenerating any slice of a dataset gives identical
values regardless of how many other classes or columns are drawn around it:
a class-subset dataset reuses exactly the streams of the full one, and
appending noise columns never perturbs the originals.

Two generators are provided. The first has ten classes in thirty dimensions
where class y concentrates on the six-column window {y..y+5} (normal with
mean 0.5 and standard deviation 0.02 through 0.12) and is uniform on (0, 1)
elsewhere. The second has up to five classes in ten dimensions with two
informative normal columns and eight uniform ones; class centers default to
one central class with four others at distinct distances 0.15 to 0.60.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset

__all__ = [
    "Example2Config",
    "substream",
    "example1",
    "example1_relevant",
    "example2",
    "example2_relevant",
    "add_noise_columns",
]

_SPLIT_TRAIN = 0
_SPLIT_TEST = 1
_SPLIT_NOISE_BASE = 64

_EXAMPLE1_CLASSES = 10
_EXAMPLE1_D = 30
_EXAMPLE1_WINDOW = 6

_DEFAULT_MEANS = (
    (0.5, 0.5),
    (0.65, 0.5),
    (0.5, 0.8),
    (0.05, 0.5),
    (0.5, -0.1),
)


def substream(seed: int, replication: int, split: int, class_id: int, column: int):
    """Independent generator for one (seed, replication, split, class, column).

    The coordinates are packed into the second Philox key word, so streams
    never collide for distinct tuples within the stated bounds.
    """
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    if not 0 <= replication < 2**24:
        raise ValueError("replication must fit in 24 bits")
    if not 0 <= split < 2**8:
        raise ValueError("split tag must fit in 8 bits")
    if not 0 <= class_id < 2**16:
        raise ValueError("class id must fit in 16 bits")
    if not 0 <= column < 2**16:
        raise ValueError("column must fit in 16 bits")
    word = (replication << 40) | (split << 32) | (class_id << 16) | column
    key = np.array([seed, word], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _column(seed, replication, split, class_id, column, n, kind, loc=0.0, scale=1.0):
    rng = substream(seed, replication, split, class_id, column)
    if kind == "normal":
        return rng.normal(loc, scale, n)
    if kind == "uniform":
        return rng.uniform(0.0, 1.0, n)
    raise ValueError(f"unknown column kind {kind!r}")


def _check_sizes(n_train: int, n_test: int) -> None:
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be positive")


def example1_relevant(class_id: int) -> set[int]:
    """0-based informative columns of class ``class_id`` (1-based, 1..10)."""
    if not 1 <= class_id <= _EXAMPLE1_CLASSES:
        raise ValueError(f"class id must be in 1..{_EXAMPLE1_CLASSES}")
    return set(range(class_id - 1, class_id - 1 + _EXAMPLE1_WINDOW))


def example1(seed: int, n_train: int = 150, n_test: int = 100, replication: int = 0):
    """Ten classes, thirty columns, six informative per class.

    Returns ``(train, test)`` datasets with ``n_train``/``n_test`` rows per
    class and labels "1".."10".
    """
    _check_sizes(n_train, n_test)
    out = []
    for split, n in ((_SPLIT_TRAIN, n_train), (_SPLIT_TEST, n_test)):
        blocks, labels = [], []
        for y in range(1, _EXAMPLE1_CLASSES + 1):
            cols = []
            relevant = example1_relevant(y)
            for j in range(_EXAMPLE1_D):
                if j in relevant:
                    sd = 0.02 * (j - (y - 1) + 1)
                    cols.append(_column(seed, replication, split, y, j, n, "normal", 0.5, sd))
                else:
                    cols.append(_column(seed, replication, split, y, j, n, "uniform"))
            blocks.append(np.column_stack(cols))
            labels.extend([str(y)] * n)
        out.append(LabeledDataset(np.vstack(blocks), labels))
    return out[0], out[1]


@dataclass(frozen=True)
class Example2Config:
    """Layout of the five-class two-informative-column generator.

    ``means`` are per-class centers for the two informative columns;
    ``sd`` their standard deviations; ``class_subset`` restricts generation
    to the given 1-based class ids while keeping their streams and labels.
    """

    means: tuple = _DEFAULT_MEANS
    sd: tuple = (0.1, 0.2)
    d_total: int = 10
    class_subset: tuple | None = None

    def __post_init__(self) -> None:
        if len(self.means) < 1:
            raise ValueError("need at least one class mean")
        if any(len(m) != 2 for m in self.means):
            raise ValueError("each class mean must be an (m1, m2) pair")
        if len(self.sd) != 2 or any(s <= 0 for s in self.sd):
            raise ValueError("sd must be two positive values")
        if self.d_total < 3:
            raise ValueError("d_total must leave room for the two informative columns")
        if self.class_subset is not None:
            ids = list(self.class_subset)
            if len(ids) < 1 or len(set(ids)) != len(ids):
                raise ValueError("class_subset must be non-empty without repeats")
            if any(not 1 <= c <= len(self.means) for c in ids):
                raise ValueError("class_subset ids must index the configured means")

    def classes(self) -> list[int]:
        if self.class_subset is None:
            return list(range(1, len(self.means) + 1))
        return sorted(self.class_subset)


def example2_relevant() -> set[int]:
    """0-based informative columns of the five-class generator."""
    return {0, 1}


def example2(
    seed: int,
    config: Example2Config | None = None,
    n_train: int = 150,
    n_test: int = 100,
    replication: int = 0,
):
    """Up to five classes, two informative columns, the rest uniform noise.

    Returns ``(train, test)``; labels are the original 1-based class ids,
    so a subset keeps its ids (and its random streams) from the full layout.
    """
    if config is None:
        config = Example2Config()
    _check_sizes(n_train, n_test)
    out = []
    for split, n in ((_SPLIT_TRAIN, n_train), (_SPLIT_TEST, n_test)):
        blocks, labels = [], []
        for y in config.classes():
            mu = config.means[y - 1]
            cols = [
                _column(seed, replication, split, y, 0, n, "normal", mu[0], config.sd[0]),
                _column(seed, replication, split, y, 1, n, "normal", mu[1], config.sd[1]),
            ]
            for j in range(2, config.d_total):
                cols.append(_column(seed, replication, split, y, j, n, "uniform"))
            blocks.append(np.column_stack(cols))
            labels.extend([str(y)] * n)
        out.append(LabeledDataset(np.vstack(blocks), labels))
    return out[0], out[1]


def add_noise_columns(
    data: LabeledDataset,
    k: int,
    seed: int,
    replication: int = 0,
    channel: int = 0,
) -> LabeledDataset:
    """Append k standard normal columns to a dataset.

    ``channel`` keeps streams distinct when several datasets are augmented
    under the same seed and replication (use different values for train and
    test). Original columns are returned unchanged.
    """
    if k < 0:
        raise ValueError("noise column count must be non-negative")
    if k == 0:
        return LabeledDataset(data.X.copy(), list(data.labels))
    split = _SPLIT_NOISE_BASE + channel
    cols = [
        _column(seed, replication, split, 0, data.d + c, data.n, "normal", 0.0, 1.0)
        for c in range(k)
    ]
    X = np.column_stack([data.X] + cols)
    return LabeledDataset(X, list(data.labels))
