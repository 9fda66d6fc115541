"""Loading, cleaning, normalizing, splitting and synthesizing tabular datasets."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd


class DataError(Exception):
    """Raised for unusable input data (missing files/columns, empty tables)."""


@dataclass(frozen=True)
class DatasetTable:
    """A feature matrix with integer class labels.

    ``row_flags`` carries the raw outlier-flag strings (one per row) when the
    source file has a flag column; it is dropped by :func:`clean_rows`.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    class_names: list[str]
    row_flags: np.ndarray | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labs = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if feats.shape[0] != labs.shape[0]:
            raise DataError("feature/label row counts differ")
        if feats.shape[0] < 1:
            raise DataError("empty dataset")
        if len(self.feature_names) != feats.shape[1]:
            raise DataError("feature_names length mismatch")
        if len(self.class_names) < 2:
            raise DataError("need at least 2 classes")
        if labs.size and (labs.min() < 0 or labs.max() >= len(self.class_names)):
            raise DataError("label out of range")
        if self.row_flags is not None and len(self.row_flags) != feats.shape[0]:
            raise DataError("row_flags length mismatch")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)
        feats.setflags(write=False)
        labs.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def take(self, indices: np.ndarray) -> "DatasetTable":
        flags = None if self.row_flags is None else self.row_flags[indices]
        return DatasetTable(self.features[indices], self.labels[indices],
                            list(self.feature_names), list(self.class_names), flags)


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature column extrema of the fitting table."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64)
        hi = np.asarray(self.max, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DataError("min/max must be 1-D and congruent")
        if np.any(hi < lo):
            raise DataError("max < min")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise DataError("test_fraction must be in (0, 1)")


@dataclass(frozen=True)
class SyntheticSpec:
    """Axis-aligned Gaussian blobs, one blob per class."""

    counts: list[int]
    means: list[np.ndarray]
    stds: list[np.ndarray]
    n_features: int
    seed: int = 0

    def __post_init__(self):
        if not self.counts or any(c < 1 for c in self.counts):
            raise DataError("all class counts must be >= 1")
        if len(self.means) != len(self.counts) or len(self.stds) != len(self.counts):
            raise DataError("means/stds must have one entry per class")
        for m, s in zip(self.means, self.stds):
            if len(m) != self.n_features or len(s) != self.n_features:
                raise DataError("mean/std length must equal n_features")
            if np.any(np.asarray(s, dtype=float) <= 0):
                raise DataError("all std devs must be > 0")


@dataclass
class CleanReport:
    inf_nan: int = 0
    outlier: int = 0

    def as_dict(self) -> dict:
        return {"inf_nan": self.inf_nan, "outlier": self.outlier}


def load_table(path: str, label_column: str,
               flag_column: str | None = None) -> DatasetTable:
    """Parse a CSV into a DatasetTable.

    Labels are encoded by lexicographically sorted class name. Non-numeric
    feature cells become NaN so that :func:`clean_rows` removes and counts them.
    Column names are whitespace-stripped before matching (CICIDS headers carry
    leading spaces).
    """
    if not os.path.isfile(path):
        raise DataError(f"missing data file: {path}")
    df = pd.read_csv(path, skipinitialspace=True)
    df.columns = [c.strip() for c in df.columns]
    if label_column not in df.columns:
        raise DataError(f"missing label column: {label_column}")
    if len(df) == 0:
        raise DataError("empty dataset")

    flags = None
    if flag_column is not None:
        if flag_column not in df.columns:
            raise DataError(f"missing flag column: {flag_column}")
        flags = df[flag_column].astype(str).to_numpy()
        df = df.drop(columns=[flag_column])

    raw_labels = df[label_column].astype(str).str.strip()
    feature_df = df.drop(columns=[label_column]).apply(pd.to_numeric, errors="coerce")

    class_names = sorted(raw_labels.unique())
    if len(class_names) < 2:
        raise DataError("need at least 2 classes")
    encoding = {name: i for i, name in enumerate(class_names)}
    labels = raw_labels.map(encoding).to_numpy(dtype=np.int64)

    return DatasetTable(feature_df.to_numpy(dtype=np.float64), labels,
                        list(feature_df.columns), class_names, flags)


def clean_rows(table: DatasetTable,
               outlier_marker: str = "drop-it") -> tuple[DatasetTable, CleanReport]:
    """Drop flagged-outlier rows and rows with any non-finite value.

    Flagged rows are counted first; non-finite rows are counted among the
    remainder, so a row that is both flagged and non-finite counts once.
    """
    report = CleanReport()
    keep = np.ones(table.n_rows, dtype=bool)
    if table.row_flags is not None:
        flagged = table.row_flags == outlier_marker
        report.outlier = int(flagged.sum())
        keep &= ~flagged
    bad = ~np.all(np.isfinite(table.features), axis=1)
    report.inf_nan = int((bad & keep).sum())
    keep &= ~bad
    if not keep.any():
        raise DataError("no usable rows")
    cleaned = DatasetTable(table.features[keep], table.labels[keep],
                           list(table.feature_names), list(table.class_names))
    return cleaned, report


def fit_minmax(train: DatasetTable) -> NormalizationStats:
    if not np.all(np.isfinite(train.features)):
        raise DataError("cannot fit min-max stats on non-finite data")
    return NormalizationStats(train.features.min(axis=0), train.features.max(axis=0))


def apply_minmax(stats: NormalizationStats, table: DatasetTable) -> DatasetTable:
    """Rescale each value to (x - min) / (max - min).

    Constant columns map to 0. Values unseen at fit time may land outside
    [0, 1]; they are not clipped.
    """
    if stats.min.shape[0] != table.n_features:
        raise DataError(f"stats have {stats.min.shape[0]} features, "
                        f"table has {table.n_features}")
    span = stats.max - stats.min
    safe = np.where(span > 0, span, 1.0)
    scaled = (table.features - stats.min) / safe
    scaled[:, span == 0] = 0.0
    return DatasetTable(scaled, table.labels, list(table.feature_names),
                        list(table.class_names))


def stratified_split(table: DatasetTable,
                     spec: SplitSpec) -> tuple[DatasetTable, DatasetTable]:
    """Seeded train/test split; per-class proportions held within one row."""
    rng = np.random.default_rng(spec.seed)
    test_idx: list[np.ndarray] = []
    train_idx: list[np.ndarray] = []
    if spec.stratified:
        for c in range(table.n_classes):
            members = np.flatnonzero(table.labels == c)
            if members.size < 2:
                raise DataError(f"class {table.class_names[c]} has fewer than "
                                "2 rows; cannot stratify")
            perm = rng.permutation(members)
            n_test = int(round(members.size * spec.test_fraction))
            n_test = min(max(n_test, 1), members.size - 1)
            test_idx.append(perm[:n_test])
            train_idx.append(perm[n_test:])
    else:
        perm = rng.permutation(table.n_rows)
        n_test = int(round(table.n_rows * spec.test_fraction))
        n_test = min(max(n_test, 1), table.n_rows - 1)
        test_idx.append(perm[:n_test])
        train_idx.append(perm[n_test:])
    return table.take(np.concatenate(train_idx)), table.take(np.concatenate(test_idx))


def generate_synthetic(spec: SyntheticSpec) -> DatasetTable:
    """Draw seeded Gaussian blobs; class c contributes counts[c] rows in order."""
    rng = np.random.default_rng(spec.seed)
    blocks = []
    labels = []
    for c, count in enumerate(spec.counts):
        mean = np.asarray(spec.means[c], dtype=np.float64)
        std = np.asarray(spec.stds[c], dtype=np.float64)
        blocks.append(rng.normal(mean, std, size=(count, spec.n_features)))
        labels.append(np.full(count, c, dtype=np.int64))
    n_classes = len(spec.counts)
    width = len(str(n_classes - 1))
    class_names = [f"class_{c:0{width}d}" for c in range(n_classes)]
    feature_names = [f"f{j}" for j in range(spec.n_features)]
    return DatasetTable(np.vstack(blocks), np.concatenate(labels),
                        feature_names, class_names)


def save_table(table: DatasetTable, path: str, label_column: str = "label") -> None:
    """Write the table as CSV with class names in the label column."""
    df = pd.DataFrame(table.features, columns=table.feature_names)
    df[label_column] = [table.class_names[l] for l in table.labels]
    df.to_csv(path, index=False, float_format="%.17g")
