"""Labeled datasets: CSV ingestion, Gaussian-mixture generation, min-max scaling."""
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyInputError, ParseError
from .rng import make_rng


@dataclass(frozen=True)
class LabeledDataset:
    """Row-major feature matrix with optional integer class labels.

    Arrays are stored read-only so one instance can be shared between
    concurrent workers.
    """

    features: np.ndarray
    labels: np.ndarray | None = None
    name: str = "dataset"
    k_true: int = field(default=0)

    def __post_init__(self):
        x = np.array(self.features, dtype=float, copy=True)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError(f"features must be a non-empty 2-D matrix, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain non-finite values")
        x.setflags(write=False)
        object.__setattr__(self, "features", x)
        if self.labels is None:
            object.__setattr__(self, "k_true", int(self.k_true or 0))
            return
        y = np.array(self.labels, dtype=np.int64, copy=True)
        if y.shape != (x.shape[0],):
            raise ValueError(f"labels must have length {x.shape[0]}, got shape {y.shape}")
        k = len(np.unique(y))
        if y.min() < 0 or y.max() >= k:
            raise ValueError("labels must be contiguous integers in [0, k_true)")
        y.setflags(write=False)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "k_true", k)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Diagonal Gaussian mixture.

    ``components`` is a sequence of ``(mean, std, weight)`` triples. Either
    ``samples_per_component`` (exact count per component) or ``n`` (total,
    split by weight with largest-remainder rounding) fixes the size.
    """

    components: tuple
    samples_per_component: int | None = None
    n: int | None = None
    seed: int = 0
    name: str = "gmm"

    def __post_init__(self):
        comps = tuple((np.asarray(m, float), np.asarray(s, float), float(w)) for m, s, w in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            return
        weights = np.array([w for _, _, w in comps])
        if abs(weights.sum() - 1.0) > 1e-9 or np.any(weights < 0):
            raise ValueError("component weights must be non-negative and sum to 1")
        d = comps[0][0].shape
        for mean, std, _ in comps:
            if mean.shape != d or std.shape != d or mean.ndim != 1:
                raise ValueError("all means and stds must be 1-D vectors of one dimension")
            if np.any(std <= 0):
                raise ValueError("standard deviations must be positive")
        if (self.samples_per_component is None) == (self.n is None):
            raise ValueError("give exactly one of samples_per_component or n")

    def counts(self):
        if self.samples_per_component is not None:
            return [int(self.samples_per_component)] * len(self.components)
        weights = np.array([w for _, _, w in self.components])
        raw = weights * self.n
        counts = np.floor(raw).astype(int)
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[: self.n - counts.sum()]] += 1
        return counts.tolist()


def _parse_float(token, line):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"non-numeric feature value {token!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite feature value {token!r}", line)
    return value


def _looks_numeric(row):
    try:
        [float(v) for v in row]
    except ValueError:
        return False
    return True


def load_csv(path, label_column=None, name=None):
    """Read a comma-separated file into a :class:`LabeledDataset`.

    A first row containing any non-numeric field is treated as a header.
    ``label_column`` is a column index (negative counts from the end) or
    ``None`` for unlabeled data. Label tokens are remapped to contiguous ids in
    order of first appearance.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i, row) for i, row in enumerate(csv.reader(fh), start=1) if row and any(v.strip() for v in row)]
    if rows and not _looks_numeric(rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")

    width = len(rows[0][1])
    if label_column is not None:
        label_column = label_column % width if -width <= label_column < width else None
        if label_column is None:
            raise ValueError(f"label column out of range for {width} columns")

    features, tokens = [], []
    for line, row in rows:
        if len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", line)
        values = []
        for j, token in enumerate(row):
            if j == label_column:
                tokens.append(token.strip())
            else:
                values.append(_parse_float(token, line))
        features.append(values)
    if label_column is not None and width == 1:
        raise ParseError("no feature columns besides the label", rows[0][0])

    labels = None
    if label_column is not None:
        ids = {}
        labels = [ids.setdefault(t, len(ids)) for t in tokens]
    return LabeledDataset(np.array(features, dtype=float), labels, name or path.stem)


def write_csv(ds, path, header=True):
    """Write features (full float precision) with the label as last column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            names = [f"x{j}" for j in range(ds.d)]
            writer.writerow(names + (["label"] if ds.labels is not None else []))
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.features[i]]
            if ds.labels is not None:
                row.append(str(int(ds.labels[i])))
            writer.writerow(row)


def generate_gaussian_mixture(spec):
    """Sample a labeled dataset from ``spec``; row labels are component ids.

    Rows are grouped by component in component order.
    """
    if not spec.components:
        raise EmptyInputError("gaussian mixture has no components")
    rng = make_rng(spec.seed)
    blocks, labels = [], []
    for j, ((mean, std, _), count) in enumerate(zip(spec.components, spec.counts())):
        blocks.append(mean + std * rng.standard_normal((count, mean.shape[0])))
        labels.append(np.full(count, j))
    x = np.concatenate(blocks)
    y = np.concatenate(labels)
    present = np.unique(y)
    # drop ids of zero-count components so labels stay contiguous
    y = np.searchsorted(present, y)
    return LabeledDataset(x, y, spec.name)


def normalize_minmax(ds):
    """Map each feature column affinely onto [0, 1]; constant columns become 0."""
    x = ds.features
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (x - lo) / safe, 0.0)
    # exact endpoints so a second pass is the identity
    scaled = np.clip(scaled, 0.0, 1.0)
    return LabeledDataset(scaled, ds.labels, ds.name)
