"""NMI and matched Cohen's kappa over a shared contingency table."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class ContingencyTable:
    """``counts[i, j]`` = rows with true class i and predicted cluster j."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64, copy=True)
        if c.ndim != 2 or np.any(c < 0):
            raise ValueError("contingency counts must be a non-negative matrix")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def n(self):
        return int(self.counts.sum())

    @property
    def T(self):
        return ContingencyTable(self.counts.T)


@dataclass(frozen=True)
class MetricReport:
    nmi: float
    kappa: float
    mapping: dict


def contingency(true_labels, pred_labels):
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(pred_labels, dtype=np.int64)
    if t.ndim != 1 or t.shape != p.shape:
        raise ValueError(f"label vectors differ in shape: {t.shape} vs {p.shape}")
    if len(t) == 0:
        raise ValueError("need at least one labelled row")
    if t.min() < 0 or p.min() < 0:
        raise ValueError("labels must be non-negative")
    counts = np.zeros((t.max() + 1, p.max() + 1), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ContingencyTable(counts)


def _entropy(counts, n):
    q = counts[counts > 0] / n
    return float(-np.sum(q * np.log(q)))


def nmi(table):
    """Mutual information normalised by sqrt(H(true) * H(pred)), natural logs.

    Both entropies zero (one class, one cluster) gives 1; exactly one zero gives 0.
    """
    c = table.counts
    n = table.n
    if n < 1:
        raise ValueError("empty contingency table")
    rows, cols = c.sum(axis=1), c.sum(axis=0)
    h_true, h_pred = _entropy(rows, n), _entropy(cols, n)
    if h_true == 0.0 and h_pred == 0.0:
        return 1.0
    if h_true == 0.0 or h_pred == 0.0:
        return 0.0
    i, j = np.nonzero(c)
    joint = c[i, j] / n
    mi = float(np.sum(joint * np.log(c[i, j] * n / (rows[i] * cols[j]))))
    return float(min(1.0, max(0.0, mi / np.sqrt(h_true * h_pred))))


def _optimum(cost, rows, cols):
    if not rows or not cols:
        return 0.0
    sub = cost[np.ix_(rows, cols)]
    r, c = linear_sum_assignment(sub)
    return float(sub[r, c].sum())


def hungarian(cost):
    """Minimum-cost matching of ``min(r, c)`` row/column pairs.

    Returns the pairs sorted by row. Among optimal matchings the one whose
    sorted pair list is lexicographically smallest is returned, so ties
    resolve deterministically (identity-first on symmetric costs).
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost must be a 2-D matrix")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix contains non-finite entries")
    r, c = cost.shape
    size = min(r, c)
    best = _optimum(cost, list(range(r)), list(range(c)))
    if np.all(cost == np.round(cost)) and np.abs(cost).sum() < 2.0 ** 52:
        tol = 0.5  # integer costs: exact comparisons
    else:
        tol = 1e-9 * max(1.0, float(np.abs(cost).sum()))

    pairs, fixed = [], 0.0
    free_rows, free_cols = list(range(r)), list(range(c))
    while len(pairs) < size:
        placed = False
        for i in free_rows:
            rest_rows = [x for x in free_rows if x > i]
            need = size - len(pairs) - 1
            for j in free_cols:
                rest_cols = [y for y in free_cols if y != j]
                if min(len(rest_rows), len(rest_cols)) < need:
                    continue
                total = fixed + cost[i, j] + _optimum(cost, rest_rows, rest_cols)
                if total <= best + tol:
                    pairs.append((i, j))
                    fixed += cost[i, j]
                    free_rows = rest_rows
                    free_cols = rest_cols
                    placed = True
                    break
            if placed:
                break
        if not placed:  # pragma: no cover - unreachable for finite costs
            raise RuntimeError("failed to reconstruct an optimal matching")
    return pairs


def kappa(table):
    """Cohen's kappa after mapping predicted clusters one-to-one onto classes.

    The mapping maximises matched agreement (Hungarian on the negated,
    transposed table). When several mappings tie on agreement, the one with
    the smallest chance agreement is used, so the value never depends on how
    clusters happen to be numbered. Predicted clusters left unmatched when
    there are more clusters than classes count as disagreement. Returns
    ``(kappa, mapping)`` with ``mapping`` sending predicted cluster -> true class.
    """
    c = table.counts
    n = table.n
    if n < 1:
        raise ValueError("empty contingency table")
    rows_n, cols_n = c.sum(axis=1), c.sum(axis=0)
    # integer lexicographic cost: agreement first, then sum of row*col margins
    chance = np.outer(cols_n, rows_n).astype(float)
    pairs = hungarian(-c.T.astype(float) * (float(n) * n + 1.0) + chance)
    mapping = {int(j): int(i) for j, i in pairs}

    rows = c.sum(axis=1) / n
    mapped_cols = np.zeros(c.shape[0])
    agree = 0
    for j, i in mapping.items():
        mapped_cols[i] += c[:, j].sum()
        agree += c[i, j]
    p_o = agree / n
    p_e = float(np.dot(rows, mapped_cols / n))
    if np.isclose(p_e, 1.0, rtol=0.0, atol=1e-12):
        return (1.0 if np.isclose(p_o, 1.0, rtol=0.0, atol=1e-12) else 0.0), mapping
    return float((p_o - p_e) / (1.0 - p_e)), mapping


def evaluate(true_labels, pred_labels):
    table = contingency(true_labels, pred_labels)
    k, mapping = kappa(table)
    return MetricReport(nmi(table), k, mapping)
