"""Non-IID federated partitions and device-disconnection masks."""
import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .errors import QuotaShortfallError


@dataclass(frozen=True)
class FederatedPartition:
    """Disjoint row-index lists, one per client.

    ``m`` is the number of clients in the original federation and
    ``client_ids`` names the clients present here; after :func:`restrict` the
    ids are a subset of ``range(m)`` and keep their original values, so
    per-client seeds travel with the client.
    """

    client_rows: tuple
    p: float
    m: int
    seed: int
    client_ids: tuple = None

    def __post_init__(self):
        rows = tuple(np.sort(np.asarray(r, dtype=np.int64)) for r in self.client_rows)
        for r in rows:
            r.setflags(write=False)
        ids = tuple(range(len(rows))) if self.client_ids is None else tuple(int(i) for i in self.client_ids)
        object.__setattr__(self, "client_rows", rows)
        object.__setattr__(self, "client_ids", ids)
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"non-IID level p={self.p} outside [0, 1]")
        if len(ids) != len(rows) or len(set(ids)) != len(ids):
            raise ValueError("client_ids must be unique and match client_rows")
        if any(not 0 <= i < self.m for i in ids):
            raise ValueError(f"client ids must lie in [0, {self.m})")
        if any(len(r) == 0 for r in rows):
            raise ValueError("every client needs at least one row")
        total = sum(len(r) for r in rows)
        if rows and len(np.unique(np.concatenate(rows))) != total:
            raise ValueError("client row lists overlap")

    def __len__(self):
        return len(self.client_rows)

    def sizes(self):
        return [len(r) for r in self.client_rows]

    def all_rows(self):
        return np.sort(np.concatenate(self.client_rows))

    def to_dict(self):
        return {
            "p": self.p,
            "m": self.m,
            "seed": self.seed,
            "client_ids": list(self.client_ids),
            "client_rows": [r.tolist() for r in self.client_rows],
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            tuple(doc["client_rows"]), float(doc["p"]), int(doc["m"]), int(doc["seed"]),
            tuple(doc.get("client_ids", range(len(doc["client_rows"])))),
        )


@dataclass(frozen=True)
class ConnectionMask:
    connected: tuple
    rate: float
    seed: int

    @property
    def m(self):
        return len(self.connected)

    @property
    def n_disconnected(self):
        return sum(not c for c in self.connected)


def _pure_quota(p, size):
    # round first: 0.07 * 100 must give 7, not 8
    return math.ceil(round(p * size, 9))


def partition_noniid(ds, p, m=None, seed=0):
    """Split ``ds`` over ``m`` clients at non-IID level ``p``.

    Client i gets ``n // m`` rows (one more for the first ``n % m`` clients).
    ``ceil(p * s_i)`` of them come from class ``i mod k_true``; the rest are
    drawn uniformly from whatever rows remain after all pure quotas are
    served. Every row lands on exactly one client.
    """
    if ds.labels is None:
        raise ValueError("non-IID partitioning needs ground-truth labels")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"non-IID level p={p} outside [0, 1]")
    m = ds.k_true if m is None else int(m)
    if not 1 <= m <= ds.n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={ds.n}")

    k = ds.k_true
    base, extra = divmod(ds.n, m)
    sizes = [base + (1 if i < extra else 0) for i in range(m)]
    quotas = [_pure_quota(p, s) for s in sizes]

    class_rows = [np.flatnonzero(ds.labels == c) for c in range(k)]
    demand = np.zeros(k, dtype=np.int64)
    for i, q in enumerate(quotas):
        demand[i % k] += q
    short = [c for c in range(k) if demand[c] > len(class_rows[c])]
    if short:
        owed = np.zeros(k)
        for i, s in enumerate(sizes):
            owed[i % k] += s
        achievable = min(len(class_rows[c]) / owed[c] for c in range(k) if owed[c] > 0)
        raise QuotaShortfallError(
            f"class {short[0]} has {len(class_rows[short[0]])} rows but pure quotas need {demand[short[0]]}",
            achievable,
        )

    gen = _rng.make_rng(seed, _rng.PARTITION)
    pools = [gen.permutation(rows) for rows in class_rows]
    taken = np.zeros(k, dtype=np.int64)
    pure = []
    for i, q in enumerate(quotas):
        c = i % k
        pure.append(pools[c][taken[c]: taken[c] + q])
        taken[c] += q
    residual = gen.permutation(np.concatenate([pools[c][taken[c]:] for c in range(k)]))

    client_rows, start = [], 0
    for i, s in enumerate(sizes):
        fill = s - quotas[i]
        client_rows.append(np.concatenate([pure[i], residual[start: start + fill]]))
        start += fill
    return FederatedPartition(tuple(client_rows), float(p), m, seed)


def sample_connection_mask(m, rate, seed=0):
    """Disconnect exactly ``round(rate * m)`` clients (ties to even), chosen uniformly."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"disconnection rate {rate} outside [0, 1]")
    count = round(rate * m)
    if count >= m:
        raise ValueError(f"rate {rate} would disconnect all {m} clients")
    gen = _rng.make_rng(seed, _rng.MASK)
    dropped = set(gen.choice(m, size=count, replace=False).tolist()) if count else set()
    return ConnectionMask(tuple(i not in dropped for i in range(m)), float(rate), seed)


def restrict(partition, mask):
    """Keep only the clients whose original id is marked connected."""
    if mask.m != partition.m:
        raise ValueError(f"mask covers {mask.m} clients, partition has m={partition.m}")
    keep = [j for j, cid in enumerate(partition.client_ids) if mask.connected[cid]]
    return FederatedPartition(
        tuple(partition.client_rows[j] for j in keep),
        partition.p,
        partition.m,
        partition.seed,
        tuple(partition.client_ids[j] for j in keep),
    )
