"""One-round federated clustering protocols and their centralized references.

Every federated protocol here follows the same shape: each connected client
computes a payload from its own rows and uploads it once, the server builds
``k`` global centroids from the payloads, broadcasts them once, and each
client labels its own rows by cosine distance to the broadcast centroids.
Clients are processed in ascending id order and every client-side random
stream is keyed by ``(run seed, client id)``, so results do not depend on
execution order, parallelism, or which other clients are connected.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as _rng
from .clustering import CentroidModel, assign_cosine, fcm_fit, kmeans_fit
from .partition import restrict
from .synthesis import default_gan_config, fit_gmm_synthesizer, train_local_gan


@dataclass(frozen=True)
class ClientUpload:
    client_id: int
    local_size: int
    generator: object = None
    centroids: np.ndarray = None
    cluster_sizes: np.ndarray = None

    def __post_init__(self):
        if self.local_size < 1:
            raise ValueError("an upload needs local_size >= 1")
        if (self.generator is None) == (self.centroids is None):
            raise ValueError("an upload carries either a generator or a centroid list")
        if self.centroids is not None and (self.centroids.ndim != 2 or len(self.centroids) < 1):
            raise ValueError("centroid payload needs at least one centroid")


@dataclass(frozen=True)
class ProtocolTrace:
    uploads_count: int
    broadcasts_count: int
    participants: tuple
    k_local_used: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "uploads": self.uploads_count,
            "broadcasts": self.broadcasts_count,
            "participants": list(self.participants),
            "k_local_used": {str(k): v for k, v in self.k_local_used.items()},
        }


@dataclass
class MethodResult:
    """Labels for ``rows`` (sorted dataset row ids of connected clients)."""

    method: str
    rows: np.ndarray
    labels: np.ndarray
    centroids: CentroidModel
    trace: ProtocolTrace
    synthetic: np.ndarray = None

    def to_dict(self):
        return {
            "method": self.method,
            "rows": self.rows.tolist(),
            "assignment": self.labels.tolist(),
            "centroids": self.centroids.to_dict(),
            "trace": self.trace.to_dict(),
        }


def _active(partition, mask):
    active = partition if mask is None else restrict(partition, mask)
    if len(active) == 0:
        raise ValueError("no connected clients")
    order = np.argsort(active.client_ids, kind="stable")
    return active, [(active.client_ids[j], active.client_rows[j]) for j in order]


def _run_clients(fn, clients, parallel_clients):
    if parallel_clients and parallel_clients > 1:
        with ThreadPoolExecutor(max_workers=parallel_clients) as pool:
            return list(pool.map(lambda c: fn(*c), clients))
    return [fn(cid, rows) for cid, rows in clients]


def _broadcast_and_assign(method, X, clients, model, uploads, m, synthetic=None, k_local_used=None):
    """Send ``model`` to every connected client and collect cosine labels."""
    trace = ProtocolTrace(
        uploads_count=len(uploads),
        broadcasts_count=1,
        participants=tuple(cid in {u.client_id for u in uploads} for cid in range(m)),
        k_local_used=k_local_used or {},
    )
    rows = np.concatenate([r for _, r in clients])
    labels = np.concatenate([assign_cosine(X[r], model) for _, r in clients])
    order = np.argsort(rows, kind="stable")
    return MethodResult(method, rows[order], labels[order], model, trace, synthetic)


def _server_fit(points, variant, k, seed, fuzzy_degree, n_init, sample_weight=None):
    if len(points) < k:
        raise ValueError(f"server has {len(points)} points but needs k={k}")
    server_seed = (seed, _rng.SERVER_FIT)
    if variant == "km":
        return kmeans_fit(points, k, seed=server_seed, n_init=n_init, sample_weight=sample_weight).model
    if variant == "fcm":
        return fcm_fit(points, k, fuzzy_degree=fuzzy_degree, seed=server_seed, n_init=n_init).model
    raise ValueError(f"unknown variant {variant!r}")


def run_sda_fc(ds, partition, mask=None, variant="km", gan_cfg=None, k=None, seed=0,
               fuzzy_degree=1.1, synthesizer="gan", parallel_clients=0, n_init=10):
    """Synthetic-data aided federated clustering.

    Clients train a generator on their rows and upload it with their row
    count; the server draws that many synthetic rows from each generator,
    clusters the merged set with K-means (``variant="km"``) or fuzzy c-means
    (``"fcm"``) and broadcasts the centroids. ``synthesizer="gmm"`` swaps the
    GAN for a Gaussian-mixture fit, which isolates protocol behaviour from
    adversarial-training noise.
    """
    X = ds.features
    k = ds.k_true if k is None else k
    if k < 1:
        raise ValueError("k must be >= 1")
    active, clients = _active(partition, mask)
    if gan_cfg is None:
        gan_cfg = default_gan_config(X.shape[1], k)

    def client_step(cid, rows):
        local = X[rows]
        if synthesizer == "gan":
            payload = train_local_gan(local, replace(gan_cfg, seed=_rng.derive_seed(seed, _rng.GAN_TRAIN, cid)))
        elif synthesizer == "gmm":
            payload = fit_gmm_synthesizer(local, min(k, len(local)), seed=_rng.derive_seed(seed, _rng.LOCAL_FIT, cid))
        else:
            raise ValueError(f"unknown synthesizer {synthesizer!r}")
        return ClientUpload(cid, len(rows), generator=payload)

    uploads = _run_clients(client_step, clients, parallel_clients)

    synthetic = np.concatenate([
        u.generator.sample(u.local_size, _rng.derive_seed(seed, _rng.GAN_SAMPLE, u.client_id)) for u in uploads
    ])
    model = _server_fit(synthetic, variant, k, seed, fuzzy_degree, n_init)
    return _broadcast_and_assign(f"sda-fc-{variant}", X, clients, model, uploads, active.m, synthetic)


def _run_centroid_protocol(name, local_fit, ds, partition, mask, k, k_local, seed, weighted,
                           n_init, parallel_clients):
    X = ds.features
    k = ds.k_true if k is None else k
    k_local = k if k_local is None else k_local
    active, clients = _active(partition, mask)

    def client_step(cid, rows):
        kl = min(k_local, len(rows))
        centroids, labels = local_fit(X[rows], kl, _rng.derive_seed(seed, _rng.LOCAL_FIT, cid))
        sizes = np.bincount(labels, minlength=kl)
        return ClientUpload(cid, len(rows), centroids=centroids, cluster_sizes=sizes)

    uploads = _run_clients(client_step, clients, parallel_clients)
    pooled = np.concatenate([u.centroids for u in uploads])
    weights = np.concatenate([u.cluster_sizes for u in uploads]).astype(float) if weighted else None
    model = _server_fit(pooled, "km", k, seed, None, n_init, sample_weight=weights)
    used = {u.client_id: len(u.centroids) for u in uploads if len(u.centroids) != k_local}
    return _broadcast_and_assign(name, X, clients, model, uploads, active.m, k_local_used=used)


def run_kfed(ds, partition, mask=None, k=None, k_local=None, seed=0, weighted=False,
             n_init=10, parallel_clients=0):
    """k-FED: local K-means centroids pooled and re-clustered by server K-means.

    The server step ignores local cluster sizes unless ``weighted=True``.
    Clients with fewer rows than ``k_local`` fit as many centroids as they
    have rows; the trace records those clients.
    """
    def local_fit(Xl, kl, s):
        fit = kmeans_fit(Xl, kl, seed=s, n_init=n_init)
        return fit.model.centroids, fit.labels

    return _run_centroid_protocol("k-fed", local_fit, ds, partition, mask, k, k_local, seed,
                                  weighted, n_init, parallel_clients)


def run_ffcm(ds, partition, mask=None, k=None, fuzzy_degree=1.1, k_local=None, seed=0,
             weighted=False, n_init=10, parallel_clients=0):
    """Federated fuzzy c-means: local FCM centroids, server K-means on the pool."""
    def local_fit(Xl, kl, s):
        fit = fcm_fit(Xl, kl, fuzzy_degree=fuzzy_degree, seed=s, n_init=n_init)
        return fit.model.centroids, fit.membership.hard_labels()

    return _run_centroid_protocol("ffcm", local_fit, ds, partition, mask, k, k_local, seed,
                                  weighted, n_init, parallel_clients)


def run_centralized(ds, variant="km", k=None, seed=0, fuzzy_degree=1.1, n_init=10):
    """K-means or FCM on the pooled dataset, reporting native Euclidean labels."""
    X = ds.features
    k = ds.k_true if k is None else k
    if variant == "km":
        fit = kmeans_fit(X, k, seed=seed, n_init=n_init)
        model, labels = fit.model, fit.labels
    elif variant == "fcm":
        fit = fcm_fit(X, k, fuzzy_degree=fuzzy_degree, seed=seed, n_init=n_init)
        model, labels = fit.model, fit.membership.hard_labels()
    else:
        raise ValueError(f"unknown variant {variant!r}")
    trace = ProtocolTrace(0, 0, ())
    return MethodResult(f"{variant}-central", np.arange(len(X)), labels, model, trace)


def run_oracle(ds, k=None, seed=0):
    """Ground-truth class means as centroids, cosine assignment of every row.

    ``seed`` is accepted for interface symmetry; nothing here is random.
    """
    if ds.labels is None:
        raise ValueError("the oracle baseline needs ground-truth labels")
    if k is not None and k != ds.k_true:
        raise ValueError(f"oracle uses the {ds.k_true} ground-truth classes, got k={k}")
    X = ds.features
    means = np.stack([X[ds.labels == j].mean(axis=0) for j in range(ds.k_true)])
    model = CentroidModel(means)
    trace = ProtocolTrace(0, 0, ())
    return MethodResult("oracle", np.arange(len(X)), assign_cosine(X, model), model, trace)

