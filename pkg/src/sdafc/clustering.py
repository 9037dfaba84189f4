"""K-means, fuzzy c-means and nearest-centroid assignment."""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .rng import make_rng

COSINE_EPS = 1e-12


@dataclass(frozen=True)
class CentroidModel:
    centroids: np.ndarray
    fit_metric: str = "euclidean"

    def __post_init__(self):
        c = np.array(self.centroids, dtype=float, copy=True)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValueError(f"centroids must be a k x d matrix with k, d >= 1, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("centroids contain non-finite values")
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)

    @property
    def k(self):
        return self.centroids.shape[0]

    @property
    def d(self):
        return self.centroids.shape[1]

    def to_dict(self):
        return {"k": self.k, "d": self.d, "fit_metric": self.fit_metric, "centroids": self.centroids.tolist()}

    @classmethod
    def from_dict(cls, doc):
        model = cls(np.asarray(doc["centroids"], dtype=float), doc.get("fit_metric", "euclidean"))
        if model.k != doc["k"] or model.d != doc["d"]:
            raise ValueError("centroid matrix does not match declared k, d")
        return model


@dataclass(frozen=True)
class FuzzyMembership:
    weights: np.ndarray
    fuzzy_degree: float

    def hard_labels(self):
        # argmax returns the lowest index on ties
        return np.argmax(self.weights, axis=1)


class KMeansResult(NamedTuple):
    model: CentroidModel
    labels: np.ndarray
    inertia: float
    history: tuple
    n_iter: int


class FcmResult(NamedTuple):
    model: CentroidModel
    membership: FuzzyMembership
    objective: float
    n_iter: int


def _as_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D data matrix, got shape {X.shape}")
    return X


def sq_distances(X, C):
    """Squared Euclidean distances, shape (n, k)."""
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _check_dims(X, model):
    X = _as_matrix(X)
    if X.shape[1] != model.d:
        raise ValueError(f"data has {X.shape[1]} columns, centroids have {model.d}")
    return X


def assign_euclidean(X, model):
    """Nearest centroid by squared Euclidean distance, ties to the lowest index."""
    X = _check_dims(X, model)
    return np.argmin(sq_distances(X, model.centroids), axis=1)


def cosine_distances(X, C, eps=COSINE_EPS):
    num = X @ C.T
    den = (np.linalg.norm(X, axis=1) + eps)[:, None] * (np.linalg.norm(C, axis=1) + eps)[None, :]
    return 1.0 - num / den


def assign_cosine(X, model):
    """Nearest centroid by cosine distance with an epsilon-guarded denominator.

    A zero row is equidistant from every centroid and goes to centroid 0.
    """
    X = _check_dims(X, model)
    return np.argmin(cosine_distances(X, model.centroids), axis=1)


def kmeanspp_init(X, k, seed=0, sample_weight=None):
    """D^2-weighted seeding. Rows at distance zero from a chosen centre are never re-drawn
    unless every remaining row is at distance zero."""
    X = _as_matrix(X)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    gen = make_rng(seed)
    chosen = [int(gen.choice(n, p=w / w.sum()))]
    closest = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        mass = w * closest
        total = mass.sum()
        if total > 0:
            idx = int(gen.choice(n, p=mass / total))
        else:
            idx = int(gen.choice(n, p=w / w.sum()))
        chosen.append(idx)
        closest = np.minimum(closest, np.sum((X - X[idx]) ** 2, axis=1))
    return CentroidModel(X[chosen])


def _lloyd(X, w, C, max_iter, tol):
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = sq_distances(X, C)
        labels = np.argmin(d2, axis=1)
        own = d2[np.arange(len(X)), labels]
        history.append(float(np.dot(w, own)))

        new = np.empty_like(C)
        mass = np.bincount(labels, weights=w, minlength=len(C))
        for j in range(len(C)):
            if mass[j] > 0:
                sel = labels == j
                new[j] = w[sel] @ X[sel] / mass[j]
        empty = np.flatnonzero(mass == 0)
        if len(empty):
            far = own.copy()
            for j in empty:
                i = int(np.argmax(far))
                new[j] = X[i]
                far[i] = -1.0
        shift = np.max(np.abs(new - C))
        C = new
        if shift < tol:
            break
    d2 = sq_distances(X, C)
    labels = np.argmin(d2, axis=1)
    inertia = float(np.dot(w, d2[np.arange(len(X)), labels]))
    if inertia < history[-1]:
        history.append(inertia)
    return C, labels, inertia, tuple(history), n_iter


def kmeans_fit(X, k, seed=0, max_iter=300, tol=1e-6, n_init=10, sample_weight=None, init=None):
    """Lloyd iterations from k-means++ seeds, best of ``n_init`` restarts.

    Stops once the largest centroid coordinate shift drops below ``tol``. An
    emptied cluster is re-seeded at the row farthest from its assigned
    centroid. ``init`` (a k x d matrix) bypasses seeding and restarts.
    ``sample_weight`` weights rows in the means, the inertia and the seeding.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    if w.shape != (n,) or np.any(w < 0) or w.sum() <= 0:
        raise ValueError("sample_weight must be non-negative with positive total")

    if init is not None:
        starts = [np.array(init, dtype=float)]
        if starts[0].shape != (k, X.shape[1]):
            raise ValueError(f"init must have shape {(k, X.shape[1])}")
    else:
        starts = [kmeanspp_init(X, k, seed=(seed, r), sample_weight=w).centroids for r in range(max(1, n_init))]

    best = None
    for C0 in starts:
        C, labels, inertia, history, n_iter = _lloyd(X, w, C0.copy(), max_iter, tol)
        if best is None or inertia < best.inertia:
            best = KMeansResult(CentroidModel(C), labels, inertia, history, n_iter)
    return best


def fcm_memberships(X, C, fuzzy_degree):
    """Membership matrix u_ij proportional to d_ij^(-2/(m-1)), rows summing to 1.

    Evaluated in log space: for m near 1 the raw powers over/underflow. A row
    that coincides with a centroid gets full membership there (first match on
    ties).
    """
    d2 = sq_distances(_as_matrix(X), np.asarray(C, dtype=float))
    zero = d2 <= 0.0
    with np.errstate(divide="ignore"):
        logw = -np.log(d2) / (fuzzy_degree - 1.0)
    hit = zero.any(axis=1)
    logw[hit] = 0.0
    logw -= logw.max(axis=1, keepdims=True)
    U = np.exp(logw)
    U /= U.sum(axis=1, keepdims=True)
    if hit.any():
        U[hit] = 0.0
        U[np.flatnonzero(hit), np.argmax(zero[hit], axis=1)] = 1.0
    return U


def fcm_centroids(X, U, fuzzy_degree):
    """Centroids as membership^m-weighted means. Columns whose weights all
    underflow to zero come back as NaN rows for the caller to repair."""
    W = U ** fuzzy_degree
    mass = W.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return (W.T @ X) / mass[:, None]


def fcm_objective(X, C, U, fuzzy_degree):
    return float(np.sum(U ** fuzzy_degree * sq_distances(X, C)))


def _fcm_single(X, C, fuzzy_degree, max_iter, tol):
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        U = fcm_memberships(X, C, fuzzy_degree)
        new = fcm_centroids(X, U, fuzzy_degree)
        bad = ~np.all(np.isfinite(new), axis=1)
        if bad.any():
            far = np.min(sq_distances(X, C), axis=1)
            for j in np.flatnonzero(bad):
                i = int(np.argmax(far))
                new[j] = X[i]
                far[i] = -1.0
        shift = np.max(np.abs(new - C))
        C = new
        if shift < tol:
            break
    U = fcm_memberships(X, C, fuzzy_degree)
    return C, U, fcm_objective(X, C, U, fuzzy_degree), n_iter


def fcm_fit(X, k, fuzzy_degree=1.1, seed=0, max_iter=300, tol=1e-6, n_init=10, init=None):
    """Fuzzy c-means, best objective over ``n_init`` k-means++ starts.

    The returned memberships are those of the returned centroids.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not fuzzy_degree > 1.0:
        raise ValueError(f"fuzzy degree must exceed 1, got {fuzzy_degree}")
    if init is not None:
        starts = [np.array(init, dtype=float)]
    else:
        starts = [kmeanspp_init(X, k, seed=(seed, r)).centroids for r in range(max(1, n_init))]

    best = None
    for C0 in starts:
        C, U, obj, n_iter = _fcm_single(X, C0.copy(), fuzzy_degree, max_iter, tol)
        if best is None or obj < best.objective:
            best = FcmResult(CentroidModel(C), FuzzyMembership(U, fuzzy_degree), obj, n_iter)
    return best
