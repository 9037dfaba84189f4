"""Built-in toy datasets and the fixed two-client split used with them."""
import numpy as np

from .dataset import GaussianMixtureSpec, generate_gaussian_mixture, normalize_minmax
from .partition import FederatedPartition

TOY_NAMES = ("toy2", "toy4", "toy-split")


def toy2_spec(seed=0):
    """Two round blobs at (-5, 0) and (5, 0), 200 points each."""
    return GaussianMixtureSpec(
        [((-5.0, 0.0), (0.5, 0.5), 0.5), ((5.0, 0.0), (0.5, 0.5), 0.5)],
        samples_per_component=200, seed=seed, name="toy2",
    )


def toy4_spec(seed=0):
    # four blobs on the axes so they stay angularly apart after min-max scaling
    means = [(-5.0, 0.0), (5.0, 0.0), (0.0, 5.0), (0.0, -5.0)]
    return GaussianMixtureSpec(
        [(mu, (0.5, 0.5), 0.25) for mu in means],
        samples_per_component=200, seed=seed, name="toy4",
    )


def toy_split_spec(seed=0):
    """Two tall blobs side by side; see :func:`split_partition` for the client cut."""
    return GaussianMixtureSpec(
        [((-2.0, 0.0), (0.5, 2.0), 0.5), ((2.0, 0.0), (0.5, 2.0), 0.5)],
        samples_per_component=200, seed=seed, name="toy-split",
    )


_SPECS = {"toy2": toy2_spec, "toy4": toy4_spec, "toy-split": toy_split_spec}


def make_toy(name, seed=0):
    """Generate a built-in toy and min-max scale it into [0, 1]."""
    if name not in _SPECS:
        raise ValueError(f"unknown toy {name!r}; choose from {', '.join(TOY_NAMES)}")
    return normalize_minmax(generate_gaussian_mixture(_SPECS[name](seed)))


def split_partition(ds, seed=0, axis=1):
    """Two clients cut at the median of feature ``axis``.

    Both clients hold rows of every cluster, and the cut runs across the
    direction that separates the clusters rather than along it.
    """
    x = ds.features[:, axis]
    order = np.argsort(x, kind="stable")
    half = ds.n // 2
    return FederatedPartition((order[:half], order[half:]), 1.0, 2, seed)
