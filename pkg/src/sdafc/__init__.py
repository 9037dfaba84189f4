"""Synthetic-data aided federated clustering simulator.

Clients train small GANs on their private rows and upload only the generator;
the server clusters the merged synthetic data (K-means or fuzzy c-means) and
broadcasts the centroids, which clients use for cosine-distance assignment.
k-FED, FFCM, centralized and ground-truth-centroid baselines share the same
partitioning, failure simulation and evaluation machinery.
"""

from .clustering import (
    CentroidModel,
    FuzzyMembership,
    assign_cosine,
    assign_euclidean,
    fcm_fit,
    kmeans_fit,
    kmeanspp_init,
)
from .dataset import (
    GaussianMixtureSpec,
    LabeledDataset,
    generate_gaussian_mixture,
    load_csv,
    normalize_minmax,
    write_csv,
)
from .federation import (
    MethodResult,
    ProtocolTrace,
    run_centralized,
    run_ffcm,
    run_kfed,
    run_oracle,
    run_sda_fc,
)
from .metrics import contingency, evaluate, hungarian, kappa, nmi
from .partition import (
    ConnectionMask,
    FederatedPartition,
    partition_noniid,
    restrict,
    sample_connection_mask,
)

__version__ = "0.1.0"
