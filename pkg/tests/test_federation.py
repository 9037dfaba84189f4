import json

import numpy as np
import pytest

from sdafc.clustering import CentroidModel, kmeans_fit
from sdafc.dataset import LabeledDataset
from sdafc.federation import (
    ClientUpload,
    run_centralized,
    run_ffcm,
    run_kfed,
    run_oracle,
    run_sda_fc,
)
from sdafc.metrics import evaluate, hungarian
from sdafc.partition import ConnectionMask, FederatedPartition, partition_noniid, sample_connection_mask
from sdafc.synthesis import default_gan_config
from sdafc.toys import make_toy


@pytest.fixture(scope="module")
def toy():
    return make_toy("toy2", 0)


@pytest.fixture(scope="module")
def toy4():
    return make_toy("toy4", 1)


def _matched_gap(a, b):
    cost = np.linalg.norm(a[:, None] - b[None], axis=2)
    return max(cost[i, j] for i, j in hungarian(cost))


def test_one_round_trace_for_every_protocol(toy4):
    part = partition_noniid(toy4, 0.5, 4, seed=3)
    for rate in (0.0, 0.25, 0.5, 0.75):
        mask = sample_connection_mask(4, rate, seed=2)
        connected = sum(mask.connected)
        for run in (
            lambda: run_sda_fc(toy4, part, mask, synthesizer="gmm", seed=1),
            lambda: run_sda_fc(toy4, part, mask, variant="fcm", synthesizer="gmm", seed=1),
            lambda: run_kfed(toy4, part, mask, seed=1),
            lambda: run_ffcm(toy4, part, mask, seed=1),
        ):
            res = run()
            assert res.trace.uploads_count == connected
            assert res.trace.broadcasts_count == 1
            assert sum(res.trace.participants) == connected


def test_synthetic_size_matches_connected_rows(toy4):
    part = partition_noniid(toy4, 1.0, 4, seed=0)
    mask = sample_connection_mask(4, 0.5, seed=5)
    res = run_sda_fc(toy4, part, mask, synthesizer="gmm")
    kept = [r for cid, r in zip(part.client_ids, part.client_rows) if mask.connected[cid]]
    assert len(res.synthetic) == sum(len(r) for r in kept)
    assert np.array_equal(res.rows, np.sort(np.concatenate(kept)))


def test_disconnected_client_is_absent(toy):
    part = partition_noniid(toy, 1.0, 2, seed=0)
    mask = ConnectionMask((True, False), 0.5, 0)
    cfg = default_gan_config(2, 2, epochs=20)
    res = run_sda_fc(toy, part, mask, gan_cfg=cfg)
    assert np.array_equal(res.rows, part.client_rows[0])
    assert len(res.synthetic) == len(part.client_rows[0])
    assert len(res.labels) == len(res.rows)


def test_single_client_gmm_matches_central_kmeans(toy):
    whole = FederatedPartition((np.arange(toy.n),), 0.0, 1, 0)
    res = run_sda_fc(toy, whole, synthesizer="gmm", seed=4)
    central = kmeans_fit(toy.features, 2, seed=4).model.centroids
    assert _matched_gap(res.centroids.centroids, central) < 0.05


def test_kfed_single_local_centroid_uploads_means(toy4):
    part = partition_noniid(toy4, 1.0, 4, seed=1)
    res = run_kfed(toy4, part, k_local=1, seed=0)
    means = np.stack([toy4.features[r].mean(axis=0) for r in part.client_rows])
    assert _matched_gap(res.centroids.centroids, means) < 1e-12
    expected = np.argmin(
        1 - (toy4.features @ means.T)
        / (np.linalg.norm(toy4.features, axis=1)[:, None] * np.linalg.norm(means, axis=1)[None]),
        axis=1,
    )
    assert evaluate(expected[res.rows], res.labels).nmi == 1.0


def test_kfed_iid_two_clients_vs_one(toy):
    two = partition_noniid(toy, 0.0, 2, seed=0)
    one = FederatedPartition((np.arange(toy.n),), 0.0, 1, 0)
    for part in (two, one):
        res = run_kfed(toy, part, seed=0)
        assert res.centroids.k == 2
        assert np.array_equal(res.rows, np.arange(toy.n))


def test_kfed_degrades_small_clients():
    ds = LabeledDataset(np.array([[0.1, 0.2], [0.9, 0.8], [0.5, 0.5], [0.4, 0.6], [0.2, 0.9]]), np.array([0, 1, 0, 1, 0]))
    part = FederatedPartition(([0], [1, 2, 3, 4]), 0.0, 2, 0)
    res = run_kfed(ds, part, k=2, seed=0)
    assert res.trace.k_local_used == {0: 1}
    assert res.trace.to_dict()["k_local_used"] == {"0": 1}


def test_kfed_unweighted_by_default_and_weighted_on_request():
    # client 0: one big cluster and one tiny far cluster; client 1 mirrors it
    big = np.tile([0.1, 0.1], (50, 1))
    X = np.vstack([big, [[0.9, 0.15]], big + [0.0, 0.8], [[0.15, 0.9]]])
    ds = LabeledDataset(X, np.array([0] * 51 + [1] * 51))
    part = FederatedPartition((np.arange(51), np.arange(51, 102)), 0.0, 2, 0)
    plain = run_kfed(ds, part, seed=0)
    weighted = run_kfed(ds, part, seed=0, weighted=True)
    assert not np.allclose(np.sort(plain.centroids.centroids, axis=0), np.sort(weighted.centroids.centroids, axis=0))


def test_ffcm_k1_averages_client_centres(toy):
    part = partition_noniid(toy, 0.5, 2, seed=0)
    res = run_ffcm(toy, part, k=1)
    means = np.stack([toy.features[r].mean(axis=0) for r in part.client_rows])
    assert np.allclose(res.centroids.centroids[0], means.mean(axis=0), atol=1e-9)


def test_ffcm_fuzzy_degree_robust_on_separated_blobs(toy):
    part = partition_noniid(toy, 0.0, 2, seed=0)
    a = run_ffcm(toy, part, fuzzy_degree=1.1, seed=0).centroids.centroids
    b = run_ffcm(toy, part, fuzzy_degree=2.0, seed=0).centroids.centroids
    assert _matched_gap(a, b) < 0.1


def test_centralized_and_oracle_on_toy(toy):
    for variant in ("km", "fcm"):
        res = run_centralized(toy, variant, seed=0)
        assert evaluate(toy.labels, res.labels).nmi == 1.0
        assert (res.trace.uploads_count, res.trace.broadcasts_count) == (0, 0)
    orc = run_oracle(toy)
    assert orc.centroids.k == 2


def test_oracle_examples():
    ds = LabeledDataset(np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [0.0, 3.0]]), np.array([0, 0, 1, 1]))
    assert evaluate(ds.labels, run_oracle(ds).labels).kappa == 1.0
    same = LabeledDataset(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([0, 1]))
    assert run_oracle(same).labels.tolist() == [0, 0]
    with pytest.raises(ValueError):
        run_oracle(LabeledDataset(np.zeros((2, 2))))


def test_oracle_kappa_dominates_sda_on_toy(toy):
    part = partition_noniid(toy, 1.0, 2, seed=0)
    sda = run_sda_fc(toy, part, seed=0)
    orc = run_oracle(toy)
    k_sda = evaluate(toy.labels[sda.rows], sda.labels).kappa
    k_orc = evaluate(toy.labels, orc.labels).kappa
    assert k_orc >= k_sda - 0.02


def test_parallel_and_listing_order_do_not_change_results(toy4):
    part = partition_noniid(toy4, 0.75, 4, seed=2)
    shuffled = FederatedPartition(part.client_rows[::-1], part.p, part.m, part.seed, part.client_ids[::-1])
    cfg = default_gan_config(2, 4, epochs=10)
    base = run_sda_fc(toy4, part, gan_cfg=cfg, seed=3)
    for other in (
        run_sda_fc(toy4, part, gan_cfg=cfg, seed=3, parallel_clients=4),
        run_sda_fc(toy4, shuffled, gan_cfg=cfg, seed=3),
    ):
        assert np.array_equal(base.labels, other.labels)
        assert base.centroids.centroids.tobytes() == other.centroids.centroids.tobytes()
        assert base.synthetic.tobytes() == other.synthetic.tobytes()
    kf = run_kfed(toy4, part, seed=1)
    assert np.array_equal(kf.labels, run_kfed(toy4, shuffled, seed=1, parallel_clients=3).labels)


def test_dropping_a_client_leaves_others_untouched(toy4):
    # per-client streams: client 2's generator is the same whoever else connects
    part = partition_noniid(toy4, 1.0, 4, seed=0)
    cfg = default_gan_config(2, 4, epochs=5)
    full = run_sda_fc(toy4, part, gan_cfg=cfg, seed=9)
    partial = run_sda_fc(toy4, part, ConnectionMask((False, True, True, True), 0.25, 0), gan_cfg=cfg, seed=9)
    n0 = len(part.client_rows[0])
    assert np.array_equal(full.synthetic[n0:], partial.synthetic)


def test_method_result_json(toy):
    res = run_kfed(toy, partition_noniid(toy, 1.0, 2, seed=0))
    doc = json.loads(json.dumps(res.to_dict()))
    assert set(doc) == {"method", "rows", "assignment", "centroids", "trace"}
    assert doc["trace"]["uploads"] == 2 and doc["trace"]["broadcasts"] == 1
    assert CentroidModel.from_dict(doc["centroids"]).k == 2


def test_upload_validation():
    with pytest.raises(ValueError):
        ClientUpload(0, 0, centroids=np.zeros((1, 2)))
    with pytest.raises(ValueError):
        ClientUpload(0, 3)
    with pytest.raises(ValueError):
        ClientUpload(0, 3, centroids=np.zeros((0, 2)))
