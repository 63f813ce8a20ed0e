import math

import numpy as np
import pytest

from models.configs import EmbeddingTrainConfig, WalkConfig
from models.graph import FeatureMatrix
from services.skipgram import (
    PairBatch,
    attri2vec_loss_and_grads,
    pair_terms,
    skipgram_loss_and_grads,
    train_attri2vec,
    train_node2vec,
    train_skipgram,
)
from utils.exceptions import ConfigurationError, EmptyCorpusError
from utils.nn import finite_diff_check


def test_pair_terms_at_zero_vectors():
    B, m, d = 3, 2, 4
    loss, dU, dC, dN = pair_terms(np.zeros((B, d)), np.zeros((B, d)), np.zeros((B, m, d)))
    assert loss == pytest.approx(B * (1 + m) * math.log(2), abs=1e-12)
    assert not dU.any() and not dC.any() and not dN.any()


def test_skipgram_gradients_match_finite_differences(rng):
    params = {"W_in": rng.normal(size=(6, 3)), "W_out": rng.normal(size=(6, 3))}
    batch = PairBatch(np.array([0, 1, 1]), np.array([2, 3, 0]), np.array([[4, 5], [5, 5], [2, 4]]))
    _, grads = skipgram_loss_and_grads(params, batch)
    assert finite_diff_check(lambda p: skipgram_loss_and_grads(p, batch)[0], params, grads) < 1e-6


def test_attri2vec_gradients_match_finite_differences(rng):
    X = rng.normal(size=(6, 4))
    params = {"W_map": rng.normal(size=(3, 4)), "W_out": rng.normal(size=(6, 3))}
    batch = PairBatch(np.array([0, 2]), np.array([1, 3]), np.array([[4, 5], [0, 1]]))
    _, grads = attri2vec_loss_and_grads(params, X, batch)
    assert finite_diff_check(lambda p: attri2vec_loss_and_grads(p, X, batch)[0], params, grads) < 1e-6


def test_skipgram_without_epochs_returns_initialization():
    config = EmbeddingTrainConfig(dims=8, epochs=0)
    emb = train_skipgram([[0, 1, 2]], 3, config, window=2, seed=1)
    assert emb.vectors.shape == (3, 8)
    assert np.abs(emb.vectors).max() <= 0.5 / 8
    np.testing.assert_array_equal(emb.vectors, train_skipgram([[0, 1, 2]], 3, config, window=2, seed=1).vectors)


def test_skipgram_needs_pairs():
    with pytest.raises(EmptyCorpusError):
        train_skipgram([[0], [1]], 2, EmbeddingTrainConfig(dims=4, epochs=1), window=2, seed=0)


@pytest.mark.slow
def test_node2vec_separates_barbell_cliques(barbell_graph):
    walk_cfg = WalkConfig(walk_length=20, walks_per_node=10, window=5)
    config = EmbeddingTrainConfig(dims=16, epochs=5, batch_size=16, lr=0.05, negatives=5)
    emb = train_node2vec(barbell_graph, walk_cfg, config, seed=7)

    V = emb.vectors / np.linalg.norm(emb.vectors, axis=1, keepdims=True)
    cos = V @ V.T
    left, right = np.arange(10), np.arange(10, 20)
    intra = np.mean([cos[i, j] for block in (left, right) for i in block for j in block if i != j])
    inter = np.mean([cos[i, j] for i in left for j in right])
    assert intra > inter + 0.2


def test_attri2vec_shapes(walk_graph, rng):
    X = FeatureMatrix(rng.normal(size=(5, 6)))
    walk_cfg = WalkConfig(walk_length=5, walks_per_node=2, window=2)
    config = EmbeddingTrainConfig(dims=3, epochs=1, batch_size=8)
    emb, params = train_attri2vec(walk_graph, X, walk_cfg, config, seed=2)
    assert emb.vectors.shape == (5, 3)
    assert params.W_map.shape == (3, 6)
    assert params.W_out.shape == (5, 3)
    assert ((emb.vectors > 0) & (emb.vectors < 1)).all()


def test_attri2vec_checks_feature_rows(walk_graph):
    with pytest.raises(ConfigurationError):
        train_attri2vec(walk_graph, FeatureMatrix(np.zeros((4, 2))), WalkConfig(), EmbeddingTrainConfig(), seed=0)


def test_attri2vec_identical_features_share_images(walk_graph, rng):
    values = rng.normal(size=(5, 4))
    values[3] = values[0]
    walk_cfg = WalkConfig(walk_length=6, walks_per_node=3, window=2)
    config = EmbeddingTrainConfig(dims=3, epochs=2, batch_size=8)
    emb, _ = train_attri2vec(walk_graph, FeatureMatrix(values), walk_cfg, config, seed=5)
    np.testing.assert_allclose(emb.vectors[3], emb.vectors[0], rtol=0, atol=1e-12)
    assert not np.allclose(emb.vectors[1], emb.vectors[0])


def test_attri2vec_zero_features_give_no_mapping_gradient(walk_graph, rng):
    X = np.zeros((5, 4))
    params = {"W_map": rng.normal(size=(3, 4)), "W_out": rng.normal(size=(5, 3))}
    batch = PairBatch(np.array([0, 2, 4]), np.array([1, 3, 3]), np.array([[4, 2], [0, 1], [1, 2]]))
    _, grads = attri2vec_loss_and_grads(params, X, batch)
    np.testing.assert_array_equal(grads["W_map"], np.zeros((3, 4)))
    assert grads["W_out"].any()

    config = EmbeddingTrainConfig(dims=3, epochs=1, batch_size=8)
    emb, _ = train_attri2vec(walk_graph, FeatureMatrix(X), WalkConfig(walk_length=4, walks_per_node=1, window=1), config, seed=0)
    np.testing.assert_array_equal(emb.vectors, np.full((5, 3), 0.5))
