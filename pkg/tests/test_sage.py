import numpy as np
import pytest

from models.configs import EmbeddingTrainConfig, SageConfig, WalkConfig
from models.graph import FeatureMatrix
from models.params import SageParams
from services.graph import build_neighborhoods, full_neighborhood
from services.sage import sage_backward, sage_forward, sage_forward_cached, train_sage_unsupervised
from utils.exceptions import DimensionError
from utils.nn import finite_diff_check


def straight_line_forward(g, X, params):
    """Node-by-node reference of the layer stack over full neighborhoods"""
    H = X.copy()
    for l, W in enumerate(params.weights):
        out = []
        for v in range(g.n):
            nbrs = list(g.neighbors(v)) or [v]
            if params.aggregator == "mean":
                agg = sum(H[u] for u in nbrs) / len(nbrs)
            else:
                pooled = [1.0 / (1.0 + np.exp(-(params.pool_weights[l] @ H[u] + params.pool_biases[l]))) for u in nbrs]
                agg = np.max(pooled, axis=0)
            z = W @ np.concatenate([H[v], agg])
            if params.activation == "sigmoid":
                s = 1.0 / (1.0 + np.exp(-z))
            elif params.activation == "relu":
                s = np.maximum(z, 0.0)
            else:
                s = z
            if params.normalize and np.linalg.norm(s) > 0:
                s = s / np.linalg.norm(s)
            out.append(s)
        H = np.array(out)
    return H


@pytest.mark.parametrize("aggregator", ["mean", "maxpool"])
@pytest.mark.parametrize("normalize", [True, False])
@pytest.mark.parametrize("activation", ["sigmoid", "relu"])
def test_forward_matches_straight_line_reference(small_graph, rng, aggregator, normalize, activation):
    X = rng.normal(size=(small_graph.n, 5))
    params = SageParams.init(5, [4, 3], aggregator, rng, activation, normalize)
    emb = sage_forward(small_graph, FeatureMatrix(X), params)
    assert emb.vectors.shape == (8, 3)
    np.testing.assert_allclose(emb.vectors, straight_line_forward(small_graph, X, params), rtol=0, atol=1e-12)


@pytest.mark.parametrize("aggregator", ["mean", "maxpool"])
def test_backward_matches_finite_differences(small_graph, rng, aggregator):
    X = rng.normal(size=(small_graph.n, 3))
    params = SageParams.init(3, [4, 2], aggregator, rng, "sigmoid", True)
    hoods = build_neighborhoods(small_graph, 2, [3, 2], rng)
    G = rng.normal(size=(small_graph.n, 2))

    def loss(blocks):
        H, _ = sage_forward_cached(params, X, hoods)
        return float(np.sum(H * G))

    _, caches = sage_forward_cached(params, X, hoods)
    grads, _ = sage_backward(params, caches, hoods, G)
    assert finite_diff_check(loss, params.as_dict(), grads) < 1e-6


def test_shape_errors(small_graph, rng):
    params = SageParams.init(5, [4, 3], "mean", rng)
    with pytest.raises(DimensionError):
        sage_forward(small_graph, FeatureMatrix(np.zeros((8, 4))), params)
    with pytest.raises(DimensionError):
        sage_forward(small_graph, FeatureMatrix(np.zeros((7, 5))), params)
    with pytest.raises(DimensionError):
        sage_forward_cached(params, np.zeros((8, 5)), [full_neighborhood(small_graph)])
    with pytest.raises(DimensionError):
        SageParams("maxpool", params.weights)


def test_zero_epochs_returns_initialization(small_graph, rng):
    X = FeatureMatrix(rng.normal(size=(8, 4)))
    sage_cfg = SageConfig(dims=[3, 2], sample_sizes=[3, 2])
    config = EmbeddingTrainConfig(epochs=0)
    trained = train_sage_unsupervised(small_graph, X, sage_cfg, WalkConfig(), config, seed=4)
    fresh = SageParams.init(4, [3, 2], "mean", np.random.default_rng(0))
    assert trained.dims == fresh.dims == [3, 2]
    again = train_sage_unsupervised(small_graph, X, sage_cfg, WalkConfig(), config, seed=4)
    for a, b in zip(trained.weights, again.weights):
        np.testing.assert_array_equal(a, b)


def test_unsupervised_training_is_deterministic(small_graph, rng):
    X = FeatureMatrix(rng.normal(size=(8, 4)))
    sage_cfg = SageConfig(dims=[3, 2], sample_sizes=[3, 2], aggregator="maxpool")
    walk_cfg = WalkConfig(walk_length=5, walks_per_node=2, window=2)
    config = EmbeddingTrainConfig(epochs=2, batch_size=16, max_pairs_per_epoch=50)
    first = train_sage_unsupervised(small_graph, X, sage_cfg, walk_cfg, config, seed=9)
    second = train_sage_unsupervised(small_graph, X, sage_cfg, walk_cfg, config, seed=9)
    untrained = train_sage_unsupervised(small_graph, X, sage_cfg, walk_cfg, EmbeddingTrainConfig(epochs=0), seed=9)
    for a, b in zip(first.as_dict().values(), second.as_dict().values()):
        np.testing.assert_array_equal(a, b)
    assert not np.array_equal(first.weights[0], untrained.weights[0])


def _clique_cosines(vectors):
    V = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    cos = V @ V.T
    left, right = np.arange(10), np.arange(10, 20)
    intra = np.mean([cos[i, j] for block in (left, right) for i in block for j in block if i != j])
    inter = np.mean([cos[i, j] for i in left for j in right])
    return intra, inter


@pytest.mark.slow
def test_unsupervised_sage_separates_barbell_cliques(barbell_graph, rng):
    X = FeatureMatrix(rng.normal(size=(20, 8)))
    sage_cfg = SageConfig(dims=[16, 16], sample_sizes=[5, 5])
    walk_cfg = WalkConfig(walk_length=20, walks_per_node=10, window=5)
    config = EmbeddingTrainConfig(epochs=5, batch_size=64, sage_lr=0.01, max_pairs_per_epoch=5000)
    params = train_sage_unsupervised(barbell_graph, X, sage_cfg, walk_cfg, config, seed=7)
    intra, inter = _clique_cosines(sage_forward(barbell_graph, X, params).vectors)
    assert intra > inter
