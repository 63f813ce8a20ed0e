"""
GraphSAGE forward/backward passes and the unsupervised walk objective

Layer l maps H (n, d_l) to H' (n, d_{l+1}):

    A  = aggregate(H)                      mean, or max over sigmoid(H Wp^T + bp)
    Z  = concat(H, A) W^T
    H' = activation(Z), optionally L2-normalized per row
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit
from tqdm import tqdm

from config import settings
from models.configs import EmbeddingTrainConfig, SageConfig, WalkConfig
from models.graph import FeatureMatrix, Graph, Neighborhood
from models.params import EmbeddingMatrix, SageParams
from services.graph import build_neighborhoods
from services.skipgram import PairBatch, pair_terms
from services.walks import NegativeSampler, build_cooccurrence, count_pairs, generate_walks, sample_cooccurrence
from utils.exceptions import DimensionError, EmptyCorpusError, TrainingDivergenceError
from utils.helpers import SeedDeriver
from utils.nn import (
    AdamState,
    Params,
    activate,
    activation_grad,
    adam_step,
    l2_normalize_rows,
    l2_normalize_rows_backward,
)
from logs.log import logger


@dataclass
class LayerCache:
    """Intermediates of one layer kept for the backward pass"""
    H: np.ndarray
    C: np.ndarray
    Z: np.ndarray
    S: np.ndarray
    Y: np.ndarray
    norms: Optional[np.ndarray] = None
    P: Optional[np.ndarray] = None
    winners: Optional[np.ndarray] = None


def _maxpool(P: np.ndarray, nb: Neighborhood) -> Tuple[np.ndarray, np.ndarray]:
    """
    Segment-wise max of P over each node's neighborhood

    Returns:
        (A, winners) where winners[v, k] is the neighbor node supplying A[v, k]
        (first occurrence on ties)
    """
    gathered = P[nb.indices]
    A = np.maximum.reduceat(gathered, nb.indptr[:-1], axis=0)
    segment = np.repeat(np.arange(nb.n), np.diff(nb.indptr))
    positions = np.broadcast_to(np.arange(len(nb.indices))[:, None], gathered.shape)
    masked = np.where(gathered == A[segment], positions, len(nb.indices))
    first = np.minimum.reduceat(masked, nb.indptr[:-1], axis=0)
    return A, nb.indices[first]


def sage_layer_forward(
    params: SageParams,
    l: int,
    H: np.ndarray,
    nb: Neighborhood,
) -> Tuple[np.ndarray, LayerCache]:
    """One aggregation layer; returns (output, cache)"""
    W = params.weights[l]
    if H.shape[1] * 2 != W.shape[1]:
        raise DimensionError(f"Layer {l} expects input width {W.shape[1] // 2}, got {H.shape[1]}")
    if nb.n != H.shape[0]:
        raise DimensionError(f"Neighborhood covers {nb.n} nodes, input has {H.shape[0]} rows")

    P = winners = None
    if params.aggregator == "mean":
        A = nb.mean_operator @ H
    else:
        P = expit(H @ params.pool_weights[l].T + params.pool_biases[l])
        A, winners = _maxpool(P, nb)

    C = np.hstack([H, A])
    Z = C @ W.T
    S = activate(Z, params.activation)
    norms = None
    Y = S
    if params.normalize:
        Y, norms = l2_normalize_rows(S)
    return Y, LayerCache(H=H, C=C, Z=Z, S=S, Y=Y, norms=norms, P=P, winners=winners)


def sage_forward_cached(
    params: SageParams,
    X: np.ndarray,
    neighborhoods: Sequence[Neighborhood],
) -> Tuple[np.ndarray, List[LayerCache]]:
    """Run every layer over all nodes, keeping the caches"""
    if len(neighborhoods) != params.layers:
        raise DimensionError(f"Need {params.layers} neighborhoods, got {len(neighborhoods)}")
    H = np.asarray(X, dtype=np.float64)
    caches = []
    for l, nb in enumerate(neighborhoods):
        H, cache = sage_layer_forward(params, l, H, nb)
        caches.append(cache)
    return H, caches


def sage_backward(
    params: SageParams,
    caches: Sequence[LayerCache],
    neighborhoods: Sequence[Neighborhood],
    grad_out: np.ndarray,
    prefix: str = "sage.",
) -> Tuple[Params, np.ndarray]:
    """
    Backpropagate d loss / d H_L through the layer stack

    Returns:
        (parameter gradients named as in SageParams.as_dict, gradient w.r.t. the input features)
    """
    grads: Params = {}
    dY = grad_out
    for l in reversed(range(params.layers)):
        cache, nb, W = caches[l], neighborhoods[l], params.weights[l]
        dS = l2_normalize_rows_backward(cache.Y, cache.norms, dY) if params.normalize else dY
        dZ = dS * activation_grad(cache.Z, cache.S, params.activation)
        grads[f"{prefix}W{l}"] = dZ.T @ cache.C

        dC = dZ @ W
        d_in = cache.H.shape[1]
        dH = dC[:, :d_in].copy()
        dA = dC[:, d_in:]
        if params.aggregator == "mean":
            dH += nb.mean_operator.T @ dA
        else:
            dP = np.zeros_like(cache.P)
            cols = np.broadcast_to(np.arange(d_in), dA.shape)
            np.add.at(dP, (cache.winners, cols), dA)
            dPz = dP * cache.P * (1.0 - cache.P)
            grads[f"{prefix}pool_W{l}"] = dPz.T @ cache.H
            grads[f"{prefix}pool_b{l}"] = dPz.sum(axis=0)
            dH += dPz @ params.pool_weights[l]
        dY = dH
    return grads, dY


def sage_forward(
    g: Graph,
    X: FeatureMatrix,
    params: SageParams,
    sample_sizes: Optional[Sequence[int]] = None,
    rng: Optional[np.random.Generator] = None,
) -> EmbeddingMatrix:
    """
    Node embeddings from the layer stack

    Full neighborhoods are used when sample_sizes is None.

    Raises:
        DimensionError: If X or the layer shapes do not conform
    """
    if X.rows != g.n:
        raise DimensionError(f"Feature matrix has {X.rows} rows for a graph of {g.n} nodes")
    if X.dim != params.in_dim:
        raise DimensionError(f"Feature dim {X.dim} does not match first layer input {params.in_dim}")
    neighborhoods = build_neighborhoods(g, params.layers, sample_sizes, rng)
    H, _ = sage_forward_cached(params, X.values, neighborhoods)
    return EmbeddingMatrix.dense(H)


# Unsupervised walk objective

def sage_unsupervised_loss_and_grads(
    params: SageParams,
    X: np.ndarray,
    neighborhoods: Sequence[Neighborhood],
    batch: PairBatch,
) -> Tuple[float, Params]:
    """
    Mean per-pair surrogate loss with scores h_u . h_c on the SAGE outputs
    """
    H, caches = sage_forward_cached(params, X, neighborhoods)
    loss, dU, dC, dN = pair_terms(H[batch.centers], H[batch.contexts], H[batch.negatives])
    scale = 1.0 / len(batch)

    dH = np.zeros_like(H)
    np.add.at(dH, batch.centers, dU)
    np.add.at(dH, batch.contexts, dC)
    np.add.at(dH, batch.negatives.reshape(-1), dN.reshape(-1, H.shape[1]))
    grads, _ = sage_backward(params, caches, neighborhoods, dH * scale)
    return loss * scale, grads


def train_sage_unsupervised(
    g: Graph,
    X: FeatureMatrix,
    sage_cfg: SageConfig,
    walk_cfg: WalkConfig,
    config: EmbeddingTrainConfig,
    seed: int,
    threads: int = 1,
) -> SageParams:
    """
    Fit a GraphSAGE stack so that walk co-occurring nodes score high

    Neighborhoods are resampled every epoch; each epoch uses at most
    config.max_pairs_per_epoch positive pairs.

    Returns:
        Trained parameters (the initialization when config.epochs == 0)

    Raises:
        DimensionError: If X does not conform to the graph
        TrainingDivergenceError: If the loss or a gradient becomes non-finite
    """
    if X.rows != g.n:
        raise DimensionError(f"Feature matrix has {X.rows} rows for a graph of {g.n} nodes")

    params = SageParams.init(
        X.dim, sage_cfg.dims, sage_cfg.aggregator, SeedDeriver.rng(seed, "sage:init"),
        sage_cfg.activation, sage_cfg.normalize,
    )
    if config.epochs == 0:
        return params

    corpus = generate_walks(g, walk_cfg, SeedDeriver.derive(seed, "sage:walks"), threads)
    total_pairs = count_pairs(corpus, walk_cfg.window)
    if total_pairs == 0:
        raise EmptyCorpusError("Walk corpus yields no co-occurrence pairs")
    sampler = NegativeSampler.from_corpus(corpus, g.n)
    all_pairs = build_cooccurrence(corpus, walk_cfg.window) if total_pairs <= config.max_pairs_per_epoch else None

    rng = SeedDeriver.rng(seed, "sage:train")
    blocks = params.as_dict()
    state = AdamState(lr=config.sage_lr)
    values = X.values

    for epoch in tqdm(range(config.epochs), desc="graphsage", disable=not settings.SHOW_PROGRESS, leave=False):
        neighborhoods = build_neighborhoods(g, params.layers, sage_cfg.sample_sizes, rng)
        if all_pairs is not None:
            pairs = all_pairs[rng.permutation(len(all_pairs))]
        else:
            pairs = sample_cooccurrence(corpus, walk_cfg.window, config.max_pairs_per_epoch, rng)

        epoch_loss = 0.0
        batches = 0
        for begin in range(0, len(pairs), config.batch_size):
            part = pairs[begin:begin + config.batch_size]
            batch = PairBatch(part[:, 0], part[:, 1], sampler.sample(rng, (len(part), config.negatives)))
            loss, grads = sage_unsupervised_loss_and_grads(params, values, neighborhoods, batch)
            if not np.isfinite(loss):
                raise TrainingDivergenceError(f"graphsage: non-finite loss in epoch {epoch}")
            adam_step(blocks, grads, state)
            epoch_loss += loss
            batches += 1
        logger.info("graphsage epoch %d/%d: mean pair loss %.6f", epoch + 1, config.epochs, epoch_loss / max(batches, 1))

    return params

