"""
Skip-gram (Node2Vec) and Attri2Vec trainers with negative sampling

Both objectives share the per-pair surrogate

    loss = sum_b [ log(1 + exp(-u_b . c_b)) + sum_j log(1 + exp(u_b . n_bj)) ]

where u_b is the center representation (a free row of W_in for skip-gram,
sigmoid(W_map x) for Attri2Vec), c_b the context row and n_bj the negative
rows of W_out.
"""
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.special import expit
from tqdm import tqdm

from config import settings
from models.configs import EmbeddingTrainConfig, WalkConfig
from models.graph import FeatureMatrix, Graph
from models.params import Attri2VecParams, EmbeddingMatrix, SkipGramParams
from services.walks import NegativeSampler, WalkCorpus, count_pairs, generate_walks, iter_cooccurrence
from utils.exceptions import ConfigurationError, EmptyCorpusError, TrainingDivergenceError
from utils.helpers import SeedDeriver
from utils.nn import Params
from logs.log import logger


MIN_LR_FRACTION = 1e-4


@dataclass
class PairBatch:
    """Centers (B,), contexts (B,) and negatives (B, m)"""
    centers: np.ndarray
    contexts: np.ndarray
    negatives: np.ndarray

    def __len__(self) -> int:
        return len(self.centers)


def pair_terms(U: np.ndarray, C: np.ndarray, N: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """
    Surrogate loss and its gradients w.r.t. the gathered rows

    Args:
        U: Center representations (B, d)
        C: Context rows (B, d)
        N: Negative rows (B, m, d)

    Returns:
        (loss, dU, dC, dN)
    """
    s = np.einsum("bd,bd->b", U, C)
    s_neg = np.einsum("bd,bmd->bm", U, N)
    loss = float(np.logaddexp(0.0, -s).sum() + np.logaddexp(0.0, s_neg).sum())

    g_pos = expit(s) - 1.0
    g_neg = expit(s_neg)
    dU = g_pos[:, None] * C + np.einsum("bm,bmd->bd", g_neg, N)
    dC = g_pos[:, None] * U
    dN = g_neg[:, :, None] * U[:, None, :]
    return loss, dU, dC, dN


def _scatter(shape: Tuple[int, int], rows: np.ndarray, grads: np.ndarray) -> np.ndarray:
    full = np.zeros(shape)
    np.add.at(full, rows, grads)
    return full


def _row_mean(rows: np.ndarray, grads: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Distinct rows and their gradient averaged over occurrences in the batch"""
    unique, inverse = np.unique(rows, return_inverse=True)
    acc = np.zeros((len(unique), grads.shape[1]))
    np.add.at(acc, inverse, grads)
    return unique, acc / np.bincount(inverse)[:, None]


def _context_grads(batch: PairBatch, dC: np.ndarray, dN: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    d = dC.shape[1]
    rows = np.concatenate([batch.contexts, batch.negatives.reshape(-1)])
    grads = np.concatenate([dC, dN.reshape(-1, d)])
    return rows, grads


# Skip-gram

def skipgram_loss_and_grads(params: Params, batch: PairBatch) -> Tuple[float, Params]:
    """Summed surrogate loss and dense gradients for W_in and W_out"""
    W_in, W_out = params["W_in"], params["W_out"]
    loss, dU, dC, dN = pair_terms(W_in[batch.centers], W_out[batch.contexts], W_out[batch.negatives])
    rows, grads = _context_grads(batch, dC, dN)
    return loss, {
        "W_in": _scatter(W_in.shape, batch.centers, dU),
        "W_out": _scatter(W_out.shape, rows, grads),
    }


def skipgram_step(params: SkipGramParams, batch: PairBatch, lr: float, update_out: bool = True) -> float:
    """
    One SGD step with row-averaged updates

    Each touched row moves by lr times its gradient averaged over its
    occurrences in the batch.

    Returns:
        Batch loss before the update
    """
    loss, dU, dC, dN = pair_terms(
        params.W_in[batch.centers], params.W_out[batch.contexts], params.W_out[batch.negatives]
    )
    rows, avg = _row_mean(batch.centers, dU)
    params.W_in[rows] -= lr * avg
    if update_out:
        rows, avg = _row_mean(*_context_grads(batch, dC, dN))
        params.W_out[rows] -= lr * avg
    return loss


# Attri2Vec

def attri2vec_images(W_map: np.ndarray, X: np.ndarray) -> np.ndarray:
    """f(x) = sigmoid(W_map x) for every row of X"""
    return expit(X @ W_map.T)


def attri2vec_loss_and_grads(params: Params, X: np.ndarray, batch: PairBatch) -> Tuple[float, Params]:
    """Summed surrogate loss and dense gradients for W_map and W_out"""
    W_map, W_out = params["W_map"], params["W_out"]
    X_c = X[batch.centers]
    U = attri2vec_images(W_map, X_c)
    loss, dU, dC, dN = pair_terms(U, W_out[batch.contexts], W_out[batch.negatives])
    dZ = dU * U * (1.0 - U)
    rows, grads = _context_grads(batch, dC, dN)
    return loss, {"W_map": dZ.T @ X_c, "W_out": _scatter(W_out.shape, rows, grads)}


def attri2vec_step(params: Attri2VecParams, X: np.ndarray, batch: PairBatch, lr: float) -> float:
    """SGD step: batch-averaged update for W_map, row-averaged for W_out"""
    X_c = X[batch.centers]
    U = attri2vec_images(params.W_map, X_c)
    loss, dU, dC, dN = pair_terms(U, params.W_out[batch.contexts], params.W_out[batch.negatives])
    dZ = dU * U * (1.0 - U)
    params.W_map -= lr * (dZ.T @ X_c) / len(batch)
    rows, avg = _row_mean(*_context_grads(batch, dC, dN))
    params.W_out[rows] -= lr * avg
    return loss


# Shared training loop

def run_pair_epochs(
    corpus: WalkCorpus,
    window: int,
    n: int,
    config: EmbeddingTrainConfig,
    rng: np.random.Generator,
    step: Callable[[PairBatch, float], float],
    desc: str,
) -> List[float]:
    """
    Drive `step` over shuffled co-occurrence minibatches with linear lr decay

    Returns:
        Mean per-pair loss of every epoch

    Raises:
        EmptyCorpusError: If the corpus yields no pairs
        TrainingDivergenceError: If a batch loss is not finite
    """
    pairs_per_epoch = count_pairs(corpus, window)
    if pairs_per_epoch == 0:
        raise EmptyCorpusError("Walk corpus yields no co-occurrence pairs")

    sampler = NegativeSampler.from_corpus(corpus, n)
    total = pairs_per_epoch * config.epochs
    seen = 0
    history: List[float] = []

    for epoch in range(config.epochs):
        epoch_loss = 0.0
        bar = tqdm(total=pairs_per_epoch, desc=f"{desc} epoch {epoch + 1}", disable=not settings.SHOW_PROGRESS, leave=False)
        for chunk in iter_cooccurrence(corpus, window):
            chunk = chunk[rng.permutation(len(chunk))]
            for begin in range(0, len(chunk), config.batch_size):
                part = chunk[begin:begin + config.batch_size]
                lr = config.lr * max(1.0 - seen / total, MIN_LR_FRACTION)
                batch = PairBatch(part[:, 0], part[:, 1], sampler.sample(rng, (len(part), config.negatives)))
                loss = step(batch, lr)
                if not np.isfinite(loss):
                    raise TrainingDivergenceError(f"{desc}: non-finite loss in epoch {epoch}")
                epoch_loss += loss
                seen += len(part)
                bar.update(len(part))
        bar.close()
        history.append(epoch_loss / pairs_per_epoch)
        logger.info("%s epoch %d/%d: mean pair loss %.6f", desc, epoch + 1, config.epochs, history[-1])
    return history


def train_skipgram(
    corpus: WalkCorpus,
    n: int,
    config: EmbeddingTrainConfig,
    window: int,
    seed: int,
) -> EmbeddingMatrix:
    """
    Skip-gram with negative sampling over a walk corpus

    Args:
        corpus: Node walks
        n: Node count (embedding rows)
        config: dims, negatives, epochs, lr, batch size
        window: Co-occurrence window t
        seed: Master seed

    Returns:
        W_in rows as the node embeddings

    Raises:
        ConfigurationError: If dims or negatives are not positive
    """
    if config.dims <= 0 or config.negatives < 1:
        raise ConfigurationError(f"Need dims > 0 and negatives >= 1, got {config.dims} and {config.negatives}")

    params = SkipGramParams.init(n, config.dims, SeedDeriver.rng(seed, "skipgram:init"))
    rng = SeedDeriver.rng(seed, "skipgram:train")
    if config.epochs:
        run_pair_epochs(corpus, window, n, config, rng, lambda b, lr: skipgram_step(params, b, lr), "skipgram")
    return EmbeddingMatrix.dense(params.W_in)


def train_node2vec(g: Graph, walk_cfg: WalkConfig, config: EmbeddingTrainConfig, seed: int, threads: int = 1) -> EmbeddingMatrix:
    """Second-order walks followed by skip-gram training"""
    corpus = generate_walks(g, walk_cfg, SeedDeriver.derive(seed, "node2vec:walks"), threads)
    return train_skipgram(corpus, g.n, config, walk_cfg.window, seed)


def train_attri2vec(
    g: Graph,
    X: FeatureMatrix,
    walk_cfg: WalkConfig,
    config: EmbeddingTrainConfig,
    seed: int,
    threads: int = 1,
    corpus: Optional[WalkCorpus] = None,
) -> Tuple[EmbeddingMatrix, Attri2VecParams]:
    """
    Attri2Vec: predict walk contexts from the mapped node attributes

    Returns:
        (node images f(x_i), trained mapping and context table)

    Raises:
        ConfigurationError: If X does not have one row per node or dims <= 0
    """
    if X.rows != g.n:
        raise ConfigurationError(f"Feature matrix has {X.rows} rows for a graph of {g.n} nodes")
    if config.dims <= 0:
        raise ConfigurationError(f"Need dims > 0, got {config.dims}")

    if corpus is None:
        corpus = generate_walks(g, walk_cfg, SeedDeriver.derive(seed, "attri2vec:walks"), threads)
    params = Attri2VecParams.init(g.n, X.dim, config.dims, SeedDeriver.rng(seed, "attri2vec:init"))
    rng = SeedDeriver.rng(seed, "attri2vec:train")
    values = X.values
    if config.epochs:
        run_pair_epochs(
            corpus, walk_cfg.window, g.n, config, rng,
            lambda b, lr: attri2vec_step(params, values, b, lr), "attri2vec",
        )
    return EmbeddingMatrix.dense(attri2vec_images(params.W_map, values)), params
