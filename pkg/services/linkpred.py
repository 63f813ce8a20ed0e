"""
Author-feature augmentation, link operators and the supervised link model
"""
from dataclasses import dataclass
from typing import List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import expit
from tqdm import tqdm

from config import settings
from models.configs import LinkTrainConfig
from models.evaluation import EdgeSplit, EpochRecord, MetricsReport
from models.graph import FeatureMatrix, Graph, Neighborhood
from models.params import EmbeddingMatrix, LinkModelParams
from models.records import AuthorTable, JournalMetrics, Recommendation
from services.evaluation import compute_metrics
from services.graph import build_graph, build_neighborhoods, check_pairs
from services.sage import LayerCache, sage_backward, sage_forward_cached
from utils.exceptions import ConsistencyError, DimensionError, EmptyCorpusError, TrainingDivergenceError
from utils.helpers import SeedDeriver
from utils.nn import AdamState, Params, adam_step
from logs.log import logger


Pooling = Literal["sum", "mean"]
OPERATORS = ("L1", "L2", "Hadamard", "Average", "InnerProduct")


def augment_author_features(
    interests: FeatureMatrix,
    author_table: AuthorTable,
    paper_embeddings: Optional[EmbeddingMatrix],
    pooling: Pooling = "sum",
) -> FeatureMatrix:
    """
    Extend every interest row with the pooled embeddings of the author's papers

    Args:
        interests: One interest row per author
        author_table: Author -> paper NodeIds incidence
        paper_embeddings: Paper embeddings; None leaves the interests unchanged
        pooling: "sum" over the author's papers, or their "mean"

    Returns:
        (authors, k + d) matrix; authors without embedded papers get a zero d-block

    Raises:
        ConsistencyError: If interests does not have one row per author
    """
    if interests.rows != len(author_table):
        raise ConsistencyError(
            f"Interest matrix has {interests.rows} rows for {len(author_table)} authors"
        )
    if paper_embeddings is None:
        return interests

    rows, cols, missing = [], [], 0
    for author in range(len(author_table)):
        for paper in author_table.papers_of(author):
            row = paper_embeddings.row_of(paper)
            if row is None:
                missing += 1
            else:
                rows.append(author)
                cols.append(row)
    if missing:
        logger.warning("%d author-paper links have no paper embedding and contribute nothing", missing)

    incidence = sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(len(author_table), len(paper_embeddings))
    )
    block = incidence @ paper_embeddings.vectors
    if pooling == "mean":
        counts = np.asarray(incidence.sum(axis=1)).ravel()
        block = block / np.maximum(counts, 1.0)[:, None]
    elif pooling != "sum":
        raise ValueError(f"Unknown pooling {pooling!r}")
    return FeatureMatrix(np.hstack([interests.values, block]))


# Link operators

def link_embed_batch(Hu: np.ndarray, Hv: np.ndarray, op: str) -> np.ndarray:
    """Row-wise edge representation of (Hu[i], Hv[i])"""
    if Hu.shape != Hv.shape:
        raise DimensionError(f"Operator inputs differ in shape: {Hu.shape} vs {Hv.shape}")
    if op == "L1":
        return np.abs(Hu - Hv)
    if op == "L2":
        return (Hu - Hv) ** 2
    if op == "Hadamard":
        return Hu * Hv
    if op == "Average":
        return (Hu + Hv) / 2.0
    if op == "InnerProduct":
        return np.sum(Hu * Hv, axis=1, keepdims=True)
    raise ValueError(f"Unknown link operator {op!r}")


def link_embed(h_u: np.ndarray, h_v: np.ndarray, op: str) -> np.ndarray:
    """Edge representation of one node pair"""
    h_u = np.asarray(h_u, dtype=np.float64)
    h_v = np.asarray(h_v, dtype=np.float64)
    if h_u.ndim != 1 or h_u.shape != h_v.shape:
        raise DimensionError(f"Operator inputs differ in shape: {h_u.shape} vs {h_v.shape}")
    return link_embed_batch(h_u[None, :], h_v[None, :], op)[0]


def link_embed_backward(Hu: np.ndarray, Hv: np.ndarray, op: str, dE: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if op == "L1":
        d = np.sign(Hu - Hv) * dE
        return d, -d
    if op == "L2":
        d = 2.0 * (Hu - Hv) * dE
        return d, -d
    if op == "Hadamard":
        return dE * Hv, dE * Hu
    if op == "Average":
        return dE / 2.0, dE / 2.0
    if op == "InnerProduct":
        return dE * Hv, dE * Hu
    raise ValueError(f"Unknown link operator {op!r}")


# Link model

@dataclass
class LinkForward:
    H: np.ndarray
    caches: List[LayerCache]
    E: np.ndarray
    F: np.ndarray
    logits: np.ndarray


def link_forward(
    params: LinkModelParams,
    X: np.ndarray,
    neighborhoods: Sequence[Neighborhood],
    pairs: np.ndarray,
) -> LinkForward:
    """Node embeddings, edge features, classifier inputs and logits for the pairs"""
    if X.shape[1] != params.sage.in_dim:
        raise DimensionError(f"Author features have dim {X.shape[1]}, model expects {params.sage.in_dim}")
    H, caches = sage_forward_cached(params.sage, X, neighborhoods)
    E = link_embed_batch(H[pairs[:, 0]], H[pairs[:, 1]], params.operator)
    F = E
    if params.hidden_W is not None:
        F = expit(E @ params.hidden_W.T + params.hidden_b)
    logits = F @ params.clf_w + params.clf_b[0]
    return LinkForward(H=H, caches=caches, E=E, F=F, logits=logits)


def link_loss_and_grads(
    params: LinkModelParams,
    X: np.ndarray,
    neighborhoods: Sequence[Neighborhood],
    pairs: np.ndarray,
    labels: np.ndarray,
) -> Tuple[float, Params]:
    """
    Mean binary cross-entropy of the pair labels and its gradient for every block
    """
    fwd = link_forward(params, X, neighborhoods, pairs)
    y = np.asarray(labels, dtype=np.float64)
    z = fwd.logits
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))

    dz = (expit(z) - y) / len(y)
    grads: Params = {"clf.w": fwd.F.T @ dz, "clf.b": np.array([dz.sum()])}
    dF = np.outer(dz, params.clf_w)
    if params.hidden_W is not None:
        dZh = dF * fwd.F * (1.0 - fwd.F)
        grads["clf.hidden_W"] = dZh.T @ fwd.E
        grads["clf.hidden_b"] = dZh.sum(axis=0)
        dE = dZh @ params.hidden_W
    else:
        dE = dF

    dHu, dHv = link_embed_backward(fwd.H[pairs[:, 0]], fwd.H[pairs[:, 1]], params.operator, dE)
    dH = np.zeros_like(fwd.H)
    np.add.at(dH, pairs[:, 0], dHu)
    np.add.at(dH, pairs[:, 1], dHv)
    sage_grads, _ = sage_backward(params.sage, fwd.caches, neighborhoods, dH)
    grads.update(sage_grads)
    return loss, grads


def message_passing_graph(split: EdgeSplit, n: int) -> Graph:
    """Adjacency for aggregation during training: train positives only"""
    return build_graph(split.positives("train"), n, directed=False)


def predict_links(
    params: LinkModelParams,
    g: Graph,
    X: FeatureMatrix,
    pairs: np.ndarray,
) -> np.ndarray:
    """
    Link probabilities for node pairs, aggregating over full neighborhoods of g

    Raises:
        NodeBoundsError: If a pair refers to a node outside g
        DimensionError: If X does not conform to the model
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    check_pairs(g, pairs)
    if X.rows != g.n:
        raise DimensionError(f"Author features have {X.rows} rows for a graph of {g.n} nodes")
    neighborhoods = build_neighborhoods(g, params.sage.layers, None, None)
    return expit(link_forward(params, X.values, neighborhoods, pairs).logits)


def evaluate_link_model(
    params: LinkModelParams,
    X: FeatureMatrix,
    split: EdgeSplit,
    partition: str = "test",
    **descriptor,
) -> MetricsReport:
    """
    Metrics of one split partition, aggregating over the train positives only

    Extra keyword arguments label the report (article_embedding, author_embedding).
    """
    part = split.partition(partition)
    probs = predict_links(params, message_passing_graph(split, X.rows), X, part[:, :2])
    return compute_metrics(part[:, 2], probs, operator=params.operator, **descriptor)


def train_link_model(
    g: Graph,
    X: FeatureMatrix,
    split: EdgeSplit,
    config: LinkTrainConfig,
    seed: int,
    initial: Optional[LinkModelParams] = None,
) -> Tuple[LinkModelParams, List[EpochRecord]]:
    """
    Minibatch Adam on the link BCE over the train partition

    Aggregation uses only train-partition positives; validation edges are
    scored on that same adjacency after each epoch.

    Args:
        g: Full co-authorship graph
        X: Author features (one row per node of g)
        split: Edge split of g
        config: Operator, layer stack, classifier and optimizer settings
        seed: Master seed
        initial: Parameters to resume from instead of a fresh initialization

    Returns:
        (parameters of the best validation-AUC epoch, per-epoch history)

    Raises:
        EmptyCorpusError: If the split has no train edges
        TrainingDivergenceError: If the loss becomes non-finite (names the epoch)
    """
    if X.rows != g.n:
        raise DimensionError(f"Author features have {X.rows} rows for a graph of {g.n} nodes")
    if len(split.train) == 0:
        raise EmptyCorpusError("Train partition is empty; nothing to train the link model on")

    params = initial.copy() if initial is not None else LinkModelParams.init(
        X.dim, config.sage.dims, config.sage.aggregator, config.operator,
        SeedDeriver.rng(seed, "link:init"), config.sage.activation, config.sage.normalize,
        config.classifier_hidden,
    )
    history: List[EpochRecord] = []
    if config.epochs == 0:
        return params, history

    mp_graph = message_passing_graph(split, g.n)
    rng = SeedDeriver.rng(seed, "link:train")
    blocks = params.as_dict()
    state = AdamState(lr=config.lr)
    best_auc, best = -np.inf, params.copy()
    train = split.train

    for epoch in tqdm(range(config.epochs), desc="link model", disable=not settings.SHOW_PROGRESS, leave=False):
        neighborhoods = build_neighborhoods(mp_graph, params.sage.layers, config.sage.sample_sizes, rng)
        order = rng.permutation(len(train))
        total = 0.0
        for begin in range(0, len(order), config.batch_size):
            rows = train[order[begin:begin + config.batch_size]]
            loss, grads = link_loss_and_grads(params, X.values, neighborhoods, rows[:, :2], rows[:, 2])
            if not np.isfinite(loss):
                raise TrainingDivergenceError(f"Non-finite training loss in epoch {epoch}")
            adam_step(blocks, grads, state)
            total += loss * len(rows)

        val = evaluate_link_model(params, X, split, "val")
        record = EpochRecord(
            epoch=epoch,
            train_loss=total / len(train),
            val_accuracy=val.accuracy,
            val_auc_roc=val.auc_roc,
            val_f1=val.f1,
        )
        history.append(record)
        logger.info(
            "link epoch %d/%d: loss %.6f, val acc %.4f, auc %.4f, f1 %.4f",
            epoch + 1, config.epochs, record.train_loss, val.accuracy, val.auc_roc, val.f1,
        )
        if val.auc_roc > best_auc:
            best_auc, best = val.auc_roc, params.copy()

    return best, history


def recommend(
    params: LinkModelParams,
    g: Graph,
    X: FeatureMatrix,
    u: int,
    k: int,
    metrics: Optional[Mapping[int, JournalMetrics]] = None,
    author_table: Optional[AuthorTable] = None,
) -> List[Recommendation]:
    """
    Top-k non-neighbors of u by predicted link probability

    Ties are broken by ascending author id.

    Raises:
        NodeBoundsError: If u is not a node of g
        ValueError: If k < 1
    """
    g.check_node(u)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")

    excluded = np.zeros(g.n, dtype=bool)
    excluded[g.neighbors(u)] = True
    excluded[u] = True
    candidates = np.flatnonzero(~excluded)
    if len(candidates) == 0:
        return []

    pairs = np.column_stack([np.full(len(candidates), u), candidates])
    probs = predict_links(params, g, X, pairs)
    order = np.lexsort((candidates, -probs))[:k]

    results = []
    for i in order:
        v = int(candidates[i])
        info = (metrics or {}).get(v)
        results.append(Recommendation(
            author_id=v,
            name=author_table.name(v) if author_table is not None else "",
            probability=float(probs[i]),
            quartile=info.quartile if info else None,
            impact_factor=info.impact_factor if info else None,
        ))
    return results
