"""
Edge splitting, negative sampling, metrics and result tables
"""
import io
from typing import List, Literal, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from models.evaluation import EdgeSplit, MetricsReport
from models.graph import Graph
from utils.exceptions import ConfigurationError, SamplingExhaustedError, UndefinedMetricError
from utils.helpers import SeedDeriver
from logs.log import logger


NegativeStrategy = Literal["uniform", "degree"]

ATTEMPT_FACTOR = 100
RESULT_COLUMNS = ["article_embedding", "author_embedding", "operator", "accuracy", "auc_roc", "f1"]

METHOD_LABELS = {
    "none": "--",
    "abstracts-only": "Abstracts",
    "node2vec": "Node2Vec",
    "attri2vec": "Attri2Vec",
    "graphsage-mean": "GraphSAGE (Mean)",
    "graphsage-maxpool": "GraphSAGE (MaxPool)",
}
AGGREGATOR_LABELS = {"mean": "GraphSAGE (Mean)", "maxpool": "GraphSAGE (MaxPool)"}

# Published test scores of the strongest configurations on HEP-TH
REFERENCE_ROWS: List[MetricsReport] = [
    MetricsReport(article_embedding="--", author_embedding="GraphSAGE (Mean)", operator="L2",
                  accuracy=0.8793, auc_roc=0.9442, f1=0.8817, count=1),
    MetricsReport(article_embedding="FastText", author_embedding="GraphSAGE (Mean)", operator="Hadamard",
                  accuracy=0.8844, auc_roc=0.9486, f1=0.8828, count=1),
    MetricsReport(article_embedding="GraphSAGE (Mean)", author_embedding="GraphSAGE (Mean)", operator="Hadamard",
                  accuracy=0.8895, auc_roc=0.9568, f1=0.8911, count=1),
    MetricsReport(article_embedding="GraphSAGE (Mean)", author_embedding="GraphSAGE (Mean)", operator="L2",
                  accuracy=0.8928, auc_roc=0.9531, f1=0.8885, count=1),
    MetricsReport(article_embedding="GraphSAGE (Mean)", author_embedding="GraphSAGE (MaxPool)", operator="L1",
                  accuracy=0.8638, auc_roc=0.9617, f1=0.8489, count=1),
]


def partition_sizes(m: int, ratio: Sequence[int] = (3, 1, 2)) -> Tuple[int, int, int]:
    """Floor-proportional (train, val, test) sizes with the remainder going to train"""
    total = sum(ratio)
    val = m * ratio[1] // total
    test = m * ratio[2] // total
    return m - val - test, val, test


def _draw_endpoints(g: Graph, size: int, rng: np.random.Generator, strategy: NegativeStrategy) -> np.ndarray:
    if strategy == "uniform":
        return rng.integers(0, g.n, size=(size, 2))
    degrees = g.degrees.astype(np.float64)
    return rng.choice(g.n, size=(size, 2), p=degrees / degrees.sum())


def sample_negatives(
    g: Graph,
    count: int,
    rng: np.random.Generator,
    strategy: NegativeStrategy = "uniform",
) -> np.ndarray:
    """
    Distinct non-edges (u < v) drawn by rejection

    Raises:
        SamplingExhaustedError: If `count` pairs are not found within
            ATTEMPT_FACTOR * count draws
    """
    if count == 0:
        return np.zeros((0, 2), dtype=np.int64)
    edge_keys = np.sort(g.edge_array() @ np.array([g.n, 1], dtype=np.int64))
    budget = ATTEMPT_FACTOR * count
    attempts = 0
    keys: List[int] = []
    seen = set()

    while len(keys) < count and attempts < budget:
        draw = min(max(2 * (count - len(keys)), 64), budget - attempts)
        attempts += draw
        pairs = np.sort(_draw_endpoints(g, draw, rng, strategy), axis=1)
        cand = pairs @ np.array([g.n, 1], dtype=np.int64)
        is_edge = np.isin(cand, edge_keys)
        for key in cand[(pairs[:, 0] != pairs[:, 1]) & ~is_edge]:
            key = int(key)
            if key not in seen:
                seen.add(key)
                keys.append(key)
                if len(keys) == count:
                    break

    if len(keys) < count:
        raise SamplingExhaustedError(
            f"Found only {len(keys)} of {count} negative pairs after {attempts} attempts"
        )
    arr = np.array(keys, dtype=np.int64)
    return np.column_stack([arr // g.n, arr % g.n])


def _labelled(pos: np.ndarray, neg: np.ndarray) -> np.ndarray:
    return np.vstack([
        np.column_stack([pos, np.ones(len(pos), dtype=np.int64)]),
        np.column_stack([neg, np.zeros(len(neg), dtype=np.int64)]),
    ]).astype(np.int64)


def split_edges(
    g: Graph,
    ratio: Sequence[int] = (3, 1, 2),
    seed: int = 0,
    strategy: NegativeStrategy = "uniform",
) -> EdgeSplit:
    """
    Shuffle the edges and cut them into train/val/test with balanced negatives

    Args:
        g: Undirected co-authorship graph
        ratio: Partition proportions
        seed: Master seed; the shuffle and the negatives use derived generators
        strategy: "uniform" over node pairs or "degree"-proportional endpoints

    Raises:
        ConfigurationError: If the graph has fewer than 6 edges
        SamplingExhaustedError: If the graph is too dense for enough negatives
    """
    edges = g.edge_array()
    m = len(edges)
    if m < 6:
        raise ConfigurationError(f"Need at least 6 edges to split, graph has {m}")

    edges = edges[SeedDeriver.rng(seed, "split:shuffle").permutation(m)]
    n_train, n_val, n_test = partition_sizes(m, ratio)
    negatives = sample_negatives(g, m, SeedDeriver.rng(seed, "split:negatives"), strategy)

    cut = np.cumsum([0, n_train, n_val, n_test])
    parts = [_labelled(edges[cut[i]:cut[i + 1]], negatives[cut[i]:cut[i + 1]]) for i in range(3)]
    logger.info("Split %d edges into %d/%d/%d positives (+ equal negatives)", m, n_train, n_val, n_test)
    return EdgeSplit(train=parts[0], val=parts[1], test=parts[2], seed=seed, ratio=tuple(ratio))


def auc_roc(labels: np.ndarray, scores: np.ndarray) -> float:
    """Mann-Whitney rank statistic; ties count half"""
    labels = np.asarray(labels)
    ranks = rankdata(scores)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    return float((ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def compute_metrics(
    labels: Sequence[int],
    scores: Sequence[float],
    threshold: float = 0.5,
    article_embedding: str = "--",
    author_embedding: str = "GraphSAGE (Mean)",
    operator: str = "L2",
) -> MetricsReport:
    """
    Accuracy, AUC-ROC and F1 of scores against binary labels

    Raises:
        ValueError: On length mismatch or empty input
        UndefinedMetricError: If only one class is present (accuracy and F1 attached)
    """
    y = np.asarray(labels, dtype=np.int64).ravel()
    s = np.asarray(scores, dtype=np.float64).ravel()
    if len(y) != len(s) or len(y) == 0:
        raise ValueError(f"labels and scores need equal non-empty lengths, got {len(y)} and {len(s)}")

    pred = (s >= threshold).astype(np.int64)
    accuracy = float(np.mean(pred == y))
    tp = int(np.sum((pred == 1) & (y == 1)))
    precision = tp / max(int(pred.sum()), 1)
    recall = tp / max(int(y.sum()), 1)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)

    if y.min() == y.max():
        raise UndefinedMetricError("AUC-ROC is undefined for single-class labels", accuracy=accuracy, f1=f1)

    return MetricsReport(
        accuracy=accuracy,
        auc_roc=auc_roc(y, s),
        f1=f1,
        threshold=threshold,
        count=len(y),
        article_embedding=article_embedding,
        author_embedding=author_embedding,
        operator=operator,
    )


def degree_product_scores(g: Graph, pairs: np.ndarray) -> np.ndarray:
    """Preferential-attachment baseline deg(u) * deg(v), scaled into [0, 1]"""
    degrees = g.degrees.astype(np.float64)
    scores = degrees[pairs[:, 0]] * degrees[pairs[:, 1]]
    top = scores.max() if len(scores) else 0.0
    return scores / top if top > 0 else scores


def results_frame(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    return pd.DataFrame([r.row() for r in reports], columns=RESULT_COLUMNS)


def results_table(reports: Sequence[MetricsReport], fmt: Literal["text", "csv"] = "text") -> str:
    """
    Render reports in input order

    Text rows join the columns with " | "; both formats use 4 decimals.
    """
    if not reports:
        raise ValueError("results_table needs at least one report")
    if fmt == "csv":
        buffer = io.StringIO()
        results_frame(reports).to_csv(buffer, index=False, float_format="%.4f", lineterminator="\n")
        return buffer.getvalue()
    if fmt != "text":
        raise ValueError(f"Unknown table format {fmt!r}")
    lines = []
    for r in reports:
        lines.append(" | ".join([
            r.article_embedding, r.author_embedding, r.operator,
            f"{r.accuracy:.4f}", f"{r.auc_roc:.4f}", f"{r.f1:.4f}",
        ]))
    return "\n".join(lines)
