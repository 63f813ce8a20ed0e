import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

from models.evaluation import MetricsReport
from services.evaluation import (
    REFERENCE_ROWS,
    auc_roc,
    compute_metrics,
    degree_product_scores,
    partition_sizes,
    results_table,
    sample_negatives,
    split_edges,
)
from services.graph import build_graph
from utils.exceptions import ConfigurationError, ConsistencyError, SamplingExhaustedError, UndefinedMetricError


def edge_set(rows):
    return {tuple(sorted(r)) for r in rows[:, :2].tolist()}


def test_partition_sizes():
    assert partition_sizes(600) == (300, 100, 200)
    assert partition_sizes(7) == (4, 1, 2)
    assert partition_sizes(10, (8, 1, 1)) == (8, 1, 1)


def test_split_properties(ring_graph):
    split = split_edges(ring_graph, seed=42)
    sizes = [len(split.partition(p)) for p in ("train", "val", "test")]
    assert sizes == [600, 200, 400]

    positives = [edge_set(split.partition(p)[split.partition(p)[:, 2] == 1]) for p in ("train", "val", "test")]
    negatives = [edge_set(split.partition(p)[split.partition(p)[:, 2] == 0]) for p in ("train", "val", "test")]
    assert [len(s) for s in positives] == [300, 100, 200]
    assert set.union(*positives) == edge_set(ring_graph.edge_array())
    assert sum(len(s) for s in negatives) == 600
    assert len(set.union(*negatives)) == 600
    for u, v in set.union(*negatives):
        assert u != v and not ring_graph.has_edge(u, v)


def test_split_is_deterministic(ring_graph):
    a = split_edges(ring_graph, seed=42)
    b = split_edges(ring_graph, seed=42)
    c = split_edges(ring_graph, seed=43)
    np.testing.assert_array_equal(a.test, b.test)
    assert not np.array_equal(a.test, c.test)
    a.check_seed(42)
    with pytest.raises(ConsistencyError):
        a.check_seed(43)


def test_degree_weighted_negatives(ring_graph):
    split = split_edges(ring_graph, seed=1, strategy="degree")
    assert len(split.train) == 600


def test_split_needs_six_edges():
    g = build_graph([(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)], 10, directed=False)
    with pytest.raises(ConfigurationError):
        split_edges(g)


def test_complete_graph_exhausts_negatives():
    complete = build_graph([(i, j) for i in range(5) for j in range(i + 1, 5)], 5, directed=False)
    with pytest.raises(SamplingExhaustedError):
        split_edges(complete)
    with pytest.raises(SamplingExhaustedError):
        sample_negatives(complete, 1, np.random.default_rng(0))


def brute_force_auc(labels, scores):
    pos = [s for y, s in zip(labels, scores) if y == 1]
    neg = [s for y, s in zip(labels, scores) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def test_auc_matches_pairwise_count_and_sklearn(rng):
    labels = rng.integers(0, 2, size=200)
    labels[:2] = [0, 1]
    scores = np.round(rng.random(200), 1)
    assert auc_roc(labels, scores) == pytest.approx(brute_force_auc(labels, scores), abs=1e-12)
    assert auc_roc(labels, scores) == pytest.approx(roc_auc_score(labels, scores), abs=1e-12)


def test_compute_metrics_perfect_and_inverted():
    report = compute_metrics([1, 1, 0, 0], [0.9, 0.6, 0.4, 0.1])
    assert (report.accuracy, report.auc_roc, report.f1, report.count) == (1.0, 1.0, 1.0, 4)

    inverted = compute_metrics([1, 1, 0, 0], [0.1, 0.4, 0.6, 0.9])
    assert (inverted.accuracy, inverted.auc_roc, inverted.f1) == (0.0, 0.0, 0.0)


def test_compute_metrics_hand_example():
    report = compute_metrics([1, 0, 1, 0], [0.7, 0.6, 0.3, 0.2])
    assert report.accuracy == 0.5
    assert report.f1 == 0.5
    assert report.auc_roc == 0.75


def test_compute_metrics_errors():
    with pytest.raises(UndefinedMetricError) as info:
        compute_metrics([1, 1], [0.9, 0.2])
    assert info.value.accuracy == 0.5
    with pytest.raises(ValueError):
        compute_metrics([1, 0], [0.5])
    with pytest.raises(ValueError):
        compute_metrics([], [])


def test_degree_product_baseline(small_graph):
    scores = degree_product_scores(small_graph, np.array([[1, 3], [0, 7], [2, 3]]))
    np.testing.assert_allclose(scores, [9 / 9, 0.0, 9 / 9])
    scores = degree_product_scores(small_graph, np.array([[0, 1], [1, 3]]))
    np.testing.assert_allclose(scores, [6 / 9, 1.0])


def test_results_table_formats():
    reports = [
        MetricsReport(accuracy=0.88, auc_roc=0.95, f1=0.881, count=10, operator="Hadamard"),
        MetricsReport(accuracy=0.5, auc_roc=0.5, f1=2 / 3, count=4, article_embedding="Node2Vec",
                      author_embedding="GraphSAGE (MaxPool)", operator="L1"),
    ]
    assert results_table(reports) == (
        "-- | GraphSAGE (Mean) | Hadamard | 0.8800 | 0.9500 | 0.8810\n"
        "Node2Vec | GraphSAGE (MaxPool) | L1 | 0.5000 | 0.5000 | 0.6667"
    )
    assert results_table(reports, "csv").splitlines() == [
        "article_embedding,author_embedding,operator,accuracy,auc_roc,f1",
        "--,GraphSAGE (Mean),Hadamard,0.8800,0.9500,0.8810",
        "Node2Vec,GraphSAGE (MaxPool),L1,0.5000,0.5000,0.6667",
    ]
    with pytest.raises(ValueError):
        results_table([])


def test_reference_rows_render():
    lines = results_table(REFERENCE_ROWS).splitlines()
    assert lines[0] == "-- | GraphSAGE (Mean) | L2 | 0.8793 | 0.9442 | 0.8817"
    assert lines[1] == "FastText | GraphSAGE (Mean) | Hadamard | 0.8844 | 0.9486 | 0.8828"
    assert len(lines) == 5
