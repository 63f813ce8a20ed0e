from collections import Counter

import numpy as np
import pytest

from models.configs import WalkConfig
from services.graph import build_graph
from services.walks import (
    NegativeSampler,
    SecondOrderWalker,
    build_cooccurrence,
    count_pairs,
    create_alias_table,
    generate_walks,
    iter_cooccurrence,
    sample_cooccurrence,
)


def implied_probabilities(accept, alias):
    k = len(accept)
    probs = np.array(accept, dtype=float)
    for j in range(k):
        if alias[j] != j:
            probs[alias[j]] += 1.0 - accept[j]
    return probs / k


@pytest.mark.parametrize("probs", [
    [0.25, 0.25, 0.25, 0.25],
    [0.5, 0.3, 0.2],
    [0.9, 0.05, 0.03, 0.02],
    [1.0],
])
def test_alias_table_reproduces_distribution(probs):
    accept, alias = create_alias_table(probs)
    np.testing.assert_allclose(implied_probabilities(accept, alias), probs, atol=1e-12)


def test_transition_probabilities(walk_graph):
    walker = SecondOrderWalker(walk_graph, p=0.5, q=2.0)
    probs = walker.transition_probabilities(0, 1)
    assert probs == pytest.approx({0: 4 / 7, 2: 2 / 7, 3: 1 / 7})
    with pytest.raises(ValueError):
        SecondOrderWalker(walk_graph, p=0.0)


@pytest.mark.parametrize("p, q", [(0.5, 2.0), (1.0, 1.0), (4.0, 0.25)])
def test_walk_law_matches_transition_probabilities(walk_graph, p, q):
    walker = SecondOrderWalker(walk_graph, p=p, q=q)
    rng = np.random.default_rng(2024)
    third = Counter()
    for _ in range(100_000):
        path = walker.walk(0, 3, rng)
        if path[1] == 1:
            third[path[2]] += 1

    total = sum(third.values())
    assert total > 40_000
    expected = walker.transition_probabilities(0, 1)
    for node, prob in expected.items():
        assert abs(third[node] / total - prob) < 0.02
    if p == q == 1.0:
        assert all(v == pytest.approx(1 / 3) for v in expected.values())


def test_walk_stops_at_isolated_node():
    g = build_graph([(0, 1)], 3, directed=False)
    walker = SecondOrderWalker(g)
    rng = np.random.default_rng(0)
    assert walker.walk(2, 10, rng) == [2]
    assert len(walker.walk(0, 10, rng)) == 10


def test_walks_are_deterministic_and_ordered(walk_graph):
    cfg = WalkConfig(walk_length=6, walks_per_node=3, p=0.5, q=2.0)
    corpus = generate_walks(walk_graph, cfg, seed=11)
    assert len(corpus) == 15
    assert [w[0] for w in corpus] == [v for v in range(5) for _ in range(3)]
    assert corpus == generate_walks(walk_graph, cfg, seed=11)
    assert corpus != generate_walks(walk_graph, cfg, seed=12)
    for walk in corpus:
        for a, b in zip(walk, walk[1:]):
            assert walk_graph.has_edge(a, b)


def test_walk_corpus_does_not_depend_on_threads(walk_graph):
    cfg = WalkConfig(walk_length=8, walks_per_node=2)
    assert generate_walks(walk_graph, cfg, seed=5, threads=2) == generate_walks(walk_graph, cfg, seed=5, threads=1)


def test_cooccurrence_pairs():
    corpus = [[0, 1, 2], [3]]
    pairs = build_cooccurrence(corpus, window=1)
    assert sorted(map(tuple, pairs.tolist())) == [(0, 1), (1, 0), (1, 2), (2, 1)]
    wide = build_cooccurrence(corpus, window=5)
    assert sorted(map(tuple, wide.tolist())) == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]


def test_count_pairs_matches_enumeration(walk_graph):
    corpus = generate_walks(walk_graph, WalkConfig(walk_length=7, walks_per_node=4), seed=3)
    for window in (1, 2, 5, 10):
        assert count_pairs(corpus, window) == len(build_cooccurrence(corpus, window))
    chunks = list(iter_cooccurrence(corpus, 2, chunk_walks=3))
    assert sum(len(c) for c in chunks) == count_pairs(corpus, 2)


def test_window_must_be_positive():
    with pytest.raises(ValueError):
        build_cooccurrence([[0, 1]], window=0)


def test_sampled_pairs_come_from_the_multiset(walk_graph):
    corpus = generate_walks(walk_graph, WalkConfig(walk_length=5, walks_per_node=2), seed=9)
    allowed = set(map(tuple, build_cooccurrence(corpus, 2).tolist()))
    sample = sample_cooccurrence(corpus, 2, 500, np.random.default_rng(1))
    assert sample.shape == (500, 2)
    assert set(map(tuple, sample.tolist())) <= allowed
    assert sample_cooccurrence([[4], [2]], 2, 10, np.random.default_rng(1)).shape == (0, 2)


def test_negative_sampler_skips_unseen_nodes():
    sampler = NegativeSampler.from_corpus([[1, 2, 2], [3, 1]], n=5)
    draws = sampler.sample(np.random.default_rng(0), 20_000)
    assert set(np.unique(draws).tolist()) == {1, 2, 3}
    expected = np.array([0, 2, 2, 1, 0], dtype=float) ** 0.75
    np.testing.assert_allclose(sampler.probs, expected / expected.sum())
    with pytest.raises(ValueError):
        NegativeSampler(np.zeros(3))


def test_negative_draws_follow_smoothed_unigram_law():
    counts = np.array([1.0, 4.0, 9.0, 16.0, 0.0, 25.0])
    draws = NegativeSampler(counts).sample(np.random.default_rng(3), 100_000)
    empirical = np.bincount(draws, minlength=6) / 100_000
    expected = counts ** 0.75 / (counts ** 0.75).sum()
    assert empirical[4] == 0.0
    np.testing.assert_allclose(empirical, expected, atol=0.01)
