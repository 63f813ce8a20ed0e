"""
Second-order random walks, co-occurrence pairs and negative sampling
"""
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from config import settings
from models.configs import WalkConfig
from models.graph import Graph
from utils.helpers import SeedDeriver
from logs.log import logger


WalkCorpus = List[List[int]]
AliasTable = Tuple[np.ndarray, np.ndarray]


def create_alias_table(probs: Sequence[float]) -> AliasTable:
    """
    Vose alias table for a discrete distribution

    Returns:
        (accept, alias): draw i uniformly, keep i with probability accept[i],
        otherwise take alias[i]
    """
    probs = np.asarray(probs, dtype=np.float64)
    k = len(probs)
    accept = probs * k
    alias = np.arange(k, dtype=np.int64)
    small = [i for i in range(k) if accept[i] < 1.0]
    large = [i for i in range(k) if accept[i] >= 1.0]

    while small and large:
        s = small.pop()
        l = large.pop()
        alias[s] = l
        accept[l] -= 1.0 - accept[s]
        if accept[l] < 1.0:
            small.append(l)
        else:
            large.append(l)

    # leftovers are 1 up to rounding
    for i in small + large:
        accept[i] = 1.0
    return accept, alias


class SecondOrderWalker:
    """
    Biased walker over a fixed graph

    From state (prev, cur) the candidate x in N(cur) has unnormalized weight
    1/p if x == prev, 1 if x is a neighbor of prev, 1/q otherwise. Alias
    tables per (prev, cur) state are built on first use and cached.
    """

    def __init__(self, g: Graph, p: float = 1.0, q: float = 1.0):
        if p <= 0 or q <= 0:
            raise ValueError(f"p and q must be positive, got p={p}, q={q}")
        self.g = g
        self.p = p
        self.q = q
        self._uniform = p == 1.0 and q == 1.0
        self._alias: Dict[Tuple[int, int], AliasTable] = {}

    def transition_weights(self, prev: int, cur: int) -> np.ndarray:
        """Unnormalized weights aligned with g.neighbors(cur)"""
        candidates = self.g.neighbors(cur)
        adjacent = np.isin(candidates, self.g.neighbors(prev), assume_unique=True)
        weights = np.where(adjacent, 1.0, 1.0 / self.q)
        weights[candidates == prev] = 1.0 / self.p
        return weights

    def transition_probabilities(self, prev: int, cur: int) -> Dict[int, float]:
        """Exact next-node law for the state (prev, cur)"""
        weights = self.transition_weights(prev, cur)
        probs = weights / weights.sum()
        return {int(x): float(pr) for x, pr in zip(self.g.neighbors(cur), probs)}

    def _table(self, prev: int, cur: int) -> AliasTable:
        key = (prev, cur)
        table = self._alias.get(key)
        if table is None:
            weights = self.transition_weights(prev, cur)
            table = create_alias_table(weights / weights.sum())
            self._alias[key] = table
        return table

    def walk(self, start: int, length: int, rng: np.random.Generator) -> List[int]:
        """One walk of at most `length` nodes; stops early at a node without neighbors"""
        path = [int(start)]
        draws = rng.random((max(length - 1, 0), 2))
        for step in range(length - 1):
            cur = path[-1]
            nbrs = self.g.neighbors(cur)
            if len(nbrs) == 0:
                break
            i = min(int(draws[step, 0] * len(nbrs)), len(nbrs) - 1)
            if len(path) > 1 and not self._uniform:
                accept, alias = self._table(path[-2], cur)
                if draws[step, 1] >= accept[i]:
                    i = alias[i]
            path.append(int(nbrs[i]))
        return path

    def walks_from(self, start: int, cfg: WalkConfig, seed: int) -> WalkCorpus:
        """cfg.walks_per_node walks from one start node, seeded by (seed, start)"""
        rng = SeedDeriver.rng(seed, f"walk:{start}")
        return [self.walk(start, cfg.walk_length, rng) for _ in range(cfg.walks_per_node)]


def _walk_chunk(args) -> WalkCorpus:
    g, cfg, seed, starts = args
    walker = SecondOrderWalker(g, cfg.p, cfg.q)
    corpus: WalkCorpus = []
    for start in starts:
        corpus.extend(walker.walks_from(int(start), cfg, seed))
    return corpus


def generate_walks(g: Graph, cfg: WalkConfig, seed: int, threads: int = 1) -> WalkCorpus:
    """
    Walk corpus: cfg.walks_per_node walks for every start node, in ascending node order

    Each start node draws from its own generator, so the corpus is the same
    for any thread count.
    """
    if g.n == 0:
        return []

    starts = np.arange(g.n)
    if threads > 1:
        chunks = np.array_split(starts, threads * 4)
        corpus: WalkCorpus = []
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(_walk_chunk, [(g, cfg, seed, c) for c in chunks if len(c)]):
                corpus.extend(part)
    else:
        walker = SecondOrderWalker(g, cfg.p, cfg.q)
        corpus = []
        for start in tqdm(starts, desc="walks", disable=not settings.SHOW_PROGRESS, leave=False):
            corpus.extend(walker.walks_from(int(start), cfg, seed))

    logger.info(
        "Generated %d walks (p=%s, q=%s, length %d, %d per node)",
        len(corpus), cfg.p, cfg.q, cfg.walk_length, cfg.walks_per_node,
    )
    return corpus


def _walk_pairs(walk: np.ndarray, window: int) -> np.ndarray:
    parts = []
    for offset in range(1, min(window, len(walk) - 1) + 1):
        left, right = walk[:-offset], walk[offset:]
        parts.append(np.column_stack([left, right]))
        parts.append(np.column_stack([right, left]))
    return np.concatenate(parts) if parts else np.zeros((0, 2), dtype=np.int64)


def count_pairs(corpus: Iterable[Sequence[int]], window: int) -> int:
    """Number of (center, context) pairs build_cooccurrence would emit"""
    total = 0
    for walk in corpus:
        length = len(walk)
        total += sum(2 * (length - o) for o in range(1, min(window, length - 1) + 1))
    return total


def iter_cooccurrence(corpus: Sequence[Sequence[int]], window: int, chunk_walks: int = 1024) -> Iterator[np.ndarray]:
    """
    Yield (center, context) pair arrays for consecutive chunks of walks

    Every position i of a walk pairs with every j != i where |i - j| <= window.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    for begin in range(0, len(corpus), chunk_walks):
        parts = [_walk_pairs(np.asarray(w, dtype=np.int64), window) for w in corpus[begin:begin + chunk_walks]]
        pairs = np.concatenate(parts) if parts else np.zeros((0, 2), dtype=np.int64)
        if len(pairs):
            yield pairs


def build_cooccurrence(corpus: Sequence[Sequence[int]], window: int) -> np.ndarray:
    """All (center, context) pairs of the corpus as an (P, 2) array"""
    chunks = list(iter_cooccurrence(corpus, window))
    return np.concatenate(chunks) if chunks else np.zeros((0, 2), dtype=np.int64)


def sample_cooccurrence(
    corpus: Sequence[Sequence[int]],
    window: int,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Draw `size` pairs uniformly (with replacement) from the co-occurrence multiset

    Cells (walk, position, signed offset) are drawn with the walk chosen
    proportionally to its length; cells whose partner falls outside the walk
    are rejected, which leaves every valid pair equally likely.
    """
    lengths = np.array([len(w) for w in corpus], dtype=np.int64)
    if count_pairs(corpus, window) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    flat = np.concatenate([np.asarray(w, dtype=np.int64) for w in corpus])
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    weights = lengths / lengths.sum()

    out = []
    needed = size
    while needed > 0:
        draw = max(2 * needed, 64)
        w = rng.choice(len(lengths), size=draw, p=weights)
        i = np.floor(rng.random(draw) * lengths[w]).astype(np.int64)
        offset = rng.integers(1, window + 1, size=draw) * rng.choice([-1, 1], size=draw)
        j = i + offset
        ok = (j >= 0) & (j < lengths[w])
        pairs = np.column_stack([flat[starts[w[ok]] + i[ok]], flat[starts[w[ok]] + j[ok]]])[:needed]
        out.append(pairs)
        needed -= len(pairs)
    return np.concatenate(out)


class NegativeSampler:
    """Draw nodes with probability proportional to count ** power"""

    def __init__(self, counts: np.ndarray, power: float = 0.75):
        weights = np.asarray(counts, dtype=np.float64) ** power
        total = weights.sum()
        if total <= 0:
            raise ValueError("negative sampler needs at least one node with a positive count")
        self.probs = weights / total
        self._cdf = np.cumsum(self.probs)
        self._cdf[-1] = 1.0

    @classmethod
    def from_corpus(cls, corpus: Iterable[Sequence[int]], n: int, power: float = 0.75) -> "NegativeSampler":
        """Unigram frequencies of the walk corpus"""
        counts = np.zeros(n, dtype=np.float64)
        for walk in corpus:
            np.add.at(counts, np.asarray(walk, dtype=np.int64), 1.0)
        return cls(counts, power)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return np.searchsorted(self._cdf, rng.random(size), side="right").astype(np.int64)
