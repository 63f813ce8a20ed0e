"""
Graph construction, traversal and neighborhood sampling primitives
"""
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from models.graph import FeatureMatrix, Graph, Neighborhood
from utils.exceptions import DataSourceError, GraphConstructionError, NodeBoundsError
from logs.log import logger


EdgeInput = Union[np.ndarray, Sequence[Tuple[int, int]]]


def build_graph(
    edges: EdgeInput,
    n: int,
    directed: bool,
    features: Optional[FeatureMatrix] = None,
) -> Graph:
    """
    Build an immutable CSR graph

    Args:
        edges: (u, v) pairs of NodeIds
        n: Node count; every endpoint must be < n
        directed: Store out-neighbors only when True, both directions otherwise
        features: Optional per-node feature matrix

    Returns:
        Graph with self-loops dropped, duplicates removed, sorted neighbor lists

    Raises:
        GraphConstructionError: If an endpoint falls outside [0, n)
    """
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)

    bad = np.flatnonzero((arr < 0).any(axis=1) | (arr >= n).any(axis=1))
    if len(bad):
        u, v = arr[bad[0]]
        raise GraphConstructionError(f"Edge ({u}, {v}) has an endpoint outside [0, {n})")

    arr = arr[arr[:, 0] != arr[:, 1]]
    if not directed:
        arr = np.concatenate([arr, arr[:, ::-1]])
    if len(arr):
        arr = np.unique(arr, axis=0)

    counts = np.bincount(arr[:, 0], minlength=n) if len(arr) else np.zeros(n, dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.ascontiguousarray(arr[:, 1], dtype=np.int64)

    return Graph(n=n, directed=directed, indptr=indptr, indices=indices, features=features)


def to_undirected(g: Graph) -> Graph:
    """Symmetrized copy of a directed graph (features kept)"""
    if not g.directed:
        return g
    return build_graph(g.edge_array(), g.n, directed=False, features=g.features)


def neighbors(g: Graph, v: int) -> List[int]:
    """Sorted neighbor list of v (out-neighbors if directed)"""
    return g.neighbors(v).tolist()


def sample_neighbors(g: Graph, v: int, k: int, rng: np.random.Generator) -> List[int]:
    """
    Draw k neighbors of v uniformly with replacement

    Isolated nodes return k copies of themselves.
    """
    if k < 1:
        raise ValueError(f"Sample size must be >= 1, got {k}")
    nbrs = g.neighbors(v)
    if len(nbrs) == 0:
        return [v] * k
    return nbrs[rng.integers(0, len(nbrs), size=k)].tolist()


def sample_neighborhood(g: Graph, k: int, rng: np.random.Generator) -> Neighborhood:
    """Fixed-size sampled neighborhood (k draws with replacement) for every node"""
    if k < 1:
        raise ValueError(f"Sample size must be >= 1, got {k}")
    deg = g.degrees
    offsets = np.floor(rng.random((g.n, k)) * np.maximum(deg, 1)[:, None]).astype(np.int64)
    picks = g.indices[np.minimum(g.indptr[:-1, None] + offsets, max(len(g.indices) - 1, 0))] \
        if len(g.indices) else np.zeros((g.n, k), dtype=np.int64)
    isolated = deg == 0
    picks[isolated] = np.arange(g.n)[isolated, None]
    indptr = np.arange(0, g.n * k + 1, k, dtype=np.int64)
    return Neighborhood(indptr=indptr, indices=picks.reshape(-1))


def full_neighborhood(g: Graph) -> Neighborhood:
    """Complete neighbor lists, with the self-fallback for isolated nodes"""
    deg = g.degrees
    isolated = deg == 0
    if not isolated.any():
        return Neighborhood(indptr=g.indptr.copy(), indices=g.indices.copy())

    counts = np.where(isolated, 1, deg)
    indptr = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    for v in range(g.n):
        start = indptr[v]
        if isolated[v]:
            indices[start] = v
        else:
            indices[start:start + deg[v]] = g.neighbors(v)
    return Neighborhood(indptr=indptr, indices=indices)


def build_neighborhoods(
    g: Graph,
    layers: int,
    sample_sizes: Optional[Sequence[int]],
    rng: Optional[np.random.Generator],
) -> List[Neighborhood]:
    """
    One neighborhood per aggregation layer

    sample_sizes[l] applies to layer l; absent sizes mean full neighborhoods.
    """
    if not sample_sizes:
        full = full_neighborhood(g)
        return [full] * layers
    if len(sample_sizes) != layers:
        raise ValueError(f"Expected {layers} sample sizes, got {len(sample_sizes)}")
    if rng is None:
        raise ValueError("Sampled neighborhoods need a generator")
    return [sample_neighborhood(g, int(k), rng) for k in sample_sizes]


def check_pairs(g: Graph, pairs: np.ndarray) -> None:
    """Raise NodeBoundsError if any pair endpoint is not a node of g"""
    if len(pairs) == 0:
        return
    bad = np.flatnonzero((pairs < 0).any(axis=1) | (pairs >= g.n).any(axis=1))
    if len(bad):
        u, v = pairs[bad[0]]
        raise NodeBoundsError(f"Pair ({u}, {v}) refers to a node outside [0, {g.n})")


def read_edge_list(path: Union[str, Path]) -> np.ndarray:
    """
    Read a whitespace-separated `src dst` edge file (`#` lines are comments)

    Returns:
        (E, 2) int64 array of raw identifiers
    """
    path = Path(path)
    if not path.exists():
        raise DataSourceError(f"Edge list not found: {path}")
    try:
        edges = np.loadtxt(path, dtype=np.int64, comments="#", ndmin=2)
    except ValueError as exc:
        raise DataSourceError(f"Malformed edge list {path}: {exc}") from exc
    if edges.size == 0:
        edges = np.zeros((0, 2), dtype=np.int64)
    if edges.shape[1] != 2:
        raise DataSourceError(f"Edge list {path} must have exactly two columns")
    logger.info("Read %d edges from %s", len(edges), path)
    return edges


def write_edge_list(path: Union[str, Path], edges: Iterable[Tuple[int, int]], comment: str = "") -> None:
    """Write `src dst` lines with an optional leading comment"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for u, v in edges:
            fh.write(f"{int(u)} {int(v)}\n")
