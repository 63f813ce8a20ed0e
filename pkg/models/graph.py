"""
Graph storage types shared by the ingest and learning services
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from utils.exceptions import DimensionError, NodeBoundsError


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense float64 node features; row i belongs to node i"""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionError(f"Feature matrix must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = int(np.argwhere(~np.isfinite(values))[0][0])
            raise DimensionError(f"Feature matrix has a non-finite entry in row {bad}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Graph:
    """
    Immutable CSR adjacency.

    Neighbor lists are sorted ascending; out-neighbors when directed,
    symmetric when undirected. No self-loops, no duplicate edges.
    """

    n: int
    directed: bool
    indptr: np.ndarray
    indices: np.ndarray
    features: Optional[FeatureMatrix] = None

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        if self.features is not None and self.features.rows != self.n:
            raise DimensionError(
                f"Feature rows ({self.features.rows}) do not match node count ({self.n})"
            )

    def check_node(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise NodeBoundsError(f"Node {v} outside [0, {self.n})")

    def neighbors(self, v: int) -> np.ndarray:
        self.check_node(v)
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degree(self, v: int) -> int:
        self.check_node(v)
        return int(self.indptr[v + 1] - self.indptr[v])

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        pos = np.searchsorted(nbrs, v)
        return bool(pos < len(nbrs) and nbrs[pos] == v)

    @property
    def num_edges(self) -> int:
        stored = len(self.indices)
        return stored if self.directed else stored // 2

    def edge_array(self) -> np.ndarray:
        """(|E|, 2) edge array; undirected edges listed once with u < v"""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        edges = np.column_stack([src, self.indices])
        if not self.directed:
            edges = edges[edges[:, 0] < edges[:, 1]]
        return edges

    def with_features(self, features: Optional[FeatureMatrix]) -> "Graph":
        return Graph(self.n, self.directed, self.indptr, self.indices, features)


@dataclass(frozen=True)
class Neighborhood:
    """
    Per-node neighbor multisets used by one aggregation layer.

    Every node has at least one entry (isolated nodes list themselves), so
    segment reductions over `indptr` never see an empty segment.
    """

    indptr: np.ndarray
    indices: np.ndarray
    _mean: sp.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.indptr) - 1
        counts = np.diff(self.indptr)
        weights = np.repeat(1.0 / counts, counts)
        mean = sp.csr_matrix((weights, self.indices, self.indptr), shape=(n, n))
        object.__setattr__(self, "_mean", mean)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def mean_operator(self) -> sp.csr_matrix:
        """Row-stochastic matrix M with (M @ H)[v] = mean of H over v's entries"""
        return self._mean

    def members(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]
