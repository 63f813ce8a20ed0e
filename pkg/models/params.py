"""
Learnable parameter containers and embedding matrices
"""
import copy
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from utils.exceptions import DimensionError
from utils.nn import Params, xavier_uniform


@dataclass
class EmbeddingMatrix:
    """Node id -> dense vector map with a fixed dimension"""
    node_ids: np.ndarray
    vectors: np.ndarray
    _row: Dict[int, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.node_ids = np.asarray(self.node_ids, dtype=np.int64)
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or len(self.node_ids) != len(self.vectors):
            raise DimensionError("one vector per node id required")
        self._row = {int(v): i for i, v in enumerate(self.node_ids)}

    @classmethod
    def dense(cls, vectors: np.ndarray) -> "EmbeddingMatrix":
        """Embeddings for nodes 0..n-1"""
        return cls(np.arange(len(vectors)), vectors)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.node_ids)

    def __contains__(self, node: int) -> bool:
        return int(node) in self._row

    def row_of(self, node: int) -> Optional[int]:
        return self._row.get(int(node))

    def get(self, node: int) -> Optional[np.ndarray]:
        row = self.row_of(node)
        return None if row is None else self.vectors[row]


@dataclass
class SkipGramParams:
    """Input (center) and output (context) tables"""
    W_in: np.ndarray
    W_out: np.ndarray

    @classmethod
    def init(cls, n: int, d: int, rng: np.random.Generator) -> "SkipGramParams":
        """word2vec convention: W_in ~ U(-0.5/d, 0.5/d), W_out = 0"""
        return cls(W_in=rng.uniform(-0.5 / d, 0.5 / d, size=(n, d)), W_out=np.zeros((n, d)))

    def as_dict(self) -> Params:
        return {"W_in": self.W_in, "W_out": self.W_out}


@dataclass
class Attri2VecParams:
    """Feature mapping f(x) = sigmoid(W_map x) and the context table"""
    W_map: np.ndarray
    W_out: np.ndarray

    @classmethod
    def init(cls, n: int, d_x: int, d: int, rng: np.random.Generator) -> "Attri2VecParams":
        return cls(W_map=xavier_uniform(rng, d, d_x), W_out=np.zeros((n, d)))

    def as_dict(self) -> Params:
        return {"W_map": self.W_map, "W_out": self.W_out}


@dataclass
class SageParams:
    """
    GraphSAGE layer stack. weights[l] has shape (d_{l+1}, 2 d_l); the max-pool
    aggregator adds pool_weights[l] (d_l, d_l) and pool_biases[l] (d_l,).
    """
    aggregator: str
    weights: List[np.ndarray]
    pool_weights: List[np.ndarray] = field(default_factory=list)
    pool_biases: List[np.ndarray] = field(default_factory=list)
    activation: str = "sigmoid"
    normalize: bool = True

    def __post_init__(self):
        if self.aggregator not in ("mean", "maxpool"):
            raise ValueError(f"Unknown aggregator {self.aggregator!r}")
        for l in range(1, len(self.weights)):
            if self.weights[l].shape[1] != 2 * self.weights[l - 1].shape[0]:
                raise DimensionError(f"Layer {l} input width does not match layer {l - 1} output")
        if self.aggregator == "maxpool" and len(self.pool_weights) != len(self.weights):
            raise DimensionError("max-pool aggregator needs one pool matrix per layer")

    @classmethod
    def init(
        cls,
        in_dim: int,
        dims: Sequence[int],
        aggregator: str,
        rng: np.random.Generator,
        activation: str = "sigmoid",
        normalize: bool = True,
    ) -> "SageParams":
        """Xavier-uniform weights, zero pool biases"""
        weights, pool_w, pool_b = [], [], []
        d_in = in_dim
        for d_out in dims:
            weights.append(xavier_uniform(rng, d_out, 2 * d_in))
            if aggregator == "maxpool":
                pool_w.append(xavier_uniform(rng, d_in, d_in))
                pool_b.append(np.zeros(d_in))
            d_in = d_out
        return cls(aggregator, weights, pool_w, pool_b, activation, normalize)

    @property
    def layers(self) -> int:
        return len(self.weights)

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1] // 2

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def dims(self) -> List[int]:
        return [w.shape[0] for w in self.weights]

    def as_dict(self, prefix: str = "sage.") -> Params:
        """Named views on the parameter arrays (shared memory)"""
        blocks: Params = {}
        for l, W in enumerate(self.weights):
            blocks[f"{prefix}W{l}"] = W
            if self.aggregator == "maxpool":
                blocks[f"{prefix}pool_W{l}"] = self.pool_weights[l]
                blocks[f"{prefix}pool_b{l}"] = self.pool_biases[l]
        return blocks

    def copy(self) -> "SageParams":
        return copy.deepcopy(self)


@dataclass
class LinkModelParams:
    """Two-layer GraphSAGE + link operator + dense classifier"""
    sage: SageParams
    operator: str
    clf_w: np.ndarray
    clf_b: np.ndarray
    hidden_W: Optional[np.ndarray] = None
    hidden_b: Optional[np.ndarray] = None

    def __post_init__(self):
        width = self.operator_dim
        if self.hidden_W is not None:
            if self.hidden_W.shape[1] != width or self.clf_w.shape != (self.hidden_W.shape[0],):
                raise DimensionError("hidden classifier layer does not conform to the operator output")
        elif self.clf_w.shape != (width,):
            raise DimensionError(
                f"classifier input dim {self.clf_w.shape} does not match operator output dim {width}"
            )

    @property
    def operator_dim(self) -> int:
        return 1 if self.operator == "InnerProduct" else self.sage.out_dim

    @classmethod
    def init(
        cls,
        in_dim: int,
        dims: Sequence[int],
        aggregator: str,
        operator: str,
        rng: np.random.Generator,
        activation: str = "sigmoid",
        normalize: bool = False,
        classifier_hidden: int = 0,
    ) -> "LinkModelParams":
        sage = SageParams.init(in_dim, dims, aggregator, rng, activation, normalize)
        width = 1 if operator == "InnerProduct" else sage.out_dim
        hidden_W = hidden_b = None
        if classifier_hidden:
            hidden_W = xavier_uniform(rng, classifier_hidden, width)
            hidden_b = np.zeros(classifier_hidden)
            width = classifier_hidden
        clf_w = xavier_uniform(rng, 1, width).reshape(-1)
        return cls(sage, operator, clf_w, np.zeros(1), hidden_W, hidden_b)

    def as_dict(self) -> Params:
        blocks = self.sage.as_dict()
        if self.hidden_W is not None:
            blocks["clf.hidden_W"] = self.hidden_W
            blocks["clf.hidden_b"] = self.hidden_b
        blocks["clf.w"] = self.clf_w
        blocks["clf.b"] = self.clf_b
        return blocks

    def copy(self) -> "LinkModelParams":
        return copy.deepcopy(self)
