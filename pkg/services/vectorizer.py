"""
Abstract vectorization: hashed character n-grams or a pretrained token table
"""
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

import numpy as np

from models.configs import VectorizerConfig
from models.graph import FeatureMatrix
from storage.embedding_io import read_embedding_text, write_embedding_text
from utils.exceptions import ConfigurationError, DataSourceError, FormatError
from utils.helpers import fnv1a_64
from logs.log import logger


TokenTable = Dict[str, np.ndarray]


def load_pretrained_vectors(table_path: Union[str, Path]) -> TokenTable:
    """
    Load a token -> vector table from the embedding text format

    Raises:
        FormatError: If a row's width differs from the header dimension
    """
    tokens, matrix = read_embedding_text(table_path)
    logger.info("Loaded %d pretrained vectors (dim %d) from %s", len(tokens), matrix.shape[1], table_path)
    return {token: matrix[i] for i, token in enumerate(tokens)}


def save_pretrained_vectors(table_path: Union[str, Path], table: TokenTable) -> None:
    """Write a token table in the embedding text format (insertion order kept)"""
    tokens = list(table)
    dim = len(next(iter(table.values()))) if table else 0
    matrix = np.vstack([table[t] for t in tokens]) if tokens else np.zeros((0, dim))
    write_embedding_text(table_path, tokens, matrix)


def _l2_normalize(vec: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def hashed_slot(ngram: str, dim: int):
    """
    Slot and sign of one n-gram

    h = FNV-1a-64(ngram); slot = h mod dim; sign = +1 if the top bit
    of h is 0 else -1.
    """
    h = fnv1a_64(ngram)
    sign = 1.0 if (h >> 63) == 0 else -1.0
    return h % dim, sign


class AbstractVectorizer:
    """Stateless (after construction) abstract -> vector mapping"""

    def __init__(self, config: VectorizerConfig, table: Optional[TokenTable] = None):
        """
        Args:
            config: Vectorizer settings
            table: Preloaded token table for pretrained mode (read from
                config.table_path when omitted)

        Raises:
            ConfigurationError: If the pretrained table is unreadable or its
                dimension differs from config.dim
        """
        self.config = config
        self.table: Optional[TokenTable] = None
        if config.mode == "pretrained-table":
            if table is None:
                try:
                    table = load_pretrained_vectors(config.table_path)
                except (DataSourceError, FormatError) as exc:
                    raise ConfigurationError(f"Unusable pretrained table {config.table_path}: {exc}") from exc
            dims = {len(v) for v in table.values()}
            if dims and dims != {config.dim}:
                raise ConfigurationError(
                    f"Pretrained table dimension {sorted(dims)} differs from configured dim {config.dim}"
                )
            self.table = table

    def vectorize(self, text: str) -> np.ndarray:
        """L2-normalized vector of length config.dim (zero vector for no signal)"""
        if self.config.mode == "pretrained-table":
            return self._pretrained(text)
        return self._hashed(text)

    def _hashed(self, text: str) -> np.ndarray:
        dim = self.config.dim
        vec = np.zeros(dim, dtype=np.float64)
        clean = " ".join(text.lower().split())
        low, high = self.config.ngram_range
        for n in range(low, high + 1):
            for start in range(len(clean) - n + 1):
                slot, sign = hashed_slot(clean[start:start + n], dim)
                vec[slot] += sign
        return _l2_normalize(vec)

    def _pretrained(self, text: str) -> np.ndarray:
        # sorted so the float sum does not depend on token order
        hits = [self.table[t] for t in sorted(text.lower().split()) if t in self.table]
        if not hits:
            return np.zeros(self.config.dim, dtype=np.float64)
        return _l2_normalize(np.mean(hits, axis=0))

    def vectorize_corpus(self, texts: Iterable[str]) -> FeatureMatrix:
        """Stack one vector per text into a feature matrix"""
        rows = [self.vectorize(t) for t in texts]
        values = np.vstack(rows) if rows else np.zeros((0, self.config.dim))
        return FeatureMatrix(values)


def vectorize_abstract(text: str, config: VectorizerConfig, table: Optional[TokenTable] = None) -> np.ndarray:
    """Vectorize one abstract with a throwaway AbstractVectorizer"""
    return AbstractVectorizer(config, table).vectorize(text)
