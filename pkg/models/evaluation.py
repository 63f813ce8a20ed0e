"""
Edge split, metrics report and training-history records
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from pydantic import BaseModel, Field

from utils.exceptions import ConsistencyError


@dataclass
class EdgeSplit:
    """
    Train/validation/test link samples

    Each partition is an (k, 3) int64 array of (u, v, label) rows, positives
    first. Positive edges are disjoint across partitions; negatives are
    distinct non-edges, disjoint across partitions.
    """
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    seed: int
    ratio: Tuple[int, int, int] = (3, 1, 2)

    def partition(self, name: str) -> np.ndarray:
        if name not in ("train", "val", "test"):
            raise ValueError(f"Unknown partition {name!r}")
        return getattr(self, name)

    def positives(self, name: str) -> np.ndarray:
        part = self.partition(name)
        return part[part[:, 2] == 1, :2]

    def check_seed(self, seed: int) -> None:
        """
        Raises:
            ConsistencyError: If the split was drawn with another seed
        """
        if self.seed != seed:
            raise ConsistencyError(f"Split was drawn with seed {self.seed}, checkpoint expects {seed}")


class MetricsReport(BaseModel):
    """Classification quality of one configuration on one partition"""
    accuracy: float = Field(ge=0.0, le=1.0)
    auc_roc: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)
    threshold: float = 0.5
    count: int = Field(gt=0)
    article_embedding: str = "--"
    author_embedding: str = "GraphSAGE (Mean)"
    operator: str = "L2"

    def row(self) -> Tuple[str, str, str, float, float, float]:
        return (self.article_embedding, self.author_embedding, self.operator, self.accuracy, self.auc_roc, self.f1)


class EpochRecord(BaseModel):
    """One line of the training history"""
    epoch: int = Field(ge=0)
    train_loss: float
    val_accuracy: float
    val_auc_roc: float
    val_f1: float
