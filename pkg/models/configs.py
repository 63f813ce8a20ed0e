"""
Pydantic models for vectorizer, walk and training configuration
"""
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator


Aggregator = Literal["mean", "maxpool"]
Activation = Literal["sigmoid", "relu", "linear"]
OperatorTag = Literal["L1", "L2", "Hadamard", "Average", "InnerProduct"]


def _int_list(value):
    """Accept '10,5' as well as [10, 5]; empty string means None"""
    if value is None or isinstance(value, (list, tuple)):
        return value
    text = str(value).strip()
    if not text or text.lower() == "none":
        return None
    return [int(v) for v in text.replace(" ", "").split(",") if v]


class VectorizerConfig(BaseModel):
    """Abstract vectorizer settings"""
    mode: Literal["hashed-ngrams", "pretrained-table"] = "hashed-ngrams"
    dim: int = Field(default=100, ge=1)
    ngram_range: Tuple[int, int] = (3, 5)
    table_path: Optional[Path] = None

    @field_validator("ngram_range", mode="before")
    @classmethod
    def parse_range(cls, value):
        parsed = _int_list(value) if isinstance(value, str) else value
        return tuple(parsed) if parsed is not None else (3, 5)

    @model_validator(mode="after")
    def check_consistency(self) -> "VectorizerConfig":
        low, high = self.ngram_range
        if low < 1 or high < low:
            raise ValueError(f"invalid ngram_range {self.ngram_range}")
        if self.mode == "pretrained-table" and self.table_path is None:
            raise ValueError("pretrained-table mode needs table_path")
        return self


class WalkConfig(BaseModel):
    """Second-order random walk settings"""
    p: float = Field(default=1.0, gt=0)
    q: float = Field(default=1.0, gt=0)
    walk_length: int = Field(default=80, ge=2)
    walks_per_node: int = Field(default=10, ge=1)
    window: int = Field(default=10, ge=1)


class SageConfig(BaseModel):
    """GraphSAGE layer stack settings"""
    aggregator: Aggregator = "mean"
    dims: List[int] = Field(default_factory=lambda: [128, 128])
    sample_sizes: Optional[List[int]] = Field(default_factory=lambda: [10, 5])
    activation: Activation = "sigmoid"
    normalize: bool = True

    @field_validator("dims", "sample_sizes", mode="before")
    @classmethod
    def parse_lists(cls, value):
        return _int_list(value)

    @model_validator(mode="after")
    def check_layers(self) -> "SageConfig":
        if not self.dims or any(d < 1 for d in self.dims):
            raise ValueError(f"layer dims must be positive, got {self.dims}")
        if self.sample_sizes is not None and len(self.sample_sizes) != len(self.dims):
            raise ValueError("one sample size per layer required")
        return self


class EmbeddingTrainConfig(BaseModel):
    """Unsupervised article-embedding training settings"""
    dims: int = Field(default=128, ge=1)
    negatives: int = Field(default=5, ge=1)
    epochs: int = Field(default=5, ge=0)
    lr: float = Field(default=0.025, gt=0)
    batch_size: int = Field(default=1024, ge=1)
    sage_lr: float = Field(default=0.01, gt=0)
    max_pairs_per_epoch: int = Field(default=20000, ge=1)


class LinkTrainConfig(BaseModel):
    """Supervised link-model training settings"""
    operator: OperatorTag = "L2"
    sage: SageConfig = Field(default_factory=lambda: SageConfig(dims=[64, 64], normalize=False))
    classifier_hidden: int = Field(default=0, ge=0)
    epochs: int = Field(default=20, ge=0)
    batch_size: int = Field(default=512, ge=1)
    lr: float = Field(default=0.01, gt=0)
