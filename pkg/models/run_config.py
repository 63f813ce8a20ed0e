"""
Experiment configuration: one flat record per run
"""
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, field_validator

from models.configs import (
    Activation,
    Aggregator,
    EmbeddingTrainConfig,
    LinkTrainConfig,
    OperatorTag,
    SageConfig,
    VectorizerConfig,
    WalkConfig,
    _int_list,
)
from utils.exceptions import ConfigurationError
from utils.helpers import parse_kv_config


ArticleMethod = Literal["none", "abstracts-only", "node2vec", "attri2vec", "graphsage-mean", "graphsage-maxpool"]
ARTICLE_METHODS: Tuple[str, ...] = ("none", "abstracts-only", "node2vec", "attri2vec", "graphsage-mean", "graphsage-maxpool")

PATH_FIELDS = ("metadata", "edges", "metrics_table", "lookup_table", "pretrained_table")


class RunConfig(BaseModel):
    """
    Every knob of a run. Values come from defaults, then a `key = value`
    file, then command-line flags.
    """

    seed: int = Field(default=0, description="master seed; every generator derives from it")
    threads: int = Field(default=1, ge=1, description="worker processes for walk generation")
    offline: bool = Field(default=False, description="never download journal metrics")

    # Paths
    metadata: Optional[Path] = Field(default=None, description="abstract metadata file or directory")
    edges: Optional[Path] = Field(default=None, description="citation edge list (citing cited)")
    metrics_table: Optional[Path] = Field(default=None, description="journal metrics CSV")
    metrics_url: Optional[str] = Field(default=None, description="journal metrics download endpoint")
    metrics_cache: Path = Field(default=Path("journal_metrics_cache.csv"), description="journal metrics cache file")
    lookup_table: Optional[Path] = Field(default=None, description="journal name prefix -> ISSN table")
    out_dir: Path = Field(default=Path("runs"), description="output directory")

    # Ingest
    vectorizer: Literal["hashed-ngrams", "pretrained-table"] = Field(default="hashed-ngrams", description="abstract vectorizer")
    vector_dim: int = Field(default=100, ge=1, description="abstract vector dimension")
    ngram_range: Tuple[int, int] = Field(default=(3, 5), description="character n-gram lengths, e.g. 3,5")
    pretrained_table: Optional[Path] = Field(default=None, description="token vector table for pretrained-table mode")
    interest_dim: int = Field(default=64, ge=1, description="research-interest slots per author")
    respect_direction: bool = Field(default=False, description="keep citation direction for walks and aggregation")
    journal_snapshot_year: Optional[int] = Field(default=None, description="metrics snapshot year (informational)")

    # Article embeddings
    article_method: ArticleMethod = Field(default="graphsage-mean", description="paper embedding method")
    embed_dims: int = Field(default=128, ge=1, description="skip-gram / attri2vec dimension")
    embed_epochs: int = Field(default=5, ge=0, description="article-embedding epochs")
    embed_lr: float = Field(default=0.025, gt=0, description="skip-gram / attri2vec initial learning rate")
    embed_batch: int = Field(default=1024, ge=1, description="pairs per skip-gram minibatch")
    negatives: int = Field(default=5, ge=1, description="negative samples per pair")
    sage_lr: float = Field(default=0.01, gt=0, description="unsupervised GraphSAGE Adam learning rate")
    max_pairs_per_epoch: int = Field(default=20000, ge=1, description="unsupervised GraphSAGE pairs per epoch")
    article_dims: List[int] = Field(default_factory=lambda: [128, 128], description="article GraphSAGE layer dims")
    article_sample_sizes: Optional[List[int]] = Field(default_factory=lambda: [10, 5], description="article GraphSAGE samples per layer")
    article_normalize: bool = Field(default=True, description="L2-normalize article GraphSAGE layers")
    activation: Activation = Field(default="sigmoid", description="GraphSAGE layer activation")

    # Walks
    p: float = Field(default=1.0, gt=0, description="walk return parameter")
    q: float = Field(default=1.0, gt=0, description="walk in-out parameter")
    walk_length: int = Field(default=80, ge=2, description="nodes per walk")
    walks_per_node: int = Field(default=10, ge=1, description="walks started at every node")
    window: int = Field(default=10, ge=1, description="co-occurrence window")

    # Link model
    author_aggregator: Aggregator = Field(default="mean", description="author GraphSAGE aggregator")
    operator: OperatorTag = Field(default="L2", description="link operator")
    pooling: Literal["sum", "mean"] = Field(default="sum", description="pooling of paper embeddings per author")
    link_dims: List[int] = Field(default_factory=lambda: [64, 64], description="author GraphSAGE layer dims")
    link_sample_sizes: Optional[List[int]] = Field(default_factory=lambda: [10, 5], description="author GraphSAGE samples per layer")
    link_normalize: bool = Field(default=False, description="L2-normalize author GraphSAGE layers")
    classifier_hidden: int = Field(default=0, ge=0, description="hidden units before the link logit (0 = none)")
    epochs: int = Field(default=20, ge=0, description="link-model epochs")
    lr: float = Field(default=0.01, gt=0, description="link-model Adam learning rate")
    batch: int = Field(default=512, ge=1, description="link samples per minibatch")

    # Evaluation
    split_ratio: Tuple[int, int, int] = Field(default=(3, 1, 2), description="train:val:test ratio")
    negative_strategy: Literal["uniform", "degree"] = Field(default="uniform", description="negative pair sampling")

    @field_validator("article_dims", "article_sample_sizes", "link_dims", "link_sample_sizes", "ngram_range", "split_ratio", mode="before")
    @classmethod
    def parse_int_lists(cls, value):
        return _int_list(value)

    @field_validator("split_ratio")
    @classmethod
    def positive_ratio(cls, value):
        if any(r < 0 for r in value) or value[0] == 0:
            raise ValueError(f"split ratio needs a positive train share, got {value}")
        return value

    # Loading

    @classmethod
    def load(cls, config_path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        """
        Merge a key-value file and explicit overrides

        Raises:
            ConfigurationError: On unknown keys or invalid values
        """
        values: Dict[str, Any] = {}
        if config_path is not None:
            values.update(parse_kv_config(config_path))
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})

        unknown = sorted(set(values) - set(cls.model_fields))
        if unknown:
            raise ConfigurationError(f"Unknown configuration key(s): {', '.join(unknown)}")
        try:
            return cls(**values)
        except ValidationError as exc:
            first = exc.errors()[0]
            where = ".".join(str(p) for p in first["loc"])
            raise ConfigurationError(f"Invalid configuration value for {where}: {first['msg']}") from exc

    def require_paths(self, *names: str) -> None:
        """
        Raises:
            ConfigurationError: If a named path is unset or does not exist
        """
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise ConfigurationError(f"Configuration key {name!r} is required for this command")
            if name in PATH_FIELDS and not Path(value).exists():
                raise ConfigurationError(f"Path for {name!r} does not exist: {value}")

    # Derived configs

    def vectorizer_config(self) -> VectorizerConfig:
        try:
            return VectorizerConfig(
                mode=self.vectorizer, dim=self.vector_dim, ngram_range=self.ngram_range, table_path=self.pretrained_table,
            )
        except ValidationError as exc:
            raise ConfigurationError(f"Invalid vectorizer configuration: {exc.errors()[0]['msg']}") from exc

    def walk_config(self) -> WalkConfig:
        return WalkConfig(p=self.p, q=self.q, walk_length=self.walk_length, walks_per_node=self.walks_per_node, window=self.window)

    def embedding_train_config(self) -> EmbeddingTrainConfig:
        return EmbeddingTrainConfig(
            dims=self.embed_dims, negatives=self.negatives, epochs=self.embed_epochs, lr=self.embed_lr,
            batch_size=self.embed_batch, sage_lr=self.sage_lr, max_pairs_per_epoch=self.max_pairs_per_epoch,
        )

    def article_sage_config(self) -> SageConfig:
        aggregator = "maxpool" if self.article_method == "graphsage-maxpool" else "mean"
        return self._sage(aggregator, self.article_dims, self.article_sample_sizes, self.article_normalize)

    def link_train_config(self) -> LinkTrainConfig:
        return LinkTrainConfig(
            operator=self.operator,
            sage=self._sage(self.author_aggregator, self.link_dims, self.link_sample_sizes, self.link_normalize),
            classifier_hidden=self.classifier_hidden,
            epochs=self.epochs,
            batch_size=self.batch,
            lr=self.lr,
        )

    def _sage(self, aggregator: str, dims, sample_sizes, normalize: bool) -> SageConfig:
        try:
            return SageConfig(
                aggregator=aggregator, dims=dims, sample_sizes=sample_sizes,
                activation=self.activation, normalize=normalize,
            )
        except ValidationError as exc:
            raise ConfigurationError(f"Invalid GraphSAGE configuration: {exc.errors()[0]['msg']}") from exc

    def run_tag(self) -> str:
        """Directory name of the train artifacts for this configuration"""
        return f"{self.article_method}__{self.author_aggregator}__{self.operator}__{self.pooling}"

    def manifest(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")
