"""
Pipeline runner - orchestrates ingest, embedding, training, evaluation and
recommendation over one output directory
"""
import difflib
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Callable, List, Optional

import pandas as pd

from models.evaluation import EdgeSplit, MetricsReport
from models.graph import FeatureMatrix
from models.params import EmbeddingMatrix, LinkModelParams
from models.records import Recommendation
from models.run_config import ARTICLE_METHODS, RunConfig
from services.evaluation import (
    AGGREGATOR_LABELS,
    METHOD_LABELS,
    REFERENCE_ROWS,
    compute_metrics,
    degree_product_scores,
    results_table,
    split_edges,
)
from services.gradcheck import GradcheckRow, format_rows, run_gradcheck
from services.graph import read_edge_list
from services.ingest import (
    build_citation_graph,
    derive_interest_features,
    filter_anonymous,
    parse_paper_metadata,
    reconstruct_coauthorship,
)
from services.journals import best_author_metrics, fetch_journal_metrics, load_issn_lookup, load_journal_metrics
from services.linkpred import (
    OPERATORS,
    augment_author_features,
    evaluate_link_model,
    message_passing_graph,
    recommend,
    train_link_model,
)
from services.sage import sage_forward, train_sage_unsupervised
from services.skipgram import train_attri2vec, train_node2vec
from services.synthetic import SbmConfig, synthetic_bundle
from services.vectorizer import AbstractVectorizer
from storage.artifacts import PAPER_COLUMNS, ArtifactStore, IngestBundle, read_feature_matrix, write_feature_matrix
from storage.checkpoint import read_checkpoint, write_checkpoint
from utils.exceptions import AuthorLookupError, ConfigurationError, DataSourceError, EmptyCorpusError, MetricsUnavailableError
from utils.helpers import TextNormalizer
from logs.log import logger


CHECKPOINT_NAME = "model.ckpt"
FEATURES_NAME = "author_features.vec"


@dataclass
class TrainResult:
    params: LinkModelParams
    split: EdgeSplit
    features: FeatureMatrix
    directory: Path


class PipelineRunner:
    """Runs the commands of one configuration against its output directory"""

    def __init__(self, config: RunConfig, out: Optional[Callable[[str], None]] = None):
        """
        Initialize runner

        Args:
            config: Validated run configuration
            out: Sink for user-facing output lines (print by default)
        """
        self.config = config
        self.store = ArtifactStore(config.out_dir)
        self.out = out or print

    # Ingest

    def ingest(self) -> IngestBundle:
        """
        Parse the corpus, rebuild the co-authorship network and persist the
        ingest artifacts

        Raises:
            ConfigurationError: If the metadata or edge-list path is missing
        """
        cfg = self.config
        cfg.require_paths("metadata", "edges")

        logger.info("Starting ingest from %s", cfg.metadata)
        corpus = parse_paper_metadata(cfg.metadata)
        papers = filter_anonymous(corpus.records)
        coauthor, table = reconstruct_coauthorship(papers)

        vectorizer = AbstractVectorizer(cfg.vectorizer_config())
        paper_features = vectorizer.vectorize_corpus(p.abstract for p in papers)
        citation, dropped_edges = build_citation_graph(
            papers, read_edge_list(cfg.edges), directed=True, features=paper_features,
        )
        interests = derive_interest_features(papers, table, cfg.interest_dim)

        frame = pd.DataFrame(
            [
                {
                    "node_id": i, "paper_id": p.paper_id, "title": p.title,
                    "journal_ref": p.journal_ref or "", "date": p.date.isoformat() if p.date else "",
                }
                for i, p in enumerate(papers)
            ],
            columns=PAPER_COLUMNS,
        )
        bundle = IngestBundle(frame, table, coauthor, citation, paper_features, interests)
        self.store.write_ingest(bundle)
        self._ingest_journal_metrics(papers, table)

        self.out(
            f"papers: {len(papers)}  malformed: {corpus.skipped}  anonymous dropped: {len(corpus.records) - len(papers)}  "
            f"authors: {len(table)}  collaborations: {coauthor.num_edges}  "
            f"citations: {citation.num_edges}  citations dropped: {dropped_edges}"
        )
        return bundle

    def _ingest_journal_metrics(self, papers, table) -> None:
        cfg = self.config
        if cfg.lookup_table is None or (cfg.metrics_table is None and cfg.metrics_url is None):
            logger.info("No journal lookup/metrics configured; skipping journal metrics")
            return
        cfg.require_paths("lookup_table")
        lookup = load_issn_lookup(cfg.lookup_table)
        if cfg.metrics_table is not None:
            cfg.require_paths("metrics_table")
            metrics = load_journal_metrics(cfg.metrics_table)
        else:
            try:
                metrics = fetch_journal_metrics(cfg.metrics_url, cfg.metrics_cache, offline=cfg.offline)
            except MetricsUnavailableError as exc:
                logger.warning("Journal metrics unavailable, author metrics left unknown: %s", exc)
                return
        best = best_author_metrics(papers, table, lookup, metrics)
        self.store.write_author_metrics(best)
        logger.info("Journal metrics attached to %d of %d authors", len(best), len(table))

    def gen_synthetic(self, sbm: SbmConfig) -> IngestBundle:
        """Write SBM ingest artifacts in place of a parsed corpus"""
        bundle = synthetic_bundle(sbm)
        self.store.write_ingest(bundle)
        self.out(
            f"authors: {bundle.coauthor_graph.n}  collaborations: {bundle.coauthor_graph.num_edges}  "
            f"interest slots: {bundle.interests.dim}  graph seed: {sbm.graph_seed}"
        )
        return bundle

    # Article embeddings

    def embed(self) -> Optional[EmbeddingMatrix]:
        """
        Train the configured article-embedding method on the citation graph

        Returns:
            The paper embeddings, or None for method "none"

        Raises:
            EmptyCorpusError: If the ingest artifacts hold no papers
        """
        cfg = self.config
        method = cfg.article_method
        if method == "none":
            self.out("article method 'none': no paper embeddings; author features are the interests only")
            return None

        bundle = self.store.read_ingest(respect_direction=cfg.respect_direction)
        g, X = bundle.citation_graph, bundle.paper_features
        if g.n == 0:
            raise EmptyCorpusError("Ingest artifacts hold no papers to embed (synthetic data supports method 'none')")

        logger.info("Embedding %d papers with %s", g.n, method)
        if method == "abstracts-only":
            embeddings = EmbeddingMatrix.dense(X.values)
        elif method == "node2vec":
            embeddings = train_node2vec(g, cfg.walk_config(), cfg.embedding_train_config(), cfg.seed, cfg.threads)
        elif method == "attri2vec":
            embeddings, _ = train_attri2vec(
                g, X, cfg.walk_config(), cfg.embedding_train_config(), cfg.seed, cfg.threads,
            )
        else:
            sage_cfg = cfg.article_sage_config()
            params = train_sage_unsupervised(
                g, X, sage_cfg, cfg.walk_config(), cfg.embedding_train_config(), cfg.seed, cfg.threads,
            )
            embeddings = sage_forward(g, X, params)

        path = self.store.write_embedding(method, embeddings, {"method": method, "config": cfg.manifest()})
        self.out(f"embedded {len(embeddings)} papers with {method} (dim {embeddings.dim}) -> {path}")
        return embeddings

    # Link model

    def train(self, resume: bool = False) -> TrainResult:
        """
        Build author features, split the co-authorship edges and fit the
        link model; persists split, features, checkpoint and history

        Args:
            resume: Continue from the checkpoint of this configuration

        Raises:
            DataSourceError: If the embeddings of the article method are missing
            FormatError: If the checkpoint to resume from is corrupted
            ConsistencyError: If the resumed checkpoint belongs to another split
        """
        cfg = self.config
        bundle = self.store.read_ingest(respect_direction=cfg.respect_direction)
        paper_embeddings = None
        if cfg.article_method != "none":
            if not self.store.embedding_path(cfg.article_method).exists():
                raise DataSourceError(
                    f"No {cfg.article_method} embeddings in {self.store.embed_dir}; run embed first"
                )
            paper_embeddings = self.store.read_embedding(cfg.article_method)

        features = augment_author_features(bundle.interests, bundle.author_table, paper_embeddings, cfg.pooling)
        split = split_edges(bundle.coauthor_graph, cfg.split_ratio, cfg.seed, cfg.negative_strategy)

        directory = self.store.train_dir(cfg.run_tag())
        checkpoint = directory / CHECKPOINT_NAME
        initial = None
        if resume:
            if not checkpoint.exists():
                raise DataSourceError(f"Cannot resume: no checkpoint at {checkpoint}")
            initial, header = read_checkpoint(checkpoint)
            if header.split_seed is not None:
                split.check_seed(header.split_seed)
            logger.info("Resuming from %s", checkpoint)

        params, history = train_link_model(
            bundle.coauthor_graph, features, split, cfg.link_train_config(), cfg.seed, initial=initial,
        )

        self.store.write_split(directory, split)
        write_feature_matrix(directory / FEATURES_NAME, features)
        write_checkpoint(checkpoint, params, split_seed=split.seed, run_config=cfg.manifest())
        self.store.write_history(directory, history)

        if history:
            last = history[-1]
            self.out(
                f"trained {cfg.run_tag()}: {len(history)} epochs, final train loss {last.train_loss:.6f}, "
                f"best val AUC {max(h.val_auc_roc for h in history):.4f}"
            )
        else:
            self.out(f"trained {cfg.run_tag()}: 0 epochs, checkpoint holds the initialization")
        return TrainResult(params, split, features, directory)

    def _load_model(self, checkpoint: Optional[Path]):
        directory = self.store.train_dir(self.config.run_tag())
        params, header = read_checkpoint(checkpoint or directory / CHECKPOINT_NAME)
        features = read_feature_matrix(directory / FEATURES_NAME)
        return params, header, features, directory

    def evaluate(self, checkpoint: Optional[Path] = None) -> MetricsReport:
        """
        Score the test partition and append the row to the results CSV

        Raises:
            ConsistencyError: If the checkpoint was trained on another split
        """
        params, header, features, directory = self._load_model(checkpoint)
        split = self.store.read_split(directory)
        if header.split_seed is not None:
            split.check_seed(header.split_seed)

        report = evaluate_link_model(
            params, features, split, "test",
            article_embedding=METHOD_LABELS[self.config.article_method],
            author_embedding=AGGREGATOR_LABELS[header.aggregator],
        )
        self.store.append_results([report])
        self.out(results_table([report]))
        return report

    def baseline(self) -> MetricsReport:
        """Degree-product scores of the current split's test partition"""
        directory = self.store.train_dir(self.config.run_tag())
        split = self.store.read_split(directory)
        test = split.partition("test")
        n = read_feature_matrix(directory / FEATURES_NAME).rows
        scores = degree_product_scores(message_passing_graph(split, n), test[:, :2])
        return compute_metrics(
            test[:, 2], scores, article_embedding="--", author_embedding="Degree product", operator="--",
        )

    # Recommendation

    def resolve_author(self, author: str, names: List[str]) -> int:
        """
        Author id from an integer id or a (normalized) name

        Raises:
            AuthorLookupError: Listing the closest names when nothing matches
        """
        text = author.strip()
        if text.isdigit() and int(text) < len(names):
            return int(text)
        normalized = TextNormalizer.normalize_name(text)
        if normalized in names:
            return names.index(normalized)
        suggestions = difflib.get_close_matches(normalized, names, n=5)
        raise AuthorLookupError(f"Unknown author {author!r}", suggestions=suggestions)

    def recommend(self, author: str, k: int, checkpoint: Optional[Path] = None) -> List[Recommendation]:
        """
        Print the top-k predicted new collaborators of one author

        Raises:
            ConfigurationError: If k < 1
            AuthorLookupError: If the author cannot be resolved
        """
        if k < 1:
            raise ConfigurationError(f"k must be >= 1, got {k}")
        bundle = self.store.read_ingest(respect_direction=self.config.respect_direction)
        table = bundle.author_table
        u = self.resolve_author(author, table.names)
        params, _, features, _ = self._load_model(checkpoint)

        results = recommend(
            params, bundle.coauthor_graph, features, u, k,
            metrics=self.store.read_author_metrics(), author_table=table,
        )
        if not results:
            self.out(f"{table.name(u)} already collaborates with every reachable author; nothing to recommend")
            return results

        self.out(f"top {len(results)} recommendations for {table.name(u)} (id {u}):")
        for rank, rec in enumerate(results, start=1):
            line = f"{rank:>3}. {rec.author_id:>6}  {rec.name:<30} {rec.probability:.4f}"
            if rec.quartile is not None:
                line += f"  {rec.quartile}  IF {rec.impact_factor:.3f}"
            self.out(line)
        return results

    # Verification

    def gradcheck(self, inject_fault: Optional[str] = None) -> List[GradcheckRow]:
        """Finite-difference check of every model family; raises VerificationError on a breach"""
        rows = run_gradcheck(self.config.seed, inject_fault=inject_fault)
        self.out(format_rows(rows))
        return rows

    # Ablation grid

    def grid_configs(self) -> List[RunConfig]:
        """
        Every (article method, author aggregator, operator, pooling)
        combination; pooling is only varied when papers are embedded
        """
        configs = []
        for method, aggregator, operator in product(ARTICLE_METHODS, ("mean", "maxpool"), OPERATORS):
            for pooling in (("sum",) if method == "none" else ("sum", "mean")):
                configs.append(self.config.model_copy(update={
                    "article_method": method, "author_aggregator": aggregator,
                    "operator": operator, "pooling": pooling,
                }))
        return configs

    def grid(self, methods: Optional[List[str]] = None) -> List[MetricsReport]:
        """
        Run the ablation grid end to end, embedding each article method once

        Args:
            methods: Restrict the grid to these article methods

        Returns:
            One test report per configuration, in grid order
        """
        configs = [c for c in self.grid_configs() if methods is None or c.article_method in methods]
        logger.info("Running ablation grid of %d configurations", len(configs))
        embedded = set()
        reports: List[MetricsReport] = []

        for i, cfg in enumerate(configs, start=1):
            runner = PipelineRunner(cfg, out=lambda _: None)
            if cfg.article_method not in embedded:
                runner.embed()
                embedded.add(cfg.article_method)
            runner.train()
            reports.append(runner.evaluate())
            logger.info("grid %d/%d done: %s", i, len(configs), cfg.run_tag())

        self.out(results_table(reports))
        if reports:
            first = PipelineRunner(configs[0], out=lambda _: None)
            self.out("baseline:")
            self.out(results_table([first.baseline()]))
        self.out("published reference:")
        self.out(results_table(REFERENCE_ROWS))
        return reports
