"""
File store for ingest, embedding, split, history and results artifacts
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from models.evaluation import EdgeSplit, EpochRecord, MetricsReport
from models.graph import FeatureMatrix, Graph
from models.params import EmbeddingMatrix
from models.records import AuthorTable, JournalMetrics
from services.evaluation import RESULT_COLUMNS, results_frame
from services.graph import build_graph, read_edge_list, write_edge_list
from storage.embedding_io import read_embedding_text, write_embedding_text
from utils.exceptions import ConsistencyError, DataSourceError, SchemaError
from logs.log import logger


PAPER_COLUMNS = ["node_id", "paper_id", "title", "journal_ref", "date"]
AUTHOR_COLUMNS = ["author_id", "name", "papers"]
SPLIT_COLUMNS = ["partition", "u", "v", "label"]
METRIC_COLUMNS = ["author_id", "issn", "quartile", "h_index", "impact_factor"]


@dataclass
class IngestBundle:
    """Everything the ingest stage hands to the learning stages"""
    papers: pd.DataFrame
    author_table: AuthorTable
    coauthor_graph: Graph
    citation_graph: Graph
    paper_features: FeatureMatrix
    interests: FeatureMatrix


def _read_table(path: Path, columns: Sequence[str], sep: str = "\t") -> pd.DataFrame:
    if not path.exists():
        raise DataSourceError(f"Missing artifact {path}; run the previous command first")
    frame = pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False)
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path} lacks column(s) {', '.join(missing)}")
    return frame


def _write_frame(path: Path, frame: pd.DataFrame, sep: str = ",") -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, sep=sep, index=False, lineterminator="\n")


def write_feature_matrix(path: Path, features: FeatureMatrix) -> None:
    """Node features as embedding text, token = node id"""
    write_embedding_text(path, [str(i) for i in range(features.rows)], features.values)


def read_feature_matrix(path: Path) -> FeatureMatrix:
    """
    Raises:
        ConsistencyError: If the tokens are not the node ids 0..n-1 in order
    """
    tokens, matrix = read_embedding_text(path)
    if tokens != [str(i) for i in range(len(tokens))]:
        raise ConsistencyError(f"{path}: rows must be listed by node id 0..{len(tokens) - 1}")
    return FeatureMatrix(matrix)


def write_embeddings(path: Path, embeddings: EmbeddingMatrix) -> None:
    write_embedding_text(path, [str(int(v)) for v in embeddings.node_ids], embeddings.vectors)


def read_embeddings(path: Path) -> EmbeddingMatrix:
    tokens, matrix = read_embedding_text(path)
    try:
        ids = [int(t) for t in tokens]
    except ValueError as exc:
        raise ConsistencyError(f"{path}: embedding tokens must be integer node ids") from exc
    return EmbeddingMatrix(np.array(ids, dtype=np.int64), matrix)


class ArtifactStore:
    """Reads and writes the artifacts of one output directory"""

    def __init__(self, out_dir: Union[str, Path]):
        self.root = Path(out_dir)

    # Layout

    @property
    def ingest_dir(self) -> Path:
        return self.root / "ingest"

    @property
    def embed_dir(self) -> Path:
        return self.root / "embed"

    def train_dir(self, tag: str) -> Path:
        return self.root / "train" / tag

    @property
    def results_path(self) -> Path:
        return self.root / "results.csv"

    def embedding_path(self, method: str) -> Path:
        return self.embed_dir / f"{method}.vec"

    # Ingest

    def write_ingest(self, bundle: IngestBundle) -> None:
        d = self.ingest_dir
        logger.info("Writing ingest artifacts to %s", d)
        _write_frame(d / "papers.tsv", bundle.papers[PAPER_COLUMNS], sep="\t")
        table = bundle.author_table
        authors = pd.DataFrame({
            "author_id": range(len(table)),
            "name": table.names,
            "papers": [",".join(str(p) for p in table.papers_of(i)) for i in range(len(table))],
        })
        _write_frame(d / "authors.tsv", authors, sep="\t")
        write_edge_list(d / "coauthor_edges.txt", bundle.coauthor_graph.edge_array(), "author_u author_v")
        write_edge_list(
            d / "citation_edges.txt", bundle.citation_graph.edge_array(),
            "citing cited" if bundle.citation_graph.directed else "paper_u paper_v",
        )
        write_feature_matrix(d / "paper_features.vec", bundle.paper_features)
        write_feature_matrix(d / "author_interests.vec", bundle.interests)

    def read_ingest(self, respect_direction: bool = False) -> IngestBundle:
        """
        Load the ingest artifacts; the citation graph is symmetrized unless
        respect_direction is set
        """
        d = self.ingest_dir
        papers = _read_table(d / "papers.tsv", PAPER_COLUMNS)
        authors = _read_table(d / "authors.tsv", AUTHOR_COLUMNS)

        author_papers = [[int(p) for p in cell.split(",") if p] for cell in authors["papers"]]
        table = AuthorTable(
            names=authors["name"].tolist(),
            author_papers=author_papers,
            paper_ids=[int(p) for p in papers["paper_id"]],
        )
        coauthor = build_graph(read_edge_list(d / "coauthor_edges.txt"), len(table), directed=False)
        paper_features = read_feature_matrix(d / "paper_features.vec")
        interests = read_feature_matrix(d / "author_interests.vec")
        citation = build_graph(
            read_edge_list(d / "citation_edges.txt"), len(papers),
            directed=respect_direction, features=paper_features,
        )
        if interests.rows != len(table):
            raise ConsistencyError(f"author_interests.vec has {interests.rows} rows for {len(table)} authors")
        return IngestBundle(papers, table, coauthor, citation, paper_features, interests)

    def write_author_metrics(self, metrics: Mapping[int, JournalMetrics]) -> Path:
        """Best journal metrics per author (informational)"""
        path = self.ingest_dir / "author_metrics.csv"
        frame = pd.DataFrame(
            [{"author_id": a, **m.model_dump()} for a, m in sorted(metrics.items())],
            columns=METRIC_COLUMNS,
        )
        _write_frame(path, frame)
        return path

    def read_author_metrics(self) -> Dict[int, JournalMetrics]:
        """Empty mapping when ingest ran without journal metrics"""
        path = self.ingest_dir / "author_metrics.csv"
        if not path.exists():
            return {}
        frame = _read_table(path, METRIC_COLUMNS, sep=",")
        return {
            int(row["author_id"]): JournalMetrics(
                issn=row["issn"], quartile=row["quartile"],
                h_index=int(row["h_index"]), impact_factor=float(row["impact_factor"]),
            )
            for row in frame.to_dict(orient="records")
        }

    # Embeddings

    def write_embedding(self, method: str, embeddings: EmbeddingMatrix, manifest: dict) -> Path:
        path = self.embedding_path(method)
        write_embeddings(path, embeddings)
        path.with_suffix(".manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8"
        )
        logger.info("Wrote %d %s embeddings (dim %d) to %s", len(embeddings), method, embeddings.dim, path)
        return path

    def read_embedding(self, method: str) -> EmbeddingMatrix:
        return read_embeddings(self.embedding_path(method))

    # Split

    def write_split(self, directory: Path, split: EdgeSplit) -> None:
        frames = []
        for name in ("train", "val", "test"):
            part = split.partition(name)
            frames.append(pd.DataFrame({"partition": name, "u": part[:, 0], "v": part[:, 1], "label": part[:, 2]}))
        _write_frame(directory / "split.csv", pd.concat(frames, ignore_index=True))
        (directory / "split.json").write_text(
            json.dumps({"seed": split.seed, "ratio": list(split.ratio)}) + "\n", encoding="utf-8"
        )

    def read_split(self, directory: Path) -> EdgeSplit:
        frame = _read_table(directory / "split.csv", SPLIT_COLUMNS, sep=",")
        meta_path = directory / "split.json"
        if not meta_path.exists():
            raise DataSourceError(f"Missing artifact {meta_path}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        parts = {}
        for name in ("train", "val", "test"):
            rows = frame[frame["partition"] == name]
            parts[name] = rows[["u", "v", "label"]].astype(np.int64).to_numpy().reshape(-1, 3)
        return EdgeSplit(seed=int(meta["seed"]), ratio=tuple(meta["ratio"]), **parts)

    # History and results

    def write_history(self, directory: Path, history: Sequence[EpochRecord]) -> None:
        columns = list(EpochRecord.model_fields)
        frame = pd.DataFrame([r.model_dump() for r in history], columns=columns)
        directory.mkdir(parents=True, exist_ok=True)
        frame.to_csv(directory / "history.csv", index=False, float_format="%.6f", lineterminator="\n")

    def read_history(self, directory: Path) -> List[EpochRecord]:
        frame = pd.read_csv(directory / "history.csv")
        return [EpochRecord(**row) for row in frame.to_dict(orient="records")]

    def append_results(self, reports: Sequence[MetricsReport], path: Optional[Path] = None) -> Path:
        """Append rows to the results CSV, writing the header on first use"""
        path = path or self.results_path
        path.parent.mkdir(parents=True, exist_ok=True)
        header = not path.exists() or path.stat().st_size == 0
        results_frame(reports).to_csv(
            path, mode="a", header=header, index=False, float_format="%.4f", lineterminator="\n"
        )
        return path

    def read_results(self, path: Optional[Path] = None) -> pd.DataFrame:
        return _read_table(path or self.results_path, RESULT_COLUMNS, sep=",")
