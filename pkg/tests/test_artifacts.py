import numpy as np
import pandas as pd
import pytest

from models.evaluation import EpochRecord, MetricsReport
from models.graph import FeatureMatrix
from models.params import EmbeddingMatrix
from models.records import AuthorTable, JournalMetrics
from services.evaluation import split_edges
from services.graph import build_graph
from services.synthetic import SbmConfig, synthetic_bundle
from storage.artifacts import IngestBundle, ArtifactStore, read_feature_matrix
from utils.exceptions import ConsistencyError, DataSourceError


@pytest.fixture
def bundle():
    papers = pd.DataFrame({
        "node_id": [0, 1, 2],
        "paper_id": [9201001, 9201002, 9201003],
        "title": ["Strings on tori", 'A "quoted" title', "Black holes"],
        "journal_ref": ["Phys.Rev. D45 (1992) 1234", "", "Nucl.Phys. B300 (1992) 1"],
        "date": ["1992-01-01", "", "1992-01-03"],
    })
    table = AuthorTable(names=["alice smith", "bob jones", "carol white"], author_papers=[[0, 1], [1], [2]],
                        paper_ids=[9201001, 9201002, 9201003])
    return IngestBundle(
        papers=papers,
        author_table=table,
        coauthor_graph=build_graph([(0, 1)], 3, directed=False),
        citation_graph=build_graph([(1, 0), (2, 0)], 3, directed=True),
        paper_features=FeatureMatrix(np.array([[0.6, 0.8], [1.0, 0.0], [0.0, -1.0]])),
        interests=FeatureMatrix(np.eye(3)),
    )


def test_ingest_round_trip(tmp_path, bundle):
    store = ArtifactStore(tmp_path)
    store.write_ingest(bundle)
    loaded = store.read_ingest()

    assert loaded.author_table.names == bundle.author_table.names
    assert loaded.author_table.author_papers == [[0, 1], [1], [2]]
    assert loaded.author_table.paper_ids == [9201001, 9201002, 9201003]
    assert loaded.coauthor_graph.edge_array().tolist() == [[0, 1]]
    assert not loaded.citation_graph.directed
    assert loaded.citation_graph.num_edges == 2
    np.testing.assert_array_equal(loaded.citation_graph.features.values, bundle.paper_features.values)
    np.testing.assert_array_equal(loaded.interests.values, np.eye(3))
    assert loaded.papers["title"].tolist()[1] == 'A "quoted" title'

    directed = store.read_ingest(respect_direction=True)
    assert directed.citation_graph.edge_array().tolist() == [[1, 0], [2, 0]]


def test_synthetic_bundle_round_trip(tmp_path):
    bundle = synthetic_bundle(SbmConfig(blocks=2, block_size=5, p_in=0.9, p_out=0.1, interest_dim=4))
    store = ArtifactStore(tmp_path)
    store.write_ingest(bundle)
    loaded = store.read_ingest()
    assert loaded.author_table.names[0] == "author-0"
    assert loaded.citation_graph.n == 0
    assert loaded.coauthor_graph.edge_array().tolist() == bundle.coauthor_graph.edge_array().tolist()
    np.testing.assert_array_equal(loaded.interests.values, bundle.interests.values)


def test_missing_ingest(tmp_path):
    with pytest.raises(DataSourceError, match="previous command"):
        ArtifactStore(tmp_path).read_ingest()


def test_feature_rows_must_be_ordered(tmp_path):
    path = tmp_path / "features.vec"
    path.write_text("2 1\n1 0.5\n0 0.25\n", encoding="utf-8")
    with pytest.raises(ConsistencyError):
        read_feature_matrix(path)


def test_embeddings_keep_node_ids(tmp_path):
    store = ArtifactStore(tmp_path)
    emb = EmbeddingMatrix(np.array([4, 2]), np.array([[1.0, 2.0], [3.0, 4.0]]))
    store.write_embedding("node2vec", emb, {"seed": 1})
    loaded = store.read_embedding("node2vec")
    assert loaded.node_ids.tolist() == [4, 2]
    np.testing.assert_array_equal(loaded.get(2), [3.0, 4.0])
    assert (tmp_path / "embed" / "node2vec.manifest.json").exists()


def test_split_round_trip(tmp_path, ring_graph):
    store = ArtifactStore(tmp_path)
    split = split_edges(ring_graph, seed=8)
    directory = store.train_dir("none__mean__L2__sum")
    store.write_split(directory, split)
    loaded = store.read_split(directory)
    assert loaded.seed == 8
    assert loaded.ratio == (3, 1, 2)
    for name in ("train", "val", "test"):
        np.testing.assert_array_equal(loaded.partition(name), split.partition(name))


def test_history_round_trip(tmp_path):
    store = ArtifactStore(tmp_path)
    history = [
        EpochRecord(epoch=0, train_loss=0.69, val_accuracy=0.5, val_auc_roc=0.55, val_f1=0.4),
        EpochRecord(epoch=1, train_loss=0.6, val_accuracy=0.6, val_auc_roc=0.65, val_f1=0.5),
    ]
    store.write_history(tmp_path / "run", history)
    assert store.read_history(tmp_path / "run") == history


def test_results_header_written_once(tmp_path):
    store = ArtifactStore(tmp_path)
    report = MetricsReport(accuracy=0.75, auc_roc=0.8, f1=0.7, count=8)
    store.append_results([report])
    store.append_results([report.model_copy(update={"operator": "L1"})])
    lines = store.results_path.read_text(encoding="utf-8").splitlines()
    assert lines == [
        "article_embedding,author_embedding,operator,accuracy,auc_roc,f1",
        "--,GraphSAGE (Mean),L2,0.7500,0.8000,0.7000",
        "--,GraphSAGE (Mean),L1,0.7500,0.8000,0.7000",
    ]
    assert store.read_results()["operator"].tolist() == ["L2", "L1"]


def test_author_metrics_round_trip(tmp_path):
    store = ArtifactStore(tmp_path)
    assert store.read_author_metrics() == {}
    metrics = {
        3: JournalMetrics(issn="0550-3213", quartile="Q1", h_index=250, impact_factor=3.1),
        0: JournalMetrics(issn="0556-2821", quartile="Q1", h_index=200, impact_factor=4.5),
    }
    store.write_author_metrics(metrics)
    assert store.read_author_metrics() == metrics
