import io

import pytest

from services.ingest import parse_paper_metadata, reconstruct_coauthorship
from services.journals import (
    JournalMetricsClient,
    best_author_metrics,
    extract_issn,
    fetch_journal_metrics,
    load_issn_lookup,
    load_journal_metrics,
)
from utils.exceptions import ConfigurationError, MetricsUnavailableError, SchemaError


def test_lookup_table(lookup_file):
    lookup = load_issn_lookup(lookup_file)
    assert lookup == {"phys.rev. d": "05562821", "nucl.phys. b": "05503213", "phys.lett. b": "03702693"}


def test_lookup_rejects_bad_rows(tmp_path):
    bad_issn = tmp_path / "bad.tsv"
    bad_issn.write_text("phys.rev. d\t0556-2822\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="invalid ISSN"):
        load_issn_lookup(bad_issn)

    no_tab = tmp_path / "notab.tsv"
    no_tab.write_text("phys.rev. d 0556-2821\n", encoding="utf-8")
    with pytest.raises(ConfigurationError, match="notab.tsv:1"):
        load_issn_lookup(no_tab)

    with pytest.raises(ConfigurationError):
        load_issn_lookup(tmp_path / "absent.tsv")


def test_extract_issn_prefers_longest_prefix():
    lookup = {"phys.rev.": "00319007", "phys.rev. d": "05562821"}
    assert extract_issn("Phys.Rev. D45 (1992) 1234", lookup) == "05562821"
    assert extract_issn("Phys.Rev. Lett. 68 (1992) 1", lookup) == "00319007"
    assert extract_issn("Nucl.Phys. B300 (1992) 1", lookup) is None
    assert extract_issn("   ", lookup) is None
    assert extract_issn(None, lookup) is None


def test_load_metrics(metrics_file):
    metrics = load_journal_metrics(metrics_file)
    assert set(metrics) == {"05562821", "05503213", "03702693"}
    prd = metrics["05562821"]
    assert (prd.quartile, prd.h_index, prd.impact_factor) == ("Q1", 200, 4.5)


def test_metrics_rows_are_validated():
    table = io.StringIO(
        "ISSN,Quartile,H_Index,Impact_Factor\n"
        "0556-2821,q2,10,1.0\n"
        "0556-2822,Q1,10,1.0\n"
        "0550-3213,-,,\n"
        "0556-2821,Q1,20,2.0\n"
    )
    metrics = load_journal_metrics(table)
    assert set(metrics) == {"05562821", "05503213"}
    assert metrics["05562821"].quartile == "Q1"
    assert metrics["05503213"].quartile == "unknown"
    assert metrics["05503213"].impact_factor == 0.0


def test_metrics_schema_errors():
    with pytest.raises(SchemaError, match="impact_factor"):
        load_journal_metrics(io.StringIO("issn,quartile,h_index\n0556-2821,Q1,3\n"))
    with pytest.raises(SchemaError):
        load_journal_metrics(io.StringIO(""))


def test_best_author_metrics(corpus_file, lookup_file, metrics_file):
    papers = parse_paper_metadata(corpus_file).records
    _, table = reconstruct_coauthorship(papers)
    best = best_author_metrics(papers, table, load_issn_lookup(lookup_file), load_journal_metrics(metrics_file))

    issn_of = {table.name(a): m.issn for a, m in best.items()}
    assert issn_of == {
        "alice smith": "05562821",
        "bob jones": "05562821",
        "carol white": "05562821",
        "dave brown": "05503213",
        "eve black": "05562821",
        "frank green": "03702693",
    }
    assert best[table.author_id("frank green")].quartile == "Q2"


def test_fetch_downloads_and_caches(tmp_path, metrics_server):
    cache = tmp_path / "cache" / "metrics.csv"
    metrics = fetch_journal_metrics(metrics_server + "/metrics.csv", cache)
    assert len(metrics) == 3
    assert cache.exists()

    # a failing endpoint falls back to the cached copy
    again = fetch_journal_metrics(metrics_server + "/missing.csv", cache)
    assert set(again) == set(metrics)

    offline = JournalMetricsClient(cache, offline=True).fetch(metrics_server + "/metrics.csv")
    assert set(offline) == set(metrics)


def test_offline_without_cache_fails(tmp_path):
    with pytest.raises(MetricsUnavailableError):
        fetch_journal_metrics("http://127.0.0.1:9/metrics.csv", tmp_path / "none.csv", offline=True)
