"""
Journal metadata: ISSN lookup and bibliometric metrics tables
"""
import io
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Union

import pandas as pd
import requests
from pydantic import ValidationError

from config import settings
from models.records import AuthorTable, JournalMetrics, PaperRecord
from utils.exceptions import ConfigurationError, DataSourceError, MetricsUnavailableError, SchemaError
from utils.helpers import IssnValidator
from logs.log import logger


METRICS_COLUMNS = ("issn", "quartile", "h_index", "impact_factor")


def load_issn_lookup(path: Union[str, Path]) -> Dict[str, str]:
    """
    Load a `normalized-journal-prefix<TAB>ISSN` lookup table

    Raises:
        ConfigurationError: If the file is unreadable, a line is malformed
            or an ISSN fails its check digit
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigurationError(f"Cannot read ISSN lookup table {path}: {exc}") from exc

    table: Dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ConfigurationError(f"{path}:{lineno}: expected 'prefix<TAB>ISSN'")
        prefix = " ".join(parts[0].lower().split())
        issn = parts[1].strip()
        if not IssnValidator.is_valid(issn):
            raise ConfigurationError(f"{path}:{lineno}: invalid ISSN {issn!r} for {prefix!r}")
        table[prefix] = IssnValidator.normalize(issn)

    logger.info("Loaded %d journal prefixes from %s", len(table), path)
    return table


def extract_issn(journal_ref: Optional[str], lookup: Mapping[str, str]) -> Optional[str]:
    """
    ISSN of the longest lookup prefix matching the journal reference

    Args:
        journal_ref: Raw journal reference (may be None)
        lookup: Normalized prefix -> compact ISSN

    Returns:
        Compact 8-character ISSN or None when nothing matches
    """
    if not journal_ref or not journal_ref.strip():
        return None
    text = " ".join(journal_ref.lower().split())
    best: Optional[str] = None
    for prefix in lookup:
        if text.startswith(prefix) and (best is None or len(prefix) > len(best)):
            best = prefix
    return lookup[best] if best is not None else None


def load_journal_metrics(source: Union[str, Path, io.StringIO]) -> Dict[str, JournalMetrics]:
    """
    Load `issn,quartile,h_index,impact_factor` rows

    Args:
        source: CSV path or text buffer (header row required)

    Returns:
        Compact ISSN -> JournalMetrics; later duplicate rows win

    Raises:
        DataSourceError: If the table cannot be read
        SchemaError: If a required column is missing
    """
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise SchemaError(f"Metrics table {source} has no header row")
    except (OSError, pd.errors.ParserError) as exc:
        raise DataSourceError(f"Cannot read metrics table {source}: {exc}") from exc

    frame.columns = [c.strip().lower() for c in frame.columns]
    missing = [c for c in METRICS_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(f"Metrics table is missing column(s): {', '.join(missing)}")

    metrics: Dict[str, JournalMetrics] = {}
    for row_no, row in enumerate(frame[list(METRICS_COLUMNS)].itertuples(index=False), start=2):
        try:
            entry = JournalMetrics(
                issn=row.issn.strip(),
                quartile=row.quartile,
                h_index=int(float(row.h_index or 0)),
                impact_factor=float(row.impact_factor or 0.0),
            )
        except (ValidationError, ValueError) as exc:
            logger.warning("Metrics row %d skipped (%s): %s", row_no, row.issn, str(exc).splitlines()[0])
            continue
        if entry.issn in metrics:
            logger.warning("Duplicate metrics for ISSN %s at row %d; keeping the later row",
                           IssnValidator.display(entry.issn), row_no)
        metrics[entry.issn] = entry

    logger.info("Loaded metrics for %d journals", len(metrics))
    return metrics


class JournalMetricsClient:
    """Cache-first download of the journal rankings table"""

    def __init__(self, cache_path: Union[str, Path], offline: bool = False):
        """
        Args:
            cache_path: Where the downloaded table is persisted;
                overridden by the COAUTHORNET_CACHE environment setting
            offline: Never touch the network when True
        """
        self.cache_path = Path(settings.COAUTHORNET_CACHE or cache_path)
        self.offline = offline

    def fetch(self, endpoint: Optional[str]) -> Dict[str, JournalMetrics]:
        """
        Download the rankings table, persist it, then parse it

        Falls back to the cached copy on network failure.

        Raises:
            MetricsUnavailableError: If neither the network nor the cache is usable
        """
        if endpoint and not self.offline:
            try:
                response = requests.get(endpoint, timeout=settings.HTTP_TIMEOUT)
                response.raise_for_status()
                self.cache_path.parent.mkdir(parents=True, exist_ok=True)
                self.cache_path.write_bytes(response.content)
                logger.info("Downloaded journal metrics from %s to %s", endpoint, self.cache_path)
            except requests.RequestException as exc:
                logger.warning("Journal metrics download failed (%s); trying cache %s", exc, self.cache_path)

        if not self.cache_path.exists():
            raise MetricsUnavailableError(
                f"Journal metrics unavailable: no network result and no cache at {self.cache_path}"
            )
        return load_journal_metrics(self.cache_path)


def fetch_journal_metrics(
    endpoint: Optional[str],
    cache_path: Union[str, Path],
    offline: bool = False,
) -> Dict[str, JournalMetrics]:
    """Fetch metrics through JournalMetricsClient"""
    return JournalMetricsClient(cache_path, offline=offline).fetch(endpoint)


def best_author_metrics(
    papers: Sequence[PaperRecord],
    author_table: AuthorTable,
    lookup: Mapping[str, str],
    metrics: Mapping[str, JournalMetrics],
) -> Dict[int, JournalMetrics]:
    """
    Best journal (quartile, then impact factor) each author published in

    Informational only; authors without a resolvable journal are absent.
    """
    by_id = {p.paper_id: p for p in papers}
    paper_metrics = []
    for pid in author_table.paper_ids:
        paper = by_id.get(pid)
        issn = extract_issn(paper.journal_ref, lookup) if paper is not None else None
        paper_metrics.append(metrics.get(issn) if issn else None)

    best: Dict[int, JournalMetrics] = {}
    for author in range(len(author_table)):
        candidates = [paper_metrics[node] for node in author_table.papers_of(author) if paper_metrics[node]]
        if candidates:
            best[author] = min(candidates, key=lambda m: m.rank_key())
    return best
