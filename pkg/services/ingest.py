"""
Corpus ingestion: metadata parsing, co-authorship reconstruction and
research-interest features
"""
import re
from collections import Counter
from itertools import combinations
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from pydantic import ValidationError
from sklearn.feature_extraction.text import ENGLISH_STOP_WORDS

from models.graph import FeatureMatrix, Graph
from models.records import AuthorTable, PaperRecord, ParsedCorpus
from services.graph import build_graph
from utils.exceptions import DataSourceError, EmptyCorpusError
from utils.helpers import TextNormalizer
from logs.log import logger


RecordSource = Union[str, Path, Iterable[str]]

_SEPARATOR = re.compile(r"^-{60,}\s*$")
_HEADER = re.compile(r"^([A-Za-z][A-Za-z-]*):\s*(.*)$")
_AUTHOR_SPLIT = re.compile(r",|\s+and\s+|&|;")
_PARENTHETICAL = re.compile(r"\([^()]*\)")
_TOKEN = re.compile(r"[a-z]{3,}")


class MetadataParser:
    """
    Parser for the block-structured abstract metadata

    Blocks are separated by a line of dashes; each block holds `Key: value`
    headers (indented lines continue the previous header), a blank line,
    then the abstract. Lines consisting of `\\\\` count as blank lines.
    """

    def __init__(self):
        self.normalizer = TextNormalizer()

    def parse(self, source: RecordSource) -> ParsedCorpus:
        """
        Parse every record of the source

        Args:
            source: File, directory of files (read in sorted order) or line iterable

        Returns:
            ParsedCorpus with the well-formed records and the skipped count

        Raises:
            DataSourceError: If the source cannot be read
            EmptyCorpusError: If no record is well-formed
        """
        records: List[PaperRecord] = []
        skipped = 0

        for block_no, block in enumerate(self._blocks(self._lines(source)), start=1):
            record = self._parse_block(block, block_no)
            if record is None:
                skipped += 1
            else:
                records.append(record)

        if skipped:
            logger.warning("Skipped %d malformed metadata record(s)", skipped)
        if not records:
            raise EmptyCorpusError("No well-formed paper records found in the metadata source")

        logger.info("Parsed %d paper records (%d skipped)", len(records), skipped)
        return ParsedCorpus(records=records, skipped=skipped)

    def _lines(self, source: RecordSource) -> Iterator[str]:
        if isinstance(source, (str, Path)):
            path = Path(source)
            if path.is_dir():
                files = sorted(p for p in path.rglob("*") if p.is_file())
            else:
                files = [path]
            for file in files:
                try:
                    with file.open("r", encoding="utf-8", errors="replace") as fh:
                        # A file boundary also closes a block
                        yield "-" * 60
                        for line in fh:
                            yield line.rstrip("\n")
                except OSError as exc:
                    raise DataSourceError(f"Cannot read metadata source {file}: {exc}") from exc
        else:
            for line in source:
                yield line.rstrip("\n")

    @staticmethod
    def _blocks(lines: Iterable[str]) -> Iterator[List[str]]:
        block: List[str] = []
        for line in lines:
            if _SEPARATOR.match(line):
                if any(l.strip() for l in block):
                    yield block
                block = []
            else:
                block.append("" if line.strip() == "\\\\" else line)
        if any(l.strip() for l in block):
            yield block

    def _parse_block(self, block: List[str], block_no: int) -> Optional[PaperRecord]:
        headers = {}
        last_key = None
        i = 0
        while i < len(block) and not block[i].strip():
            i += 1

        while i < len(block) and block[i].strip():
            line = block[i]
            match = _HEADER.match(line)
            if match and not line[0].isspace():
                last_key = match.group(1).lower()
                headers[last_key] = match.group(2).strip()
            elif line[0].isspace() and last_key:
                headers[last_key] += " " + line.strip()
            else:
                logger.warning("Record %d: unexpected header line %r", block_no, line[:80])
                return None
            i += 1

        abstract = " ".join(l.strip() for l in block[i:] if l.strip())
        paper_id = self._paper_id(headers.get("paper"))
        if paper_id is None:
            logger.warning("Record %d: missing or unparseable Paper: header", block_no)
            return None

        title = self.normalizer.clean_string(headers.get("title"))
        if not title:
            logger.warning("Record %d (paper %d): missing Title: header", block_no, paper_id)
            return None

        try:
            return PaperRecord(
                paper_id=paper_id,
                title=title,
                abstract=abstract,
                authors=self.split_authors(headers.get("authors", "")),
                journal_ref=self.normalizer.clean_string(headers.get("journal-ref")),
                date=self.normalizer.parse_date(headers.get("date")),
            )
        except ValidationError as ve:
            logger.warning("Record %d (paper %d) rejected: %s", block_no, paper_id, ve.errors()[0]["msg"])
            return None

    @staticmethod
    def _paper_id(value: Optional[str]) -> Optional[int]:
        if not value:
            return None
        digits = re.findall(r"\d+", value)
        return int(digits[-1]) if digits else None

    def split_authors(self, authors: str) -> List[str]:
        """Split an author header on commas / 'and' / '&' into normalized names"""
        text = authors
        while _PARENTHETICAL.search(text):
            text = _PARENTHETICAL.sub(" ", text)
        names: List[str] = []
        for part in _AUTHOR_SPLIT.split(text):
            name = self.normalizer.normalize_name(part)
            if name and name not in names:
                names.append(name)
        return names


def parse_paper_metadata(source: RecordSource) -> ParsedCorpus:
    """Parse a metadata record stream (see MetadataParser)"""
    return MetadataParser().parse(source)


def filter_anonymous(papers: Sequence[PaperRecord]) -> List[PaperRecord]:
    """Drop papers with an empty author list"""
    kept = [p for p in papers if p.authors]
    dropped = len(papers) - len(kept)
    if dropped:
        logger.info("Discarded %d anonymous paper(s)", dropped)
    return kept


def reconstruct_coauthorship(papers: Sequence[PaperRecord]) -> Tuple[Graph, AuthorTable]:
    """
    Restore the co-authorship network from paper author lists

    Args:
        papers: Parsed papers (anonymous ones are discarded here)

    Returns:
        (undirected author graph, author table). Author ids follow the sorted
        normalized names; paper NodeIds index the non-anonymous papers in input order.

    Raises:
        EmptyCorpusError: If the input is empty or every paper is anonymous
    """
    if not papers:
        raise EmptyCorpusError("No papers to reconstruct co-authorship from")

    surviving = filter_anonymous(papers)
    if not surviving:
        raise EmptyCorpusError("Every paper is anonymous; no co-authorship network can be built")

    names = sorted({name for paper in surviving for name in paper.authors})
    index = {name: i for i, name in enumerate(names)}
    author_papers: List[List[int]] = [[] for _ in names]
    edges: List[Tuple[int, int]] = []

    for node, paper in enumerate(surviving):
        ids = [index[name] for name in paper.authors]
        for author in ids:
            author_papers[author].append(node)
        edges.extend(combinations(ids, 2))

    table = AuthorTable(
        names=names,
        author_papers=author_papers,
        paper_ids=[p.paper_id for p in surviving],
    )
    graph = build_graph(edges, len(names), directed=False)
    logger.info(
        "Reconstructed co-authorship graph: %d authors, %d collaborations from %d papers",
        graph.n, graph.num_edges, len(surviving),
    )
    return graph, table


def build_citation_graph(
    papers: Sequence[PaperRecord],
    raw_edges: np.ndarray,
    directed: bool = True,
    features: Optional[FeatureMatrix] = None,
) -> Tuple[Graph, int]:
    """
    Map raw `citing cited` paper ids onto paper NodeIds

    Args:
        papers: Non-anonymous papers; NodeId = position in this list
        raw_edges: (E, 2) array of external paper ids
        directed: Keep citation direction
        features: Optional abstract vectors aligned with papers

    Returns:
        (citation graph, number of edges dropped for unknown/discarded papers)
    """
    node_of = {p.paper_id: i for i, p in enumerate(papers)}
    mapped = []
    dropped = 0
    for src, dst in np.asarray(raw_edges).reshape(-1, 2):
        u = node_of.get(int(src))
        v = node_of.get(int(dst))
        if u is None or v is None:
            dropped += 1
            continue
        mapped.append((u, v))
    if dropped:
        logger.warning("Dropped %d citation edge(s) touching unknown or anonymous papers", dropped)
    return build_graph(mapped, len(papers), directed=directed, features=features), dropped


def journal_prefix(journal_ref: Optional[str]) -> Optional[str]:
    """
    Normalized journal-name prefix: lower-cased text before the first digit

    "Phys.Rev. D55 (1997) 5112" -> "phys.rev. d"
    """
    if not journal_ref:
        return None
    text = " ".join(journal_ref.lower().split())
    match = re.search(r"\d", text)
    head = text[:match.start()] if match else text
    head = head.rstrip(" ,;:(")
    return head or None


def abstract_tokens(text: str) -> Set[str]:
    """Lower-case alphabetic tokens of length >= 3 minus English stop words"""
    return {t for t in _TOKEN.findall(text.lower()) if t not in ENGLISH_STOP_WORDS}


def _paper_interests(paper: PaperRecord) -> Set[Tuple[str, str]]:
    interests = {("token", t) for t in abstract_tokens(paper.abstract)}
    prefix = journal_prefix(paper.journal_ref)
    if prefix:
        interests.add(("journal", prefix))
    return interests


def interest_vocabulary(papers: Sequence[PaperRecord], k: int) -> List[Tuple[str, str]]:
    """
    The k most frequent journal prefixes; if fewer than k exist the remaining
    slots take the most frequent abstract tokens (document frequency).
    Ties break alphabetically.
    """
    if k < 1:
        raise ValueError(f"vocab_size must be >= 1, got {k}")

    journals = Counter(p for p in (journal_prefix(x.journal_ref) for x in papers) if p)
    vocab = [("journal", name) for name, _ in sorted(journals.items(), key=lambda kv: (-kv[1], kv[0]))[:k]]

    if len(vocab) < k:
        tokens = Counter(t for paper in papers for t in abstract_tokens(paper.abstract))
        ranked = sorted(tokens.items(), key=lambda kv: (-kv[1], kv[0]))
        vocab.extend(("token", t) for t, _ in ranked[:k - len(vocab)])

    return vocab


def derive_interest_features(
    papers: Sequence[PaperRecord],
    author_table: AuthorTable,
    vocab_size: int = 64,
) -> FeatureMatrix:
    """
    One-hot research interests per author

    Args:
        papers: Parsed papers (matched to the table through their external ids)
        author_table: Author-paper incidence
        vocab_size: Number of interest slots k

    Returns:
        m x k matrix; entry (i, j) is 1.0 iff some paper of author i exhibits interest j
    """
    by_id = {p.paper_id: p for p in papers}
    table_papers = [by_id[pid] for pid in author_table.paper_ids if pid in by_id]
    vocab = interest_vocabulary(table_papers, vocab_size)
    slot = {term: j for j, term in enumerate(vocab)}

    paper_slots: List[List[int]] = []
    for pid in author_table.paper_ids:
        paper = by_id.get(pid)
        interests = _paper_interests(paper) if paper is not None else set()
        paper_slots.append(sorted(slot[t] for t in interests if t in slot))

    values = np.zeros((len(author_table), vocab_size), dtype=np.float64)
    for author in range(len(author_table)):
        for node in author_table.papers_of(author):
            values[author, paper_slots[node]] = 1.0

    logger.info("Derived %d-slot interest features for %d authors", vocab_size, len(author_table))
    return FeatureMatrix(values)
