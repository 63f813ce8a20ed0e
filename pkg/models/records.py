"""
Pydantic models for corpus records and journal metadata
"""
from dataclasses import dataclass, field
import datetime as dt
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator

from utils.helpers import IssnValidator


class PaperRecord(BaseModel):
    """One paper parsed from the metadata corpus"""
    paper_id: int = Field(ge=0)
    title: str
    abstract: str
    authors: List[str] = Field(default_factory=list)
    journal_ref: Optional[str] = None
    date: Optional[dt.date] = None

    @field_validator("abstract")
    @classmethod
    def abstract_not_empty(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("abstract is empty")
        return value


class ParsedCorpus(BaseModel):
    """Parse result: well-formed records plus the count of skipped ones"""
    records: List[PaperRecord]
    skipped: int = 0


Quartile = Literal["Q1", "Q2", "Q3", "Q4", "unknown"]


class JournalMetrics(BaseModel):
    """Bibliometric indicators of one journal"""
    issn: str
    quartile: Quartile = "unknown"
    h_index: int = Field(default=0, ge=0)
    impact_factor: float = Field(default=0.0, ge=0.0)

    @field_validator("issn")
    @classmethod
    def valid_issn(cls, value: str) -> str:
        if not IssnValidator.is_valid(value):
            raise ValueError(f"invalid ISSN {value!r}")
        return IssnValidator.normalize(value)

    @field_validator("quartile", mode="before")
    @classmethod
    def normalize_quartile(cls, value) -> str:
        text = str(value or "").strip().upper()
        return text if text in {"Q1", "Q2", "Q3", "Q4"} else "unknown"

    def rank_key(self):
        """Sort key: better quartile first, then larger impact factor"""
        order = {"Q1": 0, "Q2": 1, "Q3": 2, "Q4": 3, "unknown": 4}
        return (order[self.quartile], -self.impact_factor)


@dataclass
class AuthorTable:
    """
    Bijection between normalized author names and author NodeIds, plus the
    author-paper incidence (paper NodeIds of the citation graph)
    """
    names: List[str]
    author_papers: List[List[int]]
    paper_ids: List[int] = field(default_factory=list)
    _index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._index = {name: i for i, name in enumerate(self.names)}
        if len(self._index) != len(self.names):
            raise ValueError("author names must be unique")
        if len(self.author_papers) != len(self.names):
            raise ValueError("one paper list per author required")

    def __len__(self) -> int:
        return len(self.names)

    def author_id(self, name: str) -> Optional[int]:
        return self._index.get(name)

    def name(self, author_id: int) -> str:
        return self.names[author_id]

    def papers_of(self, author_id: int) -> List[int]:
        return self.author_papers[author_id]


class Recommendation(BaseModel):
    """One ranked co-author candidate"""
    author_id: int = Field(ge=0)
    name: str = ""
    probability: float = Field(ge=0.0, le=1.0)
    quartile: Optional[str] = None
    impact_factor: Optional[float] = None
