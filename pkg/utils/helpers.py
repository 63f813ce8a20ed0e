"""
Utility functions for normalization, seeding, hashing and config files
"""
import hashlib
import os
import re
import unicodedata
from datetime import date, datetime
from email.utils import parsedate_to_datetime
from functools import lru_cache
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from utils.exceptions import ConfigurationError


class TextNormalizer:
    """Normalize free text coming from the raw metadata"""

    @staticmethod
    def clean_string(value: Optional[str], max_length: Optional[int] = None) -> Optional[str]:
        """Strip and collapse whitespace; empty strings become None"""
        if not value:
            return None

        cleaned = " ".join(str(value).split())

        if max_length and len(cleaned) > max_length:
            cleaned = cleaned[:max_length]

        return cleaned if cleaned else None

    @staticmethod
    def strip_diacritics(value: str) -> str:
        """Remove combining marks after NFKD decomposition"""
        decomposed = unicodedata.normalize("NFKD", value)
        return "".join(c for c in decomposed if not unicodedata.combining(c))

    @staticmethod
    def normalize_name(name: str) -> str:
        """
        Normalize an author name into its identity key

        Lowercased, diacritics stripped, whitespace collapsed. No initials
        merging: "A. Author" and "Alice Author" stay distinct.
        """
        stripped = TextNormalizer.strip_diacritics(name)
        return " ".join(stripped.lower().split())

    @staticmethod
    def parse_date(date_str: Optional[str]) -> Optional[date]:
        """
        Parse a metadata date string to a date object
        Supports RFC 2822 mail headers plus the common numeric formats
        """
        if not date_str:
            return None

        date_str = str(date_str).strip()
        # Trailing "(15kb)" size annotations appear in the raw headers
        date_str = re.sub(r"\s*\([^)]*\)\s*$", "", date_str)

        try:
            return parsedate_to_datetime(date_str).date()
        except (TypeError, ValueError, IndexError):
            pass

        formats = [
            "%Y-%m-%d",
            "%d %b %Y",
            "%d-%b-%Y",
            "%d/%m/%Y",
        ]

        for fmt in formats:
            try:
                return datetime.strptime(date_str, fmt).date()
            except ValueError:
                continue

        return None


class SeedDeriver:
    """
    Derive per-purpose seeds from the master seed
    derive(seed, label) = first 8 bytes of SHA-256("seed:label"), big-endian
    """

    @staticmethod
    def derive(seed: int, label: str) -> int:
        digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big")

    @staticmethod
    def rng(seed: int, label: str) -> np.random.Generator:
        """Seeded generator for one purpose"""
        return np.random.default_rng(SeedDeriver.derive(seed, label))


derive_seed = SeedDeriver.derive


FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


@lru_cache(maxsize=1 << 20)
def fnv1a_64(text: str) -> int:
    """64-bit FNV-1a over the UTF-8 bytes of text"""
    h = FNV64_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


class IssnValidator:
    """ISSN normalization and mod-11 check digit validation"""

    _PATTERN = re.compile(r"^\d{7}[\dX]$")

    @staticmethod
    def normalize(issn: str) -> str:
        """Compact 8-character form: hyphens and spaces removed, upper-case X"""
        return re.sub(r"[\s-]", "", str(issn)).upper()

    @staticmethod
    def check_digit(first_seven: str) -> str:
        """Check character for the first seven digits (weights 8..2)"""
        total = sum(int(d) * w for d, w in zip(first_seven, range(8, 1, -1)))
        check = (11 - total % 11) % 11
        return "X" if check == 10 else str(check)

    @staticmethod
    def is_valid(issn: str) -> bool:
        compact = IssnValidator.normalize(issn)
        if not IssnValidator._PATTERN.match(compact):
            return False
        return IssnValidator.check_digit(compact[:7]) == compact[7]

    @staticmethod
    def display(issn: str) -> str:
        compact = IssnValidator.normalize(issn)
        return f"{compact[:4]}-{compact[4:]}"


def parse_kv_config(path: Path) -> Dict[str, str]:
    """
    Parse a flat `key = value` config file

    Args:
        path: Config file; `#` starts a comment, blank lines ignored

    Returns:
        Mapping of keys (dashes folded to underscores) to raw string values

    Raises:
        ConfigurationError: If the file is unreadable or a line has no '='
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"Cannot read config file {path}: {exc}") from exc

    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


class OutputDirLock:
    """
    Exclusive lock file guarding an output directory across concurrent commands
    """

    LOCK_NAME = ".coauthornet.lock"

    def __init__(self, out_dir: Path):
        self.path = Path(out_dir) / self.LOCK_NAME
        self._fd: Optional[int] = None

    def __enter__(self) -> "OutputDirLock":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as exc:
            raise ConfigurationError(
                f"Output directory {self.path.parent} is locked by another command "
                f"(remove {self.path} if no command is running)"
            ) from exc
        os.write(self._fd, str(os.getpid()).encode("ascii"))
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass
