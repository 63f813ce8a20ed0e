"""
Embedding text format: header `N D`, then N lines `token v_1 ... v_D`
"""
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from utils.exceptions import DataSourceError, FormatError
from logs.log import logger


def write_embedding_text(path: Union[str, Path], tokens: Sequence[str], vectors: np.ndarray) -> None:
    """
    Write vectors in the embedding text format

    Values use 17 significant digits so a load restores the exact float64.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
        raise FormatError(f"Expected {len(tokens)} rows, got array of shape {vectors.shape}")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{vectors.shape[0]} {vectors.shape[1]}\n")
        for token, row in zip(tokens, vectors):
            if any(c.isspace() for c in token):
                raise FormatError(f"Token {token!r} contains whitespace")
            fh.write(token)
            if len(row):
                fh.write(" ")
                fh.write(" ".join(format(v, ".17g") for v in row))
            fh.write("\n")


def read_embedding_text(path: Union[str, Path]) -> Tuple[List[str], np.ndarray]:
    """
    Read the embedding text format

    Returns:
        (tokens, matrix) in file order; for duplicate tokens only the first row is kept

    Raises:
        DataSourceError: If the file cannot be read
        FormatError: On a bad header or a row whose width differs from D
    """
    path = Path(path)
    try:
        fh = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise DataSourceError(f"Cannot read embedding file {path}: {exc}") from exc

    with fh:
        header = fh.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise FormatError(f"{path}:1: expected header 'N D'")
        count, dim = int(header[0]), int(header[1])

        tokens: List[str] = []
        rows: List[np.ndarray] = []
        seen = set()
        rows_read = 0
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            rows_read += 1
            if len(parts) - 1 != dim:
                raise FormatError(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            token = parts[0]
            if token in seen:
                logger.warning("%s:%d: duplicate token %r ignored (first occurrence wins)", path, lineno, token)
                continue
            try:
                row = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric value ({exc})") from exc
            seen.add(token)
            tokens.append(token)
            rows.append(row)

    if rows_read != count:
        logger.warning("%s: header declares %d rows, found %d", path, count, rows_read)
    matrix = np.vstack(rows) if rows else np.zeros((0, dim), dtype=np.float64)
    return tokens, matrix
