import numpy as np
import pytest

from storage.embedding_io import read_embedding_text, write_embedding_text
from utils.exceptions import DataSourceError, FormatError


def test_values_survive_exactly(tmp_path, rng):
    vectors = rng.normal(size=(4, 3)) * np.array([1e-300, 1.0, 1e300])
    path = tmp_path / "emb.vec"
    write_embedding_text(path, ["0", "1", "2", "3"], vectors)

    tokens, loaded = read_embedding_text(path)
    assert tokens == ["0", "1", "2", "3"]
    np.testing.assert_array_equal(loaded, vectors)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "4 3"


def test_bad_header(tmp_path):
    path = tmp_path / "emb.vec"
    path.write_text("four 3\na 1 2 3\n", encoding="utf-8")
    with pytest.raises(FormatError, match=":1:"):
        read_embedding_text(path)


def test_row_width_mismatch(tmp_path):
    path = tmp_path / "emb.vec"
    path.write_text("2 3\na 1 2 3\nb 1 2\n", encoding="utf-8")
    with pytest.raises(FormatError, match=":3:"):
        read_embedding_text(path)


def test_non_numeric_value(tmp_path):
    path = tmp_path / "emb.vec"
    path.write_text("1 2\na 1 x\n", encoding="utf-8")
    with pytest.raises(FormatError):
        read_embedding_text(path)


def test_first_duplicate_token_wins(tmp_path):
    path = tmp_path / "emb.vec"
    path.write_text("3 2\na 1 2\nb 3 4\na 5 6\n", encoding="utf-8")
    tokens, matrix = read_embedding_text(path)
    assert tokens == ["a", "b"]
    np.testing.assert_array_equal(matrix, [[1, 2], [3, 4]])


def test_writer_validates_input(tmp_path):
    with pytest.raises(FormatError):
        write_embedding_text(tmp_path / "emb.vec", ["a"], np.zeros((2, 2)))
    with pytest.raises(FormatError):
        write_embedding_text(tmp_path / "emb.vec", ["a b"], np.zeros((1, 2)))


def test_missing_file(tmp_path):
    with pytest.raises(DataSourceError):
        read_embedding_text(tmp_path / "absent.vec")
