import json
import struct

import numpy as np
import pytest

from models.params import LinkModelParams
from storage.checkpoint import manifest_path, read_checkpoint, write_checkpoint
from utils.exceptions import DataSourceError, FormatError


@pytest.fixture(params=[("mean", "L2", 0), ("maxpool", "InnerProduct", 4)])
def params(request, rng):
    aggregator, operator, hidden = request.param
    return LinkModelParams.init(6, [5, 3], aggregator, operator, rng, classifier_hidden=hidden)


def test_round_trip_is_exact(tmp_path, params):
    path = write_checkpoint(tmp_path / "model.ckpt", params, split_seed=17, run_config={"seed": 17})
    loaded, header = read_checkpoint(path)

    assert header.split_seed == 17
    assert (loaded.operator, loaded.sage.aggregator, loaded.sage.dims) == (params.operator, params.sage.aggregator, [5, 3])
    original = params.as_dict()
    restored = loaded.as_dict()
    assert list(restored) == list(original)
    for name, block in original.items():
        np.testing.assert_array_equal(restored[name], block)

    manifest = json.loads(manifest_path(path).read_text(encoding="utf-8"))
    assert manifest["config"] == {"seed": 17}
    assert manifest["blocks"]["sage.W0"] == [5, 12]


@pytest.fixture
def ckpt_bytes(tmp_path, rng):
    params = LinkModelParams.init(4, [3, 2], "mean", "L1", rng)
    path = write_checkpoint(tmp_path / "model.ckpt", params, split_seed=1)
    return path, path.read_bytes()


def test_bad_magic(ckpt_bytes):
    path, data = ckpt_bytes
    path.write_bytes(b"XXXXXXXX" + data[8:])
    with pytest.raises(FormatError, match="byte offset 0"):
        read_checkpoint(path)


def test_unsupported_version(ckpt_bytes):
    path, data = ckpt_bytes
    path.write_bytes(data[:8] + struct.pack("<I", 99) + data[12:])
    with pytest.raises(FormatError, match="byte offset 8"):
        read_checkpoint(path)


@pytest.mark.parametrize("cut", [5, 20, -3])
def test_truncation(ckpt_bytes, cut):
    path, data = ckpt_bytes
    path.write_bytes(data[:cut])
    with pytest.raises(FormatError, match="truncated"):
        read_checkpoint(path)


def test_trailing_bytes(ckpt_bytes):
    path, data = ckpt_bytes
    path.write_bytes(data + b"\x00" * 8)
    with pytest.raises(FormatError, match="trailing"):
        read_checkpoint(path)


def test_non_finite_values(ckpt_bytes):
    path, data = ckpt_bytes
    path.write_bytes(data[:-8] + struct.pack("<d", float("nan")))
    with pytest.raises(FormatError, match="non-finite"):
        read_checkpoint(path)


def test_missing_file(tmp_path):
    with pytest.raises(DataSourceError):
        read_checkpoint(tmp_path / "absent.ckpt")
