"""
Versioned binary link-model checkpoints

Layout (little-endian):
    bytes 0..7    magic b"CNLPCKPT"
    bytes 8..11   uint32 format version
    bytes 12..15  uint32 header length H
    bytes 16..    H bytes of UTF-8 JSON (CheckpointHeader)
    then one row-major float64 block per entry of header.blocks, in order
"""
import json
import struct
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from models.params import LinkModelParams, SageParams
from utils.exceptions import DataSourceError, DimensionError, FormatError
from logs.log import logger


MAGIC = b"CNLPCKPT"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sII")


class BlockSpec(BaseModel):
    name: str
    shape: List[int]


class CheckpointHeader(BaseModel):
    """Model description stored ahead of the parameter blocks"""
    format_version: int = FORMAT_VERSION
    in_dim: int
    dims: List[int]
    layers: int
    operator: str
    aggregator: str
    activation: str
    normalize: bool
    classifier_hidden: int = 0
    split_seed: Optional[int] = None
    blocks: List[BlockSpec]


def _header_for(params: LinkModelParams, split_seed: Optional[int]) -> CheckpointHeader:
    blocks = [BlockSpec(name=k, shape=list(v.shape)) for k, v in params.as_dict().items()]
    return CheckpointHeader(
        in_dim=params.sage.in_dim,
        dims=params.sage.dims,
        layers=params.sage.layers,
        operator=params.operator,
        aggregator=params.sage.aggregator,
        activation=params.sage.activation,
        normalize=params.sage.normalize,
        classifier_hidden=0 if params.hidden_W is None else params.hidden_W.shape[0],
        split_seed=split_seed,
        blocks=blocks,
    )


def write_checkpoint(
    path: Union[str, Path],
    params: LinkModelParams,
    split_seed: Optional[int] = None,
    run_config: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write the binary checkpoint and a JSON manifest next to it"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _header_for(params, split_seed)
    header_bytes = header.model_dump_json().encode("utf-8")

    with path.open("wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for block in params.as_dict().values():
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())

    manifest = {
        "format_version": FORMAT_VERSION,
        "blocks": {b.name: b.shape for b in header.blocks},
        "config": run_config or {},
    }
    manifest_path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    logger.info("Wrote checkpoint %s (%d blocks)", path, len(header.blocks))
    return path


def manifest_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.json")


def _params_from(header: CheckpointHeader, blocks: Dict[str, np.ndarray]) -> LinkModelParams:
    layers = range(header.layers)
    sage = SageParams(
        aggregator=header.aggregator,
        weights=[blocks[f"sage.W{l}"] for l in layers],
        pool_weights=[blocks[f"sage.pool_W{l}"] for l in layers] if header.aggregator == "maxpool" else [],
        pool_biases=[blocks[f"sage.pool_b{l}"] for l in layers] if header.aggregator == "maxpool" else [],
        activation=header.activation,
        normalize=header.normalize,
    )
    return LinkModelParams(
        sage=sage,
        operator=header.operator,
        clf_w=blocks["clf.w"],
        clf_b=blocks["clf.b"],
        hidden_W=blocks.get("clf.hidden_W"),
        hidden_b=blocks.get("clf.hidden_b"),
    )


def read_checkpoint(path: Union[str, Path]) -> Tuple[LinkModelParams, CheckpointHeader]:
    """
    Load a checkpoint written by write_checkpoint

    Raises:
        DataSourceError: If the file cannot be read
        FormatError: On any structural problem, naming the byte offset
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataSourceError(f"Cannot read checkpoint {path}: {exc}") from exc

    if len(data) < _PREFIX.size:
        raise FormatError(f"{path}: truncated prefix at byte offset {len(data)}")
    magic, version, header_len = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic at byte offset 0")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version} at byte offset 8")

    offset = _PREFIX.size
    if offset + header_len > len(data):
        raise FormatError(f"{path}: header of {header_len} bytes truncated at byte offset {len(data)}")
    try:
        header = CheckpointHeader.model_validate_json(data[offset:offset + header_len])
    except ValidationError as exc:
        raise FormatError(f"{path}: invalid header at byte offset {offset}: {exc.errors()[0]['msg']}") from exc
    offset += header_len

    blocks: Dict[str, np.ndarray] = {}
    for spec in header.blocks:
        size = int(np.prod(spec.shape, dtype=np.int64)) * 8
        if offset + size > len(data):
            raise FormatError(f"{path}: block {spec.name!r} truncated at byte offset {offset}")
        values = np.frombuffer(data, dtype="<f8", count=size // 8, offset=offset)
        if not np.all(np.isfinite(values)):
            raise FormatError(f"{path}: non-finite value in block {spec.name!r} at byte offset {offset}")
        blocks[spec.name] = values.astype(np.float64).reshape(spec.shape)
        offset += size
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes at byte offset {offset}")

    try:
        params = _params_from(header, blocks)
    except KeyError as exc:
        raise FormatError(f"{path}: header lacks block {exc.args[0]!r}") from exc
    except (ValueError, DimensionError) as exc:
        raise FormatError(f"{path}: blocks do not form a valid model: {exc}") from exc
    return params, header
