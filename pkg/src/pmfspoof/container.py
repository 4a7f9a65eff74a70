"""Binary artifact container shared by model files.

Layout (all integers little-endian):

    bytes 0-3    magic b"PMFB"
    bytes 4-7    format version, uint32
    bytes 8-15   header length in bytes, uint64
    header       UTF-8 JSON: {"kind", "meta", "arrays": [{name, dtype, shape}]}
    payload      raw array buffers, concatenated in header order

Arrays are stored little-endian ("<f8" doubles, "<i8" integers), so a
round trip reproduces every value bit-exactly.
"""

import json
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from .errors import DataError

MAGIC = b"PMFB"
FORMAT_VERSION = 1

_ALLOWED_DTYPES = ("<f8", "<i8")


def save_container(path, kind: str, meta: dict, arrays: Dict[str, np.ndarray]) -> None:
    names = sorted(arrays)
    index = []
    buffers = []
    for name in names:
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype == np.float64:
            dtype = "<f8"
        elif arr.dtype == np.int64:
            dtype = "<i8"
        else:
            raise ValueError(f"array {name!r} has unsupported dtype {arr.dtype}")
        arr = arr.astype(dtype, copy=False)
        index.append({"name": name, "dtype": dtype, "shape": list(arr.shape)})
        buffers.append(arr.tobytes())
    header = json.dumps(
        {"kind": kind, "meta": meta, "arrays": index}, sort_keys=True
    ).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(FORMAT_VERSION.to_bytes(4, "little"))
        f.write(len(header).to_bytes(8, "little"))
        f.write(header)
        for buf in buffers:
            f.write(buf)


def read_header(path, expected_kind: str = None) -> dict:
    """Read only the JSON header (kind + meta) without loading arrays."""
    path = Path(path)
    try:
        with open(path, "rb") as f:
            prefix = f.read(16)
            if len(prefix) < 16 or prefix[:4] != MAGIC:
                raise DataError(f"{path}: not a {MAGIC.decode()} container")
            version = int.from_bytes(prefix[4:8], "little")
            if version != FORMAT_VERSION:
                raise DataError(
                    f"{path}: container version {version} not supported "
                    f"(expected {FORMAT_VERSION})"
                )
            header_len = int.from_bytes(prefix[8:16], "little")
            blob = f.read(header_len)
    except OSError as exc:
        raise DataError(f"{path}: cannot read container ({exc})") from exc
    if len(blob) != header_len:
        raise DataError(f"{path}: truncated container header")
    try:
        header = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt container header ({exc})") from exc
    if expected_kind is not None and header.get("kind") != expected_kind:
        raise DataError(
            f"{path}: container kind {header.get('kind')!r}, expected {expected_kind!r}"
        )
    return header


def load_container(path, expected_kind: str = None) -> Tuple[dict, Dict[str, np.ndarray]]:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise DataError(f"{path}: cannot read container ({exc})") from exc
    if len(blob) < 16 or blob[:4] != MAGIC:
        raise DataError(f"{path}: not a {MAGIC.decode()} container")
    version = int.from_bytes(blob[4:8], "little")
    if version != FORMAT_VERSION:
        raise DataError(
            f"{path}: container version {version} not supported (expected {FORMAT_VERSION})"
        )
    header_len = int.from_bytes(blob[8:16], "little")
    if len(blob) < 16 + header_len:
        raise DataError(f"{path}: truncated container header")
    try:
        header = json.loads(blob[16 : 16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt container header ({exc})") from exc
    kind = header.get("kind")
    if expected_kind is not None and kind != expected_kind:
        raise DataError(f"{path}: container kind {kind!r}, expected {expected_kind!r}")
    arrays: Dict[str, np.ndarray] = {}
    offset = 16 + header_len
    for entry in header.get("arrays", []):
        dtype = entry["dtype"]
        if dtype not in _ALLOWED_DTYPES:
            raise DataError(f"{path}: unsupported array dtype {dtype!r}")
        shape = tuple(int(s) for s in entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 8
        chunk = blob[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise DataError(f"{path}: truncated container payload at {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(chunk, dtype=dtype).reshape(shape).copy()
        offset += nbytes
    return header.get("meta", {}), arrays
