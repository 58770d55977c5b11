"""
checkpoint.py
-------------

Persistência de parâmetros: cabeçalho JSON + blob binário little-endian.
Parameter persistence: JSON header + little-endian binary blob.

Formato / Format:
    <name>.json  {"format_version": 1, "dtype": "f32", "blob": "<name>.bin",
                  "params": [{"name", "shape", "offset"}], "config": {...}}
    <name>.bin   parâmetros float32 concatenados na ordem do cabeçalho
                 float32 parameters concatenated in header order

`offset` é em bytes / `offset` is in bytes.
"""

import os
from typing import Any, Mapping, Optional

import numpy as np

from utils.errors import DatasetError
from utils.files import read_json, write_json
from utils.logger import setup_logger

logger = setup_logger("numeric_checkpoint")

CHECKPOINT_FORMAT_VERSION = 1
BLOB_DTYPE = np.dtype("<f4")


def blob_path_for(header_path: str) -> str:
    root, _ = os.path.splitext(header_path)
    return root + ".bin"


def save_checkpoint(
    path: str,
    params: Mapping[str, np.ndarray],
    config: Optional[Mapping[str, Any]] = None,
    extra: Optional[Mapping[str, Any]] = None,
) -> str:
    """
    Salva os parâmetros em ordem de nome; retorna o caminho do cabeçalho.
    Save parameters in name order; returns the header path.
    """
    entries = []
    chunks = []
    offset = 0
    for name in sorted(params):
        arr = np.ascontiguousarray(np.asarray(params[name]), dtype=BLOB_DTYPE)
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(arr.tobytes(order="C"))
        offset += arr.nbytes

    blob_path = blob_path_for(path)
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "dtype": "f32",
        "blob": os.path.basename(blob_path),
        "params": entries,
        "config": dict(config or {}),
    }
    if extra:
        header["extra"] = dict(extra)

    write_json(header, path)
    try:
        with open(blob_path, "wb") as f:
            f.write(b"".join(chunks))
    except OSError as e:
        raise DatasetError(blob_path, f"falha ao escrever / write failed: {e}") from e

    logger.info(f"Checkpoint salvo: {path} ({len(entries)} parâmetros) / Checkpoint saved: {path} ({len(entries)} params)")
    return path


def load_checkpoint(path: str) -> tuple[dict[str, np.ndarray], dict]:
    """Return (params, header); arrays are float32."""
    header = read_json(path)
    if header.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise DatasetError(path, f"unsupported checkpoint format_version {header.get('format_version')}")
    if header.get("dtype") != "f32":
        raise DatasetError(path, f"unsupported checkpoint dtype {header.get('dtype')}")

    blob_path = os.path.join(os.path.dirname(path), header.get("blob", os.path.basename(blob_path_for(path))))
    try:
        with open(blob_path, "rb") as f:
            blob = f.read()
    except OSError as e:
        raise DatasetError(blob_path, f"falha ao ler / read failed: {e}") from e

    params: dict[str, np.ndarray] = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        end = entry["offset"] + count * BLOB_DTYPE.itemsize
        if end > len(blob):
            raise DatasetError(blob_path, f"blob too short for parameter {entry['name']}")
        arr = np.frombuffer(blob, dtype=BLOB_DTYPE, count=count, offset=entry["offset"])
        params[entry["name"]] = arr.reshape(shape).astype(np.float32)
    return params, header
