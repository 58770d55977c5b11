"""
files.py
--------

Utilitários de arquivos: escrita determinística de JSON, checksums e
metadados de artefatos.
File helpers: deterministic JSON writing, checksums and artifact metadata.

Nenhum arquivo gerado contém timestamp, para que execuções com a mesma
semente produzam bytes idênticos.
No generated file contains a timestamp, so runs with the same seed produce
identical bytes.
"""

import hashlib
import json
import os
from typing import Any

import polars as pl

from utils.errors import DatasetError


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def write_json(payload: Any, path: str) -> str:
    """
    Salva JSON com chaves ordenadas e indentação fixa.
    Save JSON with sorted keys and fixed indentation.
    """
    parent = os.path.dirname(path)
    if parent:
        ensure_dir(parent)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(payload, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise DatasetError(path, f"falha ao escrever / write failed: {e}") from e
    return path


def read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise DatasetError(path, f"falha ao ler / read failed: {e}") from e
    except json.JSONDecodeError as e:
        raise DatasetError(path, f"JSON inválido / invalid JSON: {e}") from e


def sha256_of(path: str) -> str:
    digest = hashlib.sha256()
    try:
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 16), b""):
                digest.update(chunk)
    except OSError as e:
        raise DatasetError(path, f"falha ao ler / read failed: {e}") from e
    return digest.hexdigest()


def config_hash(payload: Any) -> str:
    """Short hash of a JSON-serializable config echo."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def write_metadata(df: pl.DataFrame, data_file: str, metadata_file: str, origin: str) -> str:
    """
    Gera o arquivo de metadados de um artefato tabular.
    Generate the metadata file of a tabular artifact.
    """
    metadata = {
        "origin": origin,
        "status": "success",
        "data_file": os.path.basename(data_file),
        "rows": df.height,
        "columns": df.width,
        "columns_types": {name: str(dtype) for name, dtype in zip(df.columns, df.dtypes)},
    }
    return write_json(metadata, metadata_file)
