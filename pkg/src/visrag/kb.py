"""Knowledge-base ingestion, validation, and persistence.

Two-file layout: a binary embedding matrix and a JSONL metadata sidecar.

Embedding file (all little-endian):
    bytes 0..3   magic "VRAG"
    bytes 4..5   version, uint16, currently 1
    bytes 6..9   dim, uint32
    bytes 10..17 count, uint64
    bytes 18..   count * dim float32, row-major
Total length must be exactly 18 + 4*dim*count and every float finite.

Metadata: one JSON object per line, UTF-8, keys id/species/category/
description; row i of the matrix pairs with line i. Label fields may be
omitted for unlabeled query files; description is required for knowledge
entries. Taxonomy file: JSON {"categories": {category: [species...]},
"catch_all": name}.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .core import KnowledgeEntry, QuerySample, Taxonomy, normalize
from .errors import (
    CountMismatch,
    DuplicateId,
    FormatError,
    IoError,
    NonFiniteValue,
    TaxonomyViolation,
)

MAGIC = b"VRAG"
VERSION = 1
_HEADER = struct.Struct("<4sHIQ")

EMBEDDINGS_FILENAME = "embeddings.vrag"
METADATA_FILENAME = "metadata.jsonl"
TAXONOMY_FILENAME = "taxonomy.json"

_METADATA_KEYS = ("id", "species", "category", "description")


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _write_bytes(path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_embedding_file(path, matrix) -> None:
    """Write an (n, dim) float32 matrix in the binary layout above."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise FormatError(f"embedding matrix must be 2-D, got shape {matrix.shape}")
    if matrix.shape[1] == 0:
        raise FormatError("embedding dim must be positive")
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteValue("embedding matrix contains NaN or Inf")
    data = np.ascontiguousarray(matrix, dtype="<f4")
    header = _HEADER.pack(MAGIC, VERSION, data.shape[1], data.shape[0])
    _write_bytes(path, header + data.tobytes(order="C"))


def read_embedding_file(path) -> np.ndarray:
    """Read and fully validate an embedding file; returns float32 (n, dim)."""
    raw = _read_bytes(path)
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, dim, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dim == 0:
        raise FormatError(f"{path}: dim must be positive")
    expected = _HEADER.size + 4 * dim * count
    if len(raw) != expected:
        raise FormatError(
            f"{path}: length {len(raw)} != expected {expected} "
            f"for dim={dim} count={count}"
        )
    matrix = (
        np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
        .reshape(count, dim)
        .astype(np.float32)
    )
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteValue(f"{path}: embedding data contains NaN or Inf")
    return matrix


def write_metadata_file(path, records: Sequence[dict]) -> None:
    """Write one JSON object per line, canonical key order."""
    lines = []
    for rec in records:
        ordered = {k: rec[k] for k in _METADATA_KEYS if k in rec and rec[k] is not None}
        lines.append(json.dumps(ordered, ensure_ascii=False))
    text = "\n".join(lines)
    if lines:
        text += "\n"
    _write_bytes(path, text.encode("utf-8"))


def read_metadata_file(path) -> List[dict]:
    raw = _read_bytes(path)
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8: {exc}") from exc
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise FormatError(f"{path}:{lineno}: expected a JSON object")
        if not isinstance(obj.get("id"), str) or not obj["id"]:
            raise FormatError(f"{path}:{lineno}: missing or empty 'id'")
        for key in ("species", "category", "description"):
            if key in obj and not isinstance(obj[key], str):
                raise FormatError(f"{path}:{lineno}: field {key!r} must be a string")
        records.append(obj)
    return records


def _check_counts(matrix, records, emb_path, meta_path) -> None:
    if matrix.shape[0] != len(records):
        raise CountMismatch(
            f"{emb_path} has {matrix.shape[0]} rows but "
            f"{meta_path} has {len(records)} lines"
        )


def _check_unique_ids(records) -> None:
    seen = set()
    for rec in records:
        if rec["id"] in seen:
            raise DuplicateId(f"duplicate id {rec['id']!r} in metadata")
        seen.add(rec["id"])


def ingest(embeddings_path, metadata_path, taxonomy: Taxonomy) -> List[KnowledgeEntry]:
    """Load, validate, and normalize a knowledge base.

    Every record must carry species, category, and a non-empty description;
    embeddings come out L2-normalized, order preserved.
    """
    matrix = read_embedding_file(embeddings_path)
    records = read_metadata_file(metadata_path)
    _check_counts(matrix, records, embeddings_path, metadata_path)
    _check_unique_ids(records)
    entries = []
    for row, rec in zip(matrix, records):
        for key in ("species", "category", "description"):
            if not rec.get(key):
                raise FormatError(
                    f"record {rec['id']!r}: knowledge entries require {key!r}"
                )
        if not taxonomy.validate_pair(rec["species"], rec["category"]):
            raise TaxonomyViolation(
                f"record {rec['id']!r}: ({rec['species']!r}, {rec['category']!r}) "
                "not in taxonomy"
            )
        entries.append(
            KnowledgeEntry(
                id=rec["id"],
                species=rec["species"],
                category=rec["category"],
                description=rec["description"],
                embedding=normalize(row),
            )
        )
    return entries


def load_entries(embeddings_path, metadata_path, taxonomy: Taxonomy) -> List[KnowledgeEntry]:
    """Like ingest() but trusts stored embeddings bit-for-bit (no
    renormalization), so persist/load round-trips are exact."""
    matrix = read_embedding_file(embeddings_path)
    records = read_metadata_file(metadata_path)
    _check_counts(matrix, records, embeddings_path, metadata_path)
    _check_unique_ids(records)
    entries = []
    for row, rec in zip(matrix, records):
        for key in ("species", "category", "description"):
            if not rec.get(key):
                raise FormatError(
                    f"record {rec['id']!r}: knowledge entries require {key!r}"
                )
        if not taxonomy.validate_pair(rec["species"], rec["category"]):
            raise TaxonomyViolation(
                f"record {rec['id']!r}: ({rec['species']!r}, {rec['category']!r}) "
                "not in taxonomy"
            )
        entries.append(
            KnowledgeEntry(
                id=rec["id"],
                species=rec["species"],
                category=rec["category"],
                description=rec["description"],
                embedding=row.copy(),
            )
        )
    return entries


def persist_entries(entries: Sequence[KnowledgeEntry], embeddings_path, metadata_path) -> None:
    matrix = np.stack([e.embedding for e in entries]).astype(np.float32)
    write_embedding_file(embeddings_path, matrix)
    write_metadata_file(
        metadata_path,
        [
            {
                "id": e.id,
                "species": e.species,
                "category": e.category,
                "description": e.description,
            }
            for e in entries
        ],
    )


def load_queries(
    embeddings_path, metadata_path, taxonomy: Optional[Taxonomy] = None
) -> List[QuerySample]:
    """Load a query set; labels are optional and validated when a taxonomy
    is given. Query embeddings are left raw (normalized at query time)."""
    matrix = read_embedding_file(embeddings_path)
    records = read_metadata_file(metadata_path)
    _check_counts(matrix, records, embeddings_path, metadata_path)
    _check_unique_ids(records)
    samples = []
    for row, rec in zip(matrix, records):
        species = rec.get("species")
        category = rec.get("category")
        if taxonomy is not None:
            if species and category and not taxonomy.validate_pair(species, category):
                raise TaxonomyViolation(
                    f"record {rec['id']!r}: ({species!r}, {category!r}) not in taxonomy"
                )
            if category and category not in taxonomy.categories:
                raise TaxonomyViolation(
                    f"record {rec['id']!r}: unknown category {category!r}"
                )
        samples.append(
            QuerySample(id=rec["id"], embedding=row.copy(), species=species, category=category)
        )
    return samples


def load_taxonomy(path) -> Taxonomy:
    raw = _read_bytes(path)
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: invalid taxonomy JSON: {exc}") from exc
    return Taxonomy.from_dict(data)


def save_taxonomy(taxonomy: Taxonomy, path) -> None:
    _write_bytes(path, (taxonomy.to_json() + "\n").encode("utf-8"))


def save_store(entries: Sequence[KnowledgeEntry], taxonomy: Taxonomy, directory) -> None:
    """Persist a store directory: embeddings + metadata + taxonomy."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {directory}: {exc}") from exc
    persist_entries(
        entries,
        directory / EMBEDDINGS_FILENAME,
        directory / METADATA_FILENAME,
    )
    save_taxonomy(taxonomy, directory / TAXONOMY_FILENAME)


def load_store(directory):
    """Load a store directory; returns (entries, taxonomy)."""
    directory = Path(directory)
    taxonomy = load_taxonomy(directory / TAXONOMY_FILENAME)
    entries = load_entries(
        directory / EMBEDDINGS_FILENAME,
        directory / METADATA_FILENAME,
        taxonomy,
    )
    return entries, taxonomy
