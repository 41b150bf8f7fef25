"""Retrieval-augmented visual classification engine.

An image-embedding-keyed knowledge base with exact and approximate
cosine-similarity retrieval, prompt assembly for a multimodal LLM backbone
behind a small HTTP protocol, free-text answer parsing into a species
taxonomy, and an evaluation harness (final accuracy, top-k retrieval
accuracy at category/species granularity, per-class precision/recall, PCA
embedding maps).
"""

__version__ = "0.1.0"

from .core import (
    KnowledgeEntry,
    QuerySample,
    RetrievalHit,
    Taxonomy,
    cosine_similarity,
    normalize,
)
from .store import DEFAULT_K, HnswParams, StoreIndex, build_index

__all__ = [
    "__version__",
    "KnowledgeEntry",
    "QuerySample",
    "RetrievalHit",
    "Taxonomy",
    "cosine_similarity",
    "normalize",
    "DEFAULT_K",
    "HnswParams",
    "StoreIndex",
    "build_index",
]
