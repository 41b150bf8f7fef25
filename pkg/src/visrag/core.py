"""Shared domain types and the similarity kernel.

Embeddings are plain 1-D float32 numpy arrays. Storage stays in float32;
every distance/norm accumulation runs in float64. Similarity is cosine on
L2-normalized vectors, so it reduces to a dot product after normalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import DimensionMismatch, NonFiniteValue, TaxonomyViolation, ZeroVector

ZERO_NORM_THRESHOLD = 1e-12

CATEGORIES = ("Billfish", "Mahi mahi", "Opah", "Shark", "Tuna", "Other")
TUNA_SPECIES = ("Albacore", "Yellowfin tuna", "Skipjack tuna", "Bigeye tuna", "Tuna")


def as_embedding(values, dim: Optional[int] = None) -> np.ndarray:
    """Coerce ``values`` to a finite 1-D float32 vector.

    Raises NonFiniteValue on NaN/Inf and DimensionMismatch when ``dim`` is
    given and does not match.
    """
    v = np.asarray(values, dtype=np.float32)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {v.shape}")
    if v.size == 0:
        raise DimensionMismatch("empty vector")
    if not np.all(np.isfinite(v)):
        raise NonFiniteValue("vector contains NaN or Inf")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"expected dim {dim}, got {v.shape[0]}")
    return v


def normalize(v) -> np.ndarray:
    """Return ``v`` scaled to unit L2 norm (float32 copy, direction kept)."""
    v = as_embedding(v)
    norm = float(np.linalg.norm(v.astype(np.float64)))
    if norm < ZERO_NORM_THRESHOLD:
        raise ZeroVector("cannot normalize a zero vector")
    return np.asarray(v.astype(np.float64) / norm, dtype=np.float32)


def cosine_similarity(a, b) -> float:
    """Cosine similarity of two nonzero vectors, accumulated in float64."""
    a = as_embedding(a)
    b = as_embedding(b)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"dims differ: {a.shape[0]} vs {b.shape[0]}")
    a64 = a.astype(np.float64)
    b64 = b.astype(np.float64)
    na = float(np.linalg.norm(a64))
    nb = float(np.linalg.norm(b64))
    if na < ZERO_NORM_THRESHOLD or nb < ZERO_NORM_THRESHOLD:
        raise ZeroVector("cosine similarity undefined for zero vectors")
    return float(np.dot(a64, b64) / (na * nb))


@dataclass(frozen=True)
class Taxonomy:
    """Two-level label hierarchy: category -> set of species.

    Categories without named species (anything but Tuna in the default
    instance) accept entries labeled ``species == category``; the dataset
    groups ambiguous specimens at category level the same way.
    """

    species_of: Mapping[str, frozenset]
    catch_all: str = "Other"
    _category_of: Mapping[str, str] = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        owners = {}
        for category, species_set in self.species_of.items():
            for sp in species_set:
                if sp in owners and owners[sp] != category:
                    raise TaxonomyViolation(
                        f"species {sp!r} listed under both {owners[sp]!r} and {category!r}"
                    )
                owners[sp] = category
        if self.catch_all not in self.species_of:
            raise TaxonomyViolation(f"catch-all category {self.catch_all!r} missing")
        object.__setattr__(self, "_category_of", owners)

    @property
    def categories(self) -> frozenset:
        return frozenset(self.species_of)

    def species_lexicon(self) -> frozenset:
        return frozenset(self._category_of)

    def category_of(self, species: str) -> Optional[str]:
        return self._category_of.get(species)

    def validate_pair(self, species: str, category: str) -> bool:
        if category not in self.species_of:
            return False
        return species in self.species_of[category] or species == category

    @classmethod
    def default(cls) -> "Taxonomy":
        species_of = {c: frozenset() for c in CATEGORIES}
        species_of["Tuna"] = frozenset(TUNA_SPECIES)
        return cls(species_of=species_of, catch_all="Other")

    def to_dict(self) -> dict:
        return {
            "categories": {c: sorted(self.species_of[c]) for c in sorted(self.species_of)},
            "catch_all": self.catch_all,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Taxonomy":
        try:
            categories = data["categories"]
            catch_all = data["catch_all"]
        except (KeyError, TypeError) as exc:
            raise TaxonomyViolation(f"taxonomy object missing key: {exc}") from exc
        if not isinstance(categories, dict):
            raise TaxonomyViolation("taxonomy 'categories' must be an object")
        species_of = {}
        for category, species_list in categories.items():
            if not isinstance(species_list, list):
                raise TaxonomyViolation(f"species list for {category!r} must be an array")
            species_of[category] = frozenset(species_list)
        return cls(species_of=species_of, catch_all=catch_all)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, sort_keys=True)


@dataclass(frozen=True)
class KnowledgeEntry:
    """One reference exemplar: embedding key, labels, description value."""

    id: str
    species: str
    category: str
    description: str
    embedding: np.ndarray

    def __post_init__(self):
        if not self.id:
            raise ValueError("entry id must be non-empty")
        if not self.description:
            raise ValueError(f"entry {self.id!r}: description must be non-empty")
        emb = as_embedding(self.embedding)
        emb.setflags(write=False)
        object.__setattr__(self, "embedding", emb)


@dataclass(frozen=True)
class QuerySample:
    """A test-set query: embedding plus optional ground-truth labels."""

    id: str
    embedding: np.ndarray
    species: Optional[str] = None
    category: Optional[str] = None

    def __post_init__(self):
        emb = as_embedding(self.embedding)
        emb.setflags(write=False)
        object.__setattr__(self, "embedding", emb)


@dataclass(frozen=True, order=True)
class RetrievalHit:
    """Ranked similarity-search result. Lists are sorted by similarity
    descending with ties broken by ascending entry_id."""

    entry_id: str
    similarity: float
    rank: int


def validate_entries(entries: Iterable[KnowledgeEntry], taxonomy: Taxonomy) -> None:
    """Check label consistency of every entry against ``taxonomy``."""
    for entry in entries:
        if not taxonomy.validate_pair(entry.species, entry.category):
            raise TaxonomyViolation(
                f"entry {entry.id!r}: ({entry.species!r}, {entry.category!r}) "
                "is not a valid species/category pair"
            )
