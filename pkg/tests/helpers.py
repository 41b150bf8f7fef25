"""Shared fixture builders and independent oracles used across tests."""

from __future__ import annotations

import numpy as np

from visrag.core import KnowledgeEntry, QuerySample, Taxonomy
from visrag.pipeline import load_default_descriptions


def brute_force_ranking(matrix, q):
    """Independent full-sort oracle: cosine ranking with ties broken by
    ascending row id. Returns (ordered row indices, similarities).

    Mirrors the storage contract (unit vectors quantized to float32,
    accumulation in float64) but computes the ranking its own way:
    elementwise products summed per row, python sort on (-sim, id).
    """
    m = np.asarray(matrix, dtype=np.float64)
    m = (m / np.sqrt((m * m).sum(axis=1))[:, None]).astype(np.float32)
    qv = np.asarray(q, dtype=np.float64)
    qv = (qv / np.sqrt((qv * qv).sum())).astype(np.float32)
    sims = (m.astype(np.float64) * qv.astype(np.float64)).sum(axis=1)
    return sorted(range(m.shape[0]), key=lambda i: (-sims[i], i)), sims


def make_cluster_fixture(
    n_per_class: int = 50,
    n_queries_per_class: int = 50,
    sigma: float = 0.05,
    dim: int = 8,
    seed: int = 7,
):
    """Separable synthetic data: one orthogonal unit centroid per default
    category, Gaussian clouds of width sigma around each.

    Returns (entries, queries); queries carry truth labels.
    """
    taxonomy = Taxonomy.default()
    categories = sorted(taxonomy.categories)
    assert dim >= len(categories)
    descriptions = load_default_descriptions()
    rng = np.random.default_rng(seed)
    entries = []
    queries = []
    for ci, category in enumerate(categories):
        centroid = np.zeros(dim)
        centroid[ci] = 1.0
        species = category  # valid pair: species == category
        for j in range(n_per_class):
            vec = centroid + sigma * rng.normal(size=dim)
            entries.append(
                KnowledgeEntry(
                    id=f"kb-{category}-{j:03d}",
                    species=species,
                    category=category,
                    description=descriptions[category],
                    embedding=(vec / np.linalg.norm(vec)).astype(np.float32),
                )
            )
        for j in range(n_queries_per_class):
            vec = centroid + sigma * rng.normal(size=dim)
            queries.append(
                QuerySample(
                    id=f"q-{category}-{j:03d}",
                    embedding=vec.astype(np.float32),
                    species=species,
                    category=category,
                )
            )
    return entries, queries


def make_random_entries(n: int, dim: int, rng, prefix: str = "e"):
    """Unlabeled-content random entries for store-level tests."""
    taxonomy = Taxonomy.default()
    categories = sorted(taxonomy.categories)
    vecs = rng.normal(size=(n, dim)).astype(np.float32)
    return [
        KnowledgeEntry(
            id=f"{prefix}{i:05d}",
            species=categories[i % len(categories)],
            category=categories[i % len(categories)],
            description="reference specimen",
            embedding=vecs[i],
        )
        for i in range(n)
    ]
