"""Approximate nearest-neighbor engine.

Two interchangeable backends implement the same navigable-small-world
graph: a compiled Cython kernel (visrag.hnsw._core) for the traversal hot
loops and a pure-Python/numpy fallback. The compiled backend is selected
at import time when present; VISRAG_HNSW_BACKEND=python|compiled forces a
choice (benchmarks/bench_hnsw.py compares the two).
"""

import os

from .pyfallback import HnswGraphPy, assign_levels

try:
    from ._core import HnswGraphCompiled

    _HAVE_COMPILED = True
except ImportError:
    HnswGraphCompiled = None
    _HAVE_COMPILED = False


def available_backends():
    return ("compiled", "python") if _HAVE_COMPILED else ("python",)


def resolve_backend(name="auto"):
    """Map a backend name to (graph class, resolved name)."""
    name = name or "auto"
    if name == "auto":
        name = os.environ.get("VISRAG_HNSW_BACKEND", "auto") or "auto"
    if name == "auto":
        name = "compiled" if _HAVE_COMPILED else "python"
    if name == "compiled":
        if not _HAVE_COMPILED:
            raise RuntimeError(
                "compiled hnsw kernel unavailable in this install; "
                "set VISRAG_HNSW_BACKEND=python or rebuild"
            )
        return HnswGraphCompiled, "compiled"
    if name == "python":
        return HnswGraphPy, "python"
    raise ValueError(f"unknown hnsw backend {name!r}")


def build_graph(matrix, m, ef_construction, seed, backend="auto"):
    """Build a graph over the (n, dim) float32 matrix; returns (graph, name)."""
    cls, resolved = resolve_backend(backend)
    levels = assign_levels(matrix.shape[0], m, seed)
    return cls(matrix, levels, m, ef_construction), resolved
