"""Pure-Python navigable-small-world graph (fallback backend).

Mirrors the compiled kernel step for step: identical level schedule,
identical heap orderings (lexicographic on (distance, node id)), identical
diversity-aware neighbor selection. Distances are 1 - dot over unit
vectors, stored float32, accumulated float64. Given one backend, the same
inputs and seed always reproduce the same graph and the same hit lists.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

MAX_LEVEL_CAP = 32


def assign_levels(n: int, m: int, seed: int) -> np.ndarray:
    """Draw the per-node level schedule (shared by both backends).

    Levels follow floor(-ln(u) / ln(m)), the standard exponentially
    decaying layer assignment; a fixed seed makes construction
    deterministic.
    """
    ml = 1.0 / math.log(m)
    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random(n)  # (0, 1] so log never sees 0
    levels = np.floor(-np.log(u) * ml).astype(np.int64)
    return np.minimum(levels, MAX_LEVEL_CAP).astype(np.int32)


class HnswGraphPy:
    """Graph built over a row-major float32 matrix of unit vectors."""

    backend = "python"

    def __init__(self, matrix, levels, m: int, ef_construction: int):
        self.x = np.ascontiguousarray(matrix, dtype=np.float32)
        self.x64 = self.x.astype(np.float64)
        self.n, self.dim = self.x.shape
        self.m = int(m)
        self.max_m = int(m)
        self.max_m0 = 2 * int(m)
        self.ef_construction = int(ef_construction)
        self.levels = np.asarray(levels, dtype=np.int32)
        self.adj = [[[] for _ in range(int(self.levels[i]) + 1)] for i in range(self.n)]
        self.entry_point = 0
        self.max_level = int(self.levels[0])
        for i in range(1, self.n):
            self._insert(i)

    # -- distances ---------------------------------------------------------

    def _dist(self, q64, j: int) -> float:
        return 1.0 - float(self.x64[j] @ q64)

    def _dists(self, q64, ids):
        return 1.0 - self.x64[ids] @ q64

    # -- core traversal ----------------------------------------------------

    def _search_layer(self, q64, eps, ef: int, level: int):
        """Best-first search; eps and result are (dist, id) lists.

        Returns at most ef pairs sorted ascending by (dist, id).
        """
        visited = {i for _, i in eps}
        candidates = list(eps)
        heapq.heapify(candidates)  # min-heap on (dist, id)
        results = [(-d, -i) for d, i in eps]
        heapq.heapify(results)  # max-heap on (dist, id) via negation
        while candidates:
            d_c, c = heapq.heappop(candidates)
            worst = (-results[0][0], -results[0][1])
            if len(results) >= ef and (d_c, c) > worst:
                break
            neigh = [e for e in self.adj[c][level] if e not in visited]
            if not neigh:
                continue
            visited.update(neigh)
            for e, d_e in zip(neigh, self._dists(q64, neigh)):
                d_e = float(d_e)
                worst = (-results[0][0], -results[0][1])
                if len(results) < ef or (d_e, e) < worst:
                    heapq.heappush(candidates, (d_e, e))
                    heapq.heappush(results, (-d_e, -e))
                    if len(results) > ef:
                        heapq.heappop(results)
        out = [(-nd, -ni) for nd, ni in results]
        out.sort()
        return out

    def _select_neighbors(self, cand, m_target: int):
        """Diversity-aware selection over (dist, id) pairs sorted ascending.

        Keeps a candidate only when it is closer to the base point than to
        every already-selected neighbor; pruned candidates backfill up to
        m_target so degree never collapses.
        """
        if len(cand) <= m_target:
            return [i for _, i in cand]
        selected = []
        discarded = []
        for d_e, e in cand:
            if len(selected) == m_target:
                break
            if selected:
                e64 = self.x64[e]
                closest_sel = float(np.min(1.0 - self.x64[selected] @ e64))
                keep = not (closest_sel < d_e)
            else:
                keep = True
            if keep:
                selected.append(e)
            else:
                discarded.append(e)
        for e in discarded:
            if len(selected) == m_target:
                break
            selected.append(e)
        return selected

    def _insert(self, i: int):
        q64 = self.x64[i]
        level = int(self.levels[i])
        ep = [(self._dist(q64, self.entry_point), self.entry_point)]
        for lc in range(self.max_level, level, -1):
            ep = self._search_layer(q64, ep, 1, lc)
        for lc in range(min(level, self.max_level), -1, -1):
            w = self._search_layer(q64, ep, self.ef_construction, lc)
            neighbors = self._select_neighbors(w, self.m)
            cap = self.max_m0 if lc == 0 else self.max_m
            self.adj[i][lc] = list(neighbors)
            for e in neighbors:
                links = self.adj[e][lc]
                links.append(i)
                if len(links) > cap:
                    e64 = self.x64[e]
                    cand = sorted(
                        (1.0 - float(e64 @ self.x64[nb]), nb) for nb in links
                    )
                    self.adj[e][lc] = self._select_neighbors(cand, cap)
            ep = w
        if level > self.max_level:
            self.entry_point = i
            self.max_level = level

    # -- public ------------------------------------------------------------

    def search(self, q, k: int, ef_search: int):
        """Top-k approximate neighbors of q; returns (ids, similarities)
        sorted by similarity descending, ties by ascending node id."""
        q64 = np.ascontiguousarray(q, dtype=np.float32).astype(np.float64)
        if q64.shape[0] != self.dim:
            raise ValueError(f"query dim {q64.shape[0]} != index dim {self.dim}")
        ef = max(int(ef_search), int(k))
        ep = [(self._dist(q64, self.entry_point), self.entry_point)]
        for lc in range(self.max_level, 0, -1):
            ep = self._search_layer(q64, ep, 1, lc)
        w = self._search_layer(q64, ep, ef, 0)[: int(k)]
        idx = np.array([i for _, i in w], dtype=np.int64)
        sims = np.array([1.0 - d for d, _ in w], dtype=np.float64)
        return idx, sims
