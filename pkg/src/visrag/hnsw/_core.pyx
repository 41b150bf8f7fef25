# distutils: language = c++
"""Compiled navigable-small-world graph kernels.

Same algorithm as pyfallback.HnswGraphPy: best-first layer search and
diversity-aware neighbor selection over a row-major float32 matrix, all
orderings lexicographic on (distance, node id), distances accumulated in
double. Only the inner loops live here; level assignment and engine
plumbing stay in Python so both backends share one code path.
"""

import numpy as np

cimport numpy as cnp
from libcpp.algorithm cimport sort as cpp_sort
from libcpp.pair cimport pair
from libcpp.queue cimport priority_queue
from libcpp.vector cimport vector

cnp.import_array()

ctypedef pair[double, long] DPair


cdef inline double _dist(const float* a, const float* b, Py_ssize_t dim) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(dim):
        acc += (<double> a[i]) * (<double> b[i])
    return 1.0 - acc


cdef class HnswGraphCompiled:
    cdef:
        const cnp.float32_t[:, ::1] x
        object _x_ref
        Py_ssize_t n, dim
        int m, max_m, max_m0, ef_construction
        int entry_point, max_level
        vector[vector[int]] adj      # flattened (node, level) -> neighbor ids
        vector[long] offsets         # node -> base slot in adj
        vector[int] levels

    @property
    def backend(self):
        return "compiled"

    def __cinit__(self, matrix, levels, int m, int ef_construction):
        xa = np.ascontiguousarray(matrix, dtype=np.float32)
        lv = np.ascontiguousarray(levels, dtype=np.int32)
        if xa.ndim != 2:
            raise ValueError("matrix must be 2-D")
        if lv.shape[0] != xa.shape[0]:
            raise ValueError("levels length must match matrix rows")
        self._x_ref = xa
        self.x = xa
        self.n = xa.shape[0]
        self.dim = xa.shape[1]
        self.m = m
        self.max_m = m
        self.max_m0 = 2 * m
        self.ef_construction = ef_construction

        cdef cnp.int32_t[::1] lvv = lv
        cdef Py_ssize_t i
        cdef long off = 0
        self.offsets.resize(self.n)
        self.levels.resize(self.n)
        for i in range(self.n):
            self.levels[i] = lvv[i]
            self.offsets[i] = off
            off += lvv[i] + 1
        self.adj.resize(off)

        self.entry_point = 0
        self.max_level = self.levels[0]
        for i in range(1, self.n):
            self._insert(<int> i)

    cdef inline const float* _row(self, int i) noexcept:
        return &self.x[i, 0]

    cdef void _search_layer(self, const float* q, vector[DPair]& eps, int ef,
                            int level, vector[DPair]& out):
        # Candidates max-heap holds (-d, -id) so top() is the nearest pair;
        # results max-heap holds (d, id) so top() is the current worst.
        cdef priority_queue[DPair] candidates
        cdef priority_queue[DPair] results
        cdef vector[char] visited = vector[char](self.n, 0)
        cdef DPair p, worst
        cdef double d_c, d_e
        cdef int c, e
        cdef Py_ssize_t j, a, b
        cdef vector[int]* neigh
        for j in range(<Py_ssize_t> eps.size()):
            p = eps[j]
            visited[<int> p.second] = 1
            candidates.push(DPair(-p.first, -p.second))
            results.push(p)
        while not candidates.empty():
            p = candidates.top()
            candidates.pop()
            d_c = -p.first
            c = <int> (-p.second)
            worst = results.top()
            if results.size() >= <size_t> ef and (
                d_c > worst.first or (d_c == worst.first and c > <int> worst.second)
            ):
                break
            neigh = &self.adj[self.offsets[c] + level]
            for j in range(<Py_ssize_t> neigh[0].size()):
                e = neigh[0][j]
                if visited[e]:
                    continue
                visited[e] = 1
                d_e = _dist(self._row(e), q, self.dim)
                worst = results.top()
                if results.size() < <size_t> ef or (
                    d_e < worst.first or (d_e == worst.first and e < <int> worst.second)
                ):
                    candidates.push(DPair(-d_e, -e))
                    results.push(DPair(d_e, e))
                    if results.size() > <size_t> ef:
                        results.pop()
        out.clear()
        while not results.empty():
            out.push_back(results.top())
            results.pop()
        a = 0
        b = <Py_ssize_t> out.size() - 1
        while a < b:  # drain order is worst-first; reverse to ascending
            p = out[a]
            out[a] = out[b]
            out[b] = p
            a += 1
            b -= 1

    cdef void _select_neighbors(self, vector[DPair]& cand, int m_target,
                                vector[int]& out):
        # cand sorted ascending by (dist-to-base, id); keep a candidate only
        # when it is closer to the base than to every selected neighbor,
        # then backfill pruned ones up to m_target.
        out.clear()
        cdef Py_ssize_t j, r
        cdef int e, keep
        cdef double d_e, d_er
        if <int> cand.size() <= m_target:
            for j in range(<Py_ssize_t> cand.size()):
                out.push_back(<int> cand[j].second)
            return
        cdef vector[int] discarded
        for j in range(<Py_ssize_t> cand.size()):
            if <int> out.size() == m_target:
                break
            d_e = cand[j].first
            e = <int> cand[j].second
            keep = 1
            for r in range(<Py_ssize_t> out.size()):
                d_er = _dist(self._row(e), self._row(out[r]), self.dim)
                if d_er < d_e:
                    keep = 0
                    break
            if keep:
                out.push_back(e)
            else:
                discarded.push_back(e)
        j = 0
        while <int> out.size() < m_target and j < <Py_ssize_t> discarded.size():
            out.push_back(discarded[j])
            j += 1

    cdef void _insert(self, int i):
        cdef const float* q = self._row(i)
        cdef int level = self.levels[i]
        cdef vector[DPair] ep, w, cand
        cdef vector[int] neighbors, shrunk
        cdef int lc, e, cap, nb
        cdef Py_ssize_t j, t
        cdef vector[int]* links
        ep.push_back(DPair(_dist(self._row(self.entry_point), q, self.dim),
                           self.entry_point))
        lc = self.max_level
        while lc > level:
            self._search_layer(q, ep, 1, lc, w)
            ep = w
            lc -= 1
        lc = level if level < self.max_level else self.max_level
        while lc >= 0:
            self._search_layer(q, ep, self.ef_construction, lc, w)
            self._select_neighbors(w, self.m, neighbors)
            cap = self.max_m0 if lc == 0 else self.max_m
            links = &self.adj[self.offsets[i] + lc]
            links[0].clear()
            for j in range(<Py_ssize_t> neighbors.size()):
                links[0].push_back(neighbors[j])
            for j in range(<Py_ssize_t> neighbors.size()):
                e = neighbors[j]
                links = &self.adj[self.offsets[e] + lc]
                links[0].push_back(i)
                if <int> links[0].size() > cap:
                    cand.clear()
                    for t in range(<Py_ssize_t> links[0].size()):
                        nb = links[0][t]
                        cand.push_back(DPair(_dist(self._row(e), self._row(nb),
                                                   self.dim), nb))
                    cpp_sort(cand.begin(), cand.end())
                    self._select_neighbors(cand, cap, shrunk)
                    links[0] = shrunk
            ep = w
            lc -= 1
        if level > self.max_level:
            self.entry_point = i
            self.max_level = level

    def search(self, q, int k, int ef_search):
        """Top-k approximate neighbors of q; returns (ids, similarities)
        sorted by similarity descending, ties by ascending node id."""
        qa = np.ascontiguousarray(q, dtype=np.float32)
        if qa.ndim != 1 or qa.shape[0] != self.dim:
            raise ValueError(f"query dim {qa.shape} != index dim {self.dim}")
        cdef const cnp.float32_t[::1] qv = qa
        cdef const float* qp = &qv[0]
        cdef int ef = ef_search if ef_search > k else k
        cdef vector[DPair] ep, w
        cdef int lc
        cdef Py_ssize_t j, kk
        ep.push_back(DPair(_dist(self._row(self.entry_point), qp, self.dim),
                           self.entry_point))
        lc = self.max_level
        while lc > 0:
            self._search_layer(qp, ep, 1, lc, w)
            ep = w
            lc -= 1
        self._search_layer(qp, ep, ef, 0, w)
        kk = k if k < <int> w.size() else <int> w.size()
        idx = np.empty(kk, dtype=np.int64)
        sims = np.empty(kk, dtype=np.float64)
        cdef cnp.int64_t[::1] idx_v = idx
        cdef cnp.float64_t[::1] sims_v = sims
        for j in range(kk):
            idx_v[j] = w[j].second
            sims_v[j] = 1.0 - w[j].first
        return idx, sims
