#!/usr/bin/env python3
"""Benchmark: compiled graph kernel vs pure-Python fallback.

Builds the same index with both backends over one random unit-vector
matrix, then measures build time, query throughput, and recall@k against
an exact float64 matmul. Run from the repo root:

    python benchmarks/bench_hnsw.py --n 10000 --dim 64 --queries 100
"""

import argparse
import time

import numpy as np

from visrag import hnsw


def unit_rows(n, dim, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, dim)).astype(np.float32)
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def bench_backend(backend, x, queries, k, m, efc, efs, seed):
    t0 = time.monotonic()
    graph, name = hnsw.build_graph(x, m, efc, seed, backend=backend)
    build_s = time.monotonic() - t0

    x64 = x.astype(np.float64)
    truth = [
        set(np.argsort(-(x64 @ q.astype(np.float64)))[:k].tolist()) for q in queries
    ]

    t0 = time.monotonic()
    results = [graph.search(q, k, efs) for q in queries]
    query_s = time.monotonic() - t0

    recall = float(
        np.mean([len(t & set(idx.tolist())) / k for t, (idx, _) in zip(truth, results)])
    )
    return {
        "backend": name,
        "build_s": build_s,
        "qps": len(queries) / query_s,
        "recall": recall,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--dim", type=int, default=64)
    ap.add_argument("--queries", type=int, default=100)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--m", type=int, default=16)
    ap.add_argument("--ef-construction", type=int, default=200)
    ap.add_argument("--ef-search", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    x = unit_rows(args.n, args.dim, args.seed)
    queries = unit_rows(args.queries, args.dim, args.seed + 1)

    print(
        f"n={args.n} dim={args.dim} queries={args.queries} k={args.k} "
        f"m={args.m} ef_construction={args.ef_construction} ef_search={args.ef_search}"
    )
    print(f"{'backend':<10} {'build (s)':>10} {'queries/s':>11} {'recall@k':>9}")
    rows = []
    for backend in hnsw.available_backends():
        row = bench_backend(
            backend, x, queries, args.k, args.m,
            args.ef_construction, args.ef_search, args.seed,
        )
        rows.append(row)
        print(
            f"{row['backend']:<10} {row['build_s']:>10.2f} "
            f"{row['qps']:>11.1f} {row['recall']:>9.4f}"
        )
    if len(rows) == 2:
        speedup = rows[1]["build_s"] / rows[0]["build_s"]
        print(f"\ncompiled kernel build speedup: {speedup:.1f}x")


if __name__ == "__main__":
    main()
