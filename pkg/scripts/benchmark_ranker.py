#!/usr/bin/env python3
"""Benchmark the compiled ranking kernel against the pure-Python fallback.

Builds a synthetic index (default 10,000 chunks), runs the same query
batch through both `accumulate_scores` implementations, verifies they
agree, and prints per-query timings plus the speedup.

Usage: python3 scripts/benchmark_ranker.py [--chunks N] [--queries N]
"""
from __future__ import annotations

import argparse
import random
import time

import numpy as np

from finqa import _score_py
from finqa.ranking import RankedIndex, tokenize

try:
    from finqa import _score_kernel
except ImportError:
    _score_kernel = None


def build_synthetic_index(n_chunks: int, vocab: int, seed: int = 0) -> RankedIndex:
    rng = random.Random(seed)
    words = [f"term{i}" for i in range(vocab)]
    texts = [" ".join(rng.choice(words) for _ in range(12)) for _ in range(n_chunks)]
    return RankedIndex([f"c{i:06d}" for i in range(n_chunks)], texts)


def query_arrays(index: RankedIndex, query: str):
    terms, weights = [], []
    for tok in set(tokenize(query)):
        ti = index.vocabulary.get(tok)
        if ti is not None:
            terms.append(ti)
            weights.append(index.idf[ti])
    return np.asarray(terms, dtype=np.int64), np.asarray(weights, dtype=np.float64)


def time_kernel(kernel, index: RankedIndex, queries, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for terms, weights in queries:
            kernel.accumulate_scores(
                index.indptr, index.chunk_index, index.weights,
                terms, weights, index.n_chunks,
            )
        best = min(best, time.perf_counter() - start)
    return best / len(queries) * 1000  # ms per query


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--chunks", type=int, default=10_000)
    parser.add_argument("--queries", type=int, default=200)
    parser.add_argument("--vocab", type=int, default=600)
    args = parser.parse_args()

    index = build_synthetic_index(args.chunks, args.vocab)
    rng = random.Random(1)
    words = [f"term{i}" for i in range(args.vocab)]
    queries = [
        query_arrays(index, " ".join(rng.choice(words) for _ in range(6)))
        for _ in range(args.queries)
    ]

    py_ms = time_kernel(_score_py, index, queries)
    print(f"chunks={args.chunks} queries={args.queries}")
    print(f"python kernel : {py_ms:8.4f} ms/query")

    if _score_kernel is None:
        print("cython kernel : not built (pip install -e . --no-build-isolation)")
        return

    # parity check before timing
    for terms, weights in queries[:20]:
        a = _score_py.accumulate_scores(
            index.indptr, index.chunk_index, index.weights, terms, weights, index.n_chunks
        )
        b = _score_kernel.accumulate_scores(
            index.indptr, index.chunk_index, index.weights, terms, weights, index.n_chunks
        )
        np.testing.assert_allclose(a, np.asarray(b), rtol=1e-12, atol=1e-12)

    cy_ms = time_kernel(_score_kernel, index, queries)
    print(f"cython kernel : {cy_ms:8.4f} ms/query")
    print(f"speedup       : {py_ms / cy_ms:8.2f}x (outputs verified identical)")


if __name__ == "__main__":
    main()
