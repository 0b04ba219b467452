"""Numpy fallback for the sparse cosine accumulation kernel."""
from __future__ import annotations

import numpy as np

KERNEL_NAME = "python"


def accumulate_scores(indptr, chunk_indices, weights, query_terms, query_weights, n_chunks):
    """Dot products of the query vector against every chunk vector.

    Postings are CSR over the vocabulary: token t owns
    chunk_indices[indptr[t]:indptr[t+1]] with matching weights.
    """
    scores = np.zeros(n_chunks, dtype=np.float64)
    for t, qw in zip(query_terms, query_weights):
        start, end = indptr[t], indptr[t + 1]
        np.add.at(scores, chunk_indices[start:end], qw * weights[start:end])
    return scores
