# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython kernel for the sparse cosine accumulation hot loop."""

import numpy as np
cimport numpy as cnp

KERNEL_NAME = "cython"


def accumulate_scores(
    cnp.int64_t[::1] indptr,
    cnp.int32_t[::1] chunk_indices,
    cnp.float64_t[::1] weights,
    cnp.int64_t[::1] query_terms,
    cnp.float64_t[::1] query_weights,
    Py_ssize_t n_chunks,
):
    """Dot products of the query vector against every chunk vector."""
    scores_arr = np.zeros(n_chunks, dtype=np.float64)
    cdef cnp.float64_t[::1] scores = scores_arr
    cdef Py_ssize_t i, j, start, end
    cdef cnp.int64_t t
    cdef double qw
    for i in range(query_terms.shape[0]):
        t = query_terms[i]
        qw = query_weights[i]
        start = indptr[t]
        end = indptr[t + 1]
        for j in range(start, end):
            scores[chunk_indices[j]] += qw * weights[j]
    return scores_arr
