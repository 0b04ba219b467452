"""Lexical tf-idf chunk ranking with a deterministic tie-break.

Weights: tf = raw term count, idf = ln((N+1)/(df+1)) + 1, similarity is
cosine. The scoring loop is the one hot path in the pipeline (it runs per
query over the whole corpus), so it lives in a compiled kernel with a
numpy fallback selected at import; set FINQA_PURE_PY=1 to force the
fallback.
"""
from __future__ import annotations

import math
import os
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .corpus import ChunkCorpus
from .errors import EmptyCorpus

if os.environ.get("FINQA_PURE_PY"):
    from . import _score_py as _kernel
else:
    try:
        from . import _score_kernel as _kernel  # type: ignore[attr-defined]
    except ImportError:
        from . import _score_py as _kernel

KERNEL_NAME = _kernel.KERNEL_NAME

_SPLIT = re.compile(r"[^0-9a-z]+")


def _load_stopwords() -> frozenset[str]:
    text = resources.files("finqa.data").joinpath("stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w for w in text.split() if w)


STOPWORDS = _load_stopwords()


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop stopwords."""
    return [t for t in _SPLIT.split(text.lower()) if t and t not in STOPWORDS]


@dataclass(frozen=True)
class RankedChunk:
    chunk_id: str
    score: float
    rank: int

    def to_dict(self) -> dict:
        return {"chunk_id": self.chunk_id, "score": self.score, "rank": self.rank}


class RankedIndex:
    """Inverted tf-idf index over chunk sentences (immutable after build)."""

    def __init__(self, chunk_ids: list[str], texts: list[str]):
        if not chunk_ids:
            raise EmptyCorpus("cannot index an empty corpus")
        self.chunk_ids = list(chunk_ids)
        self.n_chunks = len(chunk_ids)

        token_lists = [tokenize(t) for t in texts]
        df: Counter[str] = Counter()
        for tokens in token_lists:
            df.update(set(tokens))
        self.vocabulary: dict[str, int] = {t: i for i, t in enumerate(sorted(df))}
        n = self.n_chunks
        self.idf = np.array(
            [math.log((n + 1) / (df[t] + 1)) + 1.0 for t in sorted(df)], dtype=np.float64
        )
        self.doc_freq = {t: df[t] for t in df}

        # CSR postings over the vocabulary: token -> (chunk index, tf*idf).
        postings: list[list[tuple[int, float]]] = [[] for _ in self.vocabulary]
        norms = np.zeros(n, dtype=np.float64)
        for ci, tokens in enumerate(token_lists):
            counts = Counter(tokens)
            sq = 0.0
            for tok, tf in counts.items():
                ti = self.vocabulary[tok]
                w = tf * self.idf[ti]
                postings[ti].append((ci, w))
                sq += w * w
            norms[ci] = math.sqrt(sq)
        self.norms = norms
        # Tie-break rank of each chunk position by ascending chunk_id.
        self.id_rank = np.empty(n, dtype=np.int64)
        self.id_rank[np.argsort(np.asarray(self.chunk_ids))] = np.arange(n)

        nnz = sum(len(p) for p in postings)
        self.indptr = np.zeros(len(postings) + 1, dtype=np.int64)
        self.chunk_index = np.zeros(nnz, dtype=np.int32)
        self.weights = np.zeros(nnz, dtype=np.float64)
        pos = 0
        for ti, plist in enumerate(postings):
            for ci, w in plist:
                self.chunk_index[pos] = ci
                self.weights[pos] = w
                pos += 1
            self.indptr[ti + 1] = pos


def build_index(corpus: ChunkCorpus) -> RankedIndex:
    return RankedIndex([c.chunk_id for c in corpus.chunks], [c.sentence for c in corpus.chunks])


def rank(query: str, index: RankedIndex, k: int) -> list[RankedChunk]:
    """Top-k chunks by cosine similarity; ties broken by ascending chunk_id.

    A query with no in-vocabulary tokens returns [] (no grounding available).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter(tokenize(query))
    terms: list[int] = []
    qweights: list[float] = []
    sq = 0.0
    for tok, tf in counts.items():
        ti = index.vocabulary.get(tok)
        if ti is None:
            continue
        w = tf * index.idf[ti]
        terms.append(ti)
        qweights.append(w)
        sq += w * w
    if not terms:
        return []
    qnorm = math.sqrt(sq)

    scores = _kernel.accumulate_scores(
        index.indptr,
        index.chunk_index,
        index.weights,
        np.asarray(terms, dtype=np.int64),
        np.asarray(qweights, dtype=np.float64),
        index.n_chunks,
    )
    denom = index.norms * qnorm
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(denom > 0, scores / denom, 0.0)
    np.clip(cos, 0.0, 1.0, out=cos)

    order = np.lexsort((index.id_rank, -cos))[:k]
    return [
        RankedChunk(chunk_id=index.chunk_ids[int(i)], score=float(cos[int(i)]), rank=r + 1)
        for r, i in enumerate(order)
        if cos[int(i)] > 0.0
    ]
