"""Top-k cosine-similarity retrieval over knowledge-base protein embeddings.

Exhaustive linear scan; exact, deterministic, ties broken by ascending id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoders import Embedding
from .errors import DimensionMismatchError, ZeroNormError

DEFAULT_K = 5


@dataclass(frozen=True)
class SimilarityHit:
    pdb_id: str
    score: float


def topk_similar(
    query: Embedding, kb_embeddings: dict[str, Embedding], k: int = DEFAULT_K
) -> list[SimilarityHit]:
    """The min(k, |kb|) most cosine-similar entries, score descending,
    ties by ascending pdb_id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    qnorm = np.linalg.norm(query.vector)
    if qnorm == 0.0:
        raise ZeroNormError("query vector has zero norm")
    hits = []
    for pdb_id, emb in kb_embeddings.items():
        if emb.dim != query.dim or emb.encoder_id != query.encoder_id:
            raise DimensionMismatchError(
                f"embedding for {pdb_id} ({emb.encoder_id}, dim {emb.dim}) does not"
                f" match query ({query.encoder_id}, dim {query.dim})"
            )
        vnorm = np.linalg.norm(emb.vector)
        if vnorm == 0.0:
            raise ZeroNormError(f"zero-norm embedding for {pdb_id}")
        score = float(np.dot(query.vector, emb.vector) / (qnorm * vnorm))
        hits.append(SimilarityHit(pdb_id=pdb_id, score=score))
    hits.sort(key=lambda h: (-h.score, h.pdb_id))
    return hits[:k]
