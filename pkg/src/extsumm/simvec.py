"""Vector math shared by selection, losses and baselines.

All arithmetic runs in float64. Cosine of a zero vector is defined as 0 so
padded or degenerate sentences stay neutral instead of poisoning selection,
and results are clamped to [-1, 1] to absorb floating-point drift.
"""

from __future__ import annotations

import numpy as np

from .corpus import Document
from .validation import ValidationError, as_float_vector


def cosine(a, b) -> float:
    """Cosine similarity in [-1, 1]; 0 when either vector has zero norm."""
    va = as_float_vector(a, "a")
    vb = as_float_vector(b, "b")
    if va.shape[0] != vb.shape[0]:
        raise ValidationError(f"length mismatch: {va.shape[0]} vs {vb.shape[0]}")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return 0.0
    value = float(np.dot(va, vb) / (na * nb))
    return min(1.0, max(-1.0, value))


def similarity_matrix(doc: Document) -> np.ndarray:
    """Pairwise cosine similarity of a document's sentence embeddings.

    Each unordered pair is computed once and mirrored, so the result is
    exactly symmetric. Diagonal entries are 1 for nonzero embeddings and 0
    for zero vectors.
    """
    emb = doc.embedding_matrix()
    n = emb.shape[0]
    norms = np.linalg.norm(emb, axis=1)
    nonzero = norms > 0.0
    unit = np.zeros_like(emb)
    unit[nonzero] = emb[nonzero] / norms[nonzero, None]
    sim = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        row = unit[i + 1 :] @ unit[i]
        sim[i, i + 1 :] = row
        sim[i + 1 :, i] = row
    np.clip(sim, -1.0, 1.0, out=sim)
    sim[np.diag_indices(n)] = np.where(nonzero, 1.0, 0.0)
    return sim


def query_embedding(doc: Document) -> np.ndarray:
    """Document query vector: the componentwise mean of all sentence embeddings."""
    emb = doc.embedding_matrix()
    return emb.mean(axis=0)


def query_relevance(doc: Document) -> np.ndarray:
    """Cosine of every sentence against the document query vector."""
    q = query_embedding(doc)
    return np.array([cosine(s.embedding, q) for s in doc.sentences], dtype=np.float64)
