"""Synthetic corpora with known gold labels, used for end-to-end checks.

Each document gets one "summary" centroid and a set of background centroids
placed on orthogonal axes at a configurable multiple of the noise scale, so
class structure is separable by construction. Positive-label sentences are
sampled near the per-document summary centroid, negatives near background
centroids. The first background cluster also counts as rhetorical-positive,
making the rhetorical task a strict superset of the summarization one.

Duplicate injection copies negative sentences onto other negative positions
(text, embedding and labels), which adds exact redundancy without growing
the gold sets; the end-to-end recall threshold stays attainable by
construction.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, Document, Sentence
from .validation import ValidationError

_OUTCOME_CYCLE = ("remanded", "denied", "granted")


def _centroids(dim: int, clusters: int, separation: float, noise: float) -> np.ndarray:
    """One summary centroid plus `clusters` background centroids, pairwise
    at least separation * noise apart (orthogonal axes, distance a*sqrt(2))."""
    total = clusters + 1
    if dim < total:
        raise ValidationError(f"dim must be >= clusters + 1 ({total}), got {dim}")
    scale = separation * noise
    cents = np.zeros((total, dim))
    for k in range(total):
        cents[k, k] = scale
    return cents


def _cluster_vocab(cluster: int, size: int = 8) -> list[str]:
    return [f"topic{cluster}word{k}" for k in range(size)]


def _sentence_text(rng, cluster: int) -> str:
    vocab = _cluster_vocab(cluster)
    length = int(rng.integers(6, 11))
    words = [vocab[int(rng.integers(0, len(vocab)))] for _ in range(length)]
    return " ".join(words)


def make_synthetic_corpora(
    docs: int,
    sentences_per_doc: int,
    dim: int,
    clusters: int = 3,
    duplicate_rate: float = 0.0,
    seed: int = 0,
    separation: float = 6.0,
    positives_per_doc: int = 5,
    rhet_docs: int | None = None,
    noise: float = 1.0,
):
    """Build (summarization corpus, rhetorical corpus, centroid matrix).

    The summarization corpus carries both label kinds plus one reference
    summary per document (the gold positive indices). The rhetorical corpus
    is a fresh draw with rhetorical labels only.
    """
    if docs < 1 or sentences_per_doc < 1 or dim < 1 or clusters < 1:
        raise ValidationError("sizes must be positive")
    if positives_per_doc >= sentences_per_doc:
        raise ValidationError("positives_per_doc must be < sentences_per_doc")
    if not 0.0 <= duplicate_rate < 1.0:
        raise ValidationError("duplicate_rate must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    cents = _centroids(dim, clusters, separation, noise)

    def build_doc(doc_id: str, outcome: str) -> Document:
        n = sentences_per_doc
        doc_summary_centroid = cents[0] + rng.normal(0.0, 0.5 * noise, size=dim)
        positive_at = set(rng.choice(n, size=positives_per_doc, replace=False).tolist())
        records = []
        for i in range(n):
            if i in positive_at:
                cluster = 0
                emb = doc_summary_centroid + rng.normal(0.0, noise, size=dim)
            else:
                cluster = int(rng.integers(1, clusters + 1))
                emb = cents[cluster] + rng.normal(0.0, noise, size=dim)
            records.append(
                {
                    "text": _sentence_text(rng, cluster),
                    "embedding": emb,
                    "summary": 1 if i in positive_at else 0,
                    # cluster 1 sentences share the rhetorical-positive role
                    "rhetorical": 1 if (i in positive_at or cluster == 1) else 0,
                }
            )
        n_dup = int(duplicate_rate * n)
        negatives = [i for i in range(n) if i not in positive_at]
        if n_dup > 0 and len(negatives) >= 2:
            n_dup = min(n_dup, len(negatives) - 1)
            picks = rng.choice(len(negatives), size=2 * n_dup, replace=False)
            for k in range(n_dup):
                src = negatives[int(picks[2 * k])]
                dst = negatives[int(picks[2 * k + 1])]
                records[dst] = dict(records[src])
        sentences = [
            Sentence(
                index=i,
                text=rec["text"],
                embedding=np.asarray(rec["embedding"], dtype=np.float64),
                summary_label=rec["summary"],
                rhetorical_label=rec["rhetorical"],
            )
            for i, rec in enumerate(records)
        ]
        gold = sorted(i for i, rec in enumerate(records) if rec["summary"] == 1)
        return Document(id=doc_id, outcome=outcome, sentences=sentences, reference_summaries=[gold])

    summ_documents = [
        build_doc(f"synth-{k:04d}", _OUTCOME_CYCLE[k % 3]) for k in range(docs)
    ]
    rhet_count = rhet_docs if rhet_docs is not None else max(2, docs // 2)
    rhet_documents = []
    for k in range(rhet_count):
        doc = build_doc(f"synth-rhet-{k:04d}", _OUTCOME_CYCLE[k % 3])
        for s in doc.sentences:
            s.summary_label = None
        doc.reference_summaries = []
        rhet_documents.append(doc)

    summ_corpus = Corpus(dimension=dim, documents=summ_documents, task_tag="summarization")
    rhet_corpus = Corpus(dimension=dim, documents=rhet_documents, task_tag="rhetorical")
    return summ_corpus, rhet_corpus, cents


def nearest_centroid_accuracy(corpus: Corpus, centroids: np.ndarray) -> float:
    """Self-check: fraction of sentences whose nearest centroid matches their
    summary label (centroid 0 is the positive one)."""
    correct = 0
    total = 0
    for doc in corpus.documents:
        for s in doc.sentences:
            dists = np.linalg.norm(centroids - s.embedding, axis=1)
            predicted = 1 if int(np.argmin(dists)) == 0 else 0
            correct += int(predicted == s.summary_label)
            total += 1
    return correct / total
