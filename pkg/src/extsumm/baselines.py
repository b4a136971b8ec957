"""Classical comparison systems: TextRank over BM25 sentence similarity and
the rhetorical-filter pipelines that feed an unsupervised selector.

BM25 statistics are computed per document (each sentence acts as one BM25
"document"), with k1 = 1.5, b = 0.75 and the +1-floored IDF so similarity
weights stay nonnegative. Sentence-to-sentence similarity is symmetrized by
averaging both query directions. TextRank runs a weighted PageRank power
iteration over that graph without self-loops; the mass of nodes with zero
total edge weight is redistributed uniformly, so only the uniform teleport
floor reaches isolated sentences and scores always sum to n.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import Document, Sentence
from .metrics import tokenize
from .nn import ModelParams, model_forward
from .select import SelectionConfig, mmr_select
from .simvec import query_relevance, similarity_matrix
from .validation import ValidationError


@dataclass
class Bm25Config:
    k1: float = 1.5
    b: float = 0.75
    tokenizer: callable = tokenize

    def __post_init__(self):
        if self.k1 <= 0.0 or not 0.0 <= self.b <= 1.0:
            raise ValidationError("bm25 requires k1 > 0 and 0 <= b <= 1")


@dataclass
class Bm25Stats:
    """Token statistics over one document's sentences."""

    token_lists: list
    idf: dict
    avg_len: float

    @classmethod
    def from_sentences(cls, texts, cfg: Bm25Config) -> "Bm25Stats":
        token_lists = [cfg.tokenizer(t) for t in texts]
        if not token_lists:
            raise ValidationError("bm25 statistics require at least one sentence")
        n = len(token_lists)
        df = Counter()
        for tokens in token_lists:
            df.update(set(tokens))
        idf = {t: math.log(1.0 + (n - d + 0.5) / (d + 0.5)) for t, d in df.items()}
        avg_len = sum(len(t) for t in token_lists) / n
        return cls(token_lists=token_lists, idf=idf, avg_len=avg_len)


def _bm25_directed(query_tokens, doc_tokens, stats: Bm25Stats, cfg: Bm25Config) -> float:
    tf = Counter(doc_tokens)
    if stats.avg_len == 0.0:
        return 0.0
    norm = cfg.k1 * (1.0 - cfg.b + cfg.b * len(doc_tokens) / stats.avg_len)
    score = 0.0
    for term in query_tokens:
        f = tf.get(term, 0)
        if f == 0:
            continue
        score += stats.idf.get(term, 0.0) * f * (cfg.k1 + 1.0) / (f + norm)
    return score


def bm25_sentence_sim(a, b, stats: Bm25Stats, cfg: Bm25Config | None = None) -> float:
    """Symmetrized BM25 score of two token sequences: (a->b + b->a) / 2."""
    cfg = cfg or Bm25Config()
    return 0.5 * (_bm25_directed(a, b, stats, cfg) + _bm25_directed(b, a, stats, cfg))


def weighted_pagerank(
    weights: np.ndarray,
    damping: float = 0.85,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> np.ndarray:
    """Power iteration over a symmetric nonnegative weight matrix.

    Works on the sum-to-n scale: scores start at 1, each node redistributes
    its score along its edges in proportion to edge weight, isolated nodes
    spread theirs uniformly, and every node keeps the (1 - damping) teleport
    floor. Convergence is successive-iterate L1 distance < tol; raises on
    non-convergence, reporting the final residual.
    """
    weights = np.asarray(weights, dtype=np.float64)
    n = weights.shape[0]
    degree = weights.sum(axis=1)
    connected = degree > 0.0
    scores = np.ones(n)
    residual = np.inf
    for _ in range(max_iter):
        spread = np.zeros(n)
        if connected.any():
            contrib = scores[connected] / degree[connected]
            spread = weights[connected].T @ contrib
        dangling = scores[~connected].sum() / n
        updated = (1.0 - damping) + damping * (spread + dangling)
        residual = float(np.abs(updated - scores).sum())
        scores = updated
        if residual < tol:
            return scores
    raise ValidationError(
        f"pagerank failed to converge within {max_iter} iterations "
        f"(final residual {residual:.3e})"
    )


def bm25_similarity_graph(doc: Document, cfg: Bm25Config | None = None) -> np.ndarray:
    """Symmetric BM25 similarity weights between all sentence pairs (no
    self-loops)."""
    cfg = cfg or Bm25Config()
    n = len(doc.sentences)
    stats = Bm25Stats.from_sentences([s.text for s in doc.sentences], cfg)
    weights = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            w = bm25_sentence_sim(stats.token_lists[i], stats.token_lists[j], stats, cfg)
            weights[i, j] = w
            weights[j, i] = w
    return weights


def textrank(
    doc: Document,
    cfg: Bm25Config | None = None,
    damping: float = 0.85,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> np.ndarray:
    """Weighted PageRank scores over the BM25 sentence-similarity graph.

    Scores are nonnegative and sum to n.
    """
    return weighted_pagerank(bm25_similarity_graph(doc, cfg), damping, tol, max_iter)


def textrank_summarize(doc: Document, token_budget: int, cfg: Bm25Config | None = None) -> list[int]:
    """Top-ranked sentences until the next one would break the token budget.

    At least one sentence is always returned, budget notwithstanding. Output
    is re-sorted into document order.
    """
    if token_budget < 1:
        raise ValidationError("token budget must be >= 1")
    cfg = cfg or Bm25Config()
    ranks = textrank(doc, cfg)
    order = sorted(range(len(ranks)), key=lambda i: (-ranks[i], i))
    chosen = []
    used = 0
    for i in order:
        cost = len(cfg.tokenizer(doc.sentences[i].text))
        if used + cost > token_budget:
            break
        chosen.append(i)
        used += cost
    if not chosen:
        chosen = [order[0]]
    return sorted(chosen)


@dataclass
class PipelineResult:
    chosen: list[int]
    kept: list[int]
    fallback_full_document: bool = False
    metadata: dict = field(default_factory=dict)


def rl_pipeline(
    doc: Document,
    labeler: ModelParams,
    selector: str = "mmr",
    lambda_: float = 0.9,
    n_select: int = 5,
    token_budget: int = 160,
    threshold: float = 0.5,
) -> PipelineResult:
    """Filter to predicted rhetorical-positive sentences, then run a selector.

    The labeler is a single-task scorer trained on rhetorical labels;
    sentences with positive-class probability > threshold are kept. Selector
    "mmr" runs query-relevance MMR (n_select winners); "textrank" runs the
    token-budget ranker. Chosen indices are mapped back to the original
    document and returned in increasing order.
    """
    if selector not in ("mmr", "textrank"):
        raise ValidationError(f"unknown selector {selector!r}")
    scores = model_forward(doc, labeler, task="summarization", training=False)
    kept = [i for i, p in enumerate(scores) if p > threshold]
    fallback = not kept
    if fallback:
        kept = list(range(len(doc.sentences)))
    sub = Document(
        id=doc.id,
        outcome=doc.outcome,
        sentences=[
            Sentence(index=k, text=s.text, embedding=s.embedding,
                     summary_label=s.summary_label, rhetorical_label=s.rhetorical_label)
            for k, s in enumerate(doc.sentences[i] for i in kept)
        ],
    )
    if selector == "mmr":
        cfg = SelectionConfig(lambda_=lambda_, n_select=n_select, relevance_source="query_cosine")
        result = mmr_select(sub, cfg=cfg, sim=similarity_matrix(sub), q_rel=query_relevance(sub))
        local = result.chosen
    else:
        local = textrank_summarize(sub, token_budget)
    chosen = sorted(kept[i] for i in local)
    return PipelineResult(
        chosen=chosen,
        kept=kept,
        fallback_full_document=fallback,
        metadata={"selector": selector, "kept_count": len(kept)},
    )
