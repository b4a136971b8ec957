"""Greedy sentence selection: MMR with query relevance or model confidences.

Each step picks the unchosen sentence maximizing

    lambda * relevance(i) - (1 - lambda) * max_{j in chosen} sim[i][j]

where the max over an empty chosen set is 0 and ties break toward the lowest
sentence index. Negative combined scores are still selected: summaries are
fixed-length, so the quota is always filled.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .corpus import Document
from .validation import ValidationError, check_scores, check_similarity_matrix

RELEVANCE_SOURCES = ("query_cosine", "model_scores")


@dataclass
class SelectionConfig:
    lambda_: float = 0.8
    n_select: int = 5
    relevance_source: str = "model_scores"

    def __post_init__(self):
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ValidationError(f"lambda must lie in [0, 1], got {self.lambda_}")
        if self.n_select < 1:
            raise ValidationError(f"n_select must be >= 1, got {self.n_select}")
        if self.relevance_source not in RELEVANCE_SOURCES:
            raise ValidationError(f"unknown relevance_source {self.relevance_source!r}")


@dataclass
class TraceStep:
    index: int
    relevance: float
    max_similarity: float
    score: float


@dataclass
class SelectionResult:
    chosen: list[int]
    trace: list[TraceStep] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"chosen": list(self.chosen), "trace": [asdict(t) for t in self.trace]}


def mmr_select(
    doc: Document,
    scores=None,
    cfg: SelectionConfig | None = None,
    sim=None,
    q_rel=None,
) -> SelectionResult:
    """Select min(cfg.n_select, n) sentences greedily by marginal relevance.

    Relevance comes from ``q_rel`` (sentence-to-query cosine) when
    cfg.relevance_source is "query_cosine", otherwise from ``scores``, the
    scorer's positive-class confidences.
    """
    cfg = cfg or SelectionConfig()
    n = len(doc.sentences)
    sim = check_similarity_matrix(sim, n)
    if cfg.relevance_source == "query_cosine":
        if q_rel is None:
            raise ValidationError("relevance_source=query_cosine requires q_rel")
        relevance = np.asarray(q_rel, dtype=np.float64)
        if relevance.shape != (n,):
            raise ValidationError(f"q_rel has shape {relevance.shape}, expected ({n},)")
    else:
        if scores is None:
            raise ValidationError("relevance_source=model_scores requires scores")
        relevance = check_scores(scores, n)

    lam = cfg.lambda_
    chosen: list[int] = []
    trace: list[TraceStep] = []
    remaining = list(range(n))
    quota = min(cfg.n_select, n)
    while len(chosen) < quota:
        best_idx = -1
        best_score = -np.inf
        best_rel = 0.0
        best_maxsim = 0.0
        for i in remaining:
            max_sim = max((sim[i, j] for j in chosen), default=0.0)
            combined = lam * relevance[i] - (1.0 - lam) * max_sim
            if combined > best_score:
                best_idx, best_score = i, combined
                best_rel, best_maxsim = float(relevance[i]), float(max_sim)
        chosen.append(best_idx)
        remaining.remove(best_idx)
        trace.append(TraceStep(best_idx, best_rel, best_maxsim, float(best_score)))
    return SelectionResult(chosen=chosen, trace=trace)


def top_k(scores, k: int) -> list[int]:
    """Indices of the k largest scores, in descending order, ties by lowest index."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    arr = np.asarray(scores, dtype=np.float64)
    order = sorted(range(arr.shape[0]), key=lambda i: (-arr[i], i))
    return order[: min(k, arr.shape[0])]
