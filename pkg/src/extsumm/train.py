"""Losses and training loops for the sentence scorers.

Cross-entropy is class-weighted (w_c = N / (num_classes * N_c)) to counter
the heavy label imbalance of extractive summarization, and is averaged per
sentence and per batch document so learning rates stay scale-stable across
document lengths. The redundancy penalty

    rd = (1 / n^2) * sum_i sum_j P_i * P_j * sim[i][j]

runs over all ordered pairs including i = j; the 1/n^2 factor keeps it in
[-1, 1] for any document length. The combined objective is
beta * ce + (1 - beta) * rd.

Multi-task training oversamples the rhetorical stream to the summarization
document count and strictly alternates batches, summarization first. The
rhetorical batches use plain unweighted cross-entropy.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus
from .nn import ModelParams, init_params, model_backward, model_forward
from .simvec import similarity_matrix
from .validation import (
    ValidationError,
    check_binary_labels,
    check_probability_rows,
    check_scores,
    check_similarity_matrix,
)

LOG_CLAMP = 1e-12


@dataclass
class ClassWeights:
    w: np.ndarray  # (2,)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.shape != (2,):
            raise ValidationError("class weights must have exactly 2 entries")
        if not np.all(self.w > 0.0):
            raise ValidationError("class weights must be positive")

    @classmethod
    def unit(cls) -> "ClassWeights":
        return cls(w=np.ones(2))


@dataclass
class LossConfig:
    beta: float = 0.85
    use_rdloss: bool = False
    class_weights: ClassWeights = field(default_factory=ClassWeights.unit)

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValidationError(f"beta must lie in [0, 1], got {self.beta}")


@dataclass
class TrainConfig:
    architecture: str = "st"
    num_layers: int = 1
    hidden_size: int = 128
    upper_hidden_size: int | None = None
    dropout_es: float = 0.5
    dropout_rl: float | None = None
    batch_size: int = 8
    epochs: int = 5
    learning_rate: float = 0.00261
    seed: int = 0
    selection_lambda: float = 0.8

    def __post_init__(self):
        if self.num_layers != 1:
            raise ValidationError("each recurrent block uses exactly one layer")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValidationError("batch_size must be >= 1 and epochs >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown train config fields: {sorted(unknown)}")
        return cls(**d)


def compute_class_weights(corpus: Corpus, task: str = "summarization") -> ClassWeights:
    """w_c = N / (2 * N_c) over all sentences of the training corpus."""
    field_name = "summary_label" if task == "summarization" else "rhetorical_label"
    counts = np.zeros(2, dtype=np.int64)
    for doc in corpus.documents:
        for sent in doc.sentences:
            label = getattr(sent, field_name)
            if label is None:
                raise ValidationError(f"document {doc.id!r}: missing {field_name}")
            counts[label] += 1
    if counts.min() == 0:
        raise ValidationError(f"class weights undefined: a {task} class is absent")
    total = counts.sum()
    return ClassWeights(w=total / (2.0 * counts))


def weighted_ce(prob_rows, labels, cw: ClassWeights):
    """Mean class-weighted cross-entropy and its gradient w.r.t. the
    pre-softmax logits."""
    probs = check_probability_rows(prob_rows)
    n = probs.shape[0]
    y = check_binary_labels(labels, n)
    w_per_row = cw.w[y]
    p_true = probs[np.arange(n), y]
    loss = float(-(w_per_row * np.log(np.maximum(p_true, LOG_CLAMP))).sum() / n)
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), y] = 1.0
    grad = (w_per_row[:, None] / n) * (probs - onehot)
    return loss, grad


def redundancy_loss(scores, sim):
    """Pairwise-similarity penalty over all ordered pairs, scaled by 1/n^2.

    Returns the loss and its gradient w.r.t. the score vector:
    grad_i = (2 / n^2) * sum_j P_j * sim[i][j] (sim is symmetric).
    """
    p = check_scores(scores)
    n = p.shape[0]
    s = check_similarity_matrix(sim, n)
    loss = float(p @ s @ p / (n * n))
    grad = 2.0 * (s @ p) / (n * n)
    return loss, grad


def combined_loss(ce: float, rd: float, beta: float) -> float:
    if not 0.0 <= beta <= 1.0:
        raise ValidationError(f"beta must lie in [0, 1], got {beta}")
    return beta * ce + (1.0 - beta) * rd


def score_grad_to_logit_grad(score_grad, probs):
    """Convert d(loss)/d(positive score) into a 2-class logit gradient.

    With P1 = softmax(logits)[1]: dP1/dlogit1 = P1*P0 and dP1/dlogit0 = -P1*P0.
    """
    g = np.asarray(score_grad, dtype=np.float64)
    pr = check_probability_rows(probs)
    jac = g * pr[:, 1] * pr[:, 0]
    return np.stack([-jac, jac], axis=1)


@dataclass
class AdamState:
    m: dict
    v: dict
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, params: ModelParams) -> "AdamState":
        return cls(m=params.zero_grads(), v=params.zero_grads())


def adam_step(params: ModelParams, grads: dict, state: AdamState, lr: float, t: int):
    """Standard bias-corrected first/second-moment update, applied in place."""
    if t < 1:
        raise ValidationError("adam step counter starts at 1")
    b1, b2 = state.beta1, state.beta2
    for name, arr in params.blocks():
        g = grads[name]
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = state.m[name] / (1.0 - b1**t)
        v_hat = state.v[name] / (1.0 - b2**t)
        arr -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


# ---------------------------------------------------------------------------
# training loops
# ---------------------------------------------------------------------------


def _labels_for(doc, task: str) -> np.ndarray:
    if task == "summarization":
        labels = doc.summary_labels()
    else:
        labels = doc.rhetorical_labels()
    return labels


def _doc_loss_and_grads(doc, params, task, lcfg, sim, cw, rng):
    """Forward + loss + backward for one document. Returns (loss, grads)."""
    _, state = model_forward(doc, params, task=task, training=True, rng=rng, return_state=True)
    probs = state.probs
    labels = _labels_for(doc, task)
    ce, ce_grad = weighted_ce(probs, labels, cw)
    if task == "summarization" and lcfg.use_rdloss:
        rd, rd_score_grad = redundancy_loss(probs[:, 1], sim)
        loss = combined_loss(ce, rd, lcfg.beta)
        dlogits = lcfg.beta * ce_grad + (1.0 - lcfg.beta) * score_grad_to_logit_grad(
            rd_score_grad, probs
        )
    else:
        loss = ce
        dlogits = ce_grad
    grads = model_backward(doc, params, task, dlogits, state)
    return loss, grads


def _mean_grads(per_doc: list) -> dict:
    out = {name: arr.copy() for name, arr in per_doc[0].items()}
    for grads in per_doc[1:]:
        for name in out:
            out[name] += grads[name]
    for name in out:
        out[name] /= len(per_doc)
    return out


def _batches(items: list, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def _init_from_config(cfg: TrainConfig, d_in: int, seed: int) -> ModelParams:
    return init_params(
        cfg.architecture,
        d_in,
        cfg.hidden_size,
        seed,
        upper_hidden=cfg.upper_hidden_size,
        dropout={"summarization": cfg.dropout_es, "rhetorical": cfg.dropout_rl or 0.0},
    )


def train_single_task(train: Corpus, cfg: TrainConfig, lcfg: LossConfig, seed: int | None = None):
    """Train a summarization scorer; returns (params, per-epoch loss log).

    Deterministic for a fixed seed: one generator drives the document
    shuffle and every dropout mask, and gradient reduction follows batch
    order.
    """
    if not train.documents:
        raise ValidationError("empty training corpus")
    seed = cfg.seed if seed is None else seed
    params = _init_from_config(cfg, train.dimension, seed)
    rng = np.random.default_rng(seed)
    state = AdamState.for_model(params)
    sims = [similarity_matrix(doc) if lcfg.use_rdloss else None for doc in train.documents]
    log = []
    t = 0
    for epoch in range(cfg.epochs):
        started = time.monotonic()
        order = rng.permutation(len(train.documents))
        epoch_losses = []
        for batch in _batches(list(order), cfg.batch_size):
            per_doc = []
            batch_losses = []
            for i in batch:
                loss, grads = _doc_loss_and_grads(
                    train.documents[i], params, "summarization", lcfg, sims[i],
                    lcfg.class_weights, rng,
                )
                per_doc.append(grads)
                batch_losses.append(loss)
            t += 1
            adam_step(params, _mean_grads(per_doc), state, cfg.learning_rate, t)
            epoch_losses.extend(batch_losses)
        log.append(
            {
                "epoch": epoch,
                "losses": {"summarization": float(np.mean(epoch_losses))},
                "wall_time": time.monotonic() - started,
            }
        )
    return params, log


def oversample_indices(rng, pool_size: int, target_size: int) -> np.ndarray:
    """Seeded draw with replacement from range(pool_size), length target_size."""
    return rng.integers(0, pool_size, size=target_size)


def train_multi_task(summ: Corpus, rhet: Corpus, cfg: TrainConfig, lcfg: LossConfig, seed: int | None = None):
    """Alternating multi-task training; returns (params, per-epoch loss log).

    Batches strictly alternate summarization / rhetorical, starting with
    summarization. The rhetorical stream is resampled with replacement each
    epoch to match the summarization document count; its batches use plain
    unweighted cross-entropy.
    """
    if cfg.architecture not in ("mt_shared", "mt_hierarchical"):
        raise ValidationError("multi-task training requires an mt_* architecture")
    if not summ.documents or not rhet.documents:
        raise ValidationError("empty training corpus")
    seed = cfg.seed if seed is None else seed
    params = _init_from_config(cfg, summ.dimension, seed)
    rng = np.random.default_rng(seed)
    state = AdamState.for_model(params)
    summ_sims = [similarity_matrix(doc) if lcfg.use_rdloss else None for doc in summ.documents]
    unit = ClassWeights.unit()
    log = []
    t = 0
    for epoch in range(cfg.epochs):
        started = time.monotonic()
        summ_order = list(rng.permutation(len(summ.documents)))
        rhet_stream = list(oversample_indices(rng, len(rhet.documents), len(summ.documents)))
        summ_batches = list(_batches(summ_order, cfg.batch_size))
        rhet_batches = list(_batches(rhet_stream, cfg.batch_size))
        batch_tasks = []
        task_losses = {"summarization": [], "rhetorical": []}
        docs_per_task = {"summarization": len(summ_order), "rhetorical": len(rhet_stream)}
        for summ_batch, rhet_batch in zip(summ_batches, rhet_batches):
            for task, batch in (("summarization", summ_batch), ("rhetorical", rhet_batch)):
                corpus = summ if task == "summarization" else rhet
                per_doc = []
                for i in batch:
                    loss, grads = _doc_loss_and_grads(
                        corpus.documents[i],
                        params,
                        task,
                        lcfg,
                        summ_sims[i] if task == "summarization" else None,
                        lcfg.class_weights if task == "summarization" else unit,
                        rng,
                    )
                    per_doc.append(grads)
                    task_losses[task].append(loss)
                t += 1
                adam_step(params, _mean_grads(per_doc), state, cfg.learning_rate, t)
                batch_tasks.append(task)
        log.append(
            {
                "epoch": epoch,
                "losses": {k: float(np.mean(v)) for k, v in task_losses.items()},
                "wall_time": time.monotonic() - started,
                "batch_tasks": batch_tasks,
                "docs_per_task": docs_per_task,
            }
        )
    return params, log
