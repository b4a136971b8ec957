"""Hyperparameter search harnesses: selection-weight sweeps and seeded
random/grid search over training configurations with k-fold cross-validation.

Every trial records the trio of mean token count, selection recall and
ROUGE-L alongside the declared objective, mirroring how the selection weight
is usually tuned: the harness exposes the trade-off, the objective picks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, split_corpus
from .metrics import rouge_l, selection_recall, tokenize
from .nn import model_forward
from .select import SelectionConfig, mmr_select
from .simvec import query_relevance, similarity_matrix
from .train import LossConfig, TrainConfig, compute_class_weights, train_multi_task, train_single_task
from .validation import ValidationError

OBJECTIVES = ("rouge_l", "recall")

DEFAULT_LAMBDA_GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


@dataclass
class SweepSpec:
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    beta_grid: tuple = (0.775, 0.85, 0.9)
    train_ranges: dict = field(default_factory=dict)
    trials: int = 1
    seed: int = 0
    objective: str = "rouge_l"
    folds: int = 5
    sampling: str = "random"

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValidationError(f"objective must be one of {OBJECTIVES}")
        if self.lambda_grid and min(self.lambda_grid) < 0.5:
            raise ValidationError("model lambda grid floor is 0.5")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.sampling not in ("random", "grid"):
            raise ValidationError("sampling must be 'random' or 'grid'")


@dataclass
class TrialResult:
    trial_id: int
    config: dict
    fold_objectives: list
    mean_objective: float
    mean_tokens: float
    mean_recall: float
    mean_rouge_l: float


@dataclass
class SweepResult:
    trials: list
    objective: str

    @property
    def best_trial_id(self) -> int:
        best = max(self.trials, key=lambda t: (t.mean_objective, -t.trial_id))
        return best.trial_id

    @property
    def best_config(self) -> dict:
        return next(t.config for t in self.trials if t.trial_id == self.best_trial_id)

    def to_rows(self) -> list:
        """Flat records for serialization / plotting."""
        return [
            {
                "trial_id": t.trial_id,
                **{f"config.{k}": v for k, v in t.config.items()},
                "fold_objectives": list(t.fold_objectives),
                "mean_objective": t.mean_objective,
                "mean_tokens": t.mean_tokens,
                "mean_recall": t.mean_recall,
                "mean_rouge_l": t.mean_rouge_l,
            }
            for t in self.trials
        ]


def _doc_selection_metrics(doc, chosen) -> tuple:
    """(token count, mean recall over references, mean ROUGE-L over references)."""
    chosen_sorted = sorted(chosen)
    cand_tokens = tokenize(" ".join(doc.sentences[i].text for i in chosen_sorted))
    recalls = []
    rouges = []
    for ref in doc.reference_summaries:
        ref_tokens = tokenize(" ".join(doc.sentences[i].text for i in sorted(ref)))
        recalls.append(selection_recall(chosen_sorted, ref))
        rouges.append(rouge_l(cand_tokens, ref_tokens).f1)
    return len(cand_tokens), float(np.mean(recalls)), float(np.mean(rouges))


def _evaluate_selection(scorer, corpus: Corpus, lambda_: float, n_select: int, objective: str):
    """Run selection over every document and aggregate the metric trio."""
    tokens, recalls, rouges = [], [], []
    for doc in corpus.documents:
        sim = similarity_matrix(doc)
        if scorer == "query_cosine":
            cfg = SelectionConfig(lambda_=lambda_, n_select=n_select, relevance_source="query_cosine")
            result = mmr_select(doc, cfg=cfg, sim=sim, q_rel=query_relevance(doc))
        else:
            cfg = SelectionConfig(lambda_=lambda_, n_select=n_select, relevance_source="model_scores")
            result = mmr_select(doc, scores=scorer(doc), cfg=cfg, sim=sim)
        t, r, rl = _doc_selection_metrics(doc, result.chosen)
        tokens.append(t)
        recalls.append(r)
        rouges.append(rl)
    stats = {
        "mean_tokens": float(np.mean(tokens)),
        "mean_recall": float(np.mean(recalls)),
        "mean_rouge_l": float(np.mean(rouges)),
    }
    stats["objective"] = stats["mean_recall"] if objective == "recall" else stats["mean_rouge_l"]
    return stats


def sweep_lambda(
    scorer,
    corpus: Corpus,
    grid,
    objective: str = "rouge_l",
    n_select: int = 5,
) -> SweepResult:
    """Evaluate the selection trade-off weight over a grid.

    ``scorer`` is either a callable mapping a document to its score vector,
    or the string "query_cosine" for unsupervised query relevance.
    """
    grid = list(grid)
    if not grid:
        raise ValidationError("empty lambda grid")
    if objective not in OBJECTIVES:
        raise ValidationError(f"objective must be one of {OBJECTIVES}")
    trials = []
    for trial_id, lam in enumerate(grid):
        stats = _evaluate_selection(scorer, corpus, lam, n_select, objective)
        trials.append(
            TrialResult(
                trial_id=trial_id,
                config={"lambda_": lam},
                fold_objectives=[stats["objective"]],
                mean_objective=stats["objective"],
                mean_tokens=stats["mean_tokens"],
                mean_recall=stats["mean_recall"],
                mean_rouge_l=stats["mean_rouge_l"],
            )
        )
    return SweepResult(trials=trials, objective=objective)


_TRAIN_FIELDS = set(TrainConfig.__dataclass_fields__)
_EXTRA_FIELDS = {"beta", "use_rdloss", "n_select"}


def run_cv_trial(config: dict, summ: Corpus, rhet: Corpus | None, folds: int, seed: int, objective: str):
    """Train/evaluate one configuration with k-fold CV; returns the trial stats.

    Deterministic for fixed (config, seed): the split, the training runs and
    the selection all derive from them. Re-running a recorded trial
    standalone reproduces its fold scores exactly.
    """
    train_kwargs = {k: v for k, v in config.items() if k in _TRAIN_FIELDS}
    cfg = TrainConfig(**{**train_kwargs, "seed": seed})
    n_select = int(config.get("n_select", 5))
    fold_stats = []
    for fold_train, fold_valid in split_corpus(summ, folds, seed):
        lcfg = LossConfig(
            beta=float(config.get("beta", 0.85)),
            use_rdloss=bool(config.get("use_rdloss", False)),
            class_weights=compute_class_weights(fold_train, "summarization"),
        )
        if cfg.architecture == "st":
            model, _ = train_single_task(fold_train, cfg, lcfg)
        else:
            if rhet is None:
                raise ValidationError("multi-task configuration without a rhetorical corpus")
            model, _ = train_multi_task(fold_train, rhet, cfg, lcfg)
        scorer = lambda doc: model_forward(doc, model, task="summarization", training=False)
        fold_stats.append(
            _evaluate_selection(scorer, fold_valid, cfg.selection_lambda, n_select, objective)
        )
    return {
        "fold_objectives": [s["objective"] for s in fold_stats],
        "mean_objective": float(np.mean([s["objective"] for s in fold_stats])),
        "mean_tokens": float(np.mean([s["mean_tokens"] for s in fold_stats])),
        "mean_recall": float(np.mean([s["mean_recall"] for s in fold_stats])),
        "mean_rouge_l": float(np.mean([s["mean_rouge_l"] for s in fold_stats])),
    }


def _candidate_space(spec: SweepSpec) -> dict:
    space = {
        k: (list(v) if isinstance(v, (list, tuple)) else [v])
        for k, v in spec.train_ranges.items()
    }
    space.setdefault("selection_lambda", list(spec.lambda_grid))
    if any(space.get("use_rdloss", [False])):
        space.setdefault("beta", list(spec.beta_grid))
    unknown = set(space) - _TRAIN_FIELDS - _EXTRA_FIELDS
    if unknown:
        raise ValidationError(f"unknown sweep fields: {sorted(unknown)}")
    return space


def random_search(spec: SweepSpec, summ: Corpus, rhet: Corpus | None = None) -> SweepResult:
    """Seeded random (or exhaustive grid) search with cross-validated scoring."""
    space = _candidate_space(spec)
    architectures = space.get("architecture", ["st"])
    if any(a != "st" for a in architectures) and rhet is None:
        raise ValidationError("sweep includes multi-task architectures but no rhetorical corpus")

    rng = np.random.default_rng(spec.seed)
    keys = sorted(space)
    if spec.sampling == "grid":
        combos = [dict(zip(keys, values)) for values in itertools.product(*(space[k] for k in keys))]
    else:
        combos = []
        for _ in range(spec.trials):
            combos.append({k: space[k][int(rng.integers(0, len(space[k])))] for k in keys})

    trials = []
    for trial_id, config in enumerate(combos):
        stats = run_cv_trial(config, summ, rhet, spec.folds, spec.seed + trial_id, spec.objective)
        trials.append(
            TrialResult(
                trial_id=trial_id,
                config={**config, "_seed": spec.seed + trial_id},
                fold_objectives=stats["fold_objectives"],
                mean_objective=stats["mean_objective"],
                mean_tokens=stats["mean_tokens"],
                mean_recall=stats["mean_recall"],
                mean_rouge_l=stats["mean_rouge_l"],
            )
        )
    return SweepResult(trials=trials, objective=spec.objective)
