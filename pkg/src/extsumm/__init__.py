"""Trainable extractive summarization with redundancy-aware selection.

Sentence scoring uses bidirectional GRU models trained under weighted
cross-entropy with an optional pairwise redundancy penalty; summaries are
composed by greedy maximal-marginal-relevance selection. Includes classical
baselines (TextRank over BM25 similarity, rhetorical-filter pipelines), a
from-scratch evaluation suite (ROUGE-1/2/L, recall, Cohen's kappa), and
sweep/CV harnesses.
"""

__version__ = "0.1.0"

from .corpus import Corpus, Document, Sentence, load_corpus, split_corpus, write_corpus
from .estimators import GruSummarizer, RhetoricalLabeler
from .metrics import EvalReport, RougeScore, cohen_kappa, evaluate, rouge_l, rouge_n, selection_recall, tokenize
from .nn import ModelParams, init_params, load_checkpoint, model_forward, save_checkpoint
from .select import SelectionConfig, SelectionResult, mmr_select, top_k
from .simvec import cosine, query_embedding, similarity_matrix
from .train import (
    ClassWeights,
    LossConfig,
    TrainConfig,
    combined_loss,
    compute_class_weights,
    redundancy_loss,
    train_multi_task,
    train_single_task,
    weighted_ce,
)
from .validation import ValidationError

__all__ = [
    "Corpus",
    "Document",
    "Sentence",
    "load_corpus",
    "write_corpus",
    "split_corpus",
    "GruSummarizer",
    "RhetoricalLabeler",
    "EvalReport",
    "RougeScore",
    "cohen_kappa",
    "evaluate",
    "rouge_l",
    "rouge_n",
    "selection_recall",
    "tokenize",
    "ModelParams",
    "init_params",
    "model_forward",
    "save_checkpoint",
    "load_checkpoint",
    "SelectionConfig",
    "SelectionResult",
    "mmr_select",
    "top_k",
    "cosine",
    "similarity_matrix",
    "query_embedding",
    "ClassWeights",
    "LossConfig",
    "TrainConfig",
    "compute_class_weights",
    "weighted_ce",
    "redundancy_loss",
    "combined_loss",
    "train_single_task",
    "train_multi_task",
    "ValidationError",
    "__version__",
]
