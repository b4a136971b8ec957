"""Scikit-learn style estimators wrapping the trainable scorers, so the
pipeline composes with the wider ecosystem (get_params / set_params /
clone-compatible constructors, NotFittedError before fit).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .corpus import Corpus, Document
from .nn import model_forward
from .select import SelectionConfig, mmr_select
from .simvec import similarity_matrix
from .train import (
    LossConfig,
    TrainConfig,
    compute_class_weights,
    train_multi_task,
    train_single_task,
)
from .validation import ValidationError


class GruSummarizer(BaseEstimator):
    """Bidirectional GRU sentence scorer with marginal-relevance selection.

    ``fit`` trains on a labeled corpus (optionally with an auxiliary
    rhetorical corpus for the multi-task architectures); ``predict`` returns
    the selected sentence indices per document.
    """

    def __init__(
        self,
        architecture: str = "st",
        hidden_size: int = 128,
        upper_hidden_size: int | None = None,
        dropout: float = 0.5,
        rhetorical_dropout: float | None = None,
        batch_size: int = 8,
        epochs: int = 5,
        learning_rate: float = 0.00261,
        use_rdloss: bool = False,
        beta: float = 0.85,
        selection_lambda: float = 0.8,
        n_select: int = 5,
        seed: int = 0,
    ):
        self.architecture = architecture
        self.hidden_size = hidden_size
        self.upper_hidden_size = upper_hidden_size
        self.dropout = dropout
        self.rhetorical_dropout = rhetorical_dropout
        self.batch_size = batch_size
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.use_rdloss = use_rdloss
        self.beta = beta
        self.selection_lambda = selection_lambda
        self.n_select = n_select
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            architecture=self.architecture,
            hidden_size=self.hidden_size,
            upper_hidden_size=self.upper_hidden_size,
            dropout_es=self.dropout,
            dropout_rl=self.rhetorical_dropout,
            batch_size=self.batch_size,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            seed=self.seed,
            selection_lambda=self.selection_lambda,
        )

    def fit(self, corpus: Corpus, rhetorical: Corpus | None = None):
        lcfg = LossConfig(
            beta=self.beta,
            use_rdloss=self.use_rdloss,
            class_weights=compute_class_weights(corpus, "summarization"),
        )
        cfg = self._train_config()
        if self.architecture == "st":
            self.model_, self.loss_log_ = train_single_task(corpus, cfg, lcfg)
        else:
            if rhetorical is None:
                raise ValidationError("multi-task architectures need a rhetorical corpus")
            self.model_, self.loss_log_ = train_multi_task(corpus, rhetorical, cfg, lcfg)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before scoring")

    def predict_scores(self, doc: Document, task: str = "summarization") -> np.ndarray:
        """Per-sentence positive-class confidences."""
        self._check_fitted()
        return model_forward(doc, self.model_, task=task, training=False)

    def predict(self, docs) -> list[list[int]]:
        """Selected sentence indices per document (selection order)."""
        self._check_fitted()
        if isinstance(docs, Document):
            docs = [docs]
        cfg = SelectionConfig(
            lambda_=self.selection_lambda, n_select=self.n_select, relevance_source="model_scores"
        )
        out = []
        for doc in docs:
            scores = self.predict_scores(doc)
            result = mmr_select(doc, scores=scores, cfg=cfg, sim=similarity_matrix(doc))
            out.append(result.chosen)
        return out


class RhetoricalLabeler(BaseEstimator):
    """Single-task GRU classifier for the rhetorical role of each sentence."""

    def __init__(
        self,
        hidden_size: int = 128,
        dropout: float = 0.5,
        batch_size: int = 8,
        epochs: int = 5,
        learning_rate: float = 0.00261,
        seed: int = 0,
    ):
        self.hidden_size = hidden_size
        self.dropout = dropout
        self.batch_size = batch_size
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    def fit(self, corpus: Corpus):
        relabeled = _rhetorical_as_target(corpus)
        cfg = TrainConfig(
            architecture="st",
            hidden_size=self.hidden_size,
            dropout_es=self.dropout,
            batch_size=self.batch_size,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            seed=self.seed,
        )
        lcfg = LossConfig(class_weights=compute_class_weights(relabeled, "summarization"))
        self.model_, self.loss_log_ = train_single_task(relabeled, cfg, lcfg)
        return self

    def predict_proba(self, doc: Document) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before scoring")
        return model_forward(doc, self.model_, task="summarization", training=False)

    def predict(self, doc: Document) -> np.ndarray:
        return (self.predict_proba(doc) > 0.5).astype(int)


def _rhetorical_as_target(corpus: Corpus) -> Corpus:
    """Copy rhetorical labels into the training-target slot for single-task
    training of the labeler."""
    from dataclasses import replace

    documents = []
    for doc in corpus.documents:
        sentences = [replace(s, summary_label=s.rhetorical_label) for s in doc.sentences]
        for s in sentences:
            if s.summary_label is None:
                raise ValidationError(f"document {doc.id!r}: missing rhetorical label")
        documents.append(replace(doc, sentences=sentences))
    return Corpus(corpus.dimension, documents, task_tag="summarization")
