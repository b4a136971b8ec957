import numpy as np
import pytest

from extsumm.corpus import Corpus, Document, Sentence


def make_doc(embeddings, texts=None, summary_labels=None, rhetorical_labels=None,
             doc_id="doc-0", references=None):
    emb = np.asarray(embeddings, dtype=np.float64)
    n = emb.shape[0]
    texts = texts if texts is not None else [f"sentence {i}" for i in range(n)]
    sentences = [
        Sentence(
            index=i,
            text=texts[i],
            embedding=emb[i],
            summary_label=None if summary_labels is None else int(summary_labels[i]),
            rhetorical_label=None if rhetorical_labels is None else int(rhetorical_labels[i]),
        )
        for i in range(n)
    ]
    return Document(id=doc_id, outcome="unknown", sentences=sentences,
                    reference_summaries=references or [])


def make_corpus(docs, dimension, task_tag="mixed"):
    return Corpus(dimension=dimension, documents=list(docs), task_tag=task_tag)


def random_corpus(rng, n_docs=4, n_sentences=6, dim=3, task_tag="summarization",
                  with_rhetorical=False, with_references=False):
    docs = []
    for d in range(n_docs):
        emb = rng.normal(size=(n_sentences, dim))
        labels = rng.integers(0, 2, size=n_sentences)
        if labels.sum() == 0:
            labels[0] = 1
        if labels.sum() == n_sentences:
            labels[0] = 0
        rhet = rng.integers(0, 2, size=n_sentences) if with_rhetorical else None
        refs = [sorted(int(i) for i in np.flatnonzero(labels))] if with_references else None
        docs.append(
            make_doc(
                emb,
                summary_labels=labels,
                rhetorical_labels=rhet,
                doc_id=f"doc-{d}",
                references=refs,
            )
        )
    return make_corpus(docs, dim, task_tag)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
