"""Document / corpus data model, on-disk formats, validation and splitting.

On-disk layout is line-delimited JSON: a header line carrying the embedding
dimension and task tag, followed by one JSON object per document. Embeddings
are either inline float arrays (round-trip-exact decimal encoding) or live in
a binary sidecar of little-endian float32 vectors, which keeps large corpora
compact and bit-reproducible across machines.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .validation import ValidationError

OUTCOMES = ("granted", "denied", "remanded", "unknown")
TASK_TAGS = ("summarization", "rhetorical", "mixed")

SIDECAR_MAGIC = b"RSEB"
SIDECAR_VERSION = 1


class CorpusFormatError(ValidationError):
    """Raised for malformed corpus files or invariant violations."""


@dataclass
class Sentence:
    index: int
    text: str
    embedding: np.ndarray
    summary_label: int | None = None
    rhetorical_label: int | None = None

    def __eq__(self, other):
        if not isinstance(other, Sentence):
            return NotImplemented
        return (
            self.index == other.index
            and self.text == other.text
            and self.summary_label == other.summary_label
            and self.rhetorical_label == other.rhetorical_label
            and np.array_equal(self.embedding, other.embedding)
        )


@dataclass
class Document:
    id: str
    outcome: str
    sentences: list[Sentence]
    reference_summaries: list[list[int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.sentences)

    def embedding_matrix(self) -> np.ndarray:
        """All sentence embeddings stacked into an (n, d) float64 matrix."""
        return np.stack([s.embedding for s in self.sentences]).astype(np.float64)

    def summary_labels(self) -> np.ndarray:
        return np.array([s.summary_label for s in self.sentences], dtype=np.int64)

    def rhetorical_labels(self) -> np.ndarray:
        return np.array([s.rhetorical_label for s in self.sentences], dtype=np.int64)


@dataclass
class Corpus:
    dimension: int
    documents: list[Document]
    task_tag: str = "mixed"

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)


def _label_value(value, doc_id: str, sent_index: int, key: str):
    if value is None:
        return None
    if value not in (0, 1):
        raise CorpusFormatError(
            f"document {doc_id!r} sentence {sent_index}: {key} must be 0, 1 or null, got {value!r}"
        )
    return int(value)


def validate_corpus(corpus: Corpus) -> Corpus:
    """Check every type invariant; raise CorpusFormatError on the first violation."""
    if corpus.task_tag not in TASK_TAGS:
        raise CorpusFormatError(f"unknown task_tag {corpus.task_tag!r}")
    if corpus.dimension < 1:
        raise CorpusFormatError("dimension must be a positive integer")
    for doc in corpus.documents:
        if len(doc.sentences) < 1:
            raise CorpusFormatError(f"document {doc.id!r} has no sentences")
        if doc.outcome not in OUTCOMES:
            raise CorpusFormatError(f"document {doc.id!r} has unknown outcome {doc.outcome!r}")
        for pos, sent in enumerate(doc.sentences):
            if sent.index != pos:
                raise CorpusFormatError(
                    f"document {doc.id!r}: sentence indices must be contiguous from 0, "
                    f"found {sent.index} at position {pos}"
                )
            if sent.embedding.shape != (corpus.dimension,):
                raise CorpusFormatError(
                    f"document {doc.id!r} sentence {sent.index}: embedding length "
                    f"{sent.embedding.shape[0] if sent.embedding.ndim == 1 else sent.embedding.shape} "
                    f"does not match corpus dimension {corpus.dimension}"
                )
            if corpus.task_tag == "summarization" and sent.summary_label is None:
                raise CorpusFormatError(
                    f"document {doc.id!r} sentence {sent.index}: summary_label required "
                    f"for task_tag=summarization"
                )
            if corpus.task_tag == "rhetorical" and sent.rhetorical_label is None:
                raise CorpusFormatError(
                    f"document {doc.id!r} sentence {sent.index}: rhetorical_label required "
                    f"for task_tag=rhetorical"
                )
        n = len(doc.sentences)
        for ref in doc.reference_summaries:
            if len(set(ref)) != len(ref):
                raise CorpusFormatError(f"document {doc.id!r}: duplicate index in reference summary")
            for idx in ref:
                if not (0 <= idx < n):
                    raise CorpusFormatError(
                        f"document {doc.id!r}: reference summary index {idx} out of range"
                    )
    return corpus


def _read_sidecar(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) < 16 or header[:4] != SIDECAR_MAGIC:
            raise CorpusFormatError(f"sidecar {path}: bad magic bytes")
        version, dimension, count = struct.unpack("<III", header[4:16])
        if version != SIDECAR_VERSION:
            raise CorpusFormatError(f"sidecar {path}: unsupported version {version}")
        payload = fh.read()
    expected = count * dimension * 4
    if len(payload) != expected:
        raise CorpusFormatError(
            f"sidecar {path}: payload is {len(payload)} bytes, expected {expected}"
        )
    vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dimension)
    return vectors.astype(np.float64)


def _write_sidecar(path, vectors: np.ndarray) -> None:
    count, dimension = vectors.shape
    with open(path, "wb") as fh:
        fh.write(SIDECAR_MAGIC)
        fh.write(struct.pack("<III", SIDECAR_VERSION, dimension, count))
        fh.write(np.ascontiguousarray(vectors, dtype="<f4").tobytes())


def load_corpus(path, sidecar=None) -> Corpus:
    """Load and validate a corpus file, optionally overriding embeddings from a sidecar.

    Raises CorpusFormatError with the offending line number for malformed
    records, and for any type-invariant violation (no silent repair).
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise CorpusFormatError(f"{path}: no documents")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{path}:1: malformed header: {exc}") from exc
    if not isinstance(header, dict) or "dimension" not in header or "task_tag" not in header:
        raise CorpusFormatError(f"{path}:1: header must carry 'dimension' and 'task_tag'")
    dimension = int(header["dimension"])
    task_tag = str(header["task_tag"])

    side_vectors = _read_sidecar(sidecar) if sidecar is not None else None
    cursor = 0

    documents = []
    if len(lines) < 2:
        raise CorpusFormatError(f"{path}: no documents")
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"{path}:{lineno}: malformed record: {exc}") from exc
        try:
            doc_id = str(rec["id"])
            outcome = str(rec["outcome"])
            raw_sentences = rec["sentences"]
        except (KeyError, TypeError) as exc:
            raise CorpusFormatError(f"{path}:{lineno}: record missing field {exc}") from exc
        sentences = []
        for i, raw in enumerate(raw_sentences):
            if side_vectors is not None:
                if cursor >= side_vectors.shape[0]:
                    raise CorpusFormatError(
                        f"{path}:{lineno}: sidecar has fewer vectors than sentences"
                    )
                emb = side_vectors[cursor]
                cursor += 1
            else:
                if "embedding" not in raw or raw["embedding"] is None:
                    raise CorpusFormatError(
                        f"{path}:{lineno}: document {doc_id!r} sentence {i} has no inline "
                        f"embedding and no sidecar was supplied"
                    )
                emb = np.asarray(raw["embedding"], dtype=np.float64)
            sentences.append(
                Sentence(
                    index=i,
                    text=str(raw.get("text", "")),
                    embedding=emb,
                    summary_label=_label_value(raw.get("summary_label"), doc_id, i, "summary_label"),
                    rhetorical_label=_label_value(
                        raw.get("rhetorical_label"), doc_id, i, "rhetorical_label"
                    ),
                )
            )
        refs = [[int(i) for i in ref] for ref in rec.get("reference_summaries", [])]
        documents.append(Document(id=doc_id, outcome=outcome, sentences=sentences, reference_summaries=refs))

    if side_vectors is not None and cursor != side_vectors.shape[0]:
        raise CorpusFormatError(
            f"sidecar vector count {side_vectors.shape[0]} does not match the "
            f"{cursor} sentences in {path}"
        )
    return validate_corpus(Corpus(dimension=dimension, documents=documents, task_tag=task_tag))


def write_corpus(corpus: Corpus, path, use_sidecar: bool = False, sidecar=None) -> None:
    """Write a corpus re-loadable by load_corpus.

    Inline embeddings use Python's shortest round-trip float repr, so a
    write/load cycle reproduces them exactly. With ``use_sidecar`` the vectors
    are written as little-endian float32 next to the corpus (``<path>.emb`` by
    default); that round-trips bit-exactly for float32-representable values.
    """
    validate_corpus(corpus)
    sidecar_path = sidecar if sidecar is not None else str(path) + ".emb"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dimension": corpus.dimension, "task_tag": corpus.task_tag}) + "\n")
        for doc in corpus.documents:
            rec = {
                "id": doc.id,
                "outcome": doc.outcome,
                "sentences": [
                    {
                        "text": s.text,
                        **({} if use_sidecar else {"embedding": [float(v) for v in s.embedding]}),
                        "summary_label": s.summary_label,
                        "rhetorical_label": s.rhetorical_label,
                    }
                    for s in doc.sentences
                ],
                "reference_summaries": doc.reference_summaries,
            }
            fh.write(json.dumps(rec) + "\n")
    if use_sidecar:
        vectors = np.concatenate([doc.embedding_matrix() for doc in corpus.documents], axis=0)
        _write_sidecar(sidecar_path, vectors)


def split_corpus(corpus: Corpus, folds: int, seed: int) -> list[tuple[Corpus, Corpus]]:
    """Partition documents into cross-validation folds by a seeded shuffle.

    Returns one (train, validation) pair per fold. Fold sizes differ by at
    most one; every document lands in exactly one validation fold; the split
    is deterministic for a fixed seed.
    """
    n = len(corpus.documents)
    if folds < 2 or folds > n:
        raise ValidationError(f"folds must satisfy 2 <= folds <= {n}, got {folds}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    base, extra = divmod(n, folds)
    groups = []
    start = 0
    for k in range(folds):
        size = base + (1 if k < extra else 0)
        groups.append(order[start : start + size])
        start += size
    pairs = []
    for k in range(folds):
        valid_ids = set(groups[k].tolist())
        train_docs = [corpus.documents[i] for i in range(n) if i not in valid_ids]
        valid_docs = [corpus.documents[i] for i in sorted(valid_ids)]
        pairs.append(
            (
                Corpus(corpus.dimension, train_docs, corpus.task_tag),
                Corpus(corpus.dimension, valid_docs, corpus.task_tag),
            )
        )
    return pairs
