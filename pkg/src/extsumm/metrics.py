"""Evaluation metrics implemented from scratch: ROUGE-1/2/L, sentence-level
selection recall, Cohen's kappa, and summary length statistics.

Tokenization is pinned (lowercase, maximal alphanumeric runs, no stemming or
stopword removal) so scores are comparable across runs of this package.
Absolute parity with scores produced by other ROUGE toolchains is not
claimed; their tokenizers differ.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .validation import ValidationError

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on any maximal run of non-alphanumerics."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "RougeScore":
        denom = precision + recall
        f1 = 2.0 * precision * recall / denom if denom > 0.0 else 0.0
        return cls(precision=precision, recall=recall, f1=f1)

    def as_tuple(self):
        return (self.precision, self.recall, self.f1)


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate, reference, n: int) -> RougeScore:
    """Clipped n-gram multiset overlap between candidate and reference."""
    if n not in (1, 2):
        raise ValidationError(f"rouge_n supports n in {{1, 2}}, got {n}")
    cand = _ngrams(list(candidate), n)
    ref = _ngrams(list(reference), n)
    overlap = sum((cand & ref).values())
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    precision = overlap / cand_total if cand_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    return RougeScore.from_pr(precision, recall)


def _lcs_length(a, b) -> int:
    # one-row DP keeps memory at O(len(b))
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[j - 1]))
        prev = curr
    return prev[len(b)]


def rouge_l(candidate, reference) -> RougeScore:
    """Longest-common-subsequence overlap between candidate and reference."""
    cand = list(candidate)
    ref = list(reference)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    return RougeScore.from_pr(lcs / len(cand), lcs / len(ref))


def selection_recall(chosen, gold) -> float:
    """Fraction of gold sentence indices the selection recovered."""
    gold_set = set(gold)
    if not gold_set:
        raise ValidationError("selection recall needs a nonempty gold set")
    return len(set(chosen) & gold_set) / len(gold_set)


def cohen_kappa(labels_a, labels_b) -> float:
    """Chance-corrected agreement between two binary labelings."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise ValidationError("cohen_kappa requires two equal-length nonempty sequences")
    n = a.size
    p_o = float(np.mean(a == b))
    p_e = 0.0
    for cls in (0, 1):
        p_e += float(np.mean(a == cls)) * float(np.mean(b == cls))
    if p_e == 1.0:
        if p_o == 1.0:
            return 1.0
        raise ValidationError("kappa undefined: chance agreement is 1 but labelings disagree")
    return (p_o - p_e) / (1.0 - p_e)


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------


@dataclass
class DocumentEval:
    doc_id: str
    n_sentences: int
    n_tokens: int
    per_reference: list  # one dict per reference: rouge_1/rouge_2/rouge_l/recall


@dataclass
class EvalReport:
    documents: list
    per_annotator: list  # aggregated mean metrics, one entry per reference column
    sentence_stats: tuple  # (mean, sd) of candidate sentence counts
    token_stats: tuple  # (mean, sd) of candidate token counts
    kappa_matrix: list | None = None
    kappa_names: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "documents": [
                {
                    "doc_id": d.doc_id,
                    "n_sentences": d.n_sentences,
                    "n_tokens": d.n_tokens,
                    "per_reference": d.per_reference,
                }
                for d in self.documents
            ],
            "per_annotator": self.per_annotator,
            "sentence_stats": {"mean": self.sentence_stats[0], "sd": self.sentence_stats[1]},
            "token_stats": {"mean": self.token_stats[0], "sd": self.token_stats[1]},
            "kappa_matrix": self.kappa_matrix,
            "kappa_names": self.kappa_names,
        }

    def render_table(self) -> str:
        """Aligned-column text table, one annotator block per reference,
        percentages (x100)."""
        headers = ["system"]
        for k in range(len(self.per_annotator)):
            headers += [f"A{k + 1}-R1", f"A{k + 1}-R2", f"A{k + 1}-RL", f"A{k + 1}-Rec"]
        row = ["scored"]
        for agg in self.per_annotator:
            row += [
                f"{100 * agg['rouge_1']:.1f}",
                f"{100 * agg['rouge_2']:.1f}",
                f"{100 * agg['rouge_l']:.1f}",
                f"{100 * agg['recall']:.1f}",
            ]
        length_line = (
            f"sentences {self.sentence_stats[0]:.2f} ± {self.sentence_stats[1]:.2f}   "
            f"tokens {self.token_stats[0]:.2f} ± {self.token_stats[1]:.2f}"
        )
        widths = [max(len(h), len(v)) for h, v in zip(headers, row)]
        lines = [
            "  ".join(h.rjust(w) for h, w in zip(headers, widths)),
            "  ".join(v.rjust(w) for v, w in zip(row, widths)),
            length_line,
        ]
        return "\n".join(lines) + "\n"


def _rouge_metrics(cand_tokens, ref_tokens) -> dict:
    return {
        "rouge_1": rouge_n(cand_tokens, ref_tokens, 1).f1,
        "rouge_2": rouge_n(cand_tokens, ref_tokens, 2).f1,
        "rouge_l": rouge_l(cand_tokens, ref_tokens).f1,
    }


def evaluate(docs_with_chosen) -> EvalReport:
    """Score chosen summaries against every reference of every document.

    ``docs_with_chosen`` is a sequence of (document, chosen indices) pairs;
    every document must carry at least one reference summary. Candidate text
    joins the chosen sentences in document order with single spaces. Scores
    are computed per reference (annotator columns) and macro-averaged across
    documents.
    """
    doc_evals = []
    sent_counts = []
    token_counts = []
    ref_counts = set()
    for doc, chosen in docs_with_chosen:
        if not doc.reference_summaries:
            raise ValidationError(f"document {doc.id!r} has no reference summaries")
        chosen_sorted = sorted(set(chosen))
        cand_text = " ".join(doc.sentences[i].text for i in chosen_sorted)
        cand_tokens = tokenize(cand_text)
        per_reference = []
        for ref in doc.reference_summaries:
            ref_text = " ".join(doc.sentences[i].text for i in sorted(ref))
            ref_tokens = tokenize(ref_text)
            entry = _rouge_metrics(cand_tokens, ref_tokens)
            entry["recall"] = selection_recall(chosen_sorted, ref)
            per_reference.append(entry)
        ref_counts.add(len(per_reference))
        sent_counts.append(len(chosen_sorted))
        token_counts.append(len(cand_tokens))
        doc_evals.append(
            DocumentEval(
                doc_id=doc.id,
                n_sentences=len(chosen_sorted),
                n_tokens=len(cand_tokens),
                per_reference=per_reference,
            )
        )

    n_columns = min(ref_counts)
    per_annotator = []
    for k in range(n_columns):
        agg = {}
        for key in ("rouge_1", "rouge_2", "rouge_l", "recall"):
            agg[key] = float(np.mean([d.per_reference[k][key] for d in doc_evals]))
        per_annotator.append(agg)

    kappa_matrix = None
    kappa_names: list = []
    if len(ref_counts) == 1 and n_columns >= 2:
        # pairwise agreement between annotator selections, flattened over docs
        columns = []
        for k in range(n_columns):
            bits = []
            for doc, _ in docs_with_chosen:
                members = set(doc.reference_summaries[k])
                bits.extend(1 if i in members else 0 for i in range(len(doc.sentences)))
            columns.append(np.array(bits))
        kappa_names = [f"annotator_{k + 1}" for k in range(n_columns)]
        kappa_matrix = [
            [float(cohen_kappa(columns[i], columns[j])) for j in range(n_columns)]
            for i in range(n_columns)
        ]

    sd = lambda xs: float(np.std(xs))  # population sd
    report = EvalReport(
        documents=doc_evals,
        per_annotator=per_annotator,
        sentence_stats=(float(np.mean(sent_counts)), sd(sent_counts)),
        token_stats=(float(np.mean(token_counts)), sd(token_counts)),
        kappa_matrix=kappa_matrix,
        kappa_names=kappa_names,
    )
    return report
