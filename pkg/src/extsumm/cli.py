"""Command-line surface: synthetic data, training, summarization, evaluation,
sweeps, baselines, and corpus validation.

Every writing command resolves its configuration (defaults, then config
file, then flags), stamps a manifest with a digest of that resolved
configuration into the output directory, and uses fixed output filenames, so
a run is reproducible from its manifest. Exit codes: 2 config parse errors,
3 data validation errors, 4 runtime failures.
"""

from __future__ import annotations

import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from . import __version__
from .baselines import rl_pipeline, textrank_summarize
from .corpus import Corpus, CorpusFormatError, load_corpus, write_corpus
from .metrics import evaluate
from .nn import load_checkpoint, model_forward, save_checkpoint
from .select import SelectionConfig, mmr_select
from .simvec import query_relevance, similarity_matrix
from .sweep import SweepSpec, random_search, sweep_lambda
from .synth import make_synthetic_corpora
from .train import LossConfig, TrainConfig, compute_class_weights, train_multi_task, train_single_task
from .validation import ValidationError

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

ARCH_BY_FLAG = {"st": "st", "mt-shared": "mt_shared", "mt-hier": "mt_hierarchical"}


def _fail(code: int, kind: str, message: str):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    sys.exit(code)


def _load_config_file(path, command: str | None = None) -> dict:
    """Read a JSON config. A file may be flat (keys for the invoked command)
    or carry one section per command name; the section wins when present."""
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(EXIT_CONFIG, "config_parse", f"{path}: {exc}")
    if not isinstance(data, dict):
        _fail(EXIT_CONFIG, "config_parse", f"{path}: config must be a JSON object")
    if command is not None and isinstance(data.get(command), dict):
        return data[command]
    return data


def _resolve(defaults: dict, file_cfg: dict, overrides: dict) -> dict:
    """defaults <- config file <- explicit flags."""
    resolved = dict(defaults)
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        _fail(EXIT_CONFIG, "config_parse", f"unknown config fields: {sorted(unknown)}")
    resolved.update(file_cfg)
    resolved.update({k: v for k, v in overrides.items() if v is not None})
    return resolved


def _digest(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def _file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, outputs: list, inputs: dict | None = None):
    """Stamp the run: the digest covers the command, its parameters and the
    content hashes of every input file, so equal digests imply bit-identical
    outputs regardless of where the inputs live."""
    input_records = {}
    for name, path in (inputs or {}).items():
        if path is None:
            continue
        input_records[name] = {"path": str(path), "sha256": _file_sha256(path)}
    payload = {
        "command": command,
        "config": config,
        "inputs": {k: v["sha256"] for k, v in input_records.items()},
    }
    manifest = {
        "command": command,
        "config": config,
        "inputs": input_records,
        "config_digest": _digest(payload),
        "outputs": outputs,
        "created": datetime.now(timezone.utc).isoformat(),
        "artifact_version": __version__,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _prepare_out(out) -> Path:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _guarded(fn):
    """Map exceptions onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CorpusFormatError as exc:
            _fail(EXIT_DATA, "data_validation", str(exc))
        except ValidationError as exc:
            _fail(EXIT_DATA, "data_validation", str(exc))
        except click.ClickException:
            raise
        except Exception as exc:  # pragma: no cover - defensive
            _fail(EXIT_RUNTIME, type(exc).__name__, str(exc))

    wrapper.__name__ = fn.__name__
    return wrapper


@click.group()
@click.version_option(__version__)
def main():
    """Extractive summarization toolbox."""


_SYNTH_DEFAULTS = {
    "docs": 60, "test_docs": 20, "rhet_docs": 30, "sentences": 30, "dim": 16,
    "clusters": 3, "duplicate_rate": 0.0, "separation": 6.0, "positives": 5,
    "seed": 0, "sidecar": False,
}


@main.command("synth")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--docs", type=int, default=None)
@click.option("--test-docs", type=int, default=None)
@click.option("--rhet-docs", type=int, default=None)
@click.option("--sentences", type=int, default=None)
@click.option("--dim", type=int, default=None)
@click.option("--clusters", type=int, default=None)
@click.option("--duplicate-rate", type=float, default=None)
@click.option("--separation", type=float, default=None)
@click.option("--positives", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--sidecar", is_flag=True, default=None, help="Write embeddings to binary sidecars.")
@click.option("--out", required=True, type=click.Path())
@_guarded
def cmd_synth(config_path, docs, test_docs, rhet_docs, sentences, dim, clusters,
              duplicate_rate, separation, positives, seed, sidecar, out):
    """Generate synthetic summarization + rhetorical corpora with gold labels."""
    cfg = _resolve(
        _SYNTH_DEFAULTS,
        _load_config_file(config_path, "synth"),
        {
            "docs": docs, "test_docs": test_docs, "rhet_docs": rhet_docs,
            "sentences": sentences, "dim": dim, "clusters": clusters,
            "duplicate_rate": duplicate_rate, "separation": separation,
            "positives": positives, "seed": seed, "sidecar": sidecar,
        },
    )
    if cfg["test_docs"] >= cfg["docs"]:
        raise ValidationError("test-docs must be smaller than docs")
    summ, rhet, _ = make_synthetic_corpora(
        docs=cfg["docs"], sentences_per_doc=cfg["sentences"], dim=cfg["dim"],
        clusters=cfg["clusters"], duplicate_rate=cfg["duplicate_rate"], seed=cfg["seed"],
        separation=cfg["separation"], positives_per_doc=cfg["positives"],
        rhet_docs=cfg["rhet_docs"],
    )
    out_dir = _prepare_out(out)
    n_train = cfg["docs"] - cfg["test_docs"]
    train_corpus = Corpus(summ.dimension, summ.documents[:n_train], summ.task_tag)
    test_corpus = Corpus(summ.dimension, summ.documents[n_train:], summ.task_tag)
    write_corpus(train_corpus, out_dir / "train.jsonl", use_sidecar=cfg["sidecar"])
    write_corpus(test_corpus, out_dir / "test.jsonl", use_sidecar=cfg["sidecar"])
    write_corpus(rhet, out_dir / "rhet.jsonl", use_sidecar=cfg["sidecar"])
    outputs = ["train.jsonl", "test.jsonl", "rhet.jsonl"]
    if cfg["sidecar"]:
        outputs += [f"{n}.emb" for n in outputs]
    _write_manifest(out_dir, "synth", cfg, outputs)
    click.echo(f"wrote {len(train_corpus)} train / {len(test_corpus)} test / {len(rhet)} rhetorical docs")


_TRAIN_DEFAULTS = {
    "architecture": "st",
    "num_layers": 1,
    "hidden_size": 128,
    "upper_hidden_size": None,
    "dropout_es": 0.5,
    "dropout_rl": None,
    "batch_size": 8,
    "epochs": 5,
    "learning_rate": 0.00261,
    "seed": 0,
    "selection_lambda": 0.8,
    "use_rdloss": False,
    "beta": 0.85,
}


@main.command("train")
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--sidecar", "sidecar_path", type=click.Path(exists=True))
@click.option("--rhet", "rhet_path", type=click.Path(exists=True))
@click.option("--rhet-sidecar", "rhet_sidecar_path", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--arch", type=click.Choice(sorted(ARCH_BY_FLAG)), default=None)
@click.option("--rdloss", is_flag=True, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--hidden", type=int, default=None)
@click.option("--upper-hidden", type=int, default=None)
@click.option("--dropout", type=float, default=None)
@click.option("--rhet-dropout", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--lambda", "lambda_", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@_guarded
def cmd_train(train_path, sidecar_path, rhet_path, rhet_sidecar_path, config_path, arch,
              rdloss, beta, hidden, upper_hidden, dropout, rhet_dropout, batch_size,
              epochs, lr, lambda_, seed, out):
    """Train a scorer; writes checkpoint.bin and train_log.jsonl."""
    overrides = {
        "architecture": ARCH_BY_FLAG[arch] if arch else None,
        "use_rdloss": rdloss,
        "beta": beta,
        "hidden_size": hidden,
        "upper_hidden_size": upper_hidden,
        "dropout_es": dropout,
        "dropout_rl": rhet_dropout,
        "batch_size": batch_size,
        "epochs": epochs,
        "learning_rate": lr,
        "selection_lambda": lambda_,
        "seed": seed,
    }
    resolved = _resolve(_TRAIN_DEFAULTS, _load_config_file(config_path, "train"), overrides)

    cfg = TrainConfig.from_dict(
        {k: v for k, v in resolved.items() if k in TrainConfig.__dataclass_fields__}
    )
    corpus = load_corpus(train_path, sidecar=sidecar_path)
    lcfg = LossConfig(
        beta=resolved["beta"],
        use_rdloss=resolved["use_rdloss"],
        class_weights=compute_class_weights(corpus, "summarization"),
    )
    if cfg.architecture == "st":
        model, log = train_single_task(corpus, cfg, lcfg)
    else:
        if rhet_path is None:
            raise ValidationError("multi-task training requires --rhet")
        rhet = load_corpus(rhet_path, sidecar=rhet_sidecar_path)
        model, log = train_multi_task(corpus, rhet, cfg, lcfg)

    out_dir = _prepare_out(out)
    save_checkpoint(model, out_dir / "checkpoint.bin", seed=cfg.seed, train_config=resolved)
    with open(out_dir / "train_log.jsonl", "w", encoding="utf-8") as fh:
        for entry in log:
            fh.write(json.dumps(entry) + "\n")
    _write_manifest(
        out_dir, "train", resolved, ["checkpoint.bin", "train_log.jsonl"],
        inputs={"train": train_path, "train_sidecar": sidecar_path,
                "rhet": rhet_path, "rhet_sidecar": rhet_sidecar_path},
    )
    final = log[-1]["losses"] if log else {}
    click.echo(f"trained {cfg.architecture} for {cfg.epochs} epochs; final losses {final}")


_SUMMARIZE_DEFAULTS = {"relevance": "model", "lambda": 0.8, "n": 5, "explain": False}


@main.command("summarize")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--sidecar", "sidecar_path", type=click.Path(exists=True))
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True))
@click.option("--relevance", type=click.Choice(["model", "query"]), default=None)
@click.option("--lambda", "lambda_", type=float, default=None)
@click.option("--n", "n_select", type=int, default=None)
@click.option("--explain", is_flag=True, default=None, help="Record the per-step selection trace.")
@click.option("--out", required=True, type=click.Path())
@_guarded
def cmd_summarize(config_path, corpus_path, sidecar_path, checkpoint_path, relevance,
                  lambda_, n_select, explain, out):
    """Select summary sentences for every document; writes summaries.jsonl."""
    cfg_all = _resolve(
        _SUMMARIZE_DEFAULTS,
        _load_config_file(config_path, "summarize"),
        {"relevance": relevance, "lambda": lambda_, "n": n_select, "explain": explain},
    )
    relevance, lambda_, n_select, explain = (
        cfg_all["relevance"], cfg_all["lambda"], cfg_all["n"], cfg_all["explain"]
    )
    corpus = load_corpus(corpus_path, sidecar=sidecar_path)
    model = None
    if relevance == "model":
        if checkpoint_path is None:
            raise ValidationError("--relevance model requires --checkpoint")
        model, _ = load_checkpoint(checkpoint_path)
    out_dir = _prepare_out(out)
    with open(out_dir / "summaries.jsonl", "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            sim = similarity_matrix(doc)
            if relevance == "model":
                scores = model_forward(doc, model, task="summarization", training=False)
                cfg = SelectionConfig(lambda_=lambda_, n_select=n_select, relevance_source="model_scores")
                result = mmr_select(doc, scores=scores, cfg=cfg, sim=sim)
            else:
                cfg = SelectionConfig(lambda_=lambda_, n_select=n_select, relevance_source="query_cosine")
                result = mmr_select(doc, cfg=cfg, sim=sim, q_rel=query_relevance(doc))
            rec = {
                "doc_id": doc.id,
                "chosen": result.chosen,
                "text": " ".join(doc.sentences[i].text for i in sorted(result.chosen)),
            }
            if explain:
                rec["trace"] = result.to_dict()["trace"]
            fh.write(json.dumps(rec) + "\n")
    _write_manifest(
        out_dir, "summarize", cfg_all, ["summaries.jsonl"],
        inputs={"corpus": corpus_path, "sidecar": sidecar_path, "checkpoint": checkpoint_path},
    )
    click.echo(f"summarized {len(corpus)} documents")


def _read_summaries(path) -> dict:
    chosen = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                chosen[rec["doc_id"]] = list(rec["chosen"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise CorpusFormatError(f"{path}:{lineno}: malformed summary record: {exc}")
    return chosen


@main.command("evaluate")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--sidecar", "sidecar_path", type=click.Path(exists=True))
@click.option("--summaries", "summaries_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@_guarded
def cmd_evaluate(corpus_path, sidecar_path, summaries_path, out):
    """Score summaries against the corpus references; writes report.json/.txt."""
    corpus = load_corpus(corpus_path, sidecar=sidecar_path)
    chosen_by_id = _read_summaries(summaries_path)
    pairs = []
    for doc in corpus.documents:
        if doc.id not in chosen_by_id:
            raise ValidationError(f"no summary found for document {doc.id!r}")
        pairs.append((doc, chosen_by_id[doc.id]))
    report = evaluate(pairs)
    out_dir = _prepare_out(out)
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out_dir / "report.txt", "w", encoding="utf-8") as fh:
        fh.write(report.render_table())
    _write_manifest(
        out_dir, "evaluate", {}, ["report.json", "report.txt"],
        inputs={"corpus": corpus_path, "sidecar": sidecar_path, "summaries": summaries_path},
    )
    agg = report.per_annotator[0]
    click.echo(
        f"ROUGE-1 {agg['rouge_1']:.3f}  ROUGE-2 {agg['rouge_2']:.3f}  "
        f"ROUGE-L {agg['rouge_l']:.3f}  recall {agg['recall']:.3f} (annotator 1)"
    )


_SWEEP_DEFAULTS = {
    "kind": "lambda", "relevance": "model", "grid": "0.5,0.6,0.7,0.8,0.9,1.0",
    "objective": "rouge_l", "n": 5, "seed": 0,
}


@main.command("sweep")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(["lambda", "random", "grid"]), default=None)
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--sidecar", "sidecar_path", type=click.Path(exists=True))
@click.option("--rhet", "rhet_path", type=click.Path(exists=True))
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True))
@click.option("--relevance", type=click.Choice(["model", "query"]), default=None)
@click.option("--grid", "grid_text", default=None)
@click.option("--objective", type=click.Choice(["rouge_l", "recall"]), default=None)
@click.option("--spec", "spec_path", type=click.Path(exists=True), help="SweepSpec JSON for random/grid kinds.")
@click.option("--n", "n_select", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@_guarded
def cmd_sweep(config_path, kind, corpus_path, sidecar_path, rhet_path, checkpoint_path,
              relevance, grid_text, objective, spec_path, n_select, seed, out):
    """Hyperparameter sweeps; writes sweep.json and a flat sweep_table.txt."""
    config = _resolve(
        _SWEEP_DEFAULTS,
        _load_config_file(config_path, "sweep"),
        {"kind": kind, "relevance": relevance, "grid": grid_text,
         "objective": objective, "n": n_select, "seed": seed},
    )
    kind, relevance, grid_text = config["kind"], config["relevance"], config["grid"]
    objective, n_select, seed = config["objective"], config["n"], config["seed"]
    corpus = load_corpus(corpus_path, sidecar=sidecar_path)
    if kind == "lambda":
        if relevance == "model":
            if checkpoint_path is None:
                raise ValidationError("--relevance model requires --checkpoint")
            model, _ = load_checkpoint(checkpoint_path)
            scorer = lambda doc: model_forward(doc, model, task="summarization", training=False)
        else:
            scorer = "query_cosine"
        try:
            grid = [float(v) for v in grid_text.split(",") if v.strip()]
        except ValueError as exc:
            _fail(EXIT_CONFIG, "config_parse", f"bad --grid value: {exc}")
        result = sweep_lambda(scorer, corpus, grid, objective=objective, n_select=n_select)
    else:
        raw = _load_config_file(spec_path) if spec_path else {}
        raw.setdefault("objective", objective)
        raw.setdefault("seed", seed)
        raw["sampling"] = "grid" if kind == "grid" else "random"
        try:
            spec = SweepSpec(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in raw.items()})
        except TypeError as exc:
            _fail(EXIT_CONFIG, "config_parse", f"bad sweep spec: {exc}")
        rhet = load_corpus(rhet_path) if rhet_path else None
        result = random_search(spec, corpus, rhet)

    out_dir = _prepare_out(out)
    rows = result.to_rows()
    with open(out_dir / "sweep.json", "w", encoding="utf-8") as fh:
        json.dump({"objective": result.objective, "best_trial_id": result.best_trial_id,
                   "trials": rows}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out_dir / "sweep_table.txt", "w", encoding="utf-8") as fh:
        keys = ["trial_id", "mean_objective", "mean_tokens", "mean_recall", "mean_rouge_l"]
        fh.write("\t".join(keys) + "\n")
        for row in rows:
            fh.write("\t".join(str(row[k]) for k in keys) + "\n")
    _write_manifest(
        out_dir, "sweep", config, ["sweep.json", "sweep_table.txt"],
        inputs={"corpus": corpus_path, "sidecar": sidecar_path, "rhet": rhet_path,
                "checkpoint": checkpoint_path, "spec": spec_path},
    )
    click.echo(f"best trial {result.best_trial_id}: {result.best_config}")


_BASELINE_DEFAULTS = {"method": "textrank", "lambda": 0.9, "n": 5, "token_budget": 160}


@main.command("baseline")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--sidecar", "sidecar_path", type=click.Path(exists=True))
@click.option("--method", type=click.Choice(["textrank", "mmr", "rl-gru-mmr", "rl-gru-textrank"]), default=None)
@click.option("--labeler", "labeler_path", type=click.Path(exists=True))
@click.option("--lambda", "lambda_", type=float, default=None)
@click.option("--n", "n_select", type=int, default=None)
@click.option("--token-budget", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@_guarded
def cmd_baseline(config_path, corpus_path, sidecar_path, method, labeler_path, lambda_, n_select, token_budget, out):
    """Run a classical baseline; writes summaries.jsonl (evaluate-compatible)."""
    config = _resolve(
        _BASELINE_DEFAULTS,
        _load_config_file(config_path, "baseline"),
        {"method": method, "lambda": lambda_, "n": n_select, "token_budget": token_budget},
    )
    method, lambda_, n_select, token_budget = (
        config["method"], config["lambda"], config["n"], config["token_budget"]
    )
    corpus = load_corpus(corpus_path, sidecar=sidecar_path)
    labeler = None
    if method.startswith("rl-"):
        if labeler_path is None:
            raise ValidationError(f"method {method} requires --labeler")
        labeler, _ = load_checkpoint(labeler_path)
    out_dir = _prepare_out(out)
    with open(out_dir / "summaries.jsonl", "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            meta = {}
            if method == "textrank":
                chosen = textrank_summarize(doc, token_budget)
            elif method == "mmr":
                cfg = SelectionConfig(lambda_=lambda_, n_select=n_select, relevance_source="query_cosine")
                chosen = mmr_select(doc, cfg=cfg, sim=similarity_matrix(doc), q_rel=query_relevance(doc)).chosen
            else:
                selector = "mmr" if method == "rl-gru-mmr" else "textrank"
                result = rl_pipeline(doc, labeler, selector=selector, lambda_=lambda_,
                                     n_select=n_select, token_budget=token_budget)
                chosen = result.chosen
                meta = {"fallback_full_document": result.fallback_full_document,
                        "kept_count": len(result.kept)}
            rec = {
                "doc_id": doc.id,
                "chosen": sorted(chosen),
                "text": " ".join(doc.sentences[i].text for i in sorted(chosen)),
            }
            rec.update(meta)
            fh.write(json.dumps(rec) + "\n")
    _write_manifest(
        out_dir, "baseline", config, ["summaries.jsonl"],
        inputs={"corpus": corpus_path, "sidecar": sidecar_path, "labeler": labeler_path},
    )
    click.echo(f"ran {method} over {len(corpus)} documents")


@main.command("validate")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--sidecar", "sidecar_path", type=click.Path(exists=True))
@_guarded
def cmd_validate(corpus_path, sidecar_path):
    """Validate a corpus file (and optional sidecar); exit 0 if well-formed."""
    corpus = load_corpus(corpus_path, sidecar=sidecar_path)
    n_sent = sum(len(d) for d in corpus.documents)
    click.echo(json.dumps({
        "ok": True, "documents": len(corpus), "sentences": n_sent,
        "dimension": corpus.dimension, "task_tag": corpus.task_tag,
    }))


if __name__ == "__main__":
    main()
