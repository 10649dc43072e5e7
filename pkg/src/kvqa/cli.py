"""Command-line entry point: prepare, knowledge, train, eval, answer.

Every command is deterministic given (inputs, config, seed), writes plain
JSON/CSV artifacts, and never mutates its inputs. Configuration precedence is
CLI flags > config file > defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import IoFailure, KvqaError, MalformedRecord
from .evaluation import Taxonomy, evaluate, write_report_csv, write_report_json
from .image_attributes import load_attribute_file, save_attribute_sets
from .ingest import (
    build_answer_vocab,
    join_records,
    load_annotations,
    load_questions,
    load_vocab,
    save_vocab,
    split_dataset,
)
from .kb import LocalStore, RemoteClient
from .knowledge import (
    SelectionConfig,
    extract_knowledge,
    index_entry,
    knowledge_records,
    read_knowledge_index,
    write_knowledge_index,
    write_knowledge_records,
)
from .pipeline import (
    answer_question,
    build_examples,
    build_word_vocab,
    group_by_image,
    predictions_for,
    prepare_records,
    read_prepared,
    write_prepared,
)
from .text_encoder import load_embeddings
from .training import (
    ModelConfig,
    TrainConfig,
    init_model,
    load_checkpoint,
    save_checkpoint,
    train,
    write_metrics_csv,
)

log = logging.getLogger(__name__)

REMOTE_URL_ENV = "KVQA_KNOWLEDGE_URL"
SPLITS = ("train", "validation")


@dataclass(frozen=True)
class RunConfig:
    # input paths
    questions: str = "questions.json"
    annotations: str = "annotations.json"
    attributes: str = "attributes.json"
    embeddings: str = "embeddings.txt"
    taxonomy: str = "taxonomy.tsv"
    knowledge_store: str = "knowledge_store.json"
    cache_dir: str = "cache"
    out_dir: str = "out"
    # data handling
    answer_top_n: int = 2000
    word_top_n: int = 1000
    train_fraction: float = 0.8
    seed: int = 0
    strict_features: bool = False
    pool_mode: str = "sum"
    # model
    embedding_dim: int = 300
    lstm_hidden: int = 1024
    mlp_hidden: int = 1024
    dropout: float = 0.5
    freeze_encoder: bool = False
    # training
    learning_rate: float = 0.001
    epochs: int = 10
    batch_size: int = 100
    # knowledge selection
    unmatched_budget: int = 5
    extra_objects: int = 12
    max_edges_per_label: int = 11
    selection_mode: str = "co_attention"
    selection_profile: str = "algorithm"  # algorithm -> unmatched_budget, experiment -> extra_objects
    offline: bool = True
    # evaluation
    wups_thresholds: tuple[float, ...] = (0.9, 0.0)

    def selection(self) -> SelectionConfig:
        budget = (
            self.extra_objects if self.selection_profile == "experiment" else self.unmatched_budget
        )
        return SelectionConfig(
            unmatched_budget=budget,
            extra_objects=self.extra_objects,
            max_edges_per_label=self.max_edges_per_label,
            mode=self.selection_mode,
        )


def load_config(path: str | Path) -> RunConfig:
    """Read a config JSON file; relative paths resolve against the file's directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"config {path} is not valid JSON: {exc}") from exc
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise MalformedRecord(f"config {path} has unknown keys: {sorted(unknown)}")
    if "wups_thresholds" in raw:
        raw["wups_thresholds"] = tuple(raw["wups_thresholds"])
    cfg = RunConfig(**raw)
    base = path.parent
    path_fields = {
        "questions", "annotations", "attributes", "embeddings",
        "taxonomy", "knowledge_store", "cache_dir", "out_dir",
    }
    resolved = {
        name: str((base / getattr(cfg, name)))
        for name in path_fields
        if not Path(getattr(cfg, name)).is_absolute()
    }
    cfg = replace(cfg, **resolved)
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: RunConfig) -> None:
    if not 0.0 < cfg.train_fraction < 1.0:
        raise MalformedRecord(f"train_fraction must be in (0, 1), got {cfg.train_fraction}")
    if not 0.0 <= cfg.dropout < 1.0:
        raise MalformedRecord(f"dropout must be in [0, 1), got {cfg.dropout}")
    for name in ("answer_top_n", "epochs", "batch_size"):
        if getattr(cfg, name) < 1:
            raise MalformedRecord(f"{name} must be >= 1")
    if cfg.pool_mode not in ("sum", "mean"):
        raise MalformedRecord(f"pool_mode must be sum or mean, got {cfg.pool_mode!r}")
    cfg.selection()  # validates counts and mode


def _require_inputs(cfg: RunConfig, names: list[str]) -> None:
    for name in names:
        path = Path(getattr(cfg, name))
        if not path.exists():
            raise IoFailure(f"{name} file not found: {path}")


def _out(cfg: RunConfig, name: str) -> Path:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / name


def _artifact(cfg: RunConfig, name: str, hint: str) -> Path:
    path = Path(cfg.out_dir) / name
    if not path.exists():
        raise IoFailure(f"missing artifact {path}; run `kvqa {hint}` first")
    return path


def _knowledge_source(cfg: RunConfig):
    if cfg.offline:
        _require_inputs(cfg, ["knowledge_store"])
        return LocalStore(cfg.knowledge_store)
    base_url = os.environ.get(REMOTE_URL_ENV)
    if not base_url:
        raise KvqaError(
            f"online mode needs the {REMOTE_URL_ENV} environment variable (or pass --offline)"
        )
    fallback = LocalStore(cfg.knowledge_store) if Path(cfg.knowledge_store).exists() else None
    return RemoteClient(base_url, cfg.cache_dir, fallback=fallback)


def cmd_prepare(cfg: RunConfig) -> None:
    _require_inputs(cfg, ["questions", "annotations", "attributes"])
    questions = load_questions(cfg.questions)
    annotations = load_annotations(cfg.annotations)
    joined = join_records(questions, annotations)
    vocab = build_answer_vocab(annotations, cfg.answer_top_n)
    split = split_dataset(joined, cfg.train_fraction, cfg.seed)
    attrs = load_attribute_file(cfg.attributes, strict=cfg.strict_features)

    save_vocab(vocab, _out(cfg, "answers.txt"))
    words = build_word_vocab(joined, top_n=cfg.word_top_n)
    _out(cfg, "words.txt").write_text("".join(f"{w}\n" for w in words), encoding="utf-8")
    write_prepared(prepare_records(split.train, vocab), _out(cfg, "prepared_train.json"))
    write_prepared(prepare_records(split.validation, vocab), _out(cfg, "prepared_validation.json"))
    save_attribute_sets(attrs, _out(cfg, "attributes_grouped.json"))
    print(
        f"prepared {len(split.train)} train / {len(split.validation)} validation records, "
        f"{len(vocab)} answer classes, {len(words)} word vocabulary entries"
    )


def cmd_knowledge(cfg: RunConfig) -> None:
    attrs_by_image = group_by_image(
        load_attribute_file(
            _artifact(cfg, "attributes_grouped.json", "prepare"), strict=cfg.strict_features
        )
    )
    source = _knowledge_source(cfg)
    selection = cfg.selection()
    for split in SPLITS:
        prepared = read_prepared(_artifact(cfg, f"prepared_{split}.json", "prepare"))
        records, entries = [], []
        for record in prepared:
            attrs = attrs_by_image.get(record.image_id)
            if attrs is None:
                raise KvqaError(f"no attributes for image {record.image_id} (question {record.question_id})")
            triples = extract_knowledge(attrs, list(record.tokens), selection, source)
            records.extend(knowledge_records(triples, know_id=record.image_id))
            entries.append(index_entry(record.question_id, record.image_id, triples))
        write_knowledge_records(records, _out(cfg, f"knowledge_records_{split}.json"))
        write_knowledge_index(entries, _out(cfg, f"knowledge_index_{split}.json"))
        print(f"{split}: {len(records)} knowledge records for {len(entries)} questions")


def _load_examples(cfg: RunConfig, split: str, table, require_target: bool):
    prepared = read_prepared(_artifact(cfg, f"prepared_{split}.json", "prepare"))
    attrs_by_image = group_by_image(
        load_attribute_file(
            _artifact(cfg, "attributes_grouped.json", "prepare"), strict=cfg.strict_features
        )
    )
    index = read_knowledge_index(_artifact(cfg, f"knowledge_index_{split}.json", "knowledge"))
    examples = build_examples(
        prepared, attrs_by_image, index, table,
        pool_mode=cfg.pool_mode, require_target=require_target,
    )
    return prepared, examples


def cmd_train(cfg: RunConfig) -> None:
    _require_inputs(cfg, ["embeddings"])
    table = load_embeddings(cfg.embeddings, cfg.embedding_dim)
    vocab = load_vocab(_artifact(cfg, "answers.txt", "prepare"))
    _, train_examples = _load_examples(cfg, "train", table, require_target=True)
    _, val_examples = _load_examples(cfg, "validation", table, require_target=True)
    if not train_examples:
        raise KvqaError("no trainable examples: every train answer is outside the vocabulary")

    image_dim = int(train_examples[0].image_vec.shape[0])
    model_cfg = ModelConfig(
        image_dim=image_dim,
        embedding_dim=cfg.embedding_dim,
        lstm_hidden=cfg.lstm_hidden,
        mlp_hidden=cfg.mlp_hidden,
        n_classes=len(vocab),
        dropout=cfg.dropout,
        freeze_encoder=cfg.freeze_encoder,
    )
    train_cfg = TrainConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        seed=cfg.seed,
    )
    model = init_model(model_cfg, cfg.seed)
    metrics, state = train(train_examples, val_examples, model, train_cfg)
    save_checkpoint(model, state, train_cfg, _out(cfg, "checkpoint.json"))
    write_metrics_csv(metrics, train_cfg, _out(cfg, "metrics.csv"))
    final = metrics[-1]
    print(
        f"trained {train_cfg.epochs} epochs on {len(train_examples)} examples: "
        f"train_acc={final['train_acc']:.4f} val_acc={final['val_acc']:.4f}"
    )


def _check_vocab(model, vocab) -> None:
    if len(vocab) != model.config.n_classes:
        raise KvqaError(
            f"answer vocabulary has {len(vocab)} entries but the checkpoint was "
            f"trained with {model.config.n_classes} classes; re-run prepare/train together"
        )


def cmd_eval(cfg: RunConfig) -> None:
    _require_inputs(cfg, ["embeddings", "taxonomy"])
    model, _, _ = load_checkpoint(_artifact(cfg, "checkpoint.json", "train"))
    table = load_embeddings(cfg.embeddings, cfg.embedding_dim)
    vocab = load_vocab(_artifact(cfg, "answers.txt", "prepare"))
    _check_vocab(model, vocab)
    taxonomy = Taxonomy.from_file(cfg.taxonomy)
    labeled = []
    for split in SPLITS:
        prepared, examples = _load_examples(cfg, split, table, require_target=False)
        predictions = predictions_for(examples, model, vocab)
        annotations = [r.annotation() for r in prepared]
        report = evaluate(predictions, annotations, taxonomy, thresholds=cfg.wups_thresholds)
        labeled.append((split, cfg.selection_mode, report))
        wups_summary = " ".join(
            f"wups@{t}={v:.4f}" for t, v in sorted(report.wups_at_threshold.items(), reverse=True)
        )
        print(f"{split} ({cfg.selection_mode}): exact={report.exact_accuracy:.4f} {wups_summary}")
    write_report_csv(labeled, _out(cfg, "eval_per_question.csv"))
    write_report_json(labeled, _out(cfg, "eval_report.json"))


def cmd_answer(cfg: RunConfig, image_id: int, question: str) -> None:
    _require_inputs(cfg, ["embeddings", "attributes"])
    model, _, _ = load_checkpoint(_artifact(cfg, "checkpoint.json", "train"))
    table = load_embeddings(cfg.embeddings, cfg.embedding_dim)
    vocab = load_vocab(_artifact(cfg, "answers.txt", "prepare"))
    _check_vocab(model, vocab)
    attrs_by_image = group_by_image(
        load_attribute_file(cfg.attributes, strict=cfg.strict_features)
    )
    prediction, triples = answer_question(
        image_id,
        question,
        attrs_by_image,
        table,
        model,
        vocab,
        _knowledge_source(cfg),
        cfg.selection(),
        pool_mode=cfg.pool_mode,
    )
    print(f"answer: {prediction.answer}")
    print(f"probability: {prediction.probability:.4f}")
    print(f"knowledge triples used: {len(triples)}")
    if not prediction.confident:
        print("LOW-CONFIDENCE: probability is not above 50%")


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    overrides = {}
    mapping = {
        "out": "out_dir",
        "seed": "seed",
        "epochs": "epochs",
        "batch_size": "batch_size",
        "learning_rate": "learning_rate",
        "mode": "selection_mode",
        "budget": "unmatched_budget",
        "max_edges": "max_edges_per_label",
        "profile": "selection_profile",
        "top_n": "answer_top_n",
        "train_fraction": "train_fraction",
    }
    for arg_name, field_name in mapping.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            overrides[field_name] = value
    # an explicit budget always wins, whatever the profile says
    if getattr(args, "budget", None) is not None and getattr(args, "profile", None) is None:
        overrides["selection_profile"] = "algorithm"
    if getattr(args, "offline", False):
        overrides["offline"] = True
    if getattr(args, "online", False):
        overrides["offline"] = False
    if getattr(args, "freeze_encoder", False):
        overrides["freeze_encoder"] = True
    if overrides:
        cfg = replace(cfg, **overrides)
        _validate_config(cfg)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kvqa",
        description="Question-aware knowledge selection pipeline for VQA",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="path to a run-config JSON file")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--seed", type=int, help="override the run seed")

    p_prepare = sub.add_parser("prepare", help="ingest inputs, build vocab, split dataset")
    add_common(p_prepare)
    p_prepare.add_argument("--top-n", type=int, dest="top_n", help="answer vocabulary size")
    p_prepare.add_argument("--train-fraction", type=float, dest="train_fraction")

    p_knowledge = sub.add_parser("knowledge", help="select attributes and export knowledge")
    add_common(p_knowledge)
    p_knowledge.add_argument("--offline", action="store_true", help="use the local store only")
    p_knowledge.add_argument("--online", action="store_true", help="query the remote endpoint")
    p_knowledge.add_argument("--mode", choices=("co_attention", "image_only", "question_only"))
    p_knowledge.add_argument("--budget", type=int, help="unmatched-label budget")
    p_knowledge.add_argument("--max-edges", type=int, dest="max_edges")
    p_knowledge.add_argument("--profile", choices=("algorithm", "experiment"))

    p_train = sub.add_parser("train", help="train the classifier and encoder")
    add_common(p_train)
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--batch-size", type=int, dest="batch_size")
    p_train.add_argument("--learning-rate", type=float, dest="learning_rate")
    p_train.add_argument("--freeze-encoder", action="store_true", dest="freeze_encoder")

    p_eval = sub.add_parser("eval", help="score predictions with exact match and WUPS")
    add_common(p_eval)
    p_eval.add_argument("--mode", choices=("co_attention", "image_only", "question_only"),
                        help="label reports with this selection mode")

    p_answer = sub.add_parser("answer", help="answer one question about one image")
    add_common(p_answer)
    p_answer.add_argument("--image-id", type=int, required=True, dest="image_id")
    p_answer.add_argument("--question", required=True)
    p_answer.add_argument("--offline", action="store_true")
    p_answer.add_argument("--online", action="store_true")

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "prepare":
            cmd_prepare(cfg)
        elif args.command == "knowledge":
            cmd_knowledge(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "eval":
            cmd_eval(cfg)
        elif args.command == "answer":
            cmd_answer(cfg, args.image_id, args.question)
    except KvqaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
