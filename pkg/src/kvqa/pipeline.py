"""Glue between on-disk artifacts and the in-memory model.

A "prepared" record is a joined question/annotation pair after tokenization
and answer-vocabulary lookup; examples whose answers all fall outside the
vocabulary keep a null target and are skipped by training.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import IoFailure, MalformedRecord, UnknownImage
from .image_attributes import AttributeSet, pool_features
from .ingest import AnnotationRecord, AnswerVocab, JoinedRecord
from .kb import KnowledgeSource, KnowledgeTriple
from .knowledge import SelectionConfig, extract_knowledge, vectorize_knowledge
from .model import forward, fuse
from .text_encoder import EmbeddingTable, embed_tokens, lstm_encode, tokenize
from .training import Prediction, TrainingExample, VqaModel


@dataclass(frozen=True)
class PreparedRecord:
    question_id: int
    image_id: int
    question: str
    tokens: tuple[str, ...]
    answers: tuple[tuple[str, int], ...]
    target_answer: str | None
    target_index: int | None

    def annotation(self) -> AnnotationRecord:
        return AnnotationRecord(
            question_id=self.question_id, image_id=self.image_id, answers=self.answers
        )


def prepare_records(joined: Sequence[JoinedRecord], vocab: AnswerVocab) -> list[PreparedRecord]:
    """Tokenize questions and resolve each record's first in-vocabulary answer."""
    prepared = []
    for question, annotation in joined:
        target_answer = next((a for a in annotation.answer_strings() if a in vocab), None)
        prepared.append(
            PreparedRecord(
                question_id=question.question_id,
                image_id=question.image_id,
                question=question.question,
                tokens=tuple(tokenize(question.question)),
                answers=annotation.answers,
                target_answer=target_answer,
                target_index=vocab.index_of(target_answer) if target_answer else None,
            )
        )
    return prepared


def build_word_vocab(joined: Sequence[JoinedRecord], top_n: int | None = None) -> list[str]:
    """Top question and answer tokens, most frequent first, ties lexicographic."""
    counts: Counter[str] = Counter()
    for question, annotation in joined:
        counts.update(tokenize(question.question))
        for answer in annotation.answer_strings():
            counts.update(tokenize(answer))
    ranked = [w for w, _ in sorted(counts.items(), key=lambda item: (-item[1], item[0]))]
    return ranked[:top_n] if top_n is not None else ranked


def write_prepared(records: Sequence[PreparedRecord], path: str | Path) -> None:
    payload = [
        {
            "question_id": r.question_id,
            "image_id": r.image_id,
            "question": r.question,
            "tokens": list(r.tokens),
            "answers": [[a, aid] for a, aid in r.answers],
            "target_answer": r.target_answer,
            "target_index": r.target_index,
        }
        for r in records
    ]
    try:
        Path(path).write_text(
            json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=True) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_prepared(path: str | Path) -> list[PreparedRecord]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"{path} is not valid JSON: {exc}") from exc
    records = []
    for i, raw in enumerate(data):
        try:
            records.append(
                PreparedRecord(
                    question_id=raw["question_id"],
                    image_id=raw["image_id"],
                    question=raw["question"],
                    tokens=tuple(raw["tokens"]),
                    answers=tuple((a, aid) for a, aid in raw["answers"]),
                    target_answer=raw["target_answer"],
                    target_index=raw["target_index"],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(f"{path}: entry {i} is invalid: {exc}") from exc
    return records


def build_examples(
    prepared: Sequence[PreparedRecord],
    attrs_by_image: Mapping[int, AttributeSet],
    knowledge_index: Mapping[int, list[KnowledgeTriple]],
    table: EmbeddingTable,
    pool_mode: str = "sum",
    require_target: bool = True,
) -> list[TrainingExample]:
    """Assemble model-ready examples; with require_target, skip vocab misses."""
    examples = []
    for record in prepared:
        if record.target_index is None and require_target:
            continue
        attrs = attrs_by_image.get(record.image_id)
        if attrs is None:
            raise UnknownImage(f"no attributes for image {record.image_id}")
        examples.append(
            TrainingExample(
                question_id=record.question_id,
                image_id=record.image_id,
                image_vec=pool_features(attrs, mode=pool_mode),
                knowledge_vec=vectorize_knowledge(
                    knowledge_index.get(record.question_id, []), table
                ),
                token_vecs=embed_tokens(list(record.tokens), table),
                target=record.target_index if record.target_index is not None else -1,
            )
        )
    return examples


def answer_question(
    image_id: int,
    question_text: str,
    attrs_by_image: Mapping[int, AttributeSet],
    table: EmbeddingTable,
    model: VqaModel,
    vocab: AnswerVocab,
    source: KnowledgeSource,
    selection: SelectionConfig,
    pool_mode: str = "sum",
) -> tuple[Prediction, list[KnowledgeTriple]]:
    """Answer a free-text question about one image, end to end."""
    attrs = attrs_by_image.get(image_id)
    if attrs is None:
        raise UnknownImage(f"no attributes for image {image_id}")
    tokens = tokenize(question_text)
    triples = extract_knowledge(attrs, tokens, selection, source)
    fused = fuse(
        pool_features(attrs, mode=pool_mode),
        vectorize_knowledge(triples, table),
        lstm_encode(embed_tokens(tokens, table), model.lstm),
    )
    dist = forward(fused, model.mlp, train_mode=False)
    index = dist.argmax()
    probability = float(dist.probabilities[index])
    prediction = Prediction(
        answer=vocab.answer_at(index), probability=probability, confident=probability > 0.5
    )
    return prediction, triples


def group_by_image(sets: Sequence[AttributeSet]) -> dict[int, AttributeSet]:
    return {s.image_id: s for s in sets}


def predictions_for(
    examples: Sequence[TrainingExample], model: VqaModel, vocab: AnswerVocab
) -> dict[int, str]:
    """Map question_id -> predicted answer string, inference mode."""
    out = {}
    for example in examples:
        dist = forward(
            np.concatenate(
                [
                    example.image_vec,
                    example.knowledge_vec,
                    lstm_encode(example.token_vecs, model.lstm),
                ]
            ),
            model.mlp,
            train_mode=False,
        )
        out[example.question_id] = vocab.answer_at(dist.argmax())
    return out
