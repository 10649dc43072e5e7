"""Dataset ingestion: question/annotation JSON, answer vocabulary, train/val split."""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyDataset, IoFailure, MalformedRecord


@dataclass(frozen=True)
class QuestionRecord:
    image_id: int
    question: str
    question_id: int


@dataclass(frozen=True)
class AnnotationRecord:
    question_id: int
    image_id: int
    answers: tuple[tuple[str, int], ...]  # (answer, answer_id), normalized lowercase

    def answer_strings(self) -> list[str]:
        return [a for a, _ in self.answers]


@dataclass(frozen=True)
class AnswerVocab:
    """Answer strings ranked by frequency; rank position doubles as class index."""

    entries: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.entries)) != len(self.entries):
            raise MalformedRecord("answer vocabulary contains duplicates")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, answer: str) -> bool:
        return answer in self._index

    @cached_property
    def _index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.entries)}

    def index_of(self, answer: str) -> int | None:
        return self._index.get(answer)

    def answer_at(self, index: int) -> str:
        return self.entries[index]


JoinedRecord = tuple[QuestionRecord, AnnotationRecord]


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[JoinedRecord, ...]
    validation: tuple[JoinedRecord, ...]


def _read_json(path: str | Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"{path} is not valid JSON: {exc}") from exc


def _write_json(payload, path: str | Path) -> None:
    try:
        Path(path).write_text(
            json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=True) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _lower_keys(entry: dict, path, index: int) -> dict:
    if not isinstance(entry, dict):
        raise MalformedRecord(f"{path}: entry {index} is not an object")
    return {str(k).lower(): v for k, v in entry.items()}


def _require(entry: dict, key: str, path, index: int):
    if key not in entry:
        raise MalformedRecord(f"{path}: entry {index} is missing required key '{key}'")
    return entry[key]


def _as_int(value, key: str, path, index: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedRecord(f"{path}: entry {index} key '{key}' is not an integer")
    return value


def load_questions(path: str | Path) -> list[QuestionRecord]:
    """Parse a question JSON file; keys are matched case-insensitively."""
    data = _read_json(path)
    if not isinstance(data, list):
        raise MalformedRecord(f"{path}: top-level value must be an array")
    records = []
    seen_ids: set[int] = set()
    for i, raw in enumerate(data):
        entry = _lower_keys(raw, path, i)
        question = _require(entry, "question", path, i)
        if not isinstance(question, str) or not question.strip():
            raise MalformedRecord(f"{path}: entry {i} has an empty question")
        question_id = _as_int(_require(entry, "question_id", path, i), "question_id", path, i)
        image_id = _as_int(_require(entry, "image_id", path, i), "image_id", path, i)
        if question_id in seen_ids:
            raise MalformedRecord(f"{path}: duplicate question_id {question_id}")
        seen_ids.add(question_id)
        records.append(QuestionRecord(image_id=image_id, question=question, question_id=question_id))
    return records


def save_questions(records: Iterable[QuestionRecord], path: str | Path) -> None:
    payload = [
        {"image_id": r.image_id, "Question": r.question, "question_id": r.question_id}
        for r in records
    ]
    _write_json(payload, path)


def load_annotations(path: str | Path) -> list[AnnotationRecord]:
    """Parse an annotation JSON file; answers are lowercased and trimmed."""
    data = _read_json(path)
    if not isinstance(data, list):
        raise MalformedRecord(f"{path}: top-level value must be an array")
    records = []
    for i, raw in enumerate(data):
        entry = _lower_keys(raw, path, i)
        question_id = _as_int(_require(entry, "question_id", path, i), "question_id", path, i)
        image_id = _as_int(_require(entry, "image_id", path, i), "image_id", path, i)
        raw_answers = _require(entry, "answers", path, i)
        if not isinstance(raw_answers, list) or not raw_answers:
            raise MalformedRecord(f"{path}: entry {i} has an empty answers list")
        answers = []
        for j, raw_answer in enumerate(raw_answers):
            answer_entry = _lower_keys(raw_answer, path, i)
            text = _require(answer_entry, "answer", path, i)
            if not isinstance(text, str):
                raise MalformedRecord(f"{path}: entry {i} answer {j} is not a string")
            normalized = text.strip().lower()
            if not normalized:
                raise MalformedRecord(f"{path}: entry {i} answer {j} is empty")
            answer_id = _as_int(_require(answer_entry, "answer_id", path, i), "answer_id", path, i)
            answers.append((normalized, answer_id))
        records.append(
            AnnotationRecord(question_id=question_id, image_id=image_id, answers=tuple(answers))
        )
    return records


def save_annotations(records: Iterable[AnnotationRecord], path: str | Path) -> None:
    payload = [
        {
            "image_id": r.image_id,
            "question_id": r.question_id,
            "answers": [{"answer": a, "answer_id": aid} for a, aid in r.answers],
        }
        for r in records
    ]
    _write_json(payload, path)


def build_answer_vocab(annotations: Sequence[AnnotationRecord], top_n: int) -> AnswerVocab:
    """Rank answers by total occurrence count, break ties lexicographically, keep top_n."""
    if top_n < 1:
        raise ValueError(f"top_n must be >= 1, got {top_n}")
    if not annotations:
        raise EmptyDataset("cannot build an answer vocabulary from zero annotations")
    counts: Counter[str] = Counter()
    for record in annotations:
        counts.update(record.answer_strings())
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return AnswerVocab(entries=tuple(answer for answer, _ in ranked[:top_n]))


def save_vocab(vocab: AnswerVocab, path: str | Path) -> None:
    try:
        Path(path).write_text("".join(f"{a}\n" for a in vocab.entries), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_vocab(path: str | Path) -> AnswerVocab:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return AnswerVocab(entries=tuple(line for line in lines if line))


def join_records(
    questions: Sequence[QuestionRecord], annotations: Sequence[AnnotationRecord]
) -> list[JoinedRecord]:
    """Pair questions with their annotations by question_id; both sides must match."""
    by_id = {a.question_id: a for a in annotations}
    joined = []
    for q in questions:
        annotation = by_id.pop(q.question_id, None)
        if annotation is None:
            raise MalformedRecord(f"question {q.question_id} has no annotation")
        joined.append((q, annotation))
    if by_id:
        orphan = next(iter(by_id))
        raise MalformedRecord(f"annotation {orphan} has no question")
    return joined


def split_dataset(
    records: Sequence[JoinedRecord], train_fraction: float, seed: int
) -> DatasetSplit:
    """Seeded shuffle then cut; train side is rounded up."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if not records:
        raise EmptyDataset("cannot split zero records")
    ordered = sorted(records, key=lambda pair: pair[0].question_id)
    random.Random(seed).shuffle(ordered)
    # round() guards against float dust like 10 * 0.8 -> 8.000000000000002
    train_size = math.ceil(round(len(ordered) * train_fraction, 9))
    return DatasetSplit(
        train=tuple(ordered[:train_size]), validation=tuple(ordered[train_size:])
    )
