"""Ingestion: JSON parsing, answer vocabulary ranking, and dataset splitting."""

import json

import pytest

from kvqa.errors import EmptyDataset, IoFailure, MalformedRecord
from kvqa.ingest import (
    AnnotationRecord,
    build_answer_vocab,
    join_records,
    load_annotations,
    load_questions,
    load_vocab,
    save_annotations,
    save_questions,
    save_vocab,
    split_dataset,
)


def write_json(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


class TestLoadQuestions:
    def test_example_entry(self, tmp_path):
        path = write_json(
            tmp_path,
            "q.json",
            [{"image_id": 81721, "Question": "How old do you have to be in Canada to do this?",
              "question_id": 817215}],
        )
        records = load_questions(path)
        assert len(records) == 1
        assert records[0].image_id == 81721
        assert records[0].question == "How old do you have to be in Canada to do this?"
        assert records[0].question_id == 817215

    def test_empty_array(self, tmp_path):
        assert load_questions(write_json(tmp_path, "q.json", [])) == []

    def test_missing_question_id(self, tmp_path):
        path = write_json(tmp_path, "q.json", [{"image_id": 1, "Question": "Why?"}])
        with pytest.raises(MalformedRecord):
            load_questions(path)

    def test_lowercase_key_accepted(self, tmp_path):
        path = write_json(
            tmp_path, "q.json", [{"image_id": 1, "question": "Why?", "question_id": 2}]
        )
        assert load_questions(path)[0].question == "Why?"

    def test_duplicate_question_id_rejected(self, tmp_path):
        entry = {"image_id": 1, "Question": "Why?", "question_id": 2}
        path = write_json(tmp_path, "q.json", [entry, entry])
        with pytest.raises(MalformedRecord):
            load_questions(path)

    def test_empty_question_rejected(self, tmp_path):
        path = write_json(tmp_path, "q.json", [{"image_id": 1, "Question": "  ", "question_id": 2}])
        with pytest.raises(MalformedRecord):
            load_questions(path)

    def test_missing_file_is_io_failure(self, tmp_path):
        with pytest.raises(IoFailure):
            load_questions(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "q.json"
        path.write_text("{nope", encoding="utf-8")
        with pytest.raises(MalformedRecord):
            load_questions(path)

    def test_round_trip(self, tmp_path):
        path = write_json(
            tmp_path, "q.json",
            [{"image_id": 81721, "Question": "How this taste?", "question_id": 5}],
        )
        records = load_questions(path)
        out = tmp_path / "q2.json"
        save_questions(records, out)
        assert load_questions(out) == records
        assert "Question" in out.read_text()  # serialized key keeps its original casing


class TestLoadAnnotations:
    def test_answers_lowercased(self, tmp_path):
        path = write_json(
            tmp_path, "a.json",
            [{"question_id": 5, "image_id": 2,
              "answers": [{"answer": "Sweet", "answer_id": 1}]}],
        )
        assert load_annotations(path)[0].answer_strings() == ["sweet"]

    def test_whitespace_trimmed(self, tmp_path):
        path = write_json(
            tmp_path, "a.json",
            [{"question_id": 5, "image_id": 2, "answers": [{"answer": " Dog ", "answer_id": 1}]}],
        )
        assert load_annotations(path)[0].answer_strings() == ["dog"]

    def test_empty_answers_rejected(self, tmp_path):
        path = write_json(tmp_path, "a.json", [{"question_id": 5, "image_id": 2, "answers": []}])
        with pytest.raises(MalformedRecord):
            load_annotations(path)

    def test_shared_image_id_is_fine(self, tmp_path):
        path = write_json(
            tmp_path, "a.json",
            [
                {"question_id": 1, "image_id": 9, "answers": [{"answer": "a", "answer_id": 1}]},
                {"question_id": 2, "image_id": 9, "answers": [{"answer": "b", "answer_id": 1}]},
            ],
        )
        assert len(load_annotations(path)) == 2

    def test_round_trip(self, tmp_path):
        path = write_json(
            tmp_path, "a.json",
            [{"question_id": 5, "image_id": 2,
              "answers": [{"answer": "dog", "answer_id": 1}, {"answer": "dog", "answer_id": 2}]}],
        )
        records = load_annotations(path)
        out = tmp_path / "a2.json"
        save_annotations(records, out)
        assert load_annotations(out) == records


def ann(question_id, *answers, image_id=1):
    return AnnotationRecord(
        question_id=question_id,
        image_id=image_id,
        answers=tuple((a, i + 1) for i, a in enumerate(answers)),
    )


class TestAnswerVocab:
    def test_counts_and_tiebreak(self):
        records = [ann(1, "a", "a"), ann(2, "b", "b"), ann(3, "c")]
        vocab = build_answer_vocab(records, top_n=2)
        assert list(vocab.entries) == ["a", "b"]

    def test_truncation_bound(self):
        vocab = build_answer_vocab([ann(1, "x", "x", "x", "x", "x")], top_n=3)
        assert list(vocab.entries) == ["x"]

    def test_fixture_dataset_gives_fifteen(self, fixtures_dir):
        annotations = load_annotations(fixtures_dir / "annotations.json")
        vocab = build_answer_vocab(annotations, top_n=15)
        assert len(vocab) == 15
        assert vocab.entries[0] == "dog"  # most frequent fixture answer

    def test_rank_order_property(self, fixtures_dir):
        from collections import Counter

        annotations = load_annotations(fixtures_dir / "annotations.json")
        counts = Counter(a for r in annotations for a in r.answer_strings())
        vocab = build_answer_vocab(annotations, top_n=100)
        for left, right in zip(vocab.entries, vocab.entries[1:]):
            assert counts[left] >= counts[right]
            if counts[left] == counts[right]:
                assert left < right

    def test_index_round_trip(self):
        vocab = build_answer_vocab([ann(1, "a", "b", "c")], top_n=3)
        for i, answer in enumerate(vocab.entries):
            assert vocab.index_of(answer) == i
            assert vocab.answer_at(i) == answer
        assert vocab.index_of("zzz") is None

    def test_empty_dataset(self):
        with pytest.raises(EmptyDataset):
            build_answer_vocab([], top_n=5)

    def test_vocab_file_round_trip(self, tmp_path):
        vocab = build_answer_vocab([ann(1, "dog", "cat", "dog")], top_n=5)
        path = tmp_path / "vocab.txt"
        save_vocab(vocab, path)
        assert load_vocab(path) == vocab
        assert path.read_text().splitlines() == ["dog", "cat"]


def joined(n):
    from kvqa.ingest import QuestionRecord

    return [
        (QuestionRecord(image_id=i, question=f"q{i}?", question_id=i), ann(i, "a"))
        for i in range(n)
    ]


class TestSplitDataset:
    def test_deterministic_cut(self):
        records = joined(10)
        first = split_dataset(records, 0.8, seed=7)
        second = split_dataset(records, 0.8, seed=7)
        assert len(first.train) == 8 and len(first.validation) == 2
        assert first == second

    def test_single_record_rounds_up(self):
        split = split_dataset(joined(1), 0.5, seed=0)
        assert len(split.train) == 1 and len(split.validation) == 0

    def test_disjoint_partition_across_seeds(self):
        records = joined(13)
        all_ids = {q.question_id for q, _ in records}
        for seed in range(10):
            split = split_dataset(records, 0.6, seed=seed)
            train_ids = {q.question_id for q, _ in split.train}
            val_ids = {q.question_id for q, _ in split.validation}
            assert train_ids | val_ids == all_ids
            assert not train_ids & val_ids

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            split_dataset(joined(3), 1.0, seed=0)

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            split_dataset([], 0.5, seed=0)


class TestJoin:
    def test_missing_annotation(self):
        from kvqa.ingest import QuestionRecord

        questions = [QuestionRecord(image_id=1, question="q?", question_id=10)]
        with pytest.raises(MalformedRecord):
            join_records(questions, [])

    def test_orphan_annotation(self):
        with pytest.raises(MalformedRecord):
            join_records([], [ann(10, "a")])
