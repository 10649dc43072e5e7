"""End-to-end CLI runs against the fixture dataset."""

import json

import pytest

from kvqa.cli import main

pytestmark = pytest.mark.usefixtures("fixtures_dir")


def run(*argv) -> int:
    return main([str(a) for a in argv])


def run_pipeline(config, out, *, epochs=2, extra_knowledge=(), seed=None):
    seed_args = ("--seed", seed) if seed is not None else ()
    assert run("prepare", "--config", config, "--out", out, *seed_args) == 0
    assert run("knowledge", "--config", config, "--out", out, "--offline",
               *extra_knowledge, *seed_args) == 0
    assert run("train", "--config", config, "--out", out, "--epochs", epochs, *seed_args) == 0
    assert run("eval", "--config", config, "--out", out, *seed_args) == 0


@pytest.fixture()
def config(fixtures_dir):
    return fixtures_dir / "config.json"


def rewrite_config(fixtures_dir, tmp_path, **changes):
    """Copy the fixture config elsewhere, keeping its inputs reachable."""
    raw = json.loads((fixtures_dir / "config.json").read_text())
    for key in ("questions", "annotations", "attributes", "embeddings",
                "taxonomy", "knowledge_store"):
        raw[key] = str(fixtures_dir / raw[key])
    raw.update(changes)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    return path


class TestPrepare:
    def test_writes_artifacts(self, config, tmp_path):
        out = tmp_path / "run"
        assert run("prepare", "--config", config, "--out", out) == 0
        for name in (
            "answers.txt", "words.txt",
            "prepared_train.json", "prepared_validation.json", "attributes_grouped.json",
        ):
            assert (out / name).exists(), name

    def test_idempotent(self, config, tmp_path):
        out = tmp_path / "run"
        run("prepare", "--config", config, "--out", out)
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        run("prepare", "--config", config, "--out", out)
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first == second

    def test_word_vocab_size_matches_mini_dataset(self, config, tmp_path):
        out = tmp_path / "run"
        run("prepare", "--config", config, "--out", out)
        assert len((out / "words.txt").read_text().splitlines()) == 45

    def test_missing_input_is_a_clean_error(self, fixtures_dir, tmp_path, capsys):
        broken = rewrite_config(fixtures_dir, tmp_path, attributes="does-not-exist.json")
        assert run("prepare", "--config", broken, "--out", tmp_path / "run") == 1
        assert "does-not-exist.json" in capsys.readouterr().err

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        bad = tmp_path / "config.json"
        bad.write_text(json.dumps({"no_such_key": 1}), encoding="utf-8")
        assert run("prepare", "--config", bad, "--out", tmp_path / "run") == 1
        assert "no_such_key" in capsys.readouterr().err


class TestKnowledge:
    def test_offline_runs_are_bit_identical(self, config, tmp_path):
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / name
            run("prepare", "--config", config, "--out", out)
            run("knowledge", "--config", config, "--out", out, "--offline")
            outputs.append(
                {
                    p.name: p.read_bytes()
                    for p in out.iterdir()
                    if p.name.startswith("knowledge_")
                }
            )
        assert outputs[0] == outputs[1]

    def test_question_only_zero_budget_can_be_empty(self, fixtures_dir, tmp_path):
        # an edgeless store guarantees extraction yields nothing either way
        empty_store = tmp_path / "store.json"
        empty_store.write_text("[]", encoding="utf-8")
        config = rewrite_config(fixtures_dir, tmp_path, knowledge_store=str(empty_store))
        out = tmp_path / "run"
        assert run("prepare", "--config", config, "--out", out) == 0
        assert run("knowledge", "--config", config, "--out", out,
                   "--offline", "--mode", "question_only", "--budget", "0") == 0
        for split in ("train", "validation"):
            records = json.loads((out / f"knowledge_records_{split}.json").read_text())
            assert records == []

    def test_records_use_reference_keys(self, config, tmp_path):
        out = tmp_path / "run"
        run("prepare", "--config", config, "--out", out)
        run("knowledge", "--config", config, "--out", out, "--offline")
        records = json.loads((out / "knowledge_records_train.json").read_text())
        assert records, "fixture run should extract some knowledge"
        assert set(records[0]) == {"know_id", "uri", "Labels", "Surface", "Relation"}


class TestTrainEval:
    def test_same_seed_gives_identical_metrics(self, config, tmp_path):
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / name
            run_pipeline(config, out, epochs=2, seed=13)
            outputs.append((out / "metrics.csv").read_bytes())
        assert outputs[0] == outputs[1]

    def test_metrics_header_records_defaults(self, config, tmp_path):
        out = tmp_path / "run"
        run("prepare", "--config", config, "--out", out)
        run("knowledge", "--config", config, "--out", out, "--offline")
        assert run("train", "--config", config, "--out", out) == 0
        header = (out / "metrics.csv").read_text().splitlines()[0]
        assert "epochs=10" in header and "batch_size=10" in header

    def test_eval_reports_cover_both_splits(self, config, tmp_path):
        out = tmp_path / "run"
        run_pipeline(config, out, epochs=2)
        summary = json.loads((out / "eval_report.json").read_text())
        assert [row["split"] for row in summary["rows"]] == ["train", "validation"]

    def test_selection_modes_label_report_rows(self, config, tmp_path):
        labels = {}
        for mode in ("image_only", "co_attention"):
            out = tmp_path / mode
            run("prepare", "--config", config, "--out", out)
            assert run("knowledge", "--config", config, "--out", out,
                       "--offline", "--mode", mode) == 0
            assert run("train", "--config", config, "--out", out, "--epochs", "2") == 0
            assert run("eval", "--config", config, "--out", out, "--mode", mode) == 0
            summary = json.loads((out / "eval_report.json").read_text())
            labels[mode] = {row["mode"] for row in summary["rows"]}
        assert labels["image_only"] == {"image_only"}
        assert labels["co_attention"] == {"co_attention"}

    def test_eval_before_train_fails_cleanly(self, config, tmp_path, capsys):
        out = tmp_path / "run"
        run("prepare", "--config", config, "--out", out)
        assert run("eval", "--config", config, "--out", out) == 1
        assert "kvqa train" in capsys.readouterr().err


class TestAnswer:
    def test_answer_prints_prediction(self, config, tmp_path, capsys):
        out = tmp_path / "run"
        run_pipeline(config, out, epochs=2)
        capsys.readouterr()
        assert run("answer", "--config", config, "--out", out,
                   "--image-id", "9002", "--question", "How this taste?") == 0
        printed = capsys.readouterr().out
        assert printed.startswith("answer: ")
        assert "probability: " in printed

    def test_low_confidence_marker(self, config, tmp_path, capsys):
        out = tmp_path / "run"
        run_pipeline(config, out, epochs=1)  # barely trained: probabilities stay low
        capsys.readouterr()
        assert run("answer", "--config", config, "--out", out,
                   "--image-id", "9002", "--question", "How this taste?") == 0
        assert "LOW-CONFIDENCE" in capsys.readouterr().out

    def test_unknown_image_is_an_error(self, config, tmp_path, capsys):
        out = tmp_path / "run"
        run_pipeline(config, out, epochs=1)
        assert run("answer", "--config", config, "--out", out,
                   "--image-id", "424242", "--question", "What is this?") == 1
        assert "424242" in capsys.readouterr().err
