"""Answer scoring: exact match and Wu-Palmer-based WUPS over a concept taxonomy."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IoFailure, MalformedRecord, MissingPrediction
from .ingest import AnnotationRecord

DOWNWEIGHT = 0.1


class Taxonomy:
    """A rooted tree of concepts; depth of the root is 1."""

    def __init__(self, parents: Mapping[str, str]):
        self._parents = dict(parents)
        children = set(self._parents)
        parent_side = set(self._parents.values())
        roots = parent_side - children
        if len(roots) != 1:
            raise MalformedRecord(f"taxonomy must have exactly one root, found {sorted(roots)}")
        self.root = next(iter(roots))
        self._depth: dict[str, int] = {self.root: 1}
        for node in children:
            self._chain(node)  # also detects cycles

    def _chain(self, node: str) -> list[str]:
        """Path from node up to the root, caching depths along the way."""
        chain = [node]
        current = node
        seen = {node}
        while current != self.root:
            current = self._parents.get(current)
            if current is None:
                raise MalformedRecord(f"taxonomy node {chain[0]!r} is not connected to the root")
            if current in seen:
                raise MalformedRecord(f"taxonomy contains a cycle through {current!r}")
            seen.add(current)
            chain.append(current)
        for i, name in enumerate(chain):
            self._depth.setdefault(name, len(chain) - i)
        return chain

    def __contains__(self, node: str) -> bool:
        return node in self._depth

    def depth(self, node: str) -> int:
        return self._depth[node]

    def lowest_common_ancestor(self, a: str, b: str) -> str:
        ancestors = set(self._chain(a))
        for node in self._chain(b):
            if node in ancestors:
                return node
        return self.root

    @classmethod
    def from_file(cls, path: str | Path) -> "Taxonomy":
        """Parse a UTF-8 file of one "child<TAB>parent" pair per line."""
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        parents: dict[str, str] = {}
        for line_no, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            if "\t" not in line:
                raise MalformedRecord(f"{path}:{line_no}: expected 'child<TAB>parent'")
            child, parent = line.split("\t", 1)
            child, parent = child.strip(), parent.strip()
            if not child or not parent:
                raise MalformedRecord(f"{path}:{line_no}: empty node name")
            if child in parents:
                raise MalformedRecord(f"{path}:{line_no}: node {child!r} has two parents")
            parents[child] = parent
        return cls(parents)


def wup_similarity(a: str, b: str, taxonomy: Taxonomy) -> float:
    """2*depth(lca) / (depth(a) + depth(b)); identical strings always score 1."""
    if a == b:
        return 1.0
    if a not in taxonomy or b not in taxonomy:
        return 0.0
    lca = taxonomy.lowest_common_ancestor(a, b)
    return 2.0 * taxonomy.depth(lca) / (taxonomy.depth(a) + taxonomy.depth(b))


def wups_score(
    prediction: str,
    ground_truths: Iterable[str],
    taxonomy: Taxonomy,
    threshold: float,
) -> float:
    """Best Wu-Palmer score against any ground truth, down-weighted below threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    best = 0.0
    for truth in ground_truths:
        best = max(best, wup_similarity(prediction, truth, taxonomy))
    return best if best >= threshold else best * DOWNWEIGHT


@dataclass(frozen=True)
class QuestionResult:
    question_id: int
    prediction: str
    ground_truths: tuple[str, ...]
    exact: bool
    wups: dict[float, float]


@dataclass(frozen=True)
class EvalReport:
    exact_accuracy: float
    wups_at_threshold: dict[float, float]
    rows: tuple[QuestionResult, ...] = field(default_factory=tuple)


def evaluate(
    predictions: Mapping[int, str],
    annotations: Sequence[AnnotationRecord],
    taxonomy: Taxonomy,
    thresholds: Sequence[float] = (0.9, 0.0),
) -> EvalReport:
    """Score one prediction per annotated question; means are unweighted."""
    rows = []
    for annotation in annotations:
        if annotation.question_id not in predictions:
            raise MissingPrediction(f"no prediction for question {annotation.question_id}")
        prediction = predictions[annotation.question_id]
        truths = tuple(annotation.answer_strings())
        rows.append(
            QuestionResult(
                question_id=annotation.question_id,
                prediction=prediction,
                ground_truths=truths,
                exact=prediction in truths,
                wups={t: wups_score(prediction, truths, taxonomy, t) for t in thresholds},
            )
        )
    n = len(rows)
    exact_accuracy = sum(r.exact for r in rows) / n if n else 0.0
    wups_at = {
        t: (sum(r.wups[t] for r in rows) / n if n else 0.0) for t in thresholds
    }
    return EvalReport(
        exact_accuracy=exact_accuracy, wups_at_threshold=wups_at, rows=tuple(rows)
    )


def write_report_csv(
    labeled_reports: Sequence[tuple[str, str, EvalReport]], path: str | Path
) -> None:
    """Per-question rows for each (split, mode, report) triple."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            thresholds = (
                sorted(labeled_reports[0][2].wups_at_threshold) if labeled_reports else []
            )
            writer = csv.writer(handle)
            writer.writerow(
                ["split", "mode", "question_id", "prediction", "ground_truths", "exact"]
                + [f"wups@{t}" for t in thresholds]
            )
            for split, mode, report in labeled_reports:
                for row in report.rows:
                    writer.writerow(
                        [split, mode, row.question_id, row.prediction,
                         "|".join(row.ground_truths), int(row.exact)]
                        + [repr(row.wups[t]) for t in thresholds]
                    )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_report_json(
    labeled_reports: Sequence[tuple[str, str, EvalReport]], path: str | Path
) -> None:
    """Summary rows (split, mode, accuracies) as canonical JSON."""
    rows = [
        {
            "split": split,
            "mode": mode,
            "exact_accuracy": report.exact_accuracy,
            "wups": {repr(t): v for t, v in sorted(report.wups_at_threshold.items())},
            "questions": len(report.rows),
        }
        for split, mode, report in labeled_reports
    ]
    try:
        Path(path).write_text(
            json.dumps({"rows": rows}, indent=2, sort_keys=True, ensure_ascii=True) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
