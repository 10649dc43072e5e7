"""Question-aware selection of image attributes for knowledge lookup.

Attribute labels that literally appear among the question tokens always get a
knowledge lookup and never consume budget; the remaining top-ranked labels are
granted lookups until a fixed budget of unmatched labels is spent. Two fallback
modes (rank-only and question-match-only) exist so ablations are a config
switch rather than separate code paths.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import IoFailure, MalformedRecord
from .image_attributes import AttributeSet, rank_attributes
from .kb import (
    KnowledgeSource,
    KnowledgeTriple,
    fetch_edges,
    normalize_relation,
    triple_from_json,
    triple_to_json,
)
from .text_encoder import EmbeddingTable, embed_tokens, tokenize

SELECTION_MODES = ("co_attention", "image_only", "question_only")


@dataclass(frozen=True)
class SelectionConfig:
    unmatched_budget: int = 5
    extra_objects: int = 12  # experiment-profile budget for unmatched labels
    max_edges_per_label: int = 11
    mode: str = "co_attention"

    def __post_init__(self) -> None:
        for name in ("unmatched_budget", "extra_objects", "max_edges_per_label"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.mode not in SELECTION_MODES:
            raise ValueError(f"mode must be one of {SELECTION_MODES}, got {self.mode!r}")


def match_question_attributes(
    ranked_labels: Sequence[str], question_tokens: Sequence[str]
) -> tuple[list[str], list[str]]:
    """Split ranked labels into question-matched and unmatched, preserving order."""
    tokens = {t.lower() for t in question_tokens}
    matched, unmatched = [], []
    for label in ranked_labels:
        (matched if label.lower() in tokens else unmatched).append(label)
    return matched, unmatched


def select_from_ranked(
    ranked_labels: Sequence[str], question_tokens: Sequence[str], cfg: SelectionConfig
) -> list[str]:
    """Walk labels in rank order and pick the ones that get a knowledge lookup.

    co_attention: question-matched labels are always picked and are exempt from
    the budget; unmatched labels are picked while the budget counter is below
    `unmatched_budget`. image_only ignores matching and picks purely by rank up
    to the budget. question_only picks matched labels only.
    """
    tokens = {t.lower() for t in question_tokens}
    selected: list[str] = []
    count = 0
    for label in ranked_labels:
        is_match = label.lower() in tokens
        if cfg.mode == "question_only":
            if is_match:
                selected.append(label)
        elif cfg.mode == "image_only":
            if count < cfg.unmatched_budget:
                selected.append(label)
                count += 1
        else:
            if is_match:
                selected.append(label)
            elif count < cfg.unmatched_budget:
                selected.append(label)
                count += 1
    return selected


def select_knowledge_targets(
    attrs: AttributeSet, question_tokens: Sequence[str], cfg: SelectionConfig
) -> list[str]:
    return select_from_ranked(rank_attributes(attrs), question_tokens, cfg)


def extract_knowledge(
    attrs: AttributeSet,
    question_tokens: Sequence[str],
    cfg: SelectionConfig,
    source: KnowledgeSource,
) -> list[KnowledgeTriple]:
    """Fetch edges for every selected label, preserving target order then edge order."""
    triples: list[KnowledgeTriple] = []
    for label in select_knowledge_targets(attrs, question_tokens, cfg):
        triples.extend(fetch_edges(label, cfg.max_edges_per_label, source))
    return triples


def _phrase_vector(text: str, table: EmbeddingTable) -> np.ndarray:
    tokens = tokenize(text)
    if not tokens:
        return np.zeros(table.dim)
    return embed_tokens(tokens, table).mean(axis=0)


def vectorize_knowledge(triples: Sequence[KnowledgeTriple], table: EmbeddingTable) -> np.ndarray:
    """Mean over per-triple vectors, each the mean of head/relation/tail vectors."""
    if not triples:
        return np.zeros(table.dim)
    rows = []
    for t in triples:
        parts = np.stack(
            [
                _phrase_vector(t.head, table),
                _phrase_vector(t.relation.lower(), table),
                _phrase_vector(t.tail, table),
            ]
        )
        rows.append(parts.mean(axis=0))
    return np.stack(rows).mean(axis=0)


@dataclass(frozen=True)
class KnowledgeSet:
    image_id: int
    question_id: int
    triples: tuple[KnowledgeTriple, ...]
    vector: np.ndarray


def build_knowledge_set(
    image_id: int,
    question_id: int,
    triples: Sequence[KnowledgeTriple],
    table: EmbeddingTable,
) -> KnowledgeSet:
    return KnowledgeSet(
        image_id=image_id,
        question_id=question_id,
        triples=tuple(triples),
        vector=vectorize_knowledge(triples, table),
    )


# --- knowledge record files -------------------------------------------------
#
# On-disk record schema: know_id (int), uri, Labels ([head, tail]), Surface
# (sentence or null), Relation (lowercase relation name).

RECORD_KEYS = ("know_id", "uri", "Labels", "Surface", "Relation")


def triple_uri(triple: KnowledgeTriple) -> str:
    raw = f"{triple.head}|{triple.relation}|{triple.tail}|{triple.surface or ''}"
    return "ConceptNet/e/" + hashlib.md5(raw.encode("utf-8")).hexdigest()


def knowledge_records(triples: Sequence[KnowledgeTriple], know_id: int) -> list[dict]:
    return [
        {
            "know_id": know_id,
            "uri": triple_uri(t),
            "Labels": [t.head, t.tail],
            "Surface": t.surface,
            "Relation": t.relation.lower(),
        }
        for t in triples
    ]


def write_knowledge_records(records: Sequence[dict], path: str | Path) -> None:
    try:
        Path(path).write_text(
            json.dumps(list(records), indent=2, sort_keys=True, ensure_ascii=True) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_knowledge_records(path: str | Path) -> list[dict]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise MalformedRecord(f"{path}: top-level value must be an array")
    for i, record in enumerate(data):
        if not isinstance(record, dict) or set(record) != set(RECORD_KEYS):
            raise MalformedRecord(
                f"{path}: record {i} must have exactly the keys {RECORD_KEYS}"
            )
    return data


def record_to_triple(record: dict, context: str = "record") -> KnowledgeTriple:
    labels = record["Labels"]
    if not isinstance(labels, list) or len(labels) != 2:
        raise MalformedRecord(f"{context}: Labels must hold [head, tail]")
    relation = normalize_relation(str(record["Relation"]))
    if relation is None:
        raise MalformedRecord(f"{context}: unknown relation {record['Relation']!r}")
    return KnowledgeTriple(
        head=str(labels[0]), relation=relation, tail=str(labels[1]), surface=record["Surface"]
    )


def records_to_triples(records: Iterable[dict]) -> list[KnowledgeTriple]:
    return [record_to_triple(r, context=f"record {i}") for i, r in enumerate(records)]


# --- per-question knowledge index --------------------------------------------
#
# Pipeline artifact pairing each question with its extracted triples, so that
# training and evaluation never have to re-run selection.


def write_knowledge_index(entries: Sequence[dict], path: str | Path) -> None:
    """Entries are {question_id, image_id, triples: [triple json]} dicts."""
    try:
        Path(path).write_text(
            json.dumps(list(entries), indent=2, sort_keys=True, ensure_ascii=True) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_knowledge_index(path: str | Path) -> dict[int, list[KnowledgeTriple]]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"{path} is not valid JSON: {exc}") from exc
    index: dict[int, list[KnowledgeTriple]] = {}
    for i, entry in enumerate(data):
        if "question_id" not in entry or "triples" not in entry:
            raise MalformedRecord(f"{path}: entry {i} needs question_id and triples")
        index[int(entry["question_id"])] = [
            triple_from_json(raw, context=f"{path}: entry {i}") for raw in entry["triples"]
        ]
    return index


def index_entry(question_id: int, image_id: int, triples: Sequence[KnowledgeTriple]) -> dict:
    return {
        "question_id": question_id,
        "image_id": image_id,
        "triples": [triple_to_json(t) for t in triples],
    }
