#!/usr/bin/env python3
"""Regenerate the committed fixture dataset under fixtures/.

Everything is derived deterministically from the literal tables below, so the
output files are stable across runs and machines. The dataset is a small
20-image / 30-question set with an offline knowledge store, a toy taxonomy,
and low-dimensional embeddings/features that keep tests fast.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

EMBEDDING_DIM = 50
FEATURE_DIM = 64

# image_id -> [(label, score), ...]; repeated labels are separate detections
IMAGES = {
    81721: [("person", 0.95), ("bottle", 0.88), ("table", 0.72), ("cup", 0.60)],
    9001: [("dog", 0.97), ("dog", 0.96), ("dog", 0.95), ("dog", 0.94), ("ball", 0.62), ("grass", 0.55)],
    9002: [("cake", 0.93), ("table", 0.70), ("candle", 0.65)],
    9003: [("knife", 0.91), ("table", 0.78), ("tomato", 0.66)],
    9004: [("daffodil", 0.89), ("flower", 0.85), ("vase", 0.71)],
    9005: [("dog", 0.94), ("sofa", 0.58)],
    9006: [("cat", 0.92), ("window", 0.49)],
    9007: [("umbrella", 0.96), ("person", 0.81), ("street", 0.57)],
    9008: [("chocolate", 0.90), ("table", 0.69)],
    9009: [("dog", 0.95), ("frisbee", 0.63), ("grass", 0.50)],
    9010: [("donuts", 0.92), ("plate", 0.61)],
    9011: [("mountains", 0.88), ("skis", 0.77), ("snow", 0.59)],
    9012: [("monument", 0.90), ("garden", 0.52)],
    9013: [("dog", 0.93), ("cat", 0.85)],
    9014: [("umbrella", 0.87), ("beach", 0.64)],
    9015: [("cat", 0.91), ("dog", 0.82), ("table", 0.48)],
    9016: [("cake", 0.89), ("knife", 0.76)],
    9017: [("dog", 0.96), ("grass", 0.52)],
    9018: [("daffodil", 0.86), ("flower", 0.80), ("garden", 0.58)],
    9019: [("dog", 0.90), ("bone", 0.67)],
}

# (question_id, image_id, question text, [answers])
QUESTIONS = [
    (817215, 81721, "How old do you have to be in Canada to do this?", ["19"]),
    (1001, 9001, "How many mammals in the image?", ["4"]),
    (1002, 9001, "What animal is in the image?", ["dog"]),
    (1003, 9002, "How this taste?", ["sweet", "sweet"]),
    (1004, 9002, "What is on the table?", ["cake"]),
    (1005, 9003, "What is the use of object on table?", ["cutting"]),
    (1006, 9003, "What color is the object on the table?", ["red"]),
    (1007, 9004, "Which flower is this?", ["daffodil"]),
    (1008, 9005, "What animal is on the sofa?", ["dog", "dog", "dog"]),
    (1009, 9006, "What animal is in the window?", ["cat"]),
    (1010, 9007, "What is used for shading?", ["umbrella", "umbrella"]),
    (1011, 9008, "How this taste?", ["sweet"]),
    (1012, 9008, "What is created by coco?", ["chocolate"]),
    (1013, 9009, "What animal is on the grass?", ["dog"]),
    (1014, 9010, "How this taste?", ["sweet"]),
    (1015, 9011, "Where is this?", ["mountains"]),
    (1016, 9012, "Where is this monument?", ["agra", "agra"]),
    (1017, 9013, "Which animal can bark?", ["dog"]),
    (1018, 9014, "What is used for shading?", ["umbrella"]),
    (1019, 9015, "Is the cat on the table?", ["no"]),
    (1020, 9015, "Which animal desires playing?", ["dog"]),
    (1021, 9016, "Is the cake sweet?", ["yes", "yes"]),
    (1022, 9016, "What is the use of object on table?", ["cutting"]),
    (1023, 9017, "What is the dog capable of?", ["barking"]),
    (1024, 9018, "Which flower is in the image?", ["daffodil"]),
    (1025, 9019, "What does the dog have?", ["tail"]),
    (1026, 9019, "What animal is on the grass?", ["dog"]),
    (1027, 9004, "Is this flower a rose?", ["no"]),
    (1028, 9006, "Is the cat a mammal?", ["yes"]),
    (1029, 9010, "How many donuts in the image?", ["4"]),
]

# (head, relation, tail, surface, weight); file order is the lookup order
STORE = [
    ("dog", "IsA", "mammal", "[Dog] is a [mammal].", 2.0),
    ("dog", "CapableOf", "barking", None, 1.0),
    ("dog", "Desires", "playing", None, None),
    ("dog", "HasA", "tail", None, 1.0),
    ("dog", "PartOf", "canines", None, None),
    ("dog", "ReceivesAction", "fed by human", None, None),
    ("dog", "RelatedTo", "bone", None, None),
    ("umbrella", "UsedFor", "shading", "[Umbrella] is used for shading in [sunny] place.", 2.0),
    ("umbrella", "AtLocation", "beach", None, None),
    ("umbrella", "RelatedTo", "rain", None, None),
    ("skiing", "RelatedTo", "mountains", None, None),
    ("tajmahal", "AtLocation", "agra", None, None),
    ("donuts", "HasProperties", "sweet", None, 1.0),
    ("donuts", "AtLocation", "bakery", None, None),
    ("chocolate", "CreatedBy", "coco", None, 1.0),
    ("chocolate", "HasProperties", "sweet", None, None),
    ("cake", "HasProperties", "sweet", "[Cake] has the property [sweet].", None),
    ("cake", "UsedFor", "celebration", None, None),
    ("cake", "AtLocation", "table", None, None),
    ("knife", "UsedFor", "cutting", None, 2.0),
    ("knife", "AtLocation", "kitchen", None, None),
    ("knife", "IsA", "tool", None, None),
    ("table", "UsedFor", "eating", None, None),
    ("table", "AtLocation", "kitchen", None, None),
    ("table", "HasA", "legs", None, None),
    ("cat", "IsA", "mammal", None, None),
    ("cat", "CapableOf", "meowing", None, None),
    ("cat", "Desires", "sleeping", None, None),
    ("daffodil", "IsA", "flower", None, 1.0),
    ("daffodil", "HasProperties", "yellow", None, None),
    ("daffodil", "AtLocation", "garden", None, None),
    ("flower", "AtLocation", "garden", None, None),
    ("flower", "UsedFor", "decoration", None, None),
    ("mountains", "RelatedTo", "skiing", None, None),
    ("mountains", "RelatedTo", "snow", None, None),
    ("monument", "AtLocation", "agra", None, None),
    ("monument", "IsA", "structure", None, None),
    ("person", "CapableOf", "walking", None, None),
    ("person", "Desires", "food", None, None),
    ("bottle", "UsedFor", "drinking", None, None),
    ("bottle", "AtLocation", "table", None, None),
    ("cup", "UsedFor", "drinking", None, None),
    ("grass", "AtLocation", "garden", None, None),
    ("grass", "HasProperties", "green", None, None),
    ("ball", "UsedFor", "playing", None, None),
    ("candle", "UsedFor", "light", None, None),
    ("tomato", "HasProperties", "red", None, None),
    ("tomato", "IsA", "vegetable", None, None),
    ("vase", "UsedFor", "decoration", None, None),
    ("window", "PartOf", "house", None, None),
    ("street", "AtLocation", "city", None, None),
    ("frisbee", "UsedFor", "playing", None, None),
    ("plate", "UsedFor", "eating", None, None),
    ("skis", "UsedFor", "skiing", None, None),
    ("snow", "HasProperties", "cold", None, None),
    ("garden", "HasA", "flower", None, None),
    ("beach", "RelatedTo", "sea", None, None),
    ("bone", "RelatedTo", "dog", None, None),
    ("sofa", "UsedFor", "sitting", None, None),
]

# child -> parent edges of a single-rooted concept tree
TAXONOMY = [
    ("animal", "entity"),
    ("mammal", "animal"),
    ("dog", "mammal"),
    ("cat", "mammal"),
    ("plant", "entity"),
    ("flower", "plant"),
    ("daffodil", "flower"),
    ("rose", "flower"),
    ("food", "entity"),
    ("cake", "food"),
    ("chocolate", "food"),
    ("donuts", "food"),
    ("tomato", "food"),
    ("quality", "entity"),
    ("color", "quality"),
    ("red", "color"),
    ("yellow", "color"),
    ("taste", "quality"),
    ("sweet", "taste"),
    ("object", "entity"),
    ("umbrella", "object"),
    ("knife", "object"),
    ("table", "object"),
    ("bottle", "object"),
    ("plate", "object"),
    ("place", "entity"),
    ("agra", "place"),
    ("mountains", "place"),
    ("beach", "place"),
    ("garden", "place"),
    ("number", "entity"),
    ("4", "number"),
    ("19", "number"),
    ("action", "entity"),
    ("cutting", "action"),
    ("barking", "action"),
    ("skiing", "action"),
    ("playing", "action"),
    ("response", "entity"),
    ("yes", "response"),
    ("no", "response"),
    ("part", "entity"),
    ("tail", "part"),
]

CONFIG = {
    "questions": "questions.json",
    "annotations": "annotations.json",
    "attributes": "attributes.json",
    "embeddings": "embeddings.txt",
    "taxonomy": "taxonomy.tsv",
    "knowledge_store": "knowledge_store.json",
    "cache_dir": "../out/cache",
    "out_dir": "../out/run",
    "answer_top_n": 15,
    "word_top_n": 45,
    "train_fraction": 0.8,
    "seed": 21,
    "embedding_dim": EMBEDDING_DIM,
    "lstm_hidden": 32,
    "mlp_hidden": 64,
    "dropout": 0.5,
    "learning_rate": 0.003,
    "epochs": 10,
    "batch_size": 10,
    "unmatched_budget": 5,
    "extra_objects": 12,
    "max_edges_per_label": 11,
    "selection_mode": "co_attention",
    "selection_profile": "algorithm",
    "offline": True,
    "wups_thresholds": [0.9, 0.0],
}


def _word_rng(tag: str) -> np.random.Generator:
    digest = hashlib.md5(tag.encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _dump(payload, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {path.relative_to(ROOT)}")


def write_questions() -> None:
    payload = [
        {"image_id": image_id, "Question": text, "question_id": qid}
        for qid, image_id, text, _ in QUESTIONS
    ]
    _dump(payload, FIXTURES / "questions.json")


def write_annotations() -> None:
    payload = []
    for qid, image_id, _, answers in QUESTIONS:
        payload.append(
            {
                "image_id": image_id,
                "question_id": qid,
                "answers": [
                    {"answer": answer, "answer_id": i + 1} for i, answer in enumerate(answers)
                ],
            }
        )
    _dump(payload, FIXTURES / "annotations.json")


def write_attributes() -> None:
    payload = []
    for image_id, objects in IMAGES.items():
        rows = []
        for k, (label, score) in enumerate(objects):
            base = _word_rng(f"label:{label}").normal(0.0, 0.5, FEATURE_DIM)
            jitter = _word_rng(f"obj:{image_id}:{label}:{k}").normal(0.0, 0.05, FEATURE_DIM)
            box_rng = _word_rng(f"box:{image_id}:{k}")
            x, y = box_rng.integers(0, 120, 2)
            w, h = box_rng.integers(20, 100, 2)
            rows.append(
                {
                    "label": label,
                    "score": score,
                    "bbox": [float(x), float(y), float(w), float(h)],
                    "feature": [round(float(v), 5) for v in base + jitter],
                }
            )
        payload.append({"image_id": image_id, "objects": rows})
    _dump(payload, FIXTURES / "attributes.json")


def write_store() -> None:
    payload = []
    for head, relation, tail, surface, weight in STORE:
        row = {"head": head, "relation": relation, "tail": tail}
        if surface is not None:
            row["surface"] = surface
        if weight is not None:
            row["weight"] = weight
        payload.append(row)
    _dump(payload, FIXTURES / "knowledge_store.json")


def write_taxonomy() -> None:
    text = "".join(f"{child}\t{parent}\n" for child, parent in TAXONOMY)
    (FIXTURES / "taxonomy.tsv").write_text(text, encoding="utf-8")
    print("wrote fixtures/taxonomy.tsv")


def embedding_vocabulary() -> list[str]:
    sys.path.insert(0, str(ROOT / "src"))
    from kvqa.text_encoder import tokenize

    words: set[str] = set()
    for _, _, text, answers in QUESTIONS:
        words.update(tokenize(text))
        for answer in answers:
            words.update(tokenize(answer))
    for objects in IMAGES.values():
        for label, _ in objects:
            words.update(tokenize(label))
    for head, relation, tail, _, _ in STORE:
        words.update(tokenize(head))
        words.update(tokenize(relation.lower()))
        words.update(tokenize(tail))
    return sorted(words)


def write_embeddings() -> None:
    lines = []
    for word in embedding_vocabulary():
        vec = _word_rng(f"emb:{word}").normal(0.0, 0.4, EMBEDDING_DIM)
        lines.append(word + " " + " ".join(f"{v:.5f}" for v in vec))
    (FIXTURES / "embeddings.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote fixtures/embeddings.txt ({len(lines)} words)")


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    write_questions()
    write_annotations()
    write_attributes()
    write_store()
    write_taxonomy()
    write_embeddings()
    _dump(CONFIG, FIXTURES / "config.json")


if __name__ == "__main__":
    main()
