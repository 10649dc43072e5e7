"""Precomputed per-image object detections: loading, pooling, label ranking."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

from .errors import DimensionMismatch, EmptyAttributeSet, IoFailure, MalformedRecord

log = logging.getLogger(__name__)

FEATURE_DIM = 2048
MIN_OBJECTS = 10
MAX_OBJECTS = 100


@dataclass(frozen=True)
class DetectedObject:
    label: str
    score: float
    bbox: tuple[float, float, float, float]  # x, y, width, height in pixels
    feature: np.ndarray


@dataclass(frozen=True)
class AttributeSet:
    image_id: int
    objects: tuple[DetectedObject, ...]

    @property
    def feature_dim(self) -> int:
        return int(self.objects[0].feature.shape[0])


def _parse_object(raw: dict, path, image_id: int) -> DetectedObject:
    for key in ("label", "score", "bbox", "feature"):
        if key not in raw:
            raise MalformedRecord(f"{path}: object for image {image_id} is missing '{key}'")
    label = raw["label"]
    if not isinstance(label, str) or not label.strip():
        raise MalformedRecord(f"{path}: object for image {image_id} has an empty label")
    score = float(raw["score"])
    if not 0.0 <= score <= 1.0:
        raise MalformedRecord(
            f"{path}: image {image_id} object '{label}' has score {score} outside [0,1]"
        )
    bbox = raw["bbox"]
    if not isinstance(bbox, list) or len(bbox) != 4:
        raise MalformedRecord(f"{path}: image {image_id} object '{label}' bbox must be [x,y,w,h]")
    x, y, w, h = (float(v) for v in bbox)
    if w <= 0 or h <= 0:
        raise MalformedRecord(
            f"{path}: image {image_id} object '{label}' has non-positive box size"
        )
    feature = np.asarray(raw["feature"], dtype=float)
    if feature.ndim != 1:
        raise MalformedRecord(f"{path}: image {image_id} object '{label}' feature must be flat")
    return DetectedObject(label=label.strip().lower(), score=score, bbox=(x, y, w, h), feature=feature)


def load_attribute_file(path: str | Path, strict: bool = False) -> list[AttributeSet]:
    """Load attribute JSON, grouping objects by image_id in file order.

    In strict mode feature vectors must be exactly FEATURE_DIM long; otherwise a
    consistent non-standard length is accepted with a warning so small fixture
    datasets stay usable.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise MalformedRecord(f"{path}: top-level value must be an array")

    grouped: dict[int, list[DetectedObject]] = {}
    order: list[int] = []
    file_dim: int | None = None
    for i, raw in enumerate(data):
        if not isinstance(raw, dict) or "image_id" not in raw or "objects" not in raw:
            raise MalformedRecord(f"{path}: entry {i} must have image_id and objects")
        image_id = raw["image_id"]
        if isinstance(image_id, bool) or not isinstance(image_id, int):
            raise MalformedRecord(f"{path}: entry {i} image_id is not an integer")
        raw_objects = raw["objects"]
        if not isinstance(raw_objects, list) or not raw_objects:
            raise MalformedRecord(f"{path}: image {image_id} has an empty object list")
        for raw_obj in raw_objects:
            obj = _parse_object(raw_obj, path, image_id)
            dim = int(obj.feature.shape[0])
            if file_dim is None:
                file_dim = dim
                if dim != FEATURE_DIM:
                    if strict:
                        raise DimensionMismatch(
                            f"{path}: feature length {dim} != {FEATURE_DIM} in strict mode"
                        )
                    log.warning(
                        "%s: feature length %d differs from the standard %d", path, dim, FEATURE_DIM
                    )
            elif dim != file_dim:
                raise DimensionMismatch(
                    f"{path}: image {image_id} mixes feature lengths {file_dim} and {dim}"
                )
            if image_id not in grouped:
                grouped[image_id] = []
                order.append(image_id)
            grouped[image_id].append(obj)

    sets = []
    flagged = []
    for image_id in order:
        objects = grouped[image_id]
        if not MIN_OBJECTS <= len(objects) <= MAX_OBJECTS:
            flagged.append(image_id)
        sets.append(AttributeSet(image_id=image_id, objects=tuple(objects)))
    if flagged:
        log.warning(
            "%s: %d of %d images have object counts outside the usual [%d, %d] detector range",
            path,
            len(flagged),
            len(sets),
            MIN_OBJECTS,
            MAX_OBJECTS,
        )
    return sets


def save_attribute_sets(sets: Iterable[AttributeSet], path: str | Path) -> None:
    payload = [
        {
            "image_id": s.image_id,
            "objects": [
                {
                    "label": o.label,
                    "score": o.score,
                    "bbox": list(o.bbox),
                    "feature": o.feature.tolist(),
                }
                for o in s.objects
            ],
        }
        for s in sets
    ]
    try:
        Path(path).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def pool_features(attrs: AttributeSet, mode: Literal["sum", "mean"] = "sum") -> np.ndarray:
    """Pool object feature vectors into one image vector (elementwise sum or mean)."""
    if not attrs.objects:
        raise EmptyAttributeSet(f"image {attrs.image_id} has no objects to pool")
    stacked = np.stack([o.feature for o in attrs.objects])
    if mode == "sum":
        return stacked.sum(axis=0)
    if mode == "mean":
        return stacked.mean(axis=0)
    raise ValueError(f"unknown pooling mode {mode!r}")


def rank_attributes(attrs: AttributeSet) -> list[str]:
    """Labels by best score descending; ties lexicographic; duplicates collapsed."""
    best: dict[str, float] = {}
    for obj in attrs.objects:
        if obj.label not in best or obj.score > best[obj.label]:
            best[obj.label] = obj.score
    return sorted(best, key=lambda label: (-best[label], label))
