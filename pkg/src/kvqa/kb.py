"""Knowledge sources: the triple type, a local offline store, and a REST client.

Both sources answer the same query — "the first N edges for a concept label" —
so the selection layer can stay agnostic about where knowledge comes from.
Remote responses are cached on disk as canonical JSON, which makes warm-cache
runs byte-identical to networked ones.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote

import requests

from .errors import IoFailure, MalformedRecord, NetworkFailure

log = logging.getLogger(__name__)

RELATIONS = (
    "RelatedTo",
    "AtLocation",
    "IsA",
    "CapableOf",
    "UsedFor",
    "Desires",
    "HasProperties",
    "HasA",
    "PartOf",
    "ReceivesAction",
    "CreatedBy",
)

_CANONICAL = {r.lower(): r for r in RELATIONS}
# Variant spellings seen in knowledge-base exports.
_ALIASES = {"hasproperty": "HasProperties", "part of": "PartOf", "properties": "HasProperties"}


def normalize_relation(name: str) -> str | None:
    """Map a relation name to its canonical spelling, or None if out of vocabulary."""
    key = name.strip().lower()
    return _CANONICAL.get(key) or _ALIASES.get(key)


@dataclass(frozen=True)
class KnowledgeTriple:
    head: str
    relation: str
    tail: str
    surface: str | None = None
    weight: float | None = None

    def __post_init__(self) -> None:
        if not self.head or not self.tail:
            raise MalformedRecord("knowledge triple with empty head or tail")
        if self.relation not in RELATIONS:
            raise MalformedRecord(f"unknown relation {self.relation!r}")


def triple_to_json(triple: KnowledgeTriple) -> dict:
    return {
        "head": triple.head,
        "relation": triple.relation,
        "tail": triple.tail,
        "surface": triple.surface,
        "weight": triple.weight,
    }


def triple_from_json(raw: dict, context: str = "triple") -> KnowledgeTriple:
    for key in ("head", "relation", "tail"):
        if key not in raw:
            raise MalformedRecord(f"{context}: missing '{key}'")
    relation = normalize_relation(str(raw["relation"]))
    if relation is None:
        raise MalformedRecord(f"{context}: unknown relation {raw['relation']!r}")
    weight = raw.get("weight")
    return KnowledgeTriple(
        head=str(raw["head"]),
        relation=relation,
        tail=str(raw["tail"]),
        surface=raw.get("surface"),
        weight=float(weight) if weight is not None else None,
    )


class LocalStore:
    """Offline knowledge source backed by a JSON array of triples."""

    def __init__(self, path: str | Path):
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"{path} is not valid JSON: {exc}") from exc
        if not isinstance(data, list):
            raise MalformedRecord(f"{path}: top-level value must be an array")
        self._by_head: dict[str, list[KnowledgeTriple]] = {}
        for i, raw in enumerate(data):
            triple = triple_from_json(raw, context=f"{path}: entry {i}")
            self._by_head.setdefault(triple.head.lower(), []).append(triple)

    def edges_for(self, label: str, max_edges: int) -> list[KnowledgeTriple]:
        if max_edges <= 0:
            return []
        return list(self._by_head.get(label.lower(), [])[:max_edges])


def _cache_file(cache_dir: Path, label: str, max_edges: int) -> Path:
    slug = re.sub(r"[^a-z0-9_-]+", "-", label)[:40]
    digest = hashlib.md5(label.encode("utf-8")).hexdigest()[:10]
    return cache_dir / f"{slug}-{digest}_{max_edges}.json"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise IoFailure(f"cannot write {path}: {exc}") from exc


class RemoteClient:
    """Edge client for a ConceptNet-style JSON REST endpoint.

    Every response is parsed, reduced to triples, and cached on disk keyed by
    (label, max_edges). A warm cache fully replaces the network; if the network
    is down and the cache is cold, queries fall back to `fallback` when given.
    """

    def __init__(
        self,
        base_url: str,
        cache_dir: str | Path,
        timeout: float = 10.0,
        fallback: LocalStore | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.cache_dir = Path(cache_dir)
        self.timeout = timeout
        self.fallback = fallback

    def edges_for(self, label: str, max_edges: int) -> list[KnowledgeTriple]:
        label = label.lower()
        if max_edges <= 0:
            return []
        cached = self._cache_read(label, max_edges)
        if cached is not None:
            return cached
        try:
            triples = self._fetch(label, max_edges)
        except NetworkFailure:
            if self.fallback is not None:
                log.warning("remote lookup for %r failed, using the local store", label)
                return self.fallback.edges_for(label, max_edges)
            raise
        self._cache_write(label, max_edges, triples)
        return triples

    def _fetch(self, label: str, max_edges: int) -> list[KnowledgeTriple]:
        url = f"{self.base_url}/c/en/{quote(label)}?limit={max_edges}"
        try:
            response = requests.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            raise NetworkFailure(f"cannot reach {url}: {exc}") from exc
        if response.status_code == 404:
            return []  # unknown concept: missing knowledge is not fatal
        if response.status_code != 200:
            raise NetworkFailure(f"{url} answered HTTP {response.status_code}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise NetworkFailure(f"{url} returned invalid JSON: {exc}") from exc
        triples = []
        for edge in payload.get("edges", []):
            relation = normalize_relation(edge.get("rel", {}).get("label", ""))
            if relation is None:
                continue
            head = str(edge.get("start", {}).get("label", "")).strip().lower()
            tail = str(edge.get("end", {}).get("label", "")).strip().lower()
            if not head or not tail:
                continue
            weight = edge.get("weight")
            triples.append(
                KnowledgeTriple(
                    head=head,
                    relation=relation,
                    tail=tail,
                    surface=edge.get("surfaceText"),
                    weight=float(weight) if weight is not None else None,
                )
            )
            if len(triples) == max_edges:
                break
        return triples

    def _cache_read(self, label: str, max_edges: int) -> list[KnowledgeTriple] | None:
        path = _cache_file(self.cache_dir, label, max_edges)
        if not path.exists():
            return None
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
            return [triple_from_json(raw, context=str(path)) for raw in payload["triples"]]
        except (OSError, ValueError, KeyError, MalformedRecord):
            log.warning("ignoring unreadable cache entry %s", path)
            return None

    def _cache_write(self, label: str, max_edges: int, triples: list[KnowledgeTriple]) -> None:
        payload = {
            "label": label,
            "max_edges": max_edges,
            "triples": [triple_to_json(t) for t in triples],
        }
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        _atomic_write(_cache_file(self.cache_dir, label, max_edges), text + "\n")


KnowledgeSource = LocalStore | RemoteClient


def fetch_edges(label: str, max_edges: int, source: KnowledgeSource) -> list[KnowledgeTriple]:
    """First `max_edges` edges for a label, in the source's stable order."""
    if max_edges < 0:
        raise ValueError(f"max_edges must be >= 0, got {max_edges}")
    return source.edges_for(label, max_edges)
