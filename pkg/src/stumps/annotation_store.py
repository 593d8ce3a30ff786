"""Append-only JSON Lines annotation store with a TF-IDF inverted index.

The index is rebuilt on demand and cached to a ``<store>.idx`` sidecar keyed
by a content hash of the store file.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import re
from dataclasses import dataclass, field

from .core import StoreFormatError

IDX_HEADER = "STUMPS-IDX v1"

_TOKEN_CLEAN = re.compile(r"[^a-z0-9']+")


@dataclass(frozen=True)
class AnnotationRecord:
    match_id: str
    scene_index: int
    over: int
    ball: int
    shot_id: int | None
    start_frame: int
    end_frame: int
    shot_category: str | None
    phrase: str
    phrase_category: str
    players: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.end_frame <= self.start_frame:
            raise ValueError("frame interval must be non-empty")

    def to_json(self) -> str:
        return json.dumps(
            {
                "match_id": self.match_id,
                "scene_index": self.scene_index,
                "over": self.over,
                "ball": self.ball,
                "shot_id": self.shot_id,
                "start_frame": self.start_frame,
                "end_frame": self.end_frame,
                "shot_category": self.shot_category,
                "phrase": self.phrase,
                "phrase_category": self.phrase_category,
                "players": list(self.players),
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "AnnotationRecord":
        data = json.loads(line)
        data["players"] = tuple(data.get("players", ()))
        return cls(**data)


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_CLEAN.split(text.lower()) if t]


def read_store(path) -> list[AnnotationRecord]:
    records: list[AnnotationRecord] = []
    if not os.path.exists(path):
        return records
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(AnnotationRecord.from_json(line))
            except (json.JSONDecodeError, TypeError, KeyError, ValueError) as exc:
                raise StoreFormatError(f"corrupt record at line {line_no}: {exc}") from exc
    return records


def append_records(path, records: list[AnnotationRecord]) -> int:
    """Append new records; exact duplicates of existing lines are skipped."""
    existing = set()
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            existing = {line.rstrip("\n") for line in fh if line.strip()}
    written = 0
    with open(path, "a", encoding="utf-8") as fh:
        for record in records:
            line = record.to_json()
            if line in existing:
                continue
            fh.write(line + "\n")
            existing.add(line)
            written += 1
    return written


@dataclass
class InvertedIndex:
    records: list[AnnotationRecord]
    postings: dict[str, list[tuple[int, int]]]  # token -> [(record id, tf)]

    @property
    def document_count(self) -> int:
        return len(self.records)

    def document_frequency(self, token: str) -> int:
        return len(self.postings.get(token, ()))


def _store_hash(path) -> str:
    h = hashlib.sha256()
    if os.path.exists(path):
        with open(path, "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()


def build_index(path, use_cache: bool = True) -> InvertedIndex:
    records = read_store(path)
    content_hash = _store_hash(path)
    cache_path = str(path) + ".idx"
    if use_cache and os.path.exists(cache_path):
        cached = _load_cache(cache_path, content_hash, records)
        if cached is not None:
            return cached
    postings: dict[str, list[tuple[int, int]]] = {}
    for rid, record in enumerate(records):
        tf: dict[str, int] = {}
        for token in tokenize(record.phrase):
            tf[token] = tf.get(token, 0) + 1
        for token, count in tf.items():
            postings.setdefault(token, []).append((rid, count))
    index = InvertedIndex(records=records, postings=postings)
    if use_cache:
        _save_cache(cache_path, content_hash, index)
    return index


def _save_cache(cache_path, content_hash: str, index: InvertedIndex) -> None:
    with open(cache_path, "w", encoding="utf-8") as fh:
        fh.write(IDX_HEADER + "\n")
        fh.write(f"hash {content_hash}\n")
        fh.write(f"docs {index.document_count}\n")
        for token in sorted(index.postings):
            posting = " ".join(f"{rid}:{tf}" for rid, tf in index.postings[token])
            fh.write(f"token {token} {posting}\n")


def _load_cache(cache_path, content_hash: str, records) -> InvertedIndex | None:
    with open(cache_path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 3 or lines[0] != IDX_HEADER or lines[1] != f"hash {content_hash}":
        return None
    postings: dict[str, list[tuple[int, int]]] = {}
    for line in lines[3:]:
        if not line.strip():
            continue
        parts = line.split()
        token = parts[1]
        postings[token] = [
            (int(p.split(":")[0]), int(p.split(":")[1])) for p in parts[2:]
        ]
    return InvertedIndex(records=records, postings=postings)


def _idf(index: InvertedIndex, token: str) -> float:
    df = index.document_frequency(token)
    if df == 0:
        return 0.0
    return math.log(1.0 + index.document_count / df)


def query(index: InvertedIndex, text: str, top_k: int = 10) -> list[tuple[AnnotationRecord, float]]:
    """TF-IDF cosine ranking; ties broken by record id."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    q_tf: dict[str, int] = {}
    for token in tokenize(text):
        q_tf[token] = q_tf.get(token, 0) + 1
    q_vec = {t: c * _idf(index, t) for t, c in q_tf.items()}
    q_norm = math.sqrt(sum(v * v for v in q_vec.values()))
    if q_norm == 0:
        return []

    doc_norms: dict[int, float] = {}
    for token, posting in index.postings.items():
        idf = _idf(index, token)
        for rid, tf in posting:
            doc_norms[rid] = doc_norms.get(rid, 0.0) + (tf * idf) ** 2

    scores: dict[int, float] = {}
    for token, weight in q_vec.items():
        for rid, tf in index.postings.get(token, ()):
            scores[rid] = scores.get(rid, 0.0) + weight * tf * _idf(index, token)
    ranked = sorted(
        (
            (rid, s / (q_norm * math.sqrt(doc_norms[rid])))
            for rid, s in scores.items()
            if doc_norms.get(rid, 0.0) > 0
        ),
        key=lambda kv: (-kv[1], kv[0]),
    )
    return [(index.records[rid], score) for rid, score in ranked[:top_k]]
