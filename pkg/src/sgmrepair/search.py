"""Patch database with brute-force cosine retrieval.

An index stores, for every prior patch, the embedding of its original code
and the token sequence of its fixed code.  A query is embedded the same way
and every entry is scored; the ``k`` closest entries come back first.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CorruptIndexError, IndexMismatchError
from .tokenize import SEP_TOKEN, tokenize

INDEX_FORMAT = "sgm-patch-index/1"


def cosine_distance(x, y) -> float:
    """``1 - cos(x, y)``; taken as 1 when either vector has zero norm."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        return 1.0
    return float(1.0 - np.dot(x, y) / (nx * ny))


def join_modalities(parts: Sequence[Sequence[str] | str]) -> list[str]:
    """Token list of ``part_1 <s> part_2 <s> ...``."""
    out: list[str] = []
    for i, part in enumerate(parts):
        if i:
            out.append(SEP_TOKEN)
        out.extend(tokenize(part) if isinstance(part, str) else part)
    return out


class TfidfEmbedder:
    """Smoothed TF-IDF over a fixed token vocabulary, L2-normalized.

    ``weight(t, d) = count(t, d) * (ln((1 + N) / (1 + df(t))) + 1)``.
    """

    kind = "tfidf"

    def __init__(self, terms: Sequence[str], idf: Sequence[float]):
        self.terms = list(terms)
        self.idf = np.asarray(idf, dtype=np.float64)
        self.column = {t: i for i, t in enumerate(self.terms)}
        blob = json.dumps([self.terms, [float(v).hex() for v in self.idf]]).encode()
        self.embedder_id = "tfidf:" + hashlib.sha256(blob).hexdigest()[:16]

    @property
    def dim(self) -> int:
        return len(self.terms)

    def embed(self, tokens: Sequence[str] | str) -> np.ndarray:
        if isinstance(tokens, str):
            tokens = tokenize(tokens)
        vec = np.zeros(self.dim)
        for tok, count in Counter(tokens).items():
            col = self.column.get(tok)
            if col is not None:
                vec[col] = count * self.idf[col]
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec

    def state(self) -> dict:
        return {"kind": self.kind, "terms": self.terms, "idf": self.idf.tolist()}


def build_tfidf(corpus: Iterable[Sequence[str]]) -> TfidfEmbedder:
    docs = [list(d) for d in corpus]
    if not docs:
        raise ValueError("cannot build TF-IDF over an empty corpus")
    df = Counter()
    for doc in docs:
        df.update(set(doc))
    terms = sorted(df)
    n = len(docs)
    idf = [math.log((1 + n) / (1 + df[t])) + 1.0 for t in terms]
    return TfidfEmbedder(terms, idf)


@dataclass(frozen=True)
class RetrievedPatch:
    patch: list[str]
    distance: float
    record_id: str

    def to_dict(self):
        return {"record_id": self.record_id, "distance": self.distance, "patch": self.patch}


@dataclass
class PatchIndex:
    record_ids: list[str]
    vectors: np.ndarray
    patches: list[list[str]]
    embedder_id: str
    dim: int
    modalities: tuple[str, ...] = ("buggy_only",)
    embedder_state: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64).reshape(-1, self.dim)
        if not (len(self.record_ids) == len(self.patches) == self.vectors.shape[0]):
            raise ValueError("record_ids, vectors and patches must have equal length")
        if len(set(self.record_ids)) != len(self.record_ids):
            raise ValueError("record ids in an index must be unique")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("index vectors must be finite")

    def __len__(self):
        return len(self.record_ids)

    def embedder(self):
        """Rebuild the embedder recorded in the index header, if any."""
        if not self.embedder_state:
            raise IndexMismatchError("index carries no embedder state")
        if self.embedder_state.get("kind") != "tfidf":
            raise IndexMismatchError(f"cannot rebuild embedder {self.embedder_state.get('kind')!r}")
        emb = TfidfEmbedder(self.embedder_state["terms"], self.embedder_state["idf"])
        if emb.embedder_id != self.embedder_id:
            raise CorruptIndexError("embedder state does not match embedder_id")
        return emb


def build_index(records, embedder, modalities=("buggy_only",)) -> PatchIndex:
    """Embed each record's original-code modalities; store its fixed code."""
    records = list(records)
    vectors = np.zeros((len(records), embedder.dim))
    for row, rec in enumerate(records):
        vectors[row] = embedder.embed(join_modalities([rec.modality(m) for m in modalities]))
    state = embedder.state() if hasattr(embedder, "state") else None
    return PatchIndex(
        record_ids=[r.id for r in records],
        vectors=vectors,
        patches=[tokenize(r.fixed_code) for r in records],
        embedder_id=embedder.embedder_id,
        dim=embedder.dim,
        modalities=tuple(modalities),
        embedder_state=state,
    )


def tfidf_index(records, modalities=("buggy_only",)) -> PatchIndex:
    records = list(records)
    docs = [join_modalities([r.modality(m) for m in modalities]) for r in records]
    return build_index(records, build_tfidf(docs), modalities)


def retrieve(query, index: PatchIndex, k: int, embedder) -> list[RetrievedPatch]:
    """Return the ``k`` entries closest to ``query``, nearest first.

    ``query`` is raw text or a token list.  Multi-modal queries carry the
    ``<s>`` separator between parts (see :func:`join_modalities`).
    """
    if k < 1:
        raise ValueError("k must be positive")
    if embedder.embedder_id != index.embedder_id:
        raise IndexMismatchError(
            f"index built with {index.embedder_id!r}, query embedder is {embedder.embedder_id!r}")
    if len(index) == 0:
        return []
    q = np.asarray(embedder.embed(query), dtype=np.float64)
    if q.shape != (index.dim,):
        raise IndexMismatchError(f"query embedding has shape {q.shape}, index dim is {index.dim}")
    qn = np.linalg.norm(q)
    norms = np.linalg.norm(index.vectors, axis=1)
    dots = index.vectors @ q
    with np.errstate(divide="ignore", invalid="ignore"):
        dist = 1.0 - dots / (norms * qn)
    dist = np.where((norms == 0) | (qn == 0), 1.0, dist)
    dist = np.clip(dist, 0.0, 2.0)
    # rounding keeps float noise from overriding the record-id tie-break
    order = sorted(range(len(index)), key=lambda i: (round(dist[i], 12), index.record_ids[i]))
    return [RetrievedPatch(list(index.patches[i]), float(dist[i]), index.record_ids[i])
            for i in order[:k]]


def save_index(index: PatchIndex, path) -> None:
    header = {
        "format": INDEX_FORMAT,
        "embedder_id": index.embedder_id,
        "dim": index.dim,
        "count": len(index),
        "modalities": list(index.modalities),
        "embedder": index.embedder_state,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header) + "\n")
        for rid, vec, patch in zip(index.record_ids, index.vectors, index.patches):
            fh.write(json.dumps({"id": rid, "vector": vec.tolist(), "patch": patch}) + "\n")


def load_index(path) -> PatchIndex:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorruptIndexError("index file is empty")
    try:
        header = json.loads(lines[0])
        dim = int(header["dim"])
        count = int(header["count"])
        embedder_id = header["embedder_id"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CorruptIndexError(f"bad index header: {exc}") from exc
    if header.get("format") != INDEX_FORMAT:
        raise CorruptIndexError(f"unknown index format {header.get('format')!r}")
    body = lines[1:]
    if len(body) != count:
        raise CorruptIndexError(f"header promises {count} entries, found {len(body)}")
    ids, vectors, patches = [], np.zeros((count, dim)), []
    for row, line in enumerate(body):
        try:
            entry = json.loads(line)
            vec = entry["vector"]
            ids.append(entry["id"])
            patches.append(list(entry["patch"]))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CorruptIndexError(f"entry {row}: {exc}") from exc
        if len(vec) != dim:
            raise CorruptIndexError(f"entry {row}: vector has {len(vec)} values, expected {dim}")
        vectors[row] = vec
    return PatchIndex(ids, vectors, patches, embedder_id, dim,
                      tuple(header.get("modalities") or ("buggy_only",)),
                      header.get("embedder"))
