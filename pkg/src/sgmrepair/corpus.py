"""Patch datasets stored as JSON lines.

Each line holds one object with the fields ``id``, ``buggy_only``,
``prev_code``, ``commit_msg`` and ``fixed_code``.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field

from .errors import CorpusParseError, DuplicateIdError, SchemaError

FIELDS = ("id", "buggy_only", "prev_code", "commit_msg", "fixed_code")
REQUIRED = ("id", "prev_code", "fixed_code")
SPLIT_TAGS = ("train", "eval", "test")


@dataclass(frozen=True)
class PatchRecord:
    id: str
    buggy_only: str
    prev_code: str
    fixed_code: str
    commit_msg: str = ""

    def validate(self, lineno=None):
        for name in FIELDS:
            if not isinstance(getattr(self, name), str):
                raise SchemaError(name, f"field {name!r} must be a string", lineno)
        for name in REQUIRED:
            if not getattr(self, name):
                raise SchemaError(name, f"field {name!r} must be nonempty", lineno)

    def modality(self, name: str) -> str:
        if name not in ("buggy_only", "prev_code", "commit_msg", "fixed_code"):
            raise ValueError(f"unknown modality {name!r}")
        return getattr(self, name)


@dataclass
class Dataset:
    records: list[PatchRecord] = field(default_factory=list)
    split_tag: str = "train"

    def __post_init__(self):
        if self.split_tag not in SPLIT_TAGS:
            raise ValueError(f"split_tag must be one of {SPLIT_TAGS}, got {self.split_tag!r}")
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise DuplicateIdError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def by_id(self) -> dict[str, PatchRecord]:
        return {r.id: r for r in self.records}


def record_from_dict(obj: dict, lineno=None) -> PatchRecord:
    if not isinstance(obj, dict):
        raise CorpusParseError(lineno, "expected a JSON object")
    for name in REQUIRED:
        if name not in obj:
            raise SchemaError(name, lineno=lineno)
    commit = obj.get("commit_msg")
    rec = PatchRecord(
        id=obj["id"],
        buggy_only=obj.get("buggy_only") or "",
        prev_code=obj["prev_code"],
        fixed_code=obj["fixed_code"],
        commit_msg="" if commit is None else commit,
    )
    rec.validate(lineno)
    return rec


def load_jsonl(path, split_tag: str = "train") -> Dataset:
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusParseError(lineno, f"malformed JSON: {exc.msg}") from exc
            rec = record_from_dict(obj, lineno)
            if rec.id in seen:
                raise DuplicateIdError(f"line {lineno}: duplicate record id {rec.id!r}")
            seen.add(rec.id)
            records.append(rec)
    return Dataset(records, split_tag)


def save_jsonl(dataset, path) -> None:
    """Write a :class:`Dataset` or any iterable of records, one per line."""
    records = dataset.records if isinstance(dataset, Dataset) else list(dataset)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            obj = {name: getattr(rec, name) for name in FIELDS}
            fh.write(json.dumps(obj, ensure_ascii=False))
            fh.write("\n")


def split_sizes(n: int, fractions) -> tuple[int, int, int]:
    """Floor each share, then hand out the remainder train -> eval -> test."""
    sizes = [math.floor(f * n) for f in fractions]
    leftover = n - sum(sizes)
    i = 0
    while leftover > 0:
        sizes[i % 3] += 1
        leftover -= 1
        i += 1
    return tuple(sizes)


def split(dataset: Dataset, fractions=(0.8, 0.1, 0.1), seed: int = 0):
    if len(fractions) != 3 or any(not 0.0 <= f <= 1.0 for f in fractions):
        raise ValueError("fractions must be three values in [0, 1]")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)!r}")
    order = list(range(len(dataset)))
    random.Random(seed).shuffle(order)
    n_train, n_eval, _ = split_sizes(len(order), fractions)
    parts = (order[:n_train], order[n_train:n_train + n_eval], order[n_train + n_eval:])
    return tuple(
        Dataset([dataset.records[i] for i in sorted(idx)], tag)
        for idx, tag in zip(parts, SPLIT_TAGS)
    )


def to_dict(rec: PatchRecord) -> dict:
    return asdict(rec)
