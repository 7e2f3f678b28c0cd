"""Edit distances, insert/delete alignments and expert edit labels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .errors import ScriptError


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Classic unit-cost edit distance (insert, delete, substitute)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i]
        for j, y in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def normalized_distance(a: Sequence, b: Sequence) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def min_topk_distance(candidates: Sequence[Sequence], target: Sequence, k: int) -> float:
    if not candidates:
        raise ValueError("candidates must be nonempty")
    if k < 1:
        raise ValueError("k must be positive")
    return min(normalized_distance(c, target) for c in candidates[:k])


@dataclass(frozen=True)
class Delete:
    pos: int


@dataclass(frozen=True)
class Insert:
    gap: int
    token: str


EditOp = Union[Delete, Insert]


@dataclass(frozen=True)
class EditScript:
    """Deletes and inserts addressed by positions in the source sequence.

    ``Insert(g, t)`` places ``t`` before source token ``g``; ``g == len(source)``
    appends.  Inserts sharing a gap keep their listed order.
    """

    ops: tuple[EditOp, ...] = ()

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    @property
    def deletions(self):
        return [op.pos for op in self.ops if isinstance(op, Delete)]

    @property
    def insertions(self):
        return [(op.gap, op.token) for op in self.ops if isinstance(op, Insert)]


def _suffix_lcs(a, b):
    n, m = len(a), len(b)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = table[i], table[i + 1]
        x = a[i]
        for j in range(m - 1, -1, -1):
            if x == b[j]:
                row[j] = below[j + 1] + 1
            else:
                row[j] = max(below[j], row[j + 1])
    return table


def _walk(a, b):
    """Yield ('keep', i, j) / ('del', i) / ('ins', gap, token) left to right.

    Matches are taken whenever the heads agree; otherwise a deletion wins
    over an insertion unless it would lose LCS length.
    """
    table = _suffix_lcs(a, b)
    i = j = 0
    n, m = len(a), len(b)
    while i < n or j < m:
        if i < n and j < m and a[i] == b[j]:
            yield ("keep", i, j)
            i += 1
            j += 1
        elif i < n and (j == m or table[i + 1][j] >= table[i][j + 1]):
            yield ("del", i)
            i += 1
        else:
            yield ("ins", i, b[j])
            j += 1


def align(a: Sequence[str], b: Sequence[str]) -> EditScript:
    ops = []
    for step in _walk(a, b):
        if step[0] == "del":
            ops.append(Delete(step[1]))
        elif step[0] == "ins":
            ops.append(Insert(step[1], step[2]))
    return EditScript(tuple(ops))


def indel_distance(a: Sequence, b: Sequence) -> int:
    """Edit distance when only insertions and deletions are allowed."""
    return len(a) + len(b) - 2 * _suffix_lcs(a, b)[0][0]


def apply(script: EditScript, a: Sequence[str]) -> list[str]:
    n = len(a)
    deleted = set()
    last = -1
    inserts: dict[int, list[str]] = {}
    for op in script.ops:
        if isinstance(op, Delete):
            if not 0 <= op.pos < n:
                raise ScriptError(f"delete position {op.pos} outside [0, {n})")
            if op.pos <= last:
                raise ScriptError("delete positions must be strictly increasing")
            last = op.pos
            deleted.add(op.pos)
        elif isinstance(op, Insert):
            if not 0 <= op.gap <= n:
                raise ScriptError(f"insert gap {op.gap} outside [0, {n}]")
            inserts.setdefault(op.gap, []).append(op.token)
        else:
            raise ScriptError(f"unknown edit operation {op!r}")
    out = []
    for g in range(n + 1):
        out.extend(inserts.get(g, ()))
        if g < n and g not in deleted:
            out.append(a[g])
    return out


@dataclass(frozen=True)
class ExpertLabels:
    """Oracle decisions turning one sequence into another in a single pass.

    ``plh_counts`` indexes the gaps of the kept subsequence, so it has
    ``len(kept) + 1`` entries.
    """

    del_mask: tuple[int, ...]
    plh_counts: tuple[int, ...]
    ins_tokens: tuple[str, ...]

    def kept(self, y_hat: Sequence[str]) -> list[str]:
        return [t for t, d in zip(y_hat, self.del_mask) if not d]

    def with_placeholders(self, y_hat: Sequence[str], plh: str) -> list[str]:
        kept = self.kept(y_hat)
        out = []
        for g, count in enumerate(self.plh_counts):
            out.extend([plh] * count)
            if g < len(kept):
                out.append(kept[g])
        return out

    def reconstruct(self, y_hat: Sequence[str]) -> list[str]:
        fill = iter(self.ins_tokens)
        marker = object()
        return [next(fill) if t is marker else t
                for t in self.with_placeholders(y_hat, marker)]


def expert_labels(y_hat: Sequence[str], y_star: Sequence[str]) -> ExpertLabels:
    del_mask = [0] * len(y_hat)
    counts = [0] * (len(y_hat) + 1)
    ins = []
    kept_so_far = 0
    for step in _walk(y_hat, y_star):
        kind = step[0]
        if kind == "keep":
            kept_so_far += 1
        elif kind == "del":
            del_mask[step[1]] = 1
        else:
            counts[kept_so_far] += 1
            ins.append(step[2])
    n_kept = len(y_hat) - sum(del_mask)
    return ExpertLabels(tuple(del_mask), tuple(counts[:n_kept + 1]), tuple(ins))
