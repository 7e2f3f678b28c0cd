"""Rule-based code tokenizer and vocabulary.

Maximal runs of ``[A-Za-z0-9_$]`` become one token, every other
non-whitespace character is a token of its own.  The modality separator
``<s>`` is kept whole so serialized multi-modal inputs survive a round trip.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

PAD, UNK, BOS, EOS, SEP, PLH = range(6)
SPECIAL_TOKENS = ("<pad>", "<unk>", "<bos>", "<eos>", "<s>", "[PLH]")
SEP_TOKEN = SPECIAL_TOKENS[SEP]
PLH_TOKEN = SPECIAL_TOKENS[PLH]

_TOKEN_RE = re.compile(r"<s>|[A-Za-z0-9_$]+|\S")
_WORD_RE = re.compile(r"[A-Za-z0-9_$]+")
_CAMEL_RE = re.compile(r"(?<=[a-z])(?=[A-Z])")
_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")

JAVA_KEYWORDS = frozenset("""
abstract assert boolean break byte case catch char class const continue
default do double else enum extends final finally float for goto if
implements import instanceof int interface long native new package private
protected public return short static strictfp super switch synchronized
this throw throws transient try void volatile while
""".split())


def _subtokens(word: str) -> list[str]:
    parts = []
    for piece in word.split("_"):
        if piece:
            parts.extend(p for p in _CAMEL_RE.split(piece) if p)
    return parts or [word]


def tokenize(text: str, subtoken_split: bool = False) -> list[str]:
    tokens = _TOKEN_RE.findall(text)
    if not subtoken_split:
        return tokens
    out = []
    for tok in tokens:
        if tok != SEP_TOKEN and _WORD_RE.fullmatch(tok):
            out.extend(_subtokens(tok))
        else:
            out.append(tok)
    return out


def detokenize(tokens: Sequence[str]) -> str:
    return " ".join(tokens)


def identifiers(tokens: Iterable[str]) -> set[str]:
    """Identifier-shaped tokens that are not Java reserved words."""
    return {t for t in tokens if _IDENT_RE.fullmatch(t) and t not in JAVA_KEYWORDS}


@dataclass(frozen=True)
class Vocabulary:
    token_of: tuple[str, ...]
    id_of: dict[str, int] = field(compare=False, repr=False, default=None)

    def __post_init__(self):
        if tuple(self.token_of[:6]) != SPECIAL_TOKENS:
            raise ValueError("vocabulary must start with the six special tokens")
        ids = {t: i for i, t in enumerate(self.token_of)}
        if len(ids) != len(self.token_of):
            raise ValueError("vocabulary tokens must be unique")
        object.__setattr__(self, "id_of", ids)

    def __len__(self):
        return len(self.token_of)

    def __contains__(self, token):
        return token in self.id_of

    def fingerprint(self) -> str:
        blob = "\n".join(self.token_of).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_json(self) -> str:
        return json.dumps(self.id_of, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        mapping = json.loads(text)
        order = sorted(mapping.items(), key=lambda kv: kv[1])
        if [i for _, i in order] != list(range(len(order))):
            raise ValueError("vocabulary ids must be dense from 0")
        return cls(tuple(t for t, _ in order))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def build_vocab(corpus: Iterable[Sequence[str]], min_freq: int = 1) -> Vocabulary:
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counts = Counter()
    for seq in corpus:
        counts.update(seq)
    for special in SPECIAL_TOKENS:
        counts.pop(special, None)
    kept = sorted((t for t, c in counts.items() if c >= min_freq),
                  key=lambda t: (-counts[t], t))
    return Vocabulary(SPECIAL_TOKENS + tuple(kept))


def encode(tokens: Sequence[str], vocab: Vocabulary, add_sentinels: bool = False) -> list[int]:
    ids = [vocab.id_of.get(t, UNK) for t in tokens]
    if add_sentinels:
        ids = [BOS] + ids + [EOS]
    return ids


def decode(ids: Sequence[int], vocab: Vocabulary, strip_sentinels: bool = True) -> list[str]:
    out = []
    for i in ids:
        if strip_sentinels and i in (PAD, BOS, EOS):
            continue
        out.append(vocab.token_of[i])
    return out
