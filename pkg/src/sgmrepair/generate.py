"""Multi-modal input assembly, prompt construction and patch generators.

Generators are callables ``gen(mm_input, n, record=None) -> list[GenCandidate]``.
The local ones echo the edit location or copy retrieved patches verbatim;
``RemoteGenerator`` asks an HTTP completion endpoint.
"""

from __future__ import annotations

import json
import logging
import os
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import PatchRecord
from .errors import GenerationError, LocalizationError
from .tokenize import SEP_TOKEN, detokenize, tokenize

log = logging.getLogger(__name__)

API_KEY_ENV = "SGMREPAIR_API_KEY"

TASK_COMMENT = "/// fix the bug in the following method"
BUGGY_COMMENT = "/// buggy line is here"
PATCH_COMMENT = "/// A possible patch for buggy line"
CONTEXT_COMMENT = "/// change the buggy line to fix the bug:"

MODALITIES = ("location", "context", "intent", "retrieved")


@dataclass(frozen=True)
class ModalityFlags:
    location: bool = True
    context: bool = True
    intent: bool = False
    retrieved: bool = True

    @classmethod
    def from_names(cls, names: Sequence[str]) -> "ModalityFlags":
        unknown = set(names) - set(MODALITIES)
        if unknown:
            raise ValueError(f"unknown modalities: {sorted(unknown)}")
        return cls(**{m: m in names for m in MODALITIES})

    def names(self) -> list[str]:
        return [m for m in MODALITIES if getattr(self, m)]

    def any(self) -> bool:
        return any(getattr(self, m) for m in MODALITIES)


@dataclass
class MultiModalInput:
    """Edit location, context, optional intent, then retrieved patches."""

    location: list[str] | None = None
    context: list[str] | None = None
    intent: list[str] | None = None
    retrieved: list[list[str]] = field(default_factory=list)

    def segments(self) -> list[list[str]]:
        segs = [s for s in (self.location, self.context, self.intent) if s is not None]
        return segs + [list(r) for r in self.retrieved]

    def to_tokens(self) -> list[str]:
        out: list[str] = []
        for i, seg in enumerate(self.segments()):
            if i:
                out.append(SEP_TOKEN)
            out.extend(seg)
        return out

    def to_text(self) -> str:
        return detokenize(self.to_tokens())

    @classmethod
    def from_tokens(cls, tokens: Sequence[str], flags: ModalityFlags) -> "MultiModalInput":
        segs: list[list[str]] = [[]]
        for tok in tokens:
            if tok == SEP_TOKEN:
                segs.append([])
            else:
                segs[-1].append(tok)
        fixed = [m for m in ("location", "context", "intent") if getattr(flags, m)]
        if not flags.retrieved and len(segs) != len(fixed):
            raise ValueError(f"expected {len(fixed)} segments, found {len(segs)}")
        if len(segs) < len(fixed):
            raise ValueError(f"expected at least {len(fixed)} segments, found {len(segs)}")
        values = dict(zip(fixed, segs))
        rest = segs[len(fixed):]
        # retrieval-only input with zero patches serializes to nothing
        if flags.retrieved and not fixed and rest == [[]]:
            rest = []
        return cls(retrieved=rest if flags.retrieved else [], **values)

    @classmethod
    def from_text(cls, text: str, flags: ModalityFlags) -> "MultiModalInput":
        return cls.from_tokens(tokenize(text), flags)


@dataclass(frozen=True)
class GenCandidate:
    tokens: list[str]
    rank: int
    source: str


def assemble(record: PatchRecord, retrieved=(), include: ModalityFlags = ModalityFlags()) -> MultiModalInput:
    if not include.any():
        raise ValueError("at least one input modality must be enabled")
    patches = []
    if include.retrieved:
        ordered = sorted(retrieved, key=lambda r: (r.distance, r.record_id))
        patches = [list(r.patch) for r in ordered]
    location = tokenize(record.buggy_only) if include.location else None
    if include.location and not location:
        location = tokenize(record.prev_code)
    return MultiModalInput(
        location=location,
        context=tokenize(record.prev_code) if include.context else None,
        intent=tokenize(record.commit_msg) if include.intent else None,
        retrieved=patches,
    )


def _contains(hay: Sequence[str], needle: Sequence[str]) -> bool:
    n = len(needle)
    return any(list(hay[i:i + n]) == list(needle) for i in range(len(hay) - n + 1))


def locate_buggy_lines(prev_code: str, buggy_only: str) -> tuple[int, int]:
    """Return the inclusive line span of ``prev_code`` holding ``buggy_only``.

    Matching is on tokens, so whitespace differences do not matter.  The span
    that ends earliest wins, and among those the shortest.
    """
    needle = tokenize(buggy_only)
    if not needle:
        raise LocalizationError("buggy_only is empty")
    lines = prev_code.split("\n")
    line_tokens = [tokenize(line) for line in lines]
    for end in range(len(lines)):
        hay: list[str] = []
        for start in range(end, -1, -1):
            hay = line_tokens[start] + hay
            if len(hay) >= len(needle) and _contains(hay, needle):
                return start, end
    raise LocalizationError("buggy line not found in prev_code")


def build_prompt(record: PatchRecord, retrieved_patch: Sequence[str] | str | None = None) -> str:
    start, end = locate_buggy_lines(record.prev_code, record.buggy_only)
    lines = record.prev_code.split("\n")
    out = [TASK_COMMENT]
    out.extend(lines[:end + 1])
    out.append(BUGGY_COMMENT)
    if retrieved_patch is not None:
        patch = retrieved_patch if isinstance(retrieved_patch, str) else detokenize(retrieved_patch)
        out.append(PATCH_COMMENT)
        out.append(patch)
    out.extend(lines[end + 1:])
    out.append(CONTEXT_COMMENT)
    out.extend(lines[:start])
    return "\n".join(out) + "\n"


class IdentityGenerator:
    source = "identity"

    def __call__(self, mm_input: MultiModalInput, n: int, record=None) -> list[GenCandidate]:
        _check_n(n)
        return [GenCandidate(list(mm_input.location or []), 1, self.source)]


class RetrievalCopyGenerator:
    source = "retrieval_copy"

    def __call__(self, mm_input: MultiModalInput, n: int, record=None) -> list[GenCandidate]:
        _check_n(n)
        return [GenCandidate(list(p), i + 1, self.source)
                for i, p in enumerate(mm_input.retrieved[:n])]


class HttpJsonClient:
    """POST JSON, parse JSON, retry transient failures with backoff."""

    def __init__(self, url: str, timeout: float = 30.0, retries: int = 3,
                 backoff: float = 0.5, api_key: str | None = None):
        self.url = url
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)

    def post(self, payload: dict) -> dict:
        body = json.dumps(payload).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_status = None
        for attempt in range(self.retries + 1):
            req = urllib.request.Request(self.url, data=body, headers=headers, method="POST")
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    return json.loads(resp.read().decode("utf-8"))
            except urllib.error.HTTPError as exc:
                last_status = exc.code
                if exc.code < 500 and exc.code != 429:
                    raise GenerationError(f"request to {self.url} failed", exc.code) from exc
            except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
                last_status = None
                log.warning("transport error talking to %s: %s", self.url, exc)
            except json.JSONDecodeError as exc:
                raise GenerationError(f"non-JSON response from {self.url}") from exc
            if attempt < self.retries:
                time.sleep(self.backoff * 2 ** attempt)
        raise GenerationError(f"request to {self.url} failed after {self.retries + 1} attempts",
                              last_status)


class RemoteGenerator:
    """Completion endpoint speaking ``{prompt, n, max_tokens, temperature}``.

    The first line of every returned completion is taken as the patch.
    """

    source = "remote"

    def __init__(self, url: str, max_tokens: int = 128, temperature: float | None = None,
                 timeout: float = 30.0, retries: int = 3, backoff: float = 0.5):
        self.client = HttpJsonClient(url, timeout=timeout, retries=retries, backoff=backoff)
        self.max_tokens = max_tokens
        self.temperature = temperature

    def prompt_for(self, mm_input: MultiModalInput, record=None) -> str:
        patch = mm_input.retrieved[0] if mm_input.retrieved else None
        if record is not None and record.buggy_only:
            return build_prompt(record, patch)
        return mm_input.to_text()

    def __call__(self, mm_input: MultiModalInput, n: int, record=None) -> list[GenCandidate]:
        _check_n(n)
        temperature = self.temperature
        if temperature is None:
            temperature = 0.8 if n > 1 else 0.0
        reply = self.client.post({
            "prompt": self.prompt_for(mm_input, record),
            "n": n,
            "max_tokens": self.max_tokens,
            "temperature": temperature,
        })
        completions = reply.get("completions")
        if not isinstance(completions, list):
            raise GenerationError("response lacks a 'completions' list")
        out = []
        for text in completions[:n]:
            first = str(text).lstrip("\n").split("\n", 1)[0]
            tokens = tokenize(first)
            if not tokens:
                log.warning("skipping empty completion")
                continue
            out.append(GenCandidate(tokens, len(out) + 1, self.source))
        return out


class RemoteEmbedder:
    """Neural embedder behind ``POST {inputs: [text]} -> {embeddings: [[...]]}``."""

    kind = "remote"

    def __init__(self, url: str, dim: int, name: str = "remote", **client_kw):
        self.client = HttpJsonClient(url, **client_kw)
        self.dim = dim
        self.embedder_id = f"remote:{name}"

    def embed(self, tokens) -> "list[float]":
        text = tokens if isinstance(tokens, str) else detokenize(tokens)
        reply = self.client.post({"inputs": [text]})
        try:
            vec = [float(v) for v in reply["embeddings"][0]]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise GenerationError("malformed embedding response") from exc
        if len(vec) != self.dim:
            raise GenerationError(f"embedding has {len(vec)} values, expected {self.dim}")
        return vec

    def state(self):
        return {"kind": self.kind, "url": self.client.url, "dim": self.dim}


def generate(mm_input: MultiModalInput, generator, n: int, record=None) -> list[GenCandidate]:
    _check_n(n)
    cands = generator(mm_input, n, record=record)[:n]
    return [GenCandidate(c.tokens, i + 1, c.source) for i, c in enumerate(cands)]


def _check_n(n):
    if n < 1:
        raise ValueError("n must be >= 1")


def make_generator(name: str, url: str | None = None, **kw):
    if name == "identity":
        return IdentityGenerator()
    if name == "retrieval_copy":
        return RetrievalCopyGenerator()
    if name == "remote":
        if not url:
            raise ValueError("remote generator needs an endpoint url")
        return RemoteGenerator(url, **kw)
    raise ValueError(f"unknown generator {name!r}")
