"""Search -> Generate -> Modify orchestration and evaluation reports."""

from __future__ import annotations

import csv
import itertools
import json
import logging
import shlex
import subprocess
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

from . import stats
from .corpus import Dataset, PatchRecord, load_jsonl
from .editalg import min_topk_distance, normalized_distance
from .errors import DegenerateSampleError, SgmError
from .generate import ModalityFlags, assemble, generate, make_generator
from .levt import (IdentityPolicy, LevTExample, LevTPolicy, OraclePolicy, load_checkpoint,
                   refine)
from .search import join_modalities, load_index, retrieve, tfidf_index
from .tokenize import detokenize, tokenize

log = logging.getLogger(__name__)

QUERY_MODALITIES = ("buggy_only", "prev_code", "commit_msg")
APR_K, APR_N = 25, 50


@dataclass
class PipelineConfig:
    name: str = "default"
    database_path: str | None = None
    index_path: str | None = None
    train_path: str | None = None
    eval_path: str | None = None
    test_path: str | None = None
    query_modalities: list[str] = field(default_factory=lambda: ["buggy_only"])
    modalities: list[str] = field(default_factory=lambda: ["location", "context", "retrieved"])
    levt_modalities: list[str] = field(default_factory=lambda: ["location", "context"])
    search: bool = True
    generate: bool = True
    modify: bool = True
    k_retrieve: int = 5
    n_generate: int = 5
    generator: str = "identity"
    generator_url: str | None = None
    modify_policy: str = "model"
    levt_checkpoint: str | None = None
    refine_iterations: int = 1
    validator: str | None = None
    first_plausible: bool = False
    report_dir: str = "report"
    seed: int = 0

    def __post_init__(self):
        if self.k_retrieve < 0:
            raise ValueError("k_retrieve must be >= 0")
        if self.n_generate < 1:
            raise ValueError("n_generate must be >= 1")
        if self.refine_iterations < 1:
            raise ValueError("refine_iterations must be >= 1")
        if self.modify_policy not in ("model", "oracle", "identity"):
            raise ValueError(f"unknown modify_policy {self.modify_policy!r}")

    @classmethod
    def apr_preset(cls, **overrides) -> "PipelineConfig":
        """The program-repair budget: 25 retrievals x 50 generations."""
        return cls(**{"k_retrieve": APR_K, "n_generate": APR_N, **overrides})

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def candidate_budget(self) -> int:
        return max(self.k_retrieve, 1) * self.n_generate


@dataclass
class Candidate:
    tokens: list[str]
    rank: int
    stage: str
    validated: bool | None = None
    error: str | None = None
    retrieval_rank: int | None = None

    def to_dict(self):
        return {"rank": self.rank, "stage": self.stage, "patch": detokenize(self.tokens),
                "validated": self.validated, "error": self.error,
                "retrieval_rank": self.retrieval_rank}


def query_tokens(record: PatchRecord, modalities: Sequence[str]) -> list[str]:
    return join_modalities([record.modality(m) for m in modalities])


def run_validator(command, patch: str, timeout: float = 60.0) -> bool:
    """Feed ``patch`` on stdin; exit status 0 means plausible."""
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    try:
        proc = subprocess.run(argv, input=patch, text=True, capture_output=True, timeout=timeout)
    except (OSError, subprocess.TimeoutExpired) as exc:
        log.warning("validator failed to run: %s", exc)
        return False
    return proc.returncode == 0


def levt_context(record: PatchRecord, modalities: Sequence[str]) -> list[str]:
    """Encoder input for the edit model: the record's modalities, no retrieval."""
    flags = replace(ModalityFlags.from_names(modalities), retrieved=False)
    return assemble(record, [], flags).to_tokens()


def levt_examples(dataset, modalities=("location", "context")) -> list[LevTExample]:
    """Training pairs: buggy lines -> fixed code, with the record as context."""
    return [LevTExample(tokenize(r.buggy_only or r.prev_code), tokenize(r.fixed_code),
                        levt_context(r, modalities), r.id)
            for r in dataset]


def make_policy(config: PipelineConfig, record: PatchRecord, model=None):
    if config.modify_policy == "oracle":
        return OraclePolicy(tokenize(record.fixed_code))
    if config.modify_policy == "identity":
        return IdentityPolicy()
    if model is None:
        raise SgmError("modify stage needs a trained LevT model")
    return model if isinstance(model, LevTPolicy) else LevTPolicy(model)


def run_record(record: PatchRecord, config: PipelineConfig, index=None, model=None,
               generator=None, embedder=None) -> list[Candidate]:
    """Candidates for one record, best first, at most k x n of them."""
    retrieved = []
    if config.search and config.k_retrieve > 0:
        if index is None:
            raise SgmError("search stage needs a patch index")
        embedder = embedder or index.embedder()
        retrieved = retrieve(query_tokens(record, config.query_modalities), index,
                             config.k_retrieve, embedder)

    pool: list[Candidate] = []
    if config.generate:
        generator = generator or make_generator(config.generator, config.generator_url)
        flags = ModalityFlags.from_names(config.modalities)
        inputs = [[r] for r in retrieved] if retrieved and flags.retrieved else [[]]
        for r_rank, ret in enumerate(inputs, start=1):
            try:
                mm = assemble(record, ret, flags)
                for cand in generate(mm, generator, config.n_generate, record=record):
                    pool.append(Candidate(cand.tokens, 0, "generate",
                                          retrieval_rank=r_rank if ret else None))
            except SgmError as exc:
                pool.append(Candidate([], 0, "generate", error=str(exc), retrieval_rank=r_rank))
    elif config.search:
        pool = [Candidate(list(r.patch), 0, "search", retrieval_rank=i)
                for i, r in enumerate(retrieved, start=1)]
    else:
        pool = [Candidate(tokenize(record.buggy_only or record.prev_code), 0, "input")]

    if config.modify:
        try:
            policy = make_policy(config, record, model)
        except SgmError as exc:
            policy = None
            for c in pool:
                c.error = c.error or str(exc)
        if policy is not None:
            context = levt_context(record, config.levt_modalities)
            for c in pool:
                if c.error:
                    continue
                try:
                    c.tokens, _ = refine(policy, c.tokens, context, config.refine_iterations)
                    c.stage = "modify"
                except SgmError as exc:
                    c.error = str(exc)

    seen = set()
    ranked = []
    for c in pool:
        key = tuple(c.tokens)
        if c.error is None and key in seen:
            continue
        seen.add(key)
        ranked.append(c)
    ranked = ranked[: config.candidate_budget]
    for i, c in enumerate(ranked, start=1):
        c.rank = i

    if config.validator:
        for c in ranked:
            if c.error:
                continue
            c.validated = run_validator(config.validator, detokenize(c.tokens))
            if c.validated and config.first_plausible:
                break
    return ranked


# evaluation ------------------------------------------------------------------

@dataclass
class VariantResult:
    name: str
    top1: float
    top5: float
    n_records: int
    avg_new_identifiers: float
    stages: list[str]
    candidates: dict[str, list[dict]] | None = None


@dataclass
class EvalReport:
    variants: dict[str, VariantResult] = field(default_factory=dict)
    baseline: str | None = None
    improvements: dict[str, dict] = field(default_factory=dict)
    distance_samples: dict[str, list[float]] = field(default_factory=dict)
    per_record_distances: dict[str, dict[str, float]] = field(default_factory=dict)
    histograms: dict[str, list[list[float]]] = field(default_factory=dict)
    tests: list[dict] = field(default_factory=list)
    skipped: dict[str, str] = field(default_factory=dict)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        data = dict(data)
        data["variants"] = {k: VariantResult(**v) for k, v in data.get("variants", {}).items()}
        return cls(**data)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class Resources:
    """Loads and caches indices and models named by variant configs."""

    def __init__(self, index=None, model=None, generators=None, database=None):
        self._index = {None: index} if index is not None else {}
        self._model = {None: model} if model is not None else {}
        self.generators = dict(generators or {})
        self.database = database

    def index_for(self, config: PipelineConfig):
        key = (config.index_path, tuple(config.query_modalities))
        if config.index_path is None and None in self._index:
            return self._index[None]
        if key not in self._index:
            if config.index_path:
                self._index[key] = load_index(config.index_path)
            elif self.database is not None:
                self._index[key] = tfidf_index(self.database, config.query_modalities)
            else:
                raise SgmError("no patch index or database configured")
        return self._index[key]

    def model_for(self, config: PipelineConfig):
        if config.levt_checkpoint is None:
            if None in self._model:
                return self._model[None]
            raise SgmError("no LevT checkpoint configured")
        if config.levt_checkpoint not in self._model:
            path = Path(config.levt_checkpoint)
            if not path.exists():
                raise SgmError(f"LevT checkpoint {path} not found")
            self._model[config.levt_checkpoint] = load_checkpoint(path)
        return self._model[config.levt_checkpoint]


def stage_names(config: PipelineConfig) -> list[str]:
    return [s for s in ("search", "generate", "modify") if getattr(config, s)]


def evaluate_variant(test_set, config: PipelineConfig, resources: Resources,
                     keep_candidates: bool = False) -> VariantResult:
    index = resources.index_for(config) if config.search and config.k_retrieve > 0 else None
    model = None
    if config.modify and config.modify_policy == "model":
        model = LevTPolicy(resources.model_for(config))
    generator = None
    if config.generate:
        generator = resources.generators.get(config.generator)
        if generator is None:
            generator = make_generator(config.generator, config.generator_url)
    per_record, targets, new_ids = [], [], []
    kept = {} if keep_candidates else None
    for rec in test_set:
        cands = run_record(rec, config, index=index, model=model, generator=generator)
        tokens = [c.tokens for c in cands if c.error is None]
        per_record.append(tokens)
        targets.append(tokenize(rec.fixed_code))
        source = tokenize(rec.buggy_only or rec.prev_code)
        new_ids.append(stats.new_identifier_count(source, tokens[0]) if tokens else 0)
        if kept is not None:
            kept[rec.id] = [c.to_dict() for c in cands]
    n = len(per_record)
    return VariantResult(
        name=config.name,
        top1=stats.topk_accuracy(per_record, targets, 1),
        top5=stats.topk_accuracy(per_record, targets, 5),
        n_records=n,
        avg_new_identifiers=(sum(new_ids) / n) if n else 0.0,
        stages=stage_names(config),
        candidates=kept,
    )


def modality_distances(test_set, database, modalities=QUERY_MODALITIES, k: int = 5):
    """Top-1 and min-over-top-k distances from retrieved patch to target.

    One TF-IDF index per query modality; each modality of the query is
    matched against the same modality of the database.
    """
    samples, per_record = {}, {}
    for mod in modalities:
        index = tfidf_index(database, [mod])
        embedder = index.embedder()
        top1, topk = [], []
        for rec in test_set:
            hits = retrieve(rec.modality(mod), index, k, embedder)
            if not hits:
                continue
            target = tokenize(rec.fixed_code)
            d1 = normalized_distance(hits[0].patch, target)
            dk = min_topk_distance([h.patch for h in hits], target, k)
            top1.append(d1)
            topk.append(dk)
            per_record.setdefault(rec.id, {})[f"{mod}, k=1"] = d1
            per_record[rec.id][f"{mod}, k={k}"] = dk
        samples[f"{mod}, k=1"] = top1
        samples[f"{mod}, k={k}"] = topk
    return samples, per_record


def pairwise_tests(samples: dict[str, list[float]]) -> list[dict]:
    out = []
    for a, b in itertools.combinations(sorted(samples), 2):
        entry = {"a": a, "b": b}
        try:
            entry.update(stats.two_sample_z(samples[a], samples[b]).to_dict())
        except (DegenerateSampleError, ValueError) as exc:
            entry.update(z_statistic=None, p_value=None, wasserstein=None, note=str(exc))
            if samples[a] and samples[b]:
                entry["wasserstein"] = stats.wasserstein_1d(samples[a], samples[b])
        out.append(entry)
    return out


def evaluate(test_set, variants: Sequence[PipelineConfig], baseline: str | None = None,
             resources: Resources | None = None, database=None, bins: int = 50,
             keep_candidates: bool = False) -> EvalReport:
    if not variants:
        raise ValueError("need at least one variant")
    resources = resources or Resources(database=database)
    if database is None:
        database = resources.database
    report = EvalReport(seed=variants[0].seed)
    for cfg in variants:
        try:
            report.variants[cfg.name] = evaluate_variant(test_set, cfg, resources, keep_candidates)
        except (SgmError, OSError) as exc:
            log.warning("skipping variant %s: %s", cfg.name, exc)
            report.skipped[cfg.name] = str(exc)
    names = [v.name for v in variants if v.name in report.variants]
    report.baseline = baseline if baseline in report.variants else (names[0] if names else None)
    if report.baseline is not None:
        base = report.variants[report.baseline]
        for name in names:
            res = report.variants[name]
            entry = {"baseline": report.baseline}
            for metric in ("top1", "top5"):
                b, v = getattr(base, metric), getattr(res, metric)
                entry[metric] = stats.percent_improvement(100 * b, 100 * v) if b else None
            report.improvements[name] = entry
    if database is not None and len(database):
        samples, per_record = modality_distances(test_set, database)
        report.distance_samples = samples
        report.per_record_distances = per_record
        report.histograms = {k: [list(b) for b in stats.histogram(v, bins)]
                             for k, v in samples.items()}
        report.tests = pairwise_tests(samples)
    return report


def write_report(report: EvalReport, out_dir) -> dict[str, Path]:
    """Emit histograms.csv, tests.json and accuracy.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in ("histograms.csv", "tests.json", "accuracy.json")}
    with open(paths["histograms.csv"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample", "bin_low", "bin_high", "count"])
        for sample, rows in sorted(report.histograms.items()):
            for low, high, count in rows:
                writer.writerow([sample, f"{low:.6g}", f"{high:.6g}", int(count)])
    paths["tests.json"].write_text(json.dumps(report.tests, indent=2), encoding="utf-8")
    accuracy = {
        "baseline": report.baseline,
        "variants": {k: {"top1": v.top1, "top5": v.top5, "n_records": v.n_records,
                         "avg_new_identifiers": v.avg_new_identifiers, "stages": v.stages}
                     for k, v in report.variants.items()},
        "improvements": report.improvements,
        "skipped": report.skipped,
    }
    paths["accuracy.json"].write_text(json.dumps(accuracy, indent=2), encoding="utf-8")
    return paths


def load_variants(config: dict) -> tuple[list[PipelineConfig], str | None]:
    """Split an eval config into base settings and per-variant overrides."""
    config = dict(config)
    overrides = config.pop("variants", None) or [{}]
    baseline = config.pop("baseline", None)
    variants = []
    for over in overrides:
        merged = {**config, **over}
        variants.append(PipelineConfig.from_dict(merged))
    return variants, baseline


def load_dataset(path, tag="test") -> Dataset:
    return load_jsonl(path, split_tag=tag)
