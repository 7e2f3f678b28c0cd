import json
import sys

import pytest

from sgmrepair.corpus import Dataset
from sgmrepair.errors import SgmError
from sgmrepair.generate import GenCandidate
from sgmrepair.pipeline import (Candidate, EvalReport, PipelineConfig, evaluate,
                                levt_examples, load_variants, modality_distances, run_record,
                                write_report)
from sgmrepair.search import tfidf_index
from sgmrepair.synthetic import synthetic_corpus
from sgmrepair.tokenize import tokenize


@pytest.fixture(scope="module")
def corpus():
    return synthetic_corpus(120, seed=5)


@pytest.fixture(scope="module")
def database(corpus):
    return Dataset(corpus.records[:100])


@pytest.fixture(scope="module")
def test_set(corpus):
    return Dataset(corpus.records[100:], "test")


@pytest.fixture(scope="module")
def index(database):
    return tfidf_index(database)


class Numbered:
    """Emits n distinct candidates tagged with the first retrieved patch."""

    def __init__(self):
        self.calls = 0

    def __call__(self, mm, n, record=None):
        self.calls += 1
        tag = mm.retrieved[0][0] if mm.retrieved else "none"
        return [GenCandidate([tag, str(i), f"c{self.calls}"], i + 1, "numbered") for i in range(n)]


def test_config_checks():
    with pytest.raises(ValueError):
        PipelineConfig(n_generate=0)
    with pytest.raises(ValueError):
        PipelineConfig(modify_policy="magic")
    with pytest.raises(ValueError):
        PipelineConfig.from_dict({"k": 3})
    apr = PipelineConfig.apr_preset()
    assert (apr.k_retrieve, apr.n_generate, apr.candidate_budget) == (25, 50, 1250)
    assert PipelineConfig(k_retrieve=0, n_generate=7).candidate_budget == 7


@pytest.mark.parametrize("k,n", [(1, 1), (3, 2), (5, 5), (0, 4)])
def test_budget_law(test_set, index, k, n):
    cfg = PipelineConfig(k_retrieve=k, n_generate=n, modify=False, search=k > 0)
    for rec in test_set.records[:5]:
        cands = run_record(rec, cfg, index=index, generator=Numbered())
        assert len(cands) == max(k, 1) * n
        assert [c.rank for c in cands] == list(range(1, len(cands) + 1))
        if k:
            # retrieval-major: all generations from retrieval 1 come first
            assert [c.retrieval_rank for c in cands] == sorted(c.retrieval_rank for c in cands)


def test_duplicates_collapse_to_best_rank(test_set, index):
    cfg = PipelineConfig(k_retrieve=5, n_generate=3, modify=False)
    cands = run_record(test_set.records[0], cfg, index=index)  # identity generator
    assert len(cands) == 1 and cands[0].rank == 1 and cands[0].retrieval_rank == 1


def test_search_only(test_set, index, database):
    cfg = PipelineConfig(k_retrieve=1, generate=False, modify=False)
    rec = database.records[7]
    cands = run_record(rec, cfg, index=index)
    assert len(cands) == 1 and cands[0].stage == "search"
    assert cands[0].tokens == tokenize(rec.fixed_code)


def test_no_stages_returns_buggy_line(record):
    cfg = PipelineConfig(search=False, generate=False, modify=False)
    cands = run_record(record, cfg)
    assert cands[0].tokens == ["return", "a", ";"] and cands[0].stage == "input"


def test_search_without_index_fails(record):
    with pytest.raises(SgmError):
        run_record(record, PipelineConfig())


def test_oracle_modify_fixes_everything(test_set, index):
    cfg = PipelineConfig(modify_policy="oracle")
    for rec in test_set:
        cands = run_record(rec, cfg, index=index)
        assert cands[0].tokens == tokenize(rec.fixed_code)
        assert cands[0].stage == "modify"


def test_model_policy_without_model_marks_errors(record):
    cfg = PipelineConfig(search=False)
    cands = run_record(record, cfg)
    assert cands[0].error and "LevT" in cands[0].error


def test_validator_hook(test_set, index):
    check = f"{sys.executable} -c \"import sys; sys.exit(0 if ' 1 ' in sys.stdin.read() else 1)\""
    cfg = PipelineConfig(k_retrieve=1, n_generate=3, modify=False, validator=check)
    cands = run_record(test_set.records[0], cfg, index=index, generator=Numbered())
    assert [c.validated for c in cands] == [False, True, False]
    cfg = PipelineConfig(k_retrieve=1, n_generate=3, modify=False, validator=check,
                         first_plausible=True)
    cands = run_record(test_set.records[0], cfg, index=index, generator=Numbered())
    assert [c.validated for c in cands] == [False, True, None]


def test_validator_that_cannot_run(record):
    cfg = PipelineConfig(search=False, modify=False, validator="/nonexistent/validator")
    assert run_record(record, cfg)[0].validated is False


def test_levt_examples(database):
    ex = levt_examples(database.records[:2])
    assert ex[0].source == tokenize(database.records[0].buggy_only)
    assert ex[0].context.count("<s>") == 1


def test_evaluate_identical_variants(test_set, database):
    a = PipelineConfig(name="a", modify_policy="oracle")
    b = PipelineConfig(name="b", modify_policy="oracle")
    rep = evaluate(test_set, [a, b], baseline="a", database=database)
    assert rep.variants["a"].top1 == rep.variants["b"].top1 == 1.0
    assert rep.improvements["b"] == {"baseline": "a", "top1": 0.0, "top5": 0.0}


def test_evaluate_improvement_and_skipping(test_set, database):
    base = PipelineConfig(name="search", generate=False, modify=False)
    full = PipelineConfig(name="oracle", modify_policy="oracle")
    broken = PipelineConfig(name="broken", levt_checkpoint="/nowhere.levt")
    rep = evaluate(test_set, [base, full, broken], baseline="search", database=database)
    assert "broken" in rep.skipped and "broken" not in rep.variants
    b = rep.variants["search"].top1
    if b:
        assert rep.improvements["oracle"]["top1"] == round(100 * (1.0 - b) / b, 2)
    assert rep.variants["oracle"].stages == ["search", "generate", "modify"]


def test_modality_distances(test_set, database):
    samples, per_record = modality_distances(test_set, database)
    assert set(samples) == {f"{m}, k={k}" for m in ("buggy_only", "prev_code", "commit_msg")
                            for k in (1, 5)}
    for rid, d in per_record.items():
        for m in ("buggy_only", "prev_code", "commit_msg"):
            assert d[f"{m}, k=5"] <= d[f"{m}, k=1"]
    assert all(0.0 <= v <= 1.0 for vals in samples.values() for v in vals)


def test_report_round_trip_and_files(test_set, database, tmp_path):
    rep = evaluate(test_set, [PipelineConfig(name="o", modify_policy="oracle")],
                   database=database, keep_candidates=True)
    rep.save(tmp_path / "r.json")
    back = EvalReport.load(tmp_path / "r.json")
    assert back.to_dict() == json.loads(json.dumps(rep.to_dict()))
    assert back.variants["o"].candidates[test_set.records[0].id][0]["rank"] == 1
    paths = write_report(back, tmp_path / "out")
    lines = paths["histograms.csv"].read_text().splitlines()
    assert lines[0] == "sample,bin_low,bin_high,count"
    assert len(lines) == 1 + 6 * 50
    tests = json.loads(paths["tests.json"].read_text())
    assert len(tests) == 15
    assert all(t["p_value"] is None or 0.0 <= t["p_value"] <= 1.0 for t in tests)
    acc = json.loads(paths["accuracy.json"].read_text())
    assert acc["variants"]["o"]["top1"] == 1.0


def test_load_variants():
    variants, base = load_variants({"k_retrieve": 2, "baseline": "x",
                                    "variants": [{"name": "x"}, {"name": "y", "k_retrieve": 4}]})
    assert [(v.name, v.k_retrieve) for v in variants] == [("x", 2), ("y", 4)]
    assert base == "x"
    assert load_variants({})[0][0].name == "default"


def test_candidate_to_dict():
    c = Candidate(["return", "b", ";"], 1, "modify", retrieval_rank=2)
    assert c.to_dict()["patch"] == "return b ;"


def test_evaluate_is_deterministic(test_set, database):
    variants = [PipelineConfig(name="g", modify=False, generator="retrieval_copy"),
                PipelineConfig(name="o", modify_policy="oracle")]
    first = evaluate(test_set, variants, database=database, keep_candidates=True).to_dict()
    second = evaluate(test_set, variants, database=database, keep_candidates=True).to_dict()
    assert first == second
