import math
import random

import numpy as np
import pytest

from oracles import cosine_distance_loop
from sgmrepair.corpus import PatchRecord
from sgmrepair.errors import CorruptIndexError, IndexMismatchError
from sgmrepair.search import (PatchIndex, build_index, build_tfidf, cosine_distance,
                              join_modalities, load_index, retrieve, save_index, tfidf_index)


def test_cosine_examples():
    assert cosine_distance([2.0, 1.0], [2.0, 1.0]) == pytest.approx(0.0, abs=1e-15)
    assert cosine_distance([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert cosine_distance([1.0, 0.0], [1.0, 1.0]) == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-12)
    assert cosine_distance([0.0, 0.0], [1.0, 1.0]) == 1.0
    with pytest.raises(ValueError):
        cosine_distance([1.0], [1.0, 2.0])


def test_cosine_properties():
    rng = np.random.default_rng(0)
    for _ in range(200):
        x, y = rng.normal(size=5), rng.normal(size=5)
        d = cosine_distance(x, y)
        assert 0.0 <= d <= 2.0
        assert d == pytest.approx(cosine_distance(y, x), abs=1e-12)
        assert d == pytest.approx(cosine_distance_loop(x, y), abs=1e-12)


def test_tfidf_single_axis():
    emb = build_tfidf([["a"]])
    np.testing.assert_allclose(emb.embed(["a"]), [1.0])


def test_tfidf_weights_by_hand():
    emb = build_tfidf([["a", "b"], ["a", "c"]])
    assert emb.terms == ["a", "b", "c"]
    # df(a)=2 -> ln(3/3)+1 = 1 ; df(b)=df(c)=1 -> ln(3/2)+1
    np.testing.assert_allclose(emb.idf, [1.0, math.log(1.5) + 1, math.log(1.5) + 1])
    raw = np.array([2 * 1.0, math.log(1.5) + 1, 0.0])
    np.testing.assert_allclose(emb.embed(["a", "a", "b"]), raw / np.linalg.norm(raw))


def test_tfidf_degenerate_inputs():
    emb = build_tfidf([["a", "b"]])
    assert not emb.embed([]).any()
    assert not emb.embed(["zzz"]).any()
    with pytest.raises(ValueError):
        build_tfidf([])


def rand_records(rng, n, alphabet="abcdefgh", max_len=6):
    recs = []
    for i in range(n):
        v0 = " ".join(rng.choice(alphabet) for _ in range(rng.randint(1, max_len)))
        v1 = " ".join(rng.choice(alphabet) for _ in range(rng.randint(1, max_len)))
        recs.append(PatchRecord(f"p{i:03d}", v0, v0, v1))
    return recs


def brute_force(query_vec, index):
    dists = [cosine_distance_loop(query_vec, v) for v in index.vectors]
    return sorted(zip(dists, index.record_ids))


def test_tfidf_vectors_unit_norm():
    index = tfidf_index(rand_records(random.Random(2), 50))
    norms = np.linalg.norm(index.vectors, axis=1)
    assert np.all(np.abs(norms - 1.0) <= 1e-9)


def test_retrieve_matches_brute_force():
    rng = random.Random(7)
    for trial in range(20):
        recs = rand_records(rng, rng.randint(1, 200))
        index = tfidf_index(recs)
        emb = index.embedder()
        query = " ".join(rng.choice("abcdefgh") for _ in range(rng.randint(1, 6)))
        expected = brute_force(emb.embed(query), index)
        for k in (1, 5):
            got = retrieve(query, index, k, emb)
            assert len(got) == min(k, len(recs))
            for hit, (d, _) in zip(got, expected):
                assert hit.distance == pytest.approx(d, abs=1e-12)
            by_id = dict((rid, d) for d, rid in expected)
            for hit in got:
                assert by_id[hit.record_id] == pytest.approx(hit.distance, abs=1e-12)


def test_retrieve_identical_query_first():
    recs = rand_records(random.Random(3), 30)
    index = tfidf_index(recs)
    hit = retrieve(recs[17].buggy_only, index, 1, index.embedder())[0]
    assert hit.distance <= 1e-9
    assert index.embedder().embed(recs[17].buggy_only) @ index.vectors[17] == pytest.approx(1.0)


def test_retrieve_prefix_property_and_sorting():
    recs = rand_records(random.Random(4), 40)
    index = tfidf_index(recs)
    emb = index.embedder()
    full = retrieve("a b c", index, 100, emb)
    assert len(full) == 40
    keys = [(h.distance, h.record_id) for h in full]
    assert keys == sorted(keys)
    for k in range(1, 10):
        assert retrieve("a b c", index, k, emb) == retrieve("a b c", index, k + 1, emb)[:k]


def test_retrieve_three_entry_order_by_hand():
    recs = [PatchRecord("x", "a b", "a b", "P1"), PatchRecord("y", "a c", "a c", "P2"),
            PatchRecord("z", "d", "d", "P3")]
    index = tfidf_index(recs)
    emb = index.embedder()
    hits = retrieve("a b", index, 3, emb)
    assert [h.record_id for h in hits] == ["x", "y", "z"]
    assert hits[0].distance == pytest.approx(0.0, abs=1e-12)
    assert hits[2].distance == pytest.approx(1.0)
    # idf(a)=ln(4/3)+1, idf(b)=idf(c)=ln(4/2)+1
    ia, ib = math.log(4 / 3) + 1, math.log(2) + 1
    assert hits[1].distance == pytest.approx(1 - ia * ia / (ia * ia + ib * ib), abs=1e-12)
    assert hits[1].patch == ["P2"]


def test_retrieve_ties_by_record_id():
    recs = [PatchRecord(rid, "same", "same", rid) for rid in ("c", "a", "b")]
    index = tfidf_index(recs)
    assert [h.record_id for h in retrieve("same", index, 3, index.embedder())] == ["a", "b", "c"]


def test_retrieve_empty_index_and_mismatch():
    emb = build_tfidf([["a"]])
    empty = PatchIndex([], np.zeros((0, 1)), [], emb.embedder_id, 1)
    assert retrieve("a", empty, 3, emb) == []
    other = build_tfidf([["b"]])
    with pytest.raises(IndexMismatchError):
        retrieve("a", empty, 3, other)


def test_multimodal_query_joined_with_separator():
    assert join_modalities(["a b", "c"]) == ["a", "b", "<s>", "c"]
    recs = [PatchRecord("x", "a b", "ctx one", "P", "msg")]
    index = tfidf_index(recs, ["buggy_only", "prev_code"])
    for query in ("a b <s> ctx one", join_modalities(["a b", "ctx one"])):
        hit = retrieve(query, index, 1, index.embedder())[0]
        assert hit.distance == pytest.approx(0.0, abs=1e-12)
    assert index.modalities == ("buggy_only", "prev_code")


def test_save_load_round_trip(tmp_path):
    recs = rand_records(random.Random(8), 100)
    index = tfidf_index(recs)
    path = tmp_path / "idx.jsonl"
    save_index(index, path)
    loaded = load_index(path)
    assert loaded.embedder_id == index.embedder_id and loaded.dim == index.dim
    assert loaded.record_ids == index.record_ids and loaded.patches == index.patches
    assert loaded.vectors.tobytes() == index.vectors.tobytes()
    assert loaded.embedder().embedder_id == index.embedder_id


def test_save_load_empty(tmp_path):
    emb = build_tfidf([["a", "b"]])
    index = build_index([], emb)
    path = tmp_path / "empty.jsonl"
    save_index(index, path)
    loaded = load_index(path)
    assert len(loaded) == 0 and loaded.dim == 2 and loaded.embedder_id == emb.embedder_id


def test_load_truncated(tmp_path):
    index = tfidf_index(rand_records(random.Random(9), 5))
    path = tmp_path / "idx.jsonl"
    save_index(index, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(CorruptIndexError):
        load_index(path)
    path.write_text(path.read_text()[:-15])
    with pytest.raises(CorruptIndexError):
        load_index(path)


def test_load_dim_mismatch(tmp_path):
    index = tfidf_index(rand_records(random.Random(10), 3))
    path = tmp_path / "idx.jsonl"
    save_index(index, path)
    lines = path.read_text().splitlines()
    lines[1] = lines[1].replace('"vector": [', '"vector": [0.5, ', 1)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CorruptIndexError):
        load_index(path)
