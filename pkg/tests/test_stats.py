import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from sgmrepair.errors import DegenerateSampleError
from sgmrepair.stats import (DistanceSample, exact_match, histogram, new_identifier_count,
                             percent_improvement, topk_accuracy, two_sample_z, wasserstein_1d)

from oracles import w1_equal_size, z_formula

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
samples = st.lists(unit, min_size=1, max_size=30)


def test_w1_worked_examples():
    assert wasserstein_1d([0.0], [1.0]) == pytest.approx(1.0, abs=1e-12)
    assert wasserstein_1d([0.0, 1.0], [0.5, 0.5]) == pytest.approx(0.5, abs=1e-12)
    assert wasserstein_1d([0.2, 0.2], [0.2]) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 25).flatmap(lambda n: st.tuples(st.lists(unit, min_size=n, max_size=n),
                                                      st.lists(unit, min_size=n, max_size=n))))
def test_w1_equal_size_oracle(pair):
    a, b = pair
    assert wasserstein_1d(a, b) == pytest.approx(w1_equal_size(a, b), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(samples, samples)
def test_w1_matches_scipy(a, b):
    assert wasserstein_1d(a, b) == pytest.approx(sps.wasserstein_distance(a, b), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(samples, samples, samples)
def test_w1_is_a_metric(a, b, c):
    assert wasserstein_1d(a, a) == pytest.approx(0.0, abs=1e-12)
    assert wasserstein_1d(a, b) == pytest.approx(wasserstein_1d(b, a), abs=1e-12)
    assert wasserstein_1d(a, c) <= wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-12
    assert 0.0 <= wasserstein_1d(a, b) <= 1.0 + 1e-12


def test_w1_rejects_empty():
    with pytest.raises(ValueError):
        wasserstein_1d([], [0.5])


@pytest.mark.parametrize("seed", range(10))
def test_z_against_formula(seed):
    rng = random.Random(seed)
    a = [rng.random() for _ in range(rng.randint(2, 40))]
    b = [rng.random() ** 2 for _ in range(rng.randint(2, 40))]
    res = two_sample_z(a, b)
    z, p = z_formula(a, b)
    assert res.z_statistic == pytest.approx(z, rel=1e-9)
    assert res.p_value == pytest.approx(p, abs=1e-9)
    assert res.wasserstein == pytest.approx(sps.wasserstein_distance(a, b), abs=1e-12)
    swapped = two_sample_z(b, a)
    assert swapped.z_statistic == pytest.approx(-res.z_statistic)
    assert swapped.p_value == pytest.approx(res.p_value)


def test_z_identical_samples():
    res = two_sample_z([0.1, 0.4, 0.7], [0.1, 0.4, 0.7])
    assert res.z_statistic == 0.0 and res.p_value == 1.0 and res.wasserstein == 0.0


def test_z_degenerate():
    with pytest.raises(DegenerateSampleError):
        two_sample_z([0.5], [0.1, 0.2])
    with pytest.raises(DegenerateSampleError):
        two_sample_z([0.3, 0.3], [0.3, 0.3, 0.3])
    # one constant sample is fine as long as the other varies
    assert 0.0 <= two_sample_z([0.3, 0.3], [0.1, 0.9]).p_value <= 1.0


def test_distance_sample_range():
    assert len(DistanceSample([0, 0.5, 1], "x")) == 3
    with pytest.raises(ValueError):
        DistanceSample([1.2])


def test_histogram_edges():
    h = histogram([0.0, 0.019, 0.02, 0.5, 1.0], bins=50)
    assert len(h) == 50
    assert h[0] == (0.0, 0.02, 2)
    assert h[1][2] == 1 and h[25][2] == 1 and h[49][2] == 1
    assert sum(c for _, _, c in h) == 5
    with pytest.raises(ValueError):
        histogram([0.1], bins=0)


def test_percent_improvement_reported_values():
    assert percent_improvement(29.99, 33.96) == 13.24
    assert percent_improvement(23.02, 25.27) == 9.77
    assert percent_improvement(10, 5) == -50.0
    with pytest.raises(ValueError):
        percent_improvement(0, 1)


def test_topk_accuracy():
    cands = [["return b ;", "x"], ["y", "return c ;"], []]
    targets = ["return b ;", "return c ;", "z"]
    assert topk_accuracy(cands, targets, 1) == pytest.approx(1 / 3)
    assert topk_accuracy(cands, targets, 5) == pytest.approx(2 / 3)
    assert topk_accuracy([], [], 1) == 0.0
    with pytest.raises(ValueError):
        topk_accuracy(cands, targets[:2], 1)


def test_exact_match_ignores_whitespace():
    assert exact_match("return  b;", ["return", "b", ";"])
    assert not exact_match("return b", "return b ;")


def test_new_identifier_count():
    assert new_identifier_count("return a ;", "return a + b ;") == 1
    assert new_identifier_count("if ( x ) y ( ) ;", "if ( x ) return ;") == 0
    assert new_identifier_count("a", "final int c = d ;") == 2
