import numpy as np
import pytest

from pmfspoof import distances as dist
from pmfspoof import pmf

DISTANCE_IDS = (1, 3, 5, 6, 7, 8)
SIMILARITY_IDS = (2, 4)
SYMMETRIC_IDS = (1, 2, 3, 4, 5, 6, 8)


def random_pmf(rng, n=64, sparse=False):
    w = rng.uniform(0.0, 1.0, n)
    if sparse:
        w[rng.random(n) < 0.6] = 0.0
        if w.sum() == 0:
            w[0] = 1.0
    return w / w.sum()


def test_measure_registry_order():
    names = [m.name for m in dist.MEASURES]
    assert names == [
        "quadratic_chi",
        "normalized_cross_correlation",
        "hellinger",
        "histogram_intersection",
        "jensen_shannon",
        "symmetric_kl",
        "kl_divergence",
        "modified_ks",
    ]
    assert [m.index for m in dist.MEASURES] == list(range(1, 9))


def test_self_similarity_identities():
    rng = np.random.default_rng(0)
    p = random_pmf(rng, 128, sparse=True)
    for idx in DISTANCE_IDS:
        assert dist.similarity(idx, p, p) == pytest.approx(0.0, abs=1e-12)
    assert dist.similarity(2, p, p) == pytest.approx(1.0, abs=1e-12)
    assert dist.similarity(4, p, p) == pytest.approx(1.0, abs=1e-12)


def test_disjoint_support_extremes():
    p, q = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert dist.hellinger(p, q) == pytest.approx(1.0, abs=1e-12)
    assert dist.histogram_intersection(p, q) == pytest.approx(0.0, abs=1e-12)
    assert dist.jensen_shannon(p, q) == pytest.approx(np.log(2), abs=1e-12)
    assert dist.modified_ks(p, q) == pytest.approx(1.0, abs=1e-12)
    assert dist.normalized_cross_correlation(p, q) == pytest.approx(0.0, abs=1e-12)


def test_kl_hand_computed_example():
    p, q = np.array([0.5, 0.5]), np.array([0.25, 0.75])
    expected = 0.5 * np.log(2.0) + 0.5 * np.log(2.0 / 3.0)  # ~0.14384
    assert dist.kl_divergence(p, q) == pytest.approx(expected, abs=1e-6)
    assert dist.kl_divergence(p, q) == pytest.approx(0.14384, abs=1e-4)
    assert dist.histogram_intersection(p, q) == pytest.approx(0.75, abs=1e-12)


def test_symmetry():
    rng = np.random.default_rng(1)
    for _ in range(30):
        p, q = random_pmf(rng, sparse=True), random_pmf(rng, sparse=True)
        for idx in SYMMETRIC_IDS:
            assert dist.similarity(idx, p, q) == pytest.approx(
                dist.similarity(idx, q, p), abs=1e-12
            )


def test_kl_is_asymmetric():
    p, q = np.array([0.9, 0.1]), np.array([0.5, 0.5])
    assert abs(dist.kl_divergence(p, q) - dist.kl_divergence(q, p)) > 1e-3


def test_bounds():
    rng = np.random.default_rng(2)
    for _ in range(50):
        p, q = random_pmf(rng, sparse=True), random_pmf(rng, sparse=True)
        assert 0.0 <= dist.histogram_intersection(p, q) <= 1.0
        assert 0.0 <= dist.hellinger(p, q) <= 1.0
        assert 0.0 <= dist.jensen_shannon(p, q) <= np.log(2) + 1e-12
        assert 0.0 <= dist.normalized_cross_correlation(p, q) <= 1.0 + 1e-12
        assert 0.0 <= dist.modified_ks(p, q) <= 1.0


def test_identity_of_indiscernibles():
    rng = np.random.default_rng(3)
    for _ in range(30):
        p, q = random_pmf(rng), random_pmf(rng)
        for idx in DISTANCE_IDS:
            assert dist.similarity(idx, p, q) > 1e-9
            assert dist.similarity(idx, p, p) < 1e-12


def test_smoothing_consistency():
    rng = np.random.default_rng(4)
    for _ in range(10):
        p = random_pmf(rng) + 1e-3
        q = random_pmf(rng) + 1e-3
        p, q = p / p.sum(), q / q.sum()
        for idx in range(1, 9):
            full = dist.similarity(idx, p, q, eps=dist.SMOOTHING_EPS)
            half = dist.similarity(idx, p, q, eps=dist.SMOOTHING_EPS / 2)
            assert abs(full - half) < 1e-6


def test_bin_count_mismatch_rejected():
    with pytest.raises(ValueError, match="mismatch"):
        dist.similarity(1, np.ones(4) / 4, np.ones(8) / 8)


def test_accepts_pmf_histograms():
    a = pmf.estimate_pmf(np.array([-0.5, 0.5]), 16)
    b = pmf.estimate_pmf(np.array([0.25, 0.5]), 16)
    assert dist.similarity(4, a, b) == pytest.approx(0.5)


def test_cdf():
    assert np.allclose(dist.cdf(np.array([1.0, 0.0])), [1.0, 1.0])
    assert np.allclose(dist.cdf(np.array([0.25, 0.25, 0.5])), [0.25, 0.5, 1.0])
    B = 32
    uniform = np.full(B, 1.0 / B)
    assert np.allclose(dist.cdf(uniform), (np.arange(B) + 1) / B)
    rng = np.random.default_rng(5)
    c = dist.cdf(random_pmf(rng))
    assert np.all(np.diff(c) >= -1e-15)
    assert c[-1] == pytest.approx(1.0, abs=1e-12)


def test_measure_lookup():
    assert dist.get_measure(7).name == "kl_divergence"
    assert dist.get_measure("hellinger").index == 3
    with pytest.raises(ValueError):
        dist.get_measure(9)
    with pytest.raises(ValueError):
        dist.get_measure("euclid")
