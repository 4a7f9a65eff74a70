"""The eight PMF similarity/distance measures, indexed 1-8.

Measures 2 (normalized cross correlation) and 4 (histogram intersection)
grow with similarity; the rest are distances. The mixed polarity is kept
as-is because downstream features subtract the same measure evaluated
against two models, so polarity is consistent within each feature
dimension.

KL-type measures use additive smoothing so every measure is finite on
histograms with empty bins.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .pmf import PmfHistogram

SMOOTHING_EPS = 1e-10


def _probs(p) -> np.ndarray:
    if isinstance(p, PmfHistogram):
        return p.probabilities
    return np.asarray(p, dtype=np.float64)


def _smooth(p: np.ndarray, eps: float) -> np.ndarray:
    # (x + eps) / (1 + B*eps) keeps the vector normalized and positive
    return (p + eps) / (1.0 + p.size * eps)


def _kl_raw(p: np.ndarray, q: np.ndarray) -> float:
    # 0*ln(0) = 0; caller guarantees q > 0 wherever p > 0
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def quadratic_chi(p, q, eps: float = SMOOTHING_EPS) -> float:
    p, q = _probs(p), _probs(q)
    num = (p - q) ** 2
    den = p + q
    mask = den > 0.0
    return float(0.5 * np.sum(num[mask] / den[mask]))


def normalized_cross_correlation(p, q, eps: float = SMOOTHING_EPS) -> float:
    p, q = _probs(p), _probs(q)
    return float(np.dot(p, q) / (np.linalg.norm(p) * np.linalg.norm(q)))


def hellinger(p, q, eps: float = SMOOTHING_EPS) -> float:
    # 0.5 * sum((sqrt(p) - sqrt(q))^2) equals 1 - sum(sqrt(p*q)) for
    # normalized inputs but avoids the cancellation of the latter
    p, q = _probs(p), _probs(q)
    h2 = 0.5 * float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))
    return float(np.sqrt(min(max(h2, 0.0), 1.0)))


def histogram_intersection(p, q, eps: float = SMOOTHING_EPS) -> float:
    p, q = _probs(p), _probs(q)
    return float(np.sum(np.minimum(p, q)))


def jensen_shannon(p, q, eps: float = SMOOTHING_EPS) -> float:
    p, q = _probs(p), _probs(q)
    m = 0.5 * (p + q)
    return 0.5 * _kl_raw(p, m) + 0.5 * _kl_raw(q, m)


def symmetric_kl(p, q, eps: float = SMOOTHING_EPS) -> float:
    return kl_divergence(p, q, eps) + kl_divergence(q, p, eps)


def kl_divergence(p, q, eps: float = SMOOTHING_EPS) -> float:
    p, q = _probs(p), _probs(q)
    ps, qs = _smooth(p, eps), _smooth(q, eps)
    return float(np.sum(ps * np.log(ps / qs)))


def modified_ks(p, q, eps: float = SMOOTHING_EPS) -> float:
    """Sup-norm distance between the binned CDFs (two-sample KS statistic)."""
    p, q = _probs(p), _probs(q)
    return float(np.max(np.abs(np.cumsum(p) - np.cumsum(q))))


@dataclass(frozen=True)
class Measure:
    index: int
    name: str
    func: Callable
    similarity: bool  # True when larger means more alike


MEASURES = (
    Measure(1, "quadratic_chi", quadratic_chi, False),
    Measure(2, "normalized_cross_correlation", normalized_cross_correlation, True),
    Measure(3, "hellinger", hellinger, False),
    Measure(4, "histogram_intersection", histogram_intersection, True),
    Measure(5, "jensen_shannon", jensen_shannon, False),
    Measure(6, "symmetric_kl", symmetric_kl, False),
    Measure(7, "kl_divergence", kl_divergence, False),
    Measure(8, "modified_ks", modified_ks, False),
)

_BY_INDEX = {m.index: m for m in MEASURES}
_BY_NAME = {m.name: m for m in MEASURES}


def get_measure(key) -> Measure:
    """Look up a measure by 1-based index, name, or Measure instance."""
    if isinstance(key, Measure):
        return key
    if isinstance(key, (int, np.integer)):
        try:
            return _BY_INDEX[int(key)]
        except KeyError:
            raise ValueError(f"measure index out of range 1-8: {key}") from None
    try:
        return _BY_NAME[str(key)]
    except KeyError:
        raise ValueError(f"unknown measure name: {key!r}") from None


def similarity(measure, p, q, eps: float = SMOOTHING_EPS) -> float:
    """Evaluate one of the eight measures between two PMFs.

    Accepts PmfHistogram objects or plain probability vectors; the two
    must share a bin count.
    """
    m = get_measure(measure)
    pv, qv = _probs(p), _probs(q)
    if pv.size != qv.size:
        raise ValueError(f"bin count mismatch: {pv.size} != {qv.size}")
    return m.func(pv, qv, eps)


def cdf(p) -> np.ndarray:
    """Running prefix sum of a PMF; non-decreasing, ends at 1."""
    return np.cumsum(_probs(p))
