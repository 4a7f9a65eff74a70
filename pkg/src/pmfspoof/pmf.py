"""Amplitude PMF estimation on a fixed bin grid over [-1, 1].

The PMF of a sample sequence is its normalized histogram. Sixteen-bit
audio dictates 2**16 natural bins; filtered channels reuse the same grid
with out-of-range values clipped into the boundary bins. Counts are kept
as 64-bit integers so corpus-scale accumulation stays exact.
"""

from dataclasses import dataclass

import numpy as np

DEFAULT_RAW_BINS = 65536
DEFAULT_DISTANCE_BINS = 4096

SUPPORT = (-1.0, 1.0)


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass
class PmfHistogram:
    """Fixed-bin amplitude histogram with exact integer counts."""

    counts: np.ndarray  # int64, shape (bin_count,)
    bin_count: int
    total_samples: int
    probabilities: np.ndarray  # float64, sums to 1


def pmf_from_counts(counts: np.ndarray) -> PmfHistogram:
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1:
        raise ValueError("counts must be one-dimensional")
    bin_count = int(counts.size)
    if not _is_power_of_two(bin_count):
        raise ValueError(f"bin count must be a power of two >= 2, got {bin_count}")
    if np.any(counts < 0):
        raise ValueError("negative bin counts")
    total = int(counts.sum())
    if total == 0:
        raise ValueError("empty histogram (zero total count)")
    return PmfHistogram(
        counts=counts,
        bin_count=bin_count,
        total_samples=total,
        probabilities=counts / float(total),
    )


def bin_indices(samples: np.ndarray, bin_count: int) -> np.ndarray:
    """Map samples to bin indices on the uniform grid over [-1, 1].

    x maps to floor((x + 1) / delta) with delta = 2 / bin_count; x = 1
    lands in the last bin and out-of-range values clip to the boundary
    bins.
    """
    x = np.asarray(samples, dtype=np.float64)
    idx = np.floor((x + 1.0) * (bin_count / 2.0)).astype(np.int64)
    return np.clip(idx, 0, bin_count - 1)


def estimate_pmf(samples: np.ndarray, bin_count: int = DEFAULT_RAW_BINS) -> PmfHistogram:
    """Estimate the amplitude PMF of a sample sequence.

    Raises ValueError on empty input or a bin count that is not a power
    of two.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("cannot estimate a PMF from an empty sample sequence")
    if not _is_power_of_two(bin_count):
        raise ValueError(f"bin count must be a power of two >= 2, got {bin_count}")
    counts = np.bincount(bin_indices(x, bin_count), minlength=bin_count)
    return pmf_from_counts(counts)


def accumulate(histograms) -> PmfHistogram:
    """Combine per-file histograms by exact bin-wise count summation.

    Equivalent to estimating the PMF of the concatenation of all the
    underlying sample sequences (count-weighted, so longer sequences
    contribute proportionally).
    """
    histograms = list(histograms)
    if not histograms:
        raise ValueError("no histograms to accumulate")
    bin_count = histograms[0].bin_count
    for h in histograms[1:]:
        if h.bin_count != bin_count:
            raise ValueError(
                f"mismatched bin counts: {h.bin_count} != {bin_count}"
            )
    counts = np.zeros(bin_count, dtype=np.int64)
    for h in histograms:
        counts += h.counts
    return pmf_from_counts(counts)


def merge_bins(hist: PmfHistogram, new_bin_count: int) -> PmfHistogram:
    """Downsample a histogram to a coarser power-of-two grid.

    Merging groups of adjacent bins is exactly equivalent to having
    binned the original samples on the coarser grid directly.
    """
    if not _is_power_of_two(new_bin_count):
        raise ValueError(f"bin count must be a power of two >= 2, got {new_bin_count}")
    if new_bin_count > hist.bin_count:
        raise ValueError(
            f"cannot merge {hist.bin_count} bins up to {new_bin_count}"
        )
    if new_bin_count == hist.bin_count:
        return hist
    factor = hist.bin_count // new_bin_count
    counts = hist.counts.reshape(new_bin_count, factor).sum(axis=1)
    return pmf_from_counts(counts)
