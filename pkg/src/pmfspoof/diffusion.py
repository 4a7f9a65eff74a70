"""Diffusion-map embedding with Nystrom out-of-sample extension.

Construction: a Gaussian kernel k(x, y) = exp(-||x - y||^2 / epsilon) is
row-normalized by the node degrees into a Markov transition matrix P.
Eigenpairs come from the symmetric conjugate S = D^(-1/2) K D^(-1/2),
which shares eigenvalues with P; right eigenvectors are recovered as
psi = D^(-1/2) v and scaled to be orthonormal in L2 of the stationary
distribution. Under that scaling psi_0 is the all-ones vector and the
squared diffusion distance at time t equals
sum_k lambda_k^(2t) (psi_k(x_i) - psi_k(x_j))^2 over the full spectrum,
so truncating at K components makes the embedding's Euclidean distance
approximate the diffusion distance.

A point outside the fitted set is embedded by extending each
eigenvector: psi_k(x') = (1/lambda_k) * sum_y p(x', y) psi_k(y) with
p(x', y) the kernel row of x' normalized over the reference points.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .container import load_container, save_container
from .errors import NumericError

logger = logging.getLogger(__name__)

EPSILON_SUBSAMPLE_LIMIT = 2000
MIN_EXTENSION_EIGENVALUE = 1e-10


@dataclass
class DiffusionModel:
    points: np.ndarray  # (N, D) reference points
    epsilon: float
    t: int
    n_components: int  # K
    eigenvalues: np.ndarray  # (K+1,) descending magnitude, eigenvalues[0] = 1
    psi: np.ndarray  # (N, K+1) right eigenvectors, psi[:, 0] constant
    degrees: np.ndarray  # (N,) kernel row sums


@dataclass
class Embedding:
    coordinates: np.ndarray  # (N, K); column k-1 is lambda_k^t * psi_k
    t: int
    n_components: int


def select_epsilon(points: np.ndarray, max_points: int = EPSILON_SUBSAMPLE_LIMIT, seed: int = 0) -> float:
    """Median of squared pairwise distances over a bounded subsample.

    Deterministic for a fixed seed; raises NumericError when the scale
    degenerates to zero (all points identical).
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise ValueError("epsilon selection needs at least 2 points")
    if x.shape[0] > max_points:
        rng = np.random.default_rng(seed)
        idx = rng.choice(x.shape[0], size=max_points, replace=False)
        x = x[np.sort(idx)]
    eps = float(np.median(pdist(x, "sqeuclidean")))
    if eps <= 0.0:
        raise NumericError(
            "degenerate kernel scale: median pairwise distance is zero "
            "(points are identical)"
        )
    return eps


def fit(points: np.ndarray, n_components: int, epsilon: float, t: int = 1) -> DiffusionModel:
    """Fit the kernel Markov matrix and retain the top K+1 eigenpairs."""
    x = np.ascontiguousarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n = x.shape[0]
    if n_components < 1:
        raise ValueError("n_components must be >= 1")
    if n < n_components + 1:
        raise ValueError(
            f"need at least K+1 = {n_components + 1} points, got {n}"
        )
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if t < 1:
        raise ValueError(f"diffusion time must be a positive integer, got {t}")

    kernel = np.exp(-cdist(x, x, "sqeuclidean") / epsilon)
    degrees = kernel.sum(axis=1)
    if np.any(degrees <= 0.0) or not np.all(np.isfinite(degrees)):
        raise NumericError(
            "vanishing node degree in the kernel matrix; increase epsilon"
        )

    inv_sqrt_deg = 1.0 / np.sqrt(degrees)
    sym = kernel * inv_sqrt_deg[:, None] * inv_sqrt_deg[None, :]
    sym = 0.5 * (sym + sym.T)  # remove rounding asymmetry
    eigvals, eigvecs = np.linalg.eigh(sym)
    order = np.argsort(-np.abs(eigvals), kind="stable")[: n_components + 1]
    lam = eigvals[order]
    vecs = eigvecs[:, order]

    # scale so that sum_i phi0(i) * psi_k(i)^2 = 1, making the
    # full-spectrum diffusion-distance identity hold exactly
    psi = vecs * inv_sqrt_deg[:, None] * np.sqrt(degrees.sum())
    for k in range(psi.shape[1]):
        pivot = np.argmax(np.abs(psi[:, k]))
        if psi[pivot, k] < 0.0:
            psi[:, k] = -psi[:, k]
    return DiffusionModel(
        points=x,
        epsilon=float(epsilon),
        t=int(t),
        n_components=int(n_components),
        eigenvalues=lam,
        psi=psi,
        degrees=degrees,
    )


def embed(model: DiffusionModel) -> Embedding:
    """In-sample embedding: column k is lambda_k^t * psi_k, k = 1..K."""
    lam_t = model.eigenvalues[1:] ** model.t
    coords = model.psi[:, 1:] * lam_t[None, :]
    return Embedding(coordinates=coords, t=model.t, n_components=model.n_components)


def extend(model: DiffusionModel, x_new: np.ndarray) -> np.ndarray:
    """Nystrom extension of the embedding to out-of-sample points.

    Accepts a single D-vector or an (M, D) matrix; returns coordinates
    with matching leading shape.
    """
    x = np.asarray(x_new, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.points.shape[1]:
        raise ValueError(
            f"dimension mismatch: points have {x.shape[1]} features, "
            f"model expects {model.points.shape[1]}"
        )
    lam = model.eigenvalues[1 : model.n_components + 1]
    small = np.abs(lam) < MIN_EXTENSION_EIGENVALUE
    if np.any(small):
        k_bad = int(np.nonzero(small)[0][0]) + 1
        raise NumericError(
            f"eigenvalue {k_bad} is numerically zero; reduce the embedding "
            f"dimension below {k_bad}"
        )
    kernel = np.exp(-cdist(x, model.points, "sqeuclidean") / model.epsilon)
    mass = kernel.sum(axis=1)
    if np.any(mass <= 0.0):
        raise NumericError(
            "a point has zero kernel mass to every reference point; "
            "increase epsilon"
        )
    transition = kernel / mass[:, None]
    # contiguous copy keeps the BLAS path (and thus the exact floating
    # point result) independent of the parent array's memory layout
    psi_block = np.ascontiguousarray(model.psi[:, 1 : model.n_components + 1])
    psi_new = (transition @ psi_block) / lam[None, :]
    coords = psi_new * (lam ** model.t)[None, :]
    return coords[0] if single else coords


def subsample_training(
    labels: Sequence[str],
    attacks: Sequence,
    per_attack: int,
    genuine_count: int,
    seed: int,
) -> np.ndarray:
    """Pick a per-bucket random subset of row indices, without replacement.

    Buckets are the genuine rows plus one bucket per attack id. A bucket
    smaller than its requested count is taken whole (with a warning).
    Returns sorted indices; deterministic for a fixed seed.
    """
    labels = list(labels)
    attacks = list(attacks)
    if len(labels) != len(attacks):
        raise ValueError("labels and attacks must have equal length")
    rng = np.random.default_rng(seed)
    buckets = [("genuine", None, genuine_count)]
    for attack in sorted({a for a in attacks if a is not None}):
        buckets.append(("spoofed", attack, per_attack))
    chosen = []
    for label, attack, want in buckets:
        idx = np.array(
            [
                i
                for i, (l, a) in enumerate(zip(labels, attacks))
                if l == label and a == attack
            ],
            dtype=np.int64,
        )
        if idx.size == 0:
            continue
        if idx.size <= want:
            if idx.size < want:
                logger.warning(
                    "bucket %s has only %d rows (requested %d); taking all",
                    attack or "genuine",
                    idx.size,
                    want,
                )
            chosen.append(idx)
        else:
            pick = rng.choice(idx.size, size=want, replace=False)
            chosen.append(idx[np.sort(pick)])
    return np.sort(np.concatenate(chosen))


def save_diffusion(model: DiffusionModel, path, meta: dict = None) -> None:
    merged = {"epsilon": model.epsilon, "t": model.t, "k": model.n_components}
    merged.update(meta or {})
    save_container(
        path,
        "diffusion_model",
        merged,
        {
            "points": model.points,
            "eigenvalues": model.eigenvalues,
            "psi": model.psi,
            "degrees": model.degrees,
        },
    )


def load_diffusion(path) -> DiffusionModel:
    meta, arrays = load_container(path, expected_kind="diffusion_model")
    return DiffusionModel(
        points=arrays["points"],
        epsilon=float(meta["epsilon"]),
        t=int(meta["t"]),
        n_components=int(meta["k"]),
        eigenvalues=arrays["eigenvalues"],
        psi=arrays["psi"],
        degrees=arrays["degrees"],
    )


def write_embeddings_csv(path, metas, coords: np.ndarray) -> None:
    """CSV with header file_id,gender,label,attack,dm_1..dm_K."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    k = coords.shape[1] if coords.size else 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["file_id", "gender", "label", "attack"] + [f"dm_{i}" for i in range(1, k + 1)]
        )
        for meta, row in zip(metas, coords):
            attack = meta.attack_id if meta.attack_id is not None else "None"
            writer.writerow(
                [meta.file_id, meta.gender, meta.label, attack]
                + [repr(float(v)) for v in row]
            )


def read_embeddings_csv(path):
    """Returns (trial metas, coordinate matrix); format mirrors the writer."""
    from .features import read_features_csv

    return read_features_csv(path)
