"""EER, per-attack error rates, and DET curve points from scored trials.

Scores are spoof probabilities: a trial with score >= threshold is
called spoofed (ties count as spoof). FPR(t) is the fraction of genuine
trials at or above t, FNR(t) the fraction of spoofed trials below t.
The EER is read off at the crossing of the two stepwise curves, with
linear interpolation between the adjacent operating points when the
curves cross between thresholds; interpolating in (FPR, FNR) space
makes the EER invariant under any strictly increasing score transform.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DataError


def _split_scores(scores: np.ndarray, labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.size != labels.size:
        raise ValueError("scores and labels must have equal length")
    genuine = np.sort(scores[labels == 0])
    spoofed = np.sort(scores[labels == 1])
    if genuine.size == 0 or spoofed.size == 0:
        raise DataError("need scored trials from both classes")
    return genuine, spoofed


def _operating_points(genuine: np.ndarray, spoofed: np.ndarray):
    """FPR/FNR evaluated at every distinct score plus a sentinel above max."""
    thresholds = np.unique(np.concatenate([genuine, spoofed]))
    thresholds = np.append(thresholds, thresholds[-1] + 1.0)
    fpr = (genuine.size - np.searchsorted(genuine, thresholds, side="left")) / genuine.size
    fnr = np.searchsorted(spoofed, thresholds, side="left") / spoofed.size
    return thresholds, fpr, fnr


def compute_eer(scores: np.ndarray, labels: np.ndarray) -> Tuple[float, float]:
    """Equal error rate (as a fraction in [0, 1]) and its threshold.

    Sweeps all distinct thresholds; at the first sign change of
    FPR - FNR the crossing value is found by linear interpolation
    between the two adjacent operating points.
    """
    genuine, spoofed = _split_scores(scores, labels)
    thresholds, fpr, fnr = _operating_points(genuine, spoofed)
    diff = fpr - fnr
    # diff starts at +1 (threshold = min score) and ends at -1 (sentinel)
    j = int(np.argmax(diff <= 0.0))
    if diff[j] == 0.0:
        return float(fpr[j]), float(thresholds[j])
    d_prev, d_next = diff[j - 1], diff[j]
    frac = d_prev / (d_prev - d_next)
    eer = fpr[j - 1] + frac * (fpr[j] - fpr[j - 1])
    threshold = thresholds[j - 1] + frac * (thresholds[j] - thresholds[j - 1])
    return float(eer), float(threshold)


def per_attack_error(
    scores: np.ndarray,
    labels: np.ndarray,
    attacks: Sequence[Optional[str]],
    threshold: float,
) -> Dict[str, float]:
    """Error percentage per bucket at a fixed threshold.

    The genuine bucket (key "None") counts trials called spoof; each
    attack bucket counts its trials called genuine.
    """
    if not np.isfinite(threshold):
        raise ValueError(f"threshold must be finite, got {threshold}")
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    attacks = list(attacks)
    out: Dict[str, float] = {}
    gen_mask = labels == 0
    if gen_mask.any():
        out["None"] = 100.0 * float(np.mean(scores[gen_mask] >= threshold))
    for attack in sorted({a for a, l in zip(attacks, labels) if l == 1 and a is not None}):
        mask = np.array([l == 1 and a == attack for a, l in zip(attacks, labels)])
        out[attack] = 100.0 * float(np.mean(scores[mask] < threshold))
    return out


def det_points(scores: np.ndarray, labels: np.ndarray) -> List[Tuple[float, float]]:
    """(FPR, FNR) at each distinct threshold, endpoints included."""
    genuine, spoofed = _split_scores(scores, labels)
    _, fpr, fnr = _operating_points(genuine, spoofed)
    return [(float(a), float(b)) for a, b in zip(fpr, fnr)]


@dataclass
class EvalReport:
    eer_percent: float
    threshold_at_eer: float
    per_attack_errors: Dict[str, float]  # percent; "None" = genuine bucket
    det_points: List[Tuple[float, float]]
    gender: str
    split: str

    def to_dict(self) -> dict:
        return {
            "eer_percent": self.eer_percent,
            "threshold_at_eer": self.threshold_at_eer,
            "per_attack_errors": self.per_attack_errors,
            "gender": self.gender,
            "split": self.split,
        }


def evaluate(
    scores: np.ndarray,
    labels: np.ndarray,
    attacks: Sequence[Optional[str]],
    gender: str,
    split: str,
) -> EvalReport:
    """Full report for one (gender, split) bucket at its own EER threshold."""
    eer, threshold = compute_eer(scores, labels)
    return EvalReport(
        eer_percent=100.0 * eer,
        threshold_at_eer=threshold,
        per_attack_errors=per_attack_error(scores, labels, attacks, threshold),
        det_points=det_points(scores, labels),
        gender=gender,
        split=split,
    )


def write_det_csv(path, points: Sequence[Tuple[float, float]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["fpr", "fnr"])
        for fpr, fnr in points:
            writer.writerow([repr(float(fpr)), repr(float(fnr))])


def write_scores_csv(path, metas, scores: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["file_id", "label", "attack", "score"])
        for meta, s in zip(metas, scores):
            attack = meta.attack_id if meta.attack_id is not None else "None"
            writer.writerow([meta.file_id, meta.label, attack, repr(float(s))])


def write_report_tables(out_dir, reports: Sequence[EvalReport]) -> None:
    """Summary JSON plus per-attack CSV tables.

    One table covers the train/dev splits, a second covers eval; rows
    are attack buckets ("None" first), columns one per (split, gender).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary: Dict[str, dict] = {}
    for r in sorted(reports, key=lambda r: (r.gender, r.split)):
        summary.setdefault(r.gender, {})[r.split] = r.to_dict()
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))

    split_order = {"train": 0, "dev": 1, "eval": 2}
    for table_name, splits in (("train_dev", ("train", "dev")), ("eval", ("eval",))):
        subset = [r for r in reports if r.split in splits]
        if not subset:
            continue
        columns = sorted(
            {(r.split, r.gender) for r in subset},
            key=lambda c: (split_order.get(c[0], 9), c[1]),
        )
        attacks: List[str] = []
        for r in subset:
            for a in r.per_attack_errors:
                if a not in attacks:
                    attacks.append(a)
        attacks.sort(key=lambda a: (a != "None", a))
        by_col = {(r.split, r.gender): r for r in subset}
        with open(out_dir / f"{table_name}.csv", "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["attack"] + [f"{s}_{g}" for s, g in columns])
            for a in attacks:
                row = [a]
                for col in columns:
                    err = by_col[col].per_attack_errors.get(a)
                    row.append("" if err is None else f"{err:.2f}")
                writer.writerow(row)
