"""Per-utterance feature vectors from PMF similarity against global models.

Each coordinate is s = d(p_input, model_spoofed) - d(p_input,
model_genuine) for one (bank, channel, measure) triple. Layout order:
banks in config order, channels ascending within a bank, measures in
their 1-8 index order within a channel. The shipped "reduced-2019"
preset keeps the 5 low channels of each bank with measures 1-5 for the
gammatone bank and 1,2,3,5,6 for the inverse bank.
"""

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import distances, filterbank, pmf
from .audio_io import UtteranceRecord, Waveform, audio_path, read_wav
from .errors import ConfigError, DataError
from .models import SpeakerModelSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BankSelection:
    """Channel and measure subset for one bank, in feature-layout order."""

    kind: str
    channels: Tuple[int, ...]  # strictly increasing, 1-based
    measures: Tuple[int, ...]  # strictly increasing, 1-8

    def __post_init__(self):
        if not self.channels or not self.measures:
            raise ValueError("channel and measure subsets must be non-empty")
        if list(self.channels) != sorted(set(self.channels)):
            raise ValueError(f"channels must be strictly increasing: {self.channels}")
        if list(self.measures) != sorted(set(self.measures)):
            raise ValueError(f"measures must be strictly increasing: {self.measures}")
        for m in self.measures:
            distances.get_measure(m)


@dataclass(frozen=True)
class FeatureConfig:
    banks: Tuple[BankSelection, ...]
    gender_split: bool = True

    @property
    def dim(self) -> int:
        return sum(len(b.channels) * len(b.measures) for b in self.banks)

    def layout(self) -> List[Tuple[str, int, int]]:
        """(bank kind, channel, measure) triple for every coordinate."""
        out = []
        for sel in self.banks:
            for ch in sel.channels:
                for m in sel.measures:
                    out.append((sel.kind, ch, m))
        return out


def full_config(bank_specs: Sequence[filterbank.BankSpec], gender_split: bool = True) -> FeatureConfig:
    """All channels of every bank crossed with all eight measures."""
    sels = tuple(
        BankSelection(b.kind, tuple(range(1, b.n_channels + 1)), tuple(range(1, 9)))
        for b in bank_specs
    )
    return FeatureConfig(banks=sels, gender_split=gender_split)


def reduced_2019_config(gender_split: bool = True) -> FeatureConfig:
    """Five low channels per bank; measures 1-5 (gammatone), 1,2,3,5,6 (inverse)."""
    return FeatureConfig(
        banks=(
            BankSelection("gammatone", (1, 2, 3, 4, 5), (1, 2, 3, 4, 5)),
            BankSelection("inverse_gammatone", (1, 2, 3, 4, 5), (1, 2, 3, 5, 6)),
        ),
        gender_split=gender_split,
    )


def config_from_preset(
    preset: str,
    bank_specs: Sequence[filterbank.BankSpec],
    gender_split: bool = True,
    custom: Optional[Sequence[BankSelection]] = None,
) -> FeatureConfig:
    if preset == "full":
        return full_config(bank_specs, gender_split)
    if preset == "reduced-2019":
        cfg = reduced_2019_config(gender_split)
        kinds = {b.kind for b in bank_specs}
        missing = {s.kind for s in cfg.banks} - kinds
        if missing:
            raise ConfigError(
                f"reduced-2019 preset needs banks {sorted(missing)} in the pipeline config"
            )
        return cfg
    if preset == "custom":
        if not custom:
            raise ConfigError("custom feature preset requires explicit bank selections")
        return FeatureConfig(banks=tuple(custom), gender_split=gender_split)
    raise ConfigError(f"unknown feature preset {preset!r}")


@dataclass
class FeatureVector:
    values: np.ndarray
    layout: List[Tuple[str, int, int]]
    file_id: str
    gender: str
    label: str
    attack_id: Optional[str]


def _model_bucket(ms: SpeakerModelSet, gender: str) -> str:
    if ms.gender_split:
        return gender
    return "all"


def extract(
    record: UtteranceRecord,
    w: Waveform,
    ms: SpeakerModelSet,
    cfg: FeatureConfig,
    banks: Optional[dict] = None,
) -> FeatureVector:
    """Extract one feature vector.

    Input-channel PMFs are estimated on the model set's bin grid, so the
    model set should already be merged to the distance bin count.
    `banks` may carry pre-designed FilterBank realizations keyed by kind
    to avoid re-designing per call.
    """
    if banks is None:
        banks = design_banks(ms)
    bucket = _model_bucket(ms, record.gender)
    values = []
    for sel in cfg.banks:
        if sel.kind not in banks:
            raise DataError(f"model set has no {sel.kind!r} bank")
        bank = banks[sel.kind]
        for ch in sel.channels:
            if ch > bank.n_channels:
                raise DataError(
                    f"channel {ch} not covered by {sel.kind} bank "
                    f"({bank.n_channels} channels)"
                )
        filtered = filterbank.apply_channels(bank, w, sel.channels)
        for row, ch in enumerate(sel.channels):
            key_genuine = (bucket, "genuine", sel.kind, ch)
            key_spoofed = (bucket, "spoofed", sel.kind, ch)
            if key_genuine not in ms.entries or key_spoofed not in ms.entries:
                raise DataError(
                    f"model set is missing bucket {bucket}/{sel.kind}/channel {ch}"
                )
            p_in = pmf.estimate_pmf(filtered[row], ms.bin_count)
            p_gen = ms.entries[key_genuine]
            p_spf = ms.entries[key_spoofed]
            for m in sel.measures:
                s = distances.similarity(m, p_in, p_spf) - distances.similarity(
                    m, p_in, p_gen
                )
                values.append(s)
    return FeatureVector(
        values=np.array(values),
        layout=cfg.layout(),
        file_id=record.file_id,
        gender=record.gender,
        label=record.label,
        attack_id=record.attack_id,
    )


def design_banks(ms: SpeakerModelSet) -> dict:
    return {b.kind: filterbank.design_bank(b, ms.sample_rate_hz) for b in ms.banks}


def extract_batch(
    records: Sequence[UtteranceRecord],
    audio_dir,
    ms: SpeakerModelSet,
    cfg: FeatureConfig,
    lenient: bool = False,
) -> Tuple[np.ndarray, List[UtteranceRecord]]:
    """Extract features for a list of records, preserving row order.

    In strict mode any per-file failure aborts the batch after all files
    have been attempted; in lenient mode failing files are skipped with
    a warning.
    """
    banks = design_banks(ms)
    rows: List[np.ndarray] = []
    kept: List[UtteranceRecord] = []
    failures: List[str] = []
    for record in records:
        try:
            w = read_wav(audio_path(audio_dir, record.file_id), expected_rate=ms.sample_rate_hz)
            fv = extract(record, w, ms, cfg, banks=banks)
        except DataError as exc:
            failures.append(str(exc))
            if lenient:
                logger.warning("skipping %s: %s", record.file_id, exc)
                continue
            else:
                continue  # keep collecting so the error report is complete
        rows.append(fv.values)
        kept.append(record)
    if failures and not lenient:
        raise DataError(
            f"{len(failures)} of {len(records)} files failed feature extraction:\n"
            + "\n".join(failures)
        )
    matrix = np.vstack(rows) if rows else np.empty((0, cfg.dim))
    return matrix, kept


def fit_standardizer(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-coordinate mean/std over a training matrix (std floored at 1e-12)."""
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    return mean, np.maximum(std, 1e-12)


def apply_standardizer(matrix: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return (matrix - mean) / std


def save_standardizer(path, mean: np.ndarray, std: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps({"mean": list(map(float, mean)), "std": list(map(float, std))})
    )


def load_standardizer(path) -> Tuple[np.ndarray, np.ndarray]:
    d = json.loads(Path(path).read_text())
    return np.array(d["mean"]), np.array(d["std"])


def _attack_str(attack_id: Optional[str]) -> str:
    return attack_id if attack_id is not None else "None"


def write_features_csv(path, records: Sequence, matrix: np.ndarray) -> None:
    """CSV with header file_id,gender,label,attack,f_000..f_D-1 at full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dim = matrix.shape[1] if matrix.size else 0
    width = max(3, len(str(max(dim - 1, 0))))
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["file_id", "gender", "label", "attack"]
            + [f"f_{i:0{width}d}" for i in range(dim)]
        )
        for record, row in zip(records, matrix):
            writer.writerow(
                [record.file_id, record.gender, record.label, _attack_str(record.attack_id)]
                + [repr(float(v)) for v in row]
            )


@dataclass(frozen=True)
class TrialMeta:
    """Row identity carried alongside feature/embedding matrices."""

    file_id: str
    gender: str
    label: str
    attack_id: Optional[str]


def read_features_csv(path) -> Tuple[List[TrialMeta], np.ndarray]:
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header or header[:4] != ["file_id", "gender", "label", "attack"]:
            raise DataError(f"{path}: not a feature CSV (bad header)")
        metas: List[TrialMeta] = []
        rows: List[List[float]] = []
        for line in reader:
            if not line:
                continue
            attack = None if line[3] == "None" else line[3]
            metas.append(TrialMeta(line[0], line[1], line[2], attack))
            rows.append([float(v) for v in line[4:]])
    matrix = np.array(rows) if rows else np.empty((0, max(0, len(header) - 4)))
    return metas, matrix
