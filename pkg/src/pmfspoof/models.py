"""Global genuine/spoofed PMF models per gender, filter bank, and channel.

A model is the PMF pooled over every matching training file's filtered
channel, accumulated with exact integer counts so the build is
order-independent and longer files contribute proportionally (the model
equals the PMF of the concatenated sample stream).
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import filterbank, pmf
from .audio_io import UtteranceRecord, audio_path, read_wav
from .container import load_container, read_header, save_container
from .errors import DataError

logger = logging.getLogger(__name__)

CLASSES = ("genuine", "spoofed")

ModelKey = Tuple[str, str, str, int]  # (gender, class, bank kind, channel index)


@dataclass
class SpeakerModelSet:
    entries: Dict[ModelKey, pmf.PmfHistogram]
    banks: List[filterbank.BankSpec]
    bin_count: int
    sample_rate_hz: int
    gender_split: bool

    @property
    def genders(self) -> Tuple[str, ...]:
        return ("female", "male") if self.gender_split else ("all",)

    def merge_bins(self, new_bin_count: int) -> "SpeakerModelSet":
        if new_bin_count == self.bin_count:
            return self
        merged = {k: pmf.merge_bins(h, new_bin_count) for k, h in self.entries.items()}
        return SpeakerModelSet(
            entries=merged,
            banks=self.banks,
            bin_count=new_bin_count,
            sample_rate_hz=self.sample_rate_hz,
            gender_split=self.gender_split,
        )


def _bucket_of(record: UtteranceRecord, gender_split: bool) -> str:
    return record.gender if gender_split else "all"


def build_models(
    records: Sequence[UtteranceRecord],
    audio_dir,
    banks: Sequence[filterbank.FilterBank],
    bin_count: int = pmf.DEFAULT_RAW_BINS,
    gender_split: bool = True,
) -> SpeakerModelSet:
    """Accumulate global class models from training records.

    Every (gender, class) bucket must contain at least one record; each
    bucket's model for a channel is the count-weighted PMF pooled over
    all of its files' outputs on that channel.
    """
    records = list(records)
    banks = list(banks)
    if not banks:
        raise ValueError("need at least one filter bank")
    rate = banks[0].sample_rate_hz
    genders = ("female", "male") if gender_split else ("all",)
    counts: Dict[ModelKey, np.ndarray] = {}
    n_files: Dict[Tuple[str, str], int] = {}
    for g in genders:
        for cls in CLASSES:
            n_files[(g, cls)] = 0
            for bank in banks:
                for ch in range(1, bank.n_channels + 1):
                    counts[(g, cls, bank.kind, ch)] = np.zeros(bin_count, dtype=np.int64)

    for record in records:
        bucket = _bucket_of(record, gender_split)
        if bucket not in genders:
            raise DataError(f"record {record.file_id}: unknown gender bucket {bucket!r}")
        n_files[(bucket, record.label)] += 1
        w = read_wav(audio_path(audio_dir, record.file_id), expected_rate=rate)
        for bank in banks:
            filtered = filterbank.apply(bank, w)
            for ch in range(1, bank.n_channels + 1):
                idx = pmf.bin_indices(filtered.channels[ch - 1], bin_count)
                counts[(bucket, record.label, bank.kind, ch)] += np.bincount(
                    idx, minlength=bin_count
                )

    for (g, cls), n in sorted(n_files.items()):
        if n == 0:
            raise DataError(
                f"training split has no {cls} files in gender bucket {g!r}; "
                "cannot build a global model for it"
            )

    entries = {key: pmf.pmf_from_counts(c) for key, c in counts.items()}
    logger.info(
        "built %d model PMFs from %d files (%s)",
        len(entries),
        len(records),
        ", ".join(f"{g}/{c}={n}" for (g, c), n in sorted(n_files.items())),
    )
    return SpeakerModelSet(
        entries=entries,
        banks=[b.spec for b in banks],
        bin_count=bin_count,
        sample_rate_hz=banks[0].sample_rate_hz,
        gender_split=gender_split,
    )


def _entry_name(key: ModelKey) -> str:
    g, cls, kind, ch = key
    return f"counts/{g}/{cls}/{kind}/{ch:02d}"


def save_models(ms: SpeakerModelSet, path, config_hash: str = "") -> None:
    meta = {
        "bin_count": ms.bin_count,
        "sample_rate_hz": ms.sample_rate_hz,
        "gender_split": ms.gender_split,
        "genders": list(ms.genders),
        "banks": [b.to_dict() for b in ms.banks],
        "config_hash": config_hash,
    }
    arrays = {_entry_name(k): h.counts for k, h in ms.entries.items()}
    save_container(path, "speaker_models", meta, arrays)


def load_models(path) -> SpeakerModelSet:
    meta, arrays = load_container(path, expected_kind="speaker_models")
    banks = [filterbank.BankSpec.from_dict(d) for d in meta["banks"]]
    ms = SpeakerModelSet(
        entries={},
        banks=banks,
        bin_count=int(meta["bin_count"]),
        sample_rate_hz=int(meta["sample_rate_hz"]),
        gender_split=bool(meta["gender_split"]),
    )
    for g in ms.genders:
        for cls in CLASSES:
            for bank in banks:
                for ch in range(1, bank.n_channels + 1):
                    key = (g, cls, bank.kind, ch)
                    name = _entry_name(key)
                    if name not in arrays:
                        raise DataError(
                            f"{path}: model file is missing bucket "
                            f"{g}/{cls}/{bank.kind}/channel {ch}"
                        )
                    ms.entries[key] = pmf.pmf_from_counts(arrays[name])
    return ms


def model_config_hash(path) -> str:
    header = read_header(path, expected_kind="speaker_models")
    return str(header.get("meta", {}).get("config_hash", ""))
