"""WAV decoding and dataset manifest ingestion.

Audio must be RIFF/WAVE, PCM, 16-bit, mono. Integer samples are
normalized by 32768 so the full signed range maps into [-1, 1) with -1
attained, which keeps PMF bin edges exact. Anything else (multichannel,
other bit depths, compressed codecs, unexpected sample rates) is
rejected rather than silently converted.

Manifests are ASVspoof-style protocol files, one trial per line:

    speaker_id file_id - attack_or_dash key

with key in {bonafide, spoof}. Speaker gender comes from a separate
two-column map file (speaker_id F|M) since protocol files do not embed
it.
"""

import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .errors import DataError

GENDERS = ("female", "male")
LABELS = ("genuine", "spoofed")
SPLITS = ("train", "dev", "eval")

PCM16_SCALE = 32768.0


@dataclass
class Waveform:
    samples: np.ndarray  # float64 in [-1, 1]
    sample_rate_hz: int
    file_id: str


@dataclass(frozen=True)
class UtteranceRecord:
    file_id: str
    speaker_id: str
    gender: str  # "female" | "male"
    label: str  # "genuine" | "spoofed"
    attack_id: Optional[str]  # present iff spoofed
    split: str  # "train" | "dev" | "eval"


def read_wav(path, expected_rate: Optional[int] = None) -> Waveform:
    """Decode a PCM16 mono WAV file into normalized float samples."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sample_width = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            data = wf.readframes(n_frames)
    except (wave.Error, EOFError) as exc:
        raise DataError(f"{path}: not a decodable PCM WAV file ({exc})") from exc
    except OSError as exc:
        raise DataError(f"{path}: cannot read file ({exc})") from exc
    if n_channels != 1:
        raise DataError(f"{path}: expected mono audio, found {n_channels} channels")
    if sample_width != 2:
        raise DataError(
            f"{path}: expected 16-bit PCM, found {8 * sample_width}-bit samples"
        )
    if len(data) != n_frames * 2:
        raise DataError(
            f"{path}: truncated data chunk ({len(data)} bytes for {n_frames} frames)"
        )
    if n_frames == 0:
        raise DataError(f"{path}: empty audio stream")
    if expected_rate is not None and rate != expected_rate:
        raise DataError(
            f"{path}: sample rate {rate} Hz, pipeline requires {expected_rate} Hz "
            "(resampling is not performed)"
        )
    samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / PCM16_SCALE
    return Waveform(samples=samples, sample_rate_hz=rate, file_id=path.stem)


def load_gender_map(path) -> Dict[str, str]:
    """Read a two-column speaker-to-gender file (speaker_id F|M)."""
    path = Path(path)
    mapping: Dict[str, str] = {}
    tokens = {"f": "female", "female": "female", "m": "male", "male": "male"}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise DataError(f"{path}:{lineno}: expected 2 fields, found {len(fields)}")
        speaker, tok = fields
        gender = tokens.get(tok.lower())
        if gender is None:
            raise DataError(f"{path}:{lineno}: unknown gender token {tok!r}")
        mapping[speaker] = gender
    if not mapping:
        raise DataError(f"{path}: empty gender map")
    return mapping


def parse_manifest(path, gender_map: Dict[str, str], split: str) -> List[UtteranceRecord]:
    """Parse a protocol manifest into utterance records.

    One record per non-empty line; bonafide lines become genuine records
    with no attack id, spoof lines carry the attack id from field 4.
    """
    if split not in SPLITS:
        raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
    path = Path(path)
    records: List[UtteranceRecord] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 5:
            raise DataError(f"{path}:{lineno}: expected 5 fields, found {len(fields)}")
        speaker_id, file_id, _unused, attack_field, key = fields
        if speaker_id not in gender_map:
            raise DataError(
                f"{path}:{lineno}: speaker {speaker_id!r} missing from gender map"
            )
        if key == "bonafide":
            label, attack_id = "genuine", None
        elif key == "spoof":
            if attack_field == "-":
                raise DataError(f"{path}:{lineno}: spoof line without an attack id")
            label, attack_id = "spoofed", attack_field
        else:
            raise DataError(f"{path}:{lineno}: unknown key {key!r}")
        records.append(
            UtteranceRecord(
                file_id=file_id,
                speaker_id=speaker_id,
                gender=gender_map[speaker_id],
                label=label,
                attack_id=attack_id,
                split=split,
            )
        )
    if not records:
        raise DataError(f"{path}: manifest contains no trials")
    return records


def audio_path(audio_dir, file_id: str) -> Path:
    return Path(audio_dir) / f"{file_id}.wav"
