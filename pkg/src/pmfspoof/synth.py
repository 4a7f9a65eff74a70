"""Deterministic synthetic corpora for desk-scale end-to-end runs.

Each class draws i.i.d. samples from an amplitude law, colors them with
a fixed first-order tilt filter, peak-normalizes to its scale, and (for
the clipped / quantized variants) applies a final clip or lattice
rounding so the class signature survives in the marginal PMF. The
"genuine" class becomes bonafide manifest lines; every other class is a
spoofing attack named by its class id. Everything derives from the
master seed through per-file substreams, so a corpus is byte-identical
across runs.
"""

import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
import scipy.signal

from .audio_io import PCM16_SCALE, SPLITS

AMPLITUDE_LAWS = (
    "laplacian",
    "gaussian",
    "uniform",
    "clipped_gaussian",
    "quantized_gaussian",
)

CLIP_FRACTION = 0.4  # of the class peak scale
QUANT_STEP = 1.0 / 64.0


@dataclass(frozen=True)
class SynthClassSpec:
    class_id: str  # "genuine" or an attack id such as "A01"
    amplitude_law: str
    spectral_tilt_db_per_oct: float = 0.0
    scale: float = 0.9

    def __post_init__(self):
        if self.amplitude_law not in AMPLITUDE_LAWS:
            raise ValueError(f"unknown amplitude law {self.amplitude_law!r}")
        if not 0.0 < self.scale <= 1.0:
            raise ValueError(f"scale must be in (0, 1], got {self.scale}")


@dataclass(frozen=True)
class SynthSpec:
    classes: Sequence[SynthClassSpec]
    files_per_split: Dict[str, int]  # e.g. {"train": 200, "dev": 100}
    duration_s: float = 2.0
    sample_rate_hz: int = 16000
    seed: int = 7
    speakers_per_gender: int = 4

    def __post_init__(self):
        ids = [c.class_id for c in self.classes]
        if len(ids) != len(set(ids)):
            raise ValueError("class ids must be unique")
        for split in self.files_per_split:
            if split not in SPLITS:
                raise ValueError(f"unknown split {split!r}")


def default_spec(
    n_train: int = 200, n_dev: int = 100, duration_s: float = 2.0, seed: int = 7
) -> SynthSpec:
    """Genuine laplacian vs six attacks with distinct laws and tilts."""
    return SynthSpec(
        classes=(
            SynthClassSpec("genuine", "laplacian", 0.0),
            SynthClassSpec("A01", "gaussian", 0.0),
            SynthClassSpec("A02", "gaussian", 4.0),
            SynthClassSpec("A03", "uniform", -4.0),
            SynthClassSpec("A04", "clipped_gaussian", 2.0),
            SynthClassSpec("A05", "quantized_gaussian", -2.0),
            SynthClassSpec("A06", "uniform", 6.0),
        ),
        files_per_split={"train": n_train, "dev": n_dev},
        duration_s=duration_s,
        seed=seed,
    )


def _draw_law(rng: np.random.Generator, law: str, n: int) -> np.ndarray:
    if law == "laplacian":
        return rng.laplace(0.0, 1.0 / np.sqrt(2.0), n)
    if law == "uniform":
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), n)
    # the gaussian variants share the base draw; clip/quantize happens
    # after tilt and normalization so the signature stays sharp
    return rng.standard_normal(n)


def _tilt_filter(x: np.ndarray, tilt_db_per_oct: float) -> np.ndarray:
    if tilt_db_per_oct > 0.0:
        p = min(1.0, tilt_db_per_oct / 6.0)
        return scipy.signal.lfilter([1.0, -p], [1.0], x)
    if tilt_db_per_oct < 0.0:
        q = min(0.95, -tilt_db_per_oct / (-tilt_db_per_oct + 6.0))
        return scipy.signal.lfilter([1.0 - q], [1.0, -q], x)
    return x


def render_class_samples(spec: SynthClassSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    x = _draw_law(rng, spec.amplitude_law, n)
    x = _tilt_filter(x, spec.spectral_tilt_db_per_oct)
    peak = np.max(np.abs(x))
    x = spec.scale * x / peak
    if spec.amplitude_law == "clipped_gaussian":
        bound = CLIP_FRACTION * spec.scale
        x = np.clip(x, -bound, bound)
    elif spec.amplitude_law == "quantized_gaussian":
        x = np.round(x / QUANT_STEP) * QUANT_STEP
    return x


def write_wav(path, samples: np.ndarray, sample_rate_hz: int) -> None:
    """Write float samples in [-1, 1] as PCM16 mono."""
    values = np.clip(np.round(np.asarray(samples) * PCM16_SCALE), -32768, 32767)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate_hz)
        wf.writeframes(values.astype("<i2").tobytes())


SPLIT_TAGS = {"train": "T", "dev": "D", "eval": "E"}


def generate(spec: SynthSpec, out_dir) -> Dict[str, Path]:
    """Write the corpus and return its artifact paths.

    Produces wav/ with the audio, one manifest per split, and a
    speaker-gender map. Speakers alternate genders per file so every
    (gender, class) bucket is populated.
    """
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)
    n_samples = int(round(spec.duration_s * spec.sample_rate_hz))

    speakers = []
    for g, tag in (("female", "F"), ("male", "M")):
        for k in range(spec.speakers_per_gender):
            speakers.append((f"SYN_{tag}{k:02d}", g))

    gender_map_path = out_dir / "gender_map.txt"
    gender_map_path.write_text(
        "".join(f"{sid} {'F' if g == 'female' else 'M'}\n" for sid, g in speakers)
    )

    paths: Dict[str, Path] = {"gender_map": gender_map_path, "audio_dir": wav_dir}
    active = [s for s in SPLITS if spec.files_per_split.get(s, 0) > 0]
    for split_idx, split in enumerate(active):
        count = spec.files_per_split[split]
        lines: List[str] = []
        for class_idx, cls in enumerate(spec.classes):
            for i in range(count):
                rng = np.random.default_rng(
                    [spec.seed, split_idx, class_idx, i]
                )
                samples = render_class_samples(cls, rng, n_samples)
                file_id = f"SYN_{SPLIT_TAGS[split]}_{cls.class_id}_{i:04d}"
                write_wav(wav_dir / f"{file_id}.wav", samples, spec.sample_rate_hz)
                speaker_id, _ = speakers[(2 * i + class_idx) % len(speakers)]
                if cls.class_id == "genuine":
                    lines.append(f"{speaker_id} {file_id} - - bonafide")
                else:
                    lines.append(f"{speaker_id} {file_id} - {cls.class_id} spoof")
        manifest = out_dir / f"{split}.txt"
        manifest.write_text("".join(line + "\n" for line in lines))
        paths[split] = manifest
    return paths
