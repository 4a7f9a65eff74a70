"""Declarative pipeline configuration (YAML) and config hashing.

Every stage artifact records a hash of the numerics-affecting part of
the configuration; downstream stages reject artifacts whose hash does
not match the active config, so a pipeline can never silently mix
settings.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import yaml

from .audio_io import SPLITS
from .errors import ConfigError
from .features import BankSelection
from .filterbank import VALID_KINDS, BankSpec
from .pmf import DEFAULT_DISTANCE_BINS, DEFAULT_RAW_BINS
from .synth import SynthClassSpec

FEATURE_PRESETS = ("full", "reduced-2019", "custom")


@dataclass
class DataConfig:
    audio_dir: Path
    gender_map: Path
    manifests: Dict[str, Path]


@dataclass
class SynthConfig:
    n_train: int = 200
    n_dev: int = 100
    n_eval: int = 0
    duration_s: float = 2.0
    classes: Optional[List[SynthClassSpec]] = None


@dataclass
class PmfConfig:
    bin_count: int = DEFAULT_RAW_BINS
    distance_bin_count: int = DEFAULT_DISTANCE_BINS


@dataclass
class FeaturesConfig:
    preset: str = "reduced-2019"
    standardize: bool = False
    custom: Optional[List[BankSelection]] = None


@dataclass
class DiffusionConfig:
    epsilon: Optional[float] = None  # None = auto (median heuristic)
    t: int = 1
    k: Dict[str, int] = field(default_factory=lambda: {"female": 5, "male": 4, "all": 4})
    per_attack: int = 1000
    genuine: int = 1000


@dataclass
class ClassifierConfig:
    l2: float = 1e-4
    max_iters: int = 5000
    grad_tol: float = 1e-8
    balance_classes: bool = True


@dataclass
class PipelineConfig:
    workdir: Path
    banks: List[BankSpec]
    sample_rate_hz: int = 16000
    gender_split: bool = True
    seed: int = 7
    lenient: bool = False
    data: Optional[DataConfig] = None
    synth: Optional[SynthConfig] = None
    pmf: PmfConfig = field(default_factory=PmfConfig)
    features: FeaturesConfig = field(default_factory=FeaturesConfig)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    evaluation_splits: List[str] = field(default_factory=lambda: ["train", "dev"])

    def bucket_names(self):
        return ("female", "male") if self.gender_split else ("all",)

    def k_for_bucket(self, bucket: str) -> int:
        try:
            return int(self.diffusion.k[bucket])
        except KeyError:
            raise ConfigError(f"diffusion.k has no entry for bucket {bucket!r}") from None


def default_banks() -> List[BankSpec]:
    return [
        BankSpec("gammatone", 10, 0.0, 8000.0),
        BankSpec("inverse_gammatone", 10, 0.0, 8000.0),
    ]


def _require_keys(section: dict, allowed, where: str) -> None:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


def _parse_banks(raw) -> List[BankSpec]:
    banks = []
    for i, b in enumerate(raw):
        _require_keys(b, ("kind", "n_channels", "f_low_hz", "f_high_hz"), f"banks[{i}]")
        kind = b.get("kind")
        if kind not in VALID_KINDS:
            raise ConfigError(f"banks[{i}]: unknown kind {kind!r}")
        banks.append(
            BankSpec(
                kind=kind,
                n_channels=int(b.get("n_channels", 10)),
                f_low_hz=float(b.get("f_low_hz", 0.0)),
                f_high_hz=float(b.get("f_high_hz", 8000.0)),
            )
        )
    if len({b.kind for b in banks}) != len(banks):
        raise ConfigError("duplicate bank kinds in config")
    return banks


def _parse_custom_selections(raw) -> List[BankSelection]:
    out = []
    for i, sel in enumerate(raw):
        _require_keys(sel, ("kind", "channels", "measures"), f"features.custom[{i}]")
        try:
            out.append(
                BankSelection(
                    kind=sel["kind"],
                    channels=tuple(int(c) for c in sel["channels"]),
                    measures=tuple(int(m) for m in sel["measures"]),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"features.custom[{i}]: {exc}") from exc
    return out


def _parse_synth_classes(raw) -> List[SynthClassSpec]:
    out = []
    for i, c in enumerate(raw):
        _require_keys(
            c, ("class_id", "amplitude_law", "spectral_tilt_db_per_oct", "scale"), f"synth.classes[{i}]"
        )
        try:
            out.append(
                SynthClassSpec(
                    class_id=str(c["class_id"]),
                    amplitude_law=str(c["amplitude_law"]),
                    spectral_tilt_db_per_oct=float(c.get("spectral_tilt_db_per_oct", 0.0)),
                    scale=float(c.get("scale", 0.9)),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"synth.classes[{i}]: {exc}") from exc
    return out


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw: dict, base_dir: Path = Path(".")) -> PipelineConfig:
    _require_keys(
        raw,
        (
            "workdir",
            "banks",
            "sample_rate_hz",
            "gender_split",
            "seed",
            "lenient",
            "data",
            "synth",
            "pmf",
            "features",
            "diffusion",
            "classifier",
            "evaluation",
        ),
        "top-level",
    )
    if "workdir" not in raw:
        raise ConfigError("config requires a workdir")

    def respath(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base_dir / p

    data = None
    if raw.get("data") is not None:
        d = raw["data"]
        _require_keys(d, ("audio_dir", "gender_map", "manifests"), "data")
        try:
            manifests = {
                split: respath(p)
                for split, p in d["manifests"].items()
            }
        except (KeyError, TypeError, AttributeError):
            raise ConfigError("data.manifests must map split names to paths") from None
        for split in manifests:
            if split not in SPLITS:
                raise ConfigError(f"data.manifests: unknown split {split!r}")
        data = DataConfig(
            audio_dir=respath(d["audio_dir"]),
            gender_map=respath(d["gender_map"]),
            manifests=manifests,
        )

    synth = None
    if raw.get("synth") is not None:
        s = raw["synth"]
        _require_keys(
            s, ("n_train", "n_dev", "n_eval", "duration_s", "classes"), "synth"
        )
        synth = SynthConfig(
            n_train=int(s.get("n_train", 200)),
            n_dev=int(s.get("n_dev", 100)),
            n_eval=int(s.get("n_eval", 0)),
            duration_s=float(s.get("duration_s", 2.0)),
            classes=_parse_synth_classes(s["classes"]) if s.get("classes") else None,
        )

    if data is None and synth is None:
        raise ConfigError("config needs a data section or a synth section")

    pmf_raw = raw.get("pmf") or {}
    _require_keys(pmf_raw, ("bin_count", "distance_bin_count"), "pmf")
    pmf_cfg = PmfConfig(
        bin_count=int(pmf_raw.get("bin_count", DEFAULT_RAW_BINS)),
        distance_bin_count=int(pmf_raw.get("distance_bin_count", DEFAULT_DISTANCE_BINS)),
    )
    if pmf_cfg.distance_bin_count > pmf_cfg.bin_count:
        raise ConfigError("pmf.distance_bin_count cannot exceed pmf.bin_count")

    feat_raw = raw.get("features") or {}
    _require_keys(feat_raw, ("preset", "standardize", "custom"), "features")
    preset = feat_raw.get("preset", "reduced-2019")
    if preset not in FEATURE_PRESETS:
        raise ConfigError(f"features.preset must be one of {FEATURE_PRESETS}, got {preset!r}")
    features = FeaturesConfig(
        preset=preset,
        standardize=bool(feat_raw.get("standardize", False)),
        custom=_parse_custom_selections(feat_raw["custom"]) if feat_raw.get("custom") else None,
    )

    diff_raw = raw.get("diffusion") or {}
    _require_keys(diff_raw, ("epsilon", "t", "k", "per_attack", "genuine"), "diffusion")
    eps = diff_raw.get("epsilon", "auto")
    if eps in ("auto", None):
        epsilon = None
    else:
        epsilon = float(eps)
        if epsilon <= 0:
            raise ConfigError("diffusion.epsilon must be positive")
    k_raw = diff_raw.get("k", {"female": 5, "male": 4, "all": 4})
    if isinstance(k_raw, dict):
        k = {str(b): int(v) for b, v in k_raw.items()}
    else:
        k = {b: int(k_raw) for b in ("female", "male", "all")}
    if any(v < 1 for v in k.values()):
        raise ConfigError("diffusion.k entries must be >= 1")
    diffusion = DiffusionConfig(
        epsilon=epsilon,
        t=int(diff_raw.get("t", 1)),
        k=k,
        per_attack=int(diff_raw.get("per_attack", 1000)),
        genuine=int(diff_raw.get("genuine", 1000)),
    )
    if diffusion.t < 1:
        raise ConfigError("diffusion.t must be >= 1")

    clf_raw = raw.get("classifier") or {}
    _require_keys(clf_raw, ("l2", "max_iters", "grad_tol", "balance_classes"), "classifier")
    clf = ClassifierConfig(
        l2=float(clf_raw.get("l2", 1e-4)),
        max_iters=int(clf_raw.get("max_iters", 5000)),
        grad_tol=float(clf_raw.get("grad_tol", 1e-8)),
        balance_classes=bool(clf_raw.get("balance_classes", True)),
    )

    eval_raw = raw.get("evaluation") or {}
    _require_keys(eval_raw, ("splits",), "evaluation")
    splits = list(eval_raw.get("splits", ["train", "dev"]))
    for s in splits:
        if s not in SPLITS:
            raise ConfigError(f"evaluation.splits: unknown split {s!r}")

    banks = _parse_banks(raw.get("banks") or [b.to_dict() for b in default_banks()])

    cfg = PipelineConfig(
        workdir=respath(raw["workdir"]),
        banks=banks,
        sample_rate_hz=int(raw.get("sample_rate_hz", 16000)),
        gender_split=bool(raw.get("gender_split", True)),
        seed=int(raw.get("seed", 7)),
        lenient=bool(raw.get("lenient", False)),
        data=data,
        synth=synth,
        pmf=pmf_cfg,
        features=features,
        diffusion=diffusion,
        classifier=clf,
        evaluation_splits=splits,
    )
    for b in cfg.banks:
        if not (0 <= b.f_low_hz < b.f_high_hz <= cfg.sample_rate_hz / 2):
            raise ConfigError(
                f"bank {b.kind}: invalid band [{b.f_low_hz}, {b.f_high_hz}] Hz "
                f"at {cfg.sample_rate_hz} Hz"
            )
    return cfg


def config_hash(cfg: PipelineConfig) -> str:
    """Hash of everything that affects pipeline numerics (not paths)."""
    payload = {
        "banks": [b.to_dict() for b in cfg.banks],
        "sample_rate_hz": cfg.sample_rate_hz,
        "gender_split": cfg.gender_split,
        "seed": cfg.seed,
        "pmf": {
            "bin_count": cfg.pmf.bin_count,
            "distance_bin_count": cfg.pmf.distance_bin_count,
        },
        "features": {
            "preset": cfg.features.preset,
            "standardize": cfg.features.standardize,
            "custom": [
                {"kind": s.kind, "channels": list(s.channels), "measures": list(s.measures)}
                for s in (cfg.features.custom or [])
            ],
        },
        "diffusion": {
            "epsilon": cfg.diffusion.epsilon,
            "t": cfg.diffusion.t,
            "k": dict(sorted(cfg.diffusion.k.items())),
            "per_attack": cfg.diffusion.per_attack,
            "genuine": cfg.diffusion.genuine,
        },
        "classifier": {
            "l2": cfg.classifier.l2,
            "max_iters": cfg.classifier.max_iters,
            "grad_tol": cfg.classifier.grad_tol,
            "balance_classes": cfg.classifier.balance_classes,
        },
        "synth": None
        if cfg.synth is None
        else {
            "n_train": cfg.synth.n_train,
            "n_dev": cfg.synth.n_dev,
            "n_eval": cfg.synth.n_eval,
            "duration_s": cfg.synth.duration_s,
            "classes": None
            if cfg.synth.classes is None
            else [
                {
                    "class_id": c.class_id,
                    "amplitude_law": c.amplitude_law,
                    "spectral_tilt_db_per_oct": c.spectral_tilt_db_per_oct,
                    "scale": c.scale,
                }
                for c in cfg.synth.classes
            ],
        },
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
