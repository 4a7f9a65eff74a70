"""Pipeline driver: staged subcommands over a declarative YAML config.

Stages write versioned artifacts into the config's work directory and
each artifact carries the config hash, so reruns with unchanged inputs
are bit-reproducible and mixing configurations is rejected. Gender
buckets run as fully independent sub-pipelines (models, diffusion map,
classifier per gender); --no-gender-split merges them into one bucket.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
failure.
"""

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

import numpy as np

from . import classifier as clf_mod
from . import diffusion, features, filterbank, metrics, models, synth
from .audio_io import SPLITS, load_gender_map, parse_manifest
from .container import read_header
from .config import PipelineConfig, config_hash, load_config
from .errors import ConfigError, DataError, NumericError, PipelineError

logger = logging.getLogger("pmfspoof")

STAGE_NAMES = (
    "synth-gen",
    "build-models",
    "extract",
    "dm-fit",
    "dm-extend",
    "train",
    "evaluate",
    "export-plots",
    "run-all",
)


class WorkPaths:
    def __init__(self, cfg: PipelineConfig):
        w = Path(cfg.workdir)
        self.workdir = w
        self.corpus = w / "corpus"
        self.models = w / "models.bin"
        self.features_dir = w / "features"
        self.standardizer = w / "features" / "standardizer.json"
        self.dm_dir = w / "dm"
        self.embeddings_dir = w / "embeddings"
        self.classifiers_dir = w / "classifiers"
        self.scores_dir = w / "scores"
        self.report_dir = w / "report"
        self.plots_export = w / "plots_export"

    def features_csv(self, split):
        return self.features_dir / f"{split}.csv"

    def dm_model(self, bucket):
        return self.dm_dir / f"{bucket}.bin"

    def embeddings_csv(self, bucket, split):
        return self.embeddings_dir / f"{bucket}_{split}.csv"

    def classifier_model(self, bucket):
        return self.classifiers_dir / f"{bucket}.bin"

    def scores_csv(self, bucket, split):
        return self.scores_dir / f"{bucket}_{split}.csv"

    def det_csv(self, bucket, split):
        return self.report_dir / f"det_{bucket}_{split}.csv"


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def _write_meta(path: Path, stage: str, cfg_hash: str) -> None:
    _meta_path(path).write_text(
        json.dumps({"stage": stage, "config_hash": cfg_hash, "format_version": 1})
    )


def _require_artifact(path: Path, producing_stage: str) -> None:
    if not path.exists():
        raise DataError(
            f"missing artifact {path}; run stage '{producing_stage}' first"
        )


def _check_meta(path: Path, cfg_hash: str, producing_stage: str) -> None:
    _require_artifact(path, producing_stage)
    mp = _meta_path(path)
    if not mp.exists():
        raise DataError(f"artifact {path} has no metadata sidecar; rebuild it")
    meta = json.loads(mp.read_text())
    if meta.get("config_hash") != cfg_hash:
        raise DataError(
            f"artifact {path} was built with a different configuration "
            f"(hash {meta.get('config_hash')} != {cfg_hash}); "
            f"re-run stage '{producing_stage}'"
        )


def _check_container_hash(meta: dict, cfg_hash: str, path, producing_stage: str) -> None:
    if meta.get("config_hash") != cfg_hash:
        raise DataError(
            f"artifact {path} was built with a different configuration; "
            f"re-run stage '{producing_stage}'"
        )


def _synth_spec(cfg: PipelineConfig) -> synth.SynthSpec:
    s = cfg.synth
    classes = s.classes if s.classes is not None else synth.default_spec().classes
    files_per_split = {}
    for split, n in (("train", s.n_train), ("dev", s.n_dev), ("eval", s.n_eval)):
        if n > 0:
            files_per_split[split] = n
    return synth.SynthSpec(
        classes=classes,
        files_per_split=files_per_split,
        duration_s=s.duration_s,
        sample_rate_hz=cfg.sample_rate_hz,
        seed=cfg.seed,
    )


def _resolve_data(cfg: PipelineConfig, paths: WorkPaths):
    """Locate audio dir, manifests, and gender map for the active corpus."""
    if cfg.data is not None:
        return cfg.data.audio_dir, dict(cfg.data.manifests), cfg.data.gender_map
    gender_map = paths.corpus / "gender_map.txt"
    if not gender_map.exists():
        raise DataError(
            f"synthetic corpus not found under {paths.corpus}; run stage 'synth-gen' first"
        )
    manifests = {}
    for split in SPLITS:
        p = paths.corpus / f"{split}.txt"
        if p.exists():
            manifests[split] = p
    return paths.corpus / "wav", manifests, gender_map


def _load_records(cfg, manifests, gender_map_path, split):
    if split not in manifests:
        raise DataError(f"no manifest configured for split {split!r}")
    gm = load_gender_map(gender_map_path)
    return parse_manifest(manifests[split], gm, split)


def _feature_config(cfg: PipelineConfig):
    return features.config_from_preset(
        cfg.features.preset, cfg.banks, cfg.gender_split, cfg.features.custom
    )


def _bucket_rows(metas, bucket):
    if bucket == "all":
        return list(range(len(metas)))
    return [i for i, m in enumerate(metas) if m.gender == bucket]


def stage_synth_gen(cfg: PipelineConfig) -> None:
    if cfg.synth is None:
        raise ConfigError("synth-gen requires a synth section in the config")
    paths = WorkPaths(cfg)
    out = synth.generate(_synth_spec(cfg), paths.corpus)
    logger.info("synthetic corpus written under %s", paths.corpus)
    for split in SPLITS:
        if split in out:
            logger.info("  %s manifest: %s", split, out[split])


def stage_build_models(cfg: PipelineConfig) -> None:
    paths = WorkPaths(cfg)
    audio_dir, manifests, gender_map = _resolve_data(cfg, paths)
    records = _load_records(cfg, manifests, gender_map, "train")
    banks = [filterbank.design_bank(spec, cfg.sample_rate_hz) for spec in cfg.banks]
    ms = models.build_models(
        records, audio_dir, banks, bin_count=cfg.pmf.bin_count, gender_split=cfg.gender_split
    )
    models.save_models(ms, paths.models, config_hash=config_hash(cfg))
    logger.info("speaker models written to %s", paths.models)


def stage_extract(cfg: PipelineConfig) -> None:
    paths = WorkPaths(cfg)
    audio_dir, manifests, gender_map = _resolve_data(cfg, paths)
    _require_artifact(paths.models, "build-models")
    ms = models.load_models(paths.models)
    _check_container_hash(
        {"config_hash": models.model_config_hash(paths.models)},
        config_hash(cfg),
        paths.models,
        "build-models",
    )
    if [b for b in ms.banks] != list(cfg.banks):
        raise DataError(
            f"model file {paths.models} was built with different filter banks; "
            "re-run 'build-models'"
        )
    ms = ms.merge_bins(cfg.pmf.distance_bin_count)
    fcfg = _feature_config(cfg)

    splits = [s for s in SPLITS if s in manifests]
    extracted = {}
    for split in splits:
        records = _load_records(cfg, manifests, gender_map, split)
        matrix, kept = features.extract_batch(
            records, audio_dir, ms, fcfg, lenient=cfg.lenient
        )
        extracted[split] = (kept, matrix)
        logger.info("extracted %s features: %s rows x %s dims", split, *matrix.shape)

    if cfg.features.standardize:
        if "train" not in extracted:
            raise DataError("feature standardization needs a train split")
        mean, std = features.fit_standardizer(extracted["train"][1])
        features.save_standardizer(paths.standardizer, mean, std)
        _write_meta(paths.standardizer, "extract", config_hash(cfg))
        extracted = {
            split: (kept, features.apply_standardizer(matrix, mean, std))
            for split, (kept, matrix) in extracted.items()
        }

    for split, (kept, matrix) in extracted.items():
        out = paths.features_csv(split)
        features.write_features_csv(out, kept, matrix)
        _write_meta(out, "extract", config_hash(cfg))
        logger.info("wrote %s", out)


def stage_dm_fit(cfg: PipelineConfig) -> None:
    paths = WorkPaths(cfg)
    train_csv = paths.features_csv("train")
    _check_meta(train_csv, config_hash(cfg), "extract")
    metas, matrix = features.read_features_csv(train_csv)
    for bucket in cfg.bucket_names():
        rows = _bucket_rows(metas, bucket)
        if not rows:
            raise DataError(f"no train rows in gender bucket {bucket!r}")
        sub_metas = [metas[i] for i in rows]
        idx = diffusion.subsample_training(
            [m.label for m in sub_metas],
            [m.attack_id for m in sub_metas],
            per_attack=cfg.diffusion.per_attack,
            genuine_count=cfg.diffusion.genuine,
            seed=cfg.seed,
        )
        points = matrix[rows][idx]
        epsilon = cfg.diffusion.epsilon
        if epsilon is None:
            epsilon = diffusion.select_epsilon(points, seed=cfg.seed)
        k = cfg.k_for_bucket(bucket)
        model = diffusion.fit(points, n_components=k, epsilon=epsilon, t=cfg.diffusion.t)
        diffusion.save_diffusion(
            model,
            paths.dm_model(bucket),
            meta={"bucket": bucket, "config_hash": config_hash(cfg)},
        )
        logger.info(
            "bucket %s: diffusion map on %d points, epsilon=%.6g, K=%d",
            bucket,
            points.shape[0],
            epsilon,
            k,
        )


def stage_dm_extend(cfg: PipelineConfig) -> None:
    paths = WorkPaths(cfg)
    splits = [s for s in SPLITS if paths.features_csv(s).exists()]
    if not splits:
        raise DataError("no feature CSVs found; run stage 'extract' first")
    for bucket in cfg.bucket_names():
        dm_path = paths.dm_model(bucket)
        _require_artifact(dm_path, "dm-fit")
        header = read_header(dm_path, expected_kind="diffusion_model")
        _check_container_hash(header.get("meta", {}), config_hash(cfg), dm_path, "dm-fit")
        model = diffusion.load_diffusion(dm_path)
        for split in splits:
            csv_path = paths.features_csv(split)
            _check_meta(csv_path, config_hash(cfg), "extract")
            metas, matrix = features.read_features_csv(csv_path)
            rows = _bucket_rows(metas, bucket)
            coords = (
                diffusion.extend(model, matrix[rows])
                if rows
                else np.empty((0, model.n_components))
            )
            out = paths.embeddings_csv(bucket, split)
            diffusion.write_embeddings_csv(out, [metas[i] for i in rows], coords)
            _write_meta(out, "dm-extend", config_hash(cfg))
            logger.info("wrote %s (%d rows)", out, len(rows))


def stage_train(cfg: PipelineConfig) -> None:
    paths = WorkPaths(cfg)
    for bucket in cfg.bucket_names():
        emb_path = paths.embeddings_csv(bucket, "train")
        _check_meta(emb_path, config_hash(cfg), "dm-extend")
        metas, matrix = features.read_features_csv(emb_path)
        y = np.array([1.0 if m.label == "spoofed" else 0.0 for m in metas])
        model = clf_mod.train(
            matrix,
            y,
            l2=cfg.classifier.l2,
            max_iters=cfg.classifier.max_iters,
            grad_tol=cfg.classifier.grad_tol,
            balance_classes=cfg.classifier.balance_classes,
        )
        clf_mod.save_logistic(
            model,
            paths.classifier_model(bucket),
            meta={"bucket": bucket, "config_hash": config_hash(cfg)},
        )
        logger.info(
            "bucket %s: trained logistic model (%d iterations, loss %.6f)",
            bucket,
            model.n_iterations,
            model.final_loss,
        )


def stage_evaluate(cfg: PipelineConfig) -> None:
    paths = WorkPaths(cfg)
    reports = []
    for bucket in cfg.bucket_names():
        clf_path = paths.classifier_model(bucket)
        _require_artifact(clf_path, "train")
        header = read_header(clf_path, expected_kind="logistic_model")
        _check_container_hash(header.get("meta", {}), config_hash(cfg), clf_path, "train")
        model = clf_mod.load_logistic(clf_path)
        for split in cfg.evaluation_splits:
            emb_path = paths.embeddings_csv(bucket, split)
            _check_meta(emb_path, config_hash(cfg), "dm-extend")
            metas, matrix = features.read_features_csv(emb_path)
            scores = clf_mod.score_batch(model, matrix)
            metrics.write_scores_csv(paths.scores_csv(bucket, split), metas, scores)
            labels = np.array([1 if m.label == "spoofed" else 0 for m in metas])
            attacks = [m.attack_id for m in metas]
            report = metrics.evaluate(scores, labels, attacks, bucket, split)
            metrics.write_det_csv(paths.det_csv(bucket, split), report.det_points)
            reports.append(report)
            logger.info(
                "bucket %s %s: EER %.2f%% at threshold %.4f",
                bucket,
                split,
                report.eer_percent,
                report.threshold_at_eer,
            )
    metrics.write_report_tables(paths.report_dir, reports)
    logger.info("report written under %s", paths.report_dir)


def stage_export_plots(cfg: PipelineConfig) -> None:
    """Collect plot-ready CSVs (embeddings, DET points) for the plots scripts."""
    paths = WorkPaths(cfg)
    out = paths.plots_export
    out.mkdir(parents=True, exist_ok=True)
    copied = []
    for bucket in cfg.bucket_names():
        for split in SPLITS:
            for src in (
                paths.embeddings_csv(bucket, split),
                paths.det_csv(bucket, split),
            ):
                if src.exists():
                    shutil.copyfile(src, out / src.name)
                    copied.append(src.name)
    if not copied:
        raise DataError(
            "nothing to export; run stages 'dm-extend' and 'evaluate' first"
        )
    lines = ["Render with the plots scripts, e.g.:"]
    for name in copied:
        if name.startswith("det_"):
            lines.append(f"  python plots/plot_det.py --csv {name} --out {name[:-4]}.png")
        else:
            lines.append(
                f"  python plots/plot_embedding.py --csv {name} --dims 2 --out {name[:-4]}.png"
            )
    (out / "README.txt").write_text("\n".join(lines) + "\n")
    logger.info("exported %d plot CSVs to %s", len(copied), out)


def run_all(cfg: PipelineConfig) -> None:
    if cfg.synth is not None and cfg.data is None:
        paths = WorkPaths(cfg)
        if not (paths.corpus / "gender_map.txt").exists():
            stage_synth_gen(cfg)
    stage_build_models(cfg)
    stage_extract(cfg)
    stage_dm_fit(cfg)
    stage_dm_extend(cfg)
    stage_train(cfg)
    stage_evaluate(cfg)
    stage_export_plots(cfg)


STAGE_FUNCS = {
    "synth-gen": stage_synth_gen,
    "build-models": stage_build_models,
    "extract": stage_extract,
    "dm-fit": stage_dm_fit,
    "dm-extend": stage_dm_extend,
    "train": stage_train,
    "evaluate": stage_evaluate,
    "export-plots": stage_export_plots,
    "run-all": run_all,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> argparse.ArgumentParser:
    # shared flags live on a parent so they parse before or after the
    # subcommand; SUPPRESS keeps subparser defaults from clobbering
    # values given at the top level
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", type=Path, default=argparse.SUPPRESS, help="pipeline YAML config"
    )
    common.add_argument(
        "--stage",
        choices=STAGE_NAMES,
        default=argparse.SUPPRESS,
        help="stage to run (alternative to the subcommand form)",
    )
    common.add_argument(
        "--seed", type=int, default=argparse.SUPPRESS, help="override the config seed"
    )
    common.add_argument(
        "--no-gender-split",
        action="store_true",
        default=argparse.SUPPRESS,
        help="merge gender buckets into a single pipeline",
    )
    common.add_argument(
        "--lenient",
        action="store_true",
        default=argparse.SUPPRESS,
        help="skip unreadable files during extraction instead of failing",
    )
    common.add_argument(
        "-v", "--verbose", action="store_true", default=argparse.SUPPRESS
    )
    parser = _Parser(
        prog="pmfspoof",
        description="PMF-based anti-spoofing pipeline",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="subcommand")
    for name in STAGE_NAMES:
        sub.add_parser(name, parents=[common], help=f"run the {name} stage")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    stage = args.subcommand or getattr(args, "stage", None)
    if stage is None:
        print("error: no stage given (use a subcommand or --stage)", file=sys.stderr)
        return 1
    config_path = getattr(args, "config", None)
    if config_path is None:
        print("error: --config is required", file=sys.stderr)
        return 1
    try:
        cfg = load_config(config_path)
        if getattr(args, "seed", None) is not None:
            cfg.seed = args.seed
        if getattr(args, "no_gender_split", False):
            cfg.gender_split = False
        if getattr(args, "lenient", False):
            cfg.lenient = True
        cfg.workdir.mkdir(parents=True, exist_ok=True)
        STAGE_FUNCS[stage](cfg)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return 1
    except DataError as exc:
        logger.error("data error: %s", exc)
        return 2
    except NumericError as exc:
        logger.error("numeric failure: %s", exc)
        return 3
    except PipelineError as exc:
        logger.error("%s", exc)
        return 2
    except ValueError as exc:
        logger.error("invalid parameter: %s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
