"""Command-line front-end for the risk-classification pipeline.

Sub-commands: synth, extract, select, train, evaluate, km, run. Every run is
seeded (defaults are fixed, never wall-clock), artifacts carry the resolved
configuration, and no artifact contains timestamps, so identical inputs yield
byte-identical outputs. Exit codes: 0 success, 2 config error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import click
import numpy as np

from . import __version__
from . import classifier as clf
from .cohort import feature_set, load_manifest, label_samples, manifest_dict
from .errors import ConfigError, DataError, RadriskError
from .evaluation import (
    CvConfig,
    SelectionConfig,
    kaplan_meier,
    monte_carlo_cv,
    risk_split_report,
    roc_curve,
    write_risk_split,
)
from .evaluation.report import _curve_csv
from .features import ExtractionConfig
from .featurestore import read_features_csv, write_features_csv
from .pipeline import NormalizationConfig, _image_jobs, build_dataset, extract_cohort
from .selection import correlation_report, mrmr_select, selection_cap
from .svgplot import km_plot, roc_plot
from .synth import EffectConfig, SynthConfig, synth_cohort
from .volume import VolumeImage, write_volume

log = logging.getLogger("radrisk")

ENV_OUT = "RADRISK_OUT"

_BLOCK_TITLES = {
    "clinical": "Clinical data",
    "followup_mr": "Radiomic features follow-up MRI",
    "delta": "Delta-radiomic features",
    "planning_mr": "Radiomic features planning MRI",
    "planning_ct": "Radiomic features planning CT",
    "wavelet": "Wavelet filtered images",
}


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved configuration of one pipeline run (embedded in artifacts)."""

    manifest: str
    sets: tuple[int, ...]
    n_bins: int
    wavelet: str
    whitestripe: str
    zscore: bool
    per_samples: int
    per_fold: bool
    C: float
    sensitivity_weight: float
    threshold: float
    repeats: int
    test_frac: float
    seed: int
    horizon_days: int
    threads: int
    out_dir: str

    def public_dict(self) -> dict:
        # threads and out_dir are execution details: artifacts must be
        # byte-identical across them, so they stay out of the embedded echo
        d = asdict(self)
        d.pop("threads")
        d.pop("out_dir")
        return d

    def comment(self) -> str:
        return "config: " + json.dumps(self.public_dict(), sort_keys=True)


def _default_out() -> str:
    return os.environ.get(ENV_OUT, "radrisk-out")


def _require_manifest(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"manifest not found: {p}")
    return p


def _parse_sets(text: str) -> tuple[int, ...]:
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                a, b = part.split("-", 1)
                out.extend(range(int(a), int(b) + 1))
            elif part:
                out.append(int(part))
    except ValueError as exc:
        raise ConfigError(f"cannot parse feature sets {text!r}: {exc}") from exc
    if not out or any(s not in range(1, 8) for s in out):
        raise ConfigError(f"feature sets must be within 1..7, got {text!r}")
    return tuple(dict.fromkeys(out))


def _merge_config(ctx: click.Context, config_path: str | None, **flags) -> dict:
    """Config-file values fill in for flags the user left at their defaults."""
    merged = dict(flags)
    if config_path:
        p = Path(config_path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            file_cfg = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config file {p}: {exc}") from exc
        unknown = set(file_cfg) - set(flags)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, value in file_cfg.items():
            src = ctx.get_parameter_source(key)
            if src is not None and src.name != "COMMANDLINE":
                merged[key] = value
    return merged


def _write_json(path: Path, payload: dict, config: PipelineConfig) -> Path:
    payload = {"config": config.public_dict(), **payload}
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


@click.group()
@click.version_option(__version__)
def cli():
    """Radiomics + delta-radiomics risk classification pipeline."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


# ---------------------------------------------------------------------------
# synth


@cli.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--lesions", type=int, default=40, show_default=True)
@click.option("--out", "out_dir", default=None, help=f"output dir (default ${ENV_OUT} or ./radrisk-out)")
@click.option("--hrm-fraction", type=float, default=0.10, show_default=True)
@click.option("--growth", type=float, default=0.5, show_default=True)
@click.option("--texture", type=float, default=2.0, show_default=True)
@click.option("--ct-missing", type=float, default=0.0, show_default=True)
@click.option("--followups", default="2,2", show_default=True, help="min,max follow-ups per lesion")
@click.option("--format", "fmt", type=click.Choice(["rawjson", "nifti1"]), default="rawjson", show_default=True)
def synth(seed, lesions, out_dir, hrm_fraction, growth, texture, ct_missing, followups, fmt):
    """Generate a synthetic cohort and write images + manifest to disk."""
    out = Path(out_dir or _default_out())
    try:
        fu_min, fu_max = (int(x) for x in followups.split(","))
    except ValueError as exc:
        raise ConfigError(f"--followups must be 'min,max', got {followups!r}") from exc
    records = synth_cohort(
        seed,
        lesions,
        EffectConfig(growth=growth, texture=texture),
        SynthConfig(hrm_fraction=hrm_fraction, followups=(fu_min, fu_max), ct_missing_fraction=ct_missing),
    )
    images = out / "images"
    images.mkdir(parents=True, exist_ok=True)
    ext = ".json" if fmt == "rawjson" else ".nii"
    source_paths: dict = {}

    def dump(lesion_id, role, date, source):
        stem = f"{lesion_id}_{role}_{date}"
        img_path = images / f"{stem}_img{ext}"
        mask_path = images / f"{stem}_mask{ext}"
        vol, mask = source.load()
        write_volume(vol, img_path, fmt)
        write_volume(VolumeImage(mask.voxels.astype(np.float64), vol.spacing, vol.modality), mask_path, fmt)
        source_paths[id(source)] = {
            "image": str(img_path.relative_to(out)),
            "mask": str(mask_path.relative_to(out)),
        }

    for lesion_id, role, date, source in _image_jobs(records):
        dump(lesion_id, role, date, source)
    manifest = manifest_dict(records, source_paths)
    manifest["synth"] = {
        "seed": seed,
        "lesions": lesions,
        "hrm_fraction": hrm_fraction,
        "growth": growth,
        "texture": texture,
        "followups": [fu_min, fu_max],
        "ct_missing": ct_missing,
        "format": fmt,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    click.echo(f"wrote {len(records)} lesions to {out / 'manifest.json'}")


# ---------------------------------------------------------------------------
# extract


def _extraction_configs(n_bins, wavelet, whitestripe, zscore):
    return (
        ExtractionConfig(n_bins=n_bins, wavelet=None if wavelet == "none" else wavelet),
        NormalizationConfig(zscore=zscore, whitestripe=whitestripe),
    )


@cli.command()
@click.option("--manifest", required=True)
@click.option("--out", "out_dir", default=None)
@click.option("--ng", "n_bins", type=int, default=32, show_default=True)
@click.option("--wavelet", type=click.Choice(["haar", "coif1", "none"]), default="haar", show_default=True)
@click.option("--whitestripe", type=click.Choice(["mr", "none"]), default="mr", show_default=True)
@click.option("--zscore/--no-zscore", default=True, show_default=True)
@click.option("--force", is_flag=True, help="recompute rows that already exist")
@click.option("--threads", type=int, default=1, show_default=True)
def extract(manifest, out_dir, n_bins, wavelet, whitestripe, zscore, force, threads):
    """Extract per-image radiomic features into features.csv (+ JSON sidecar)."""
    manifest_path = _require_manifest(manifest)
    out = Path(out_dir or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    records = load_manifest(manifest_path)
    ext_cfg, norm_cfg = _extraction_configs(n_bins, wavelet, whitestripe, zscore)

    csv_path = out / "features.csv"
    existing: dict = {}
    if csv_path.exists() and not force:
        try:
            existing = read_features_csv(csv_path)
        except DataError:
            existing = {}
    skip = set(existing)

    failures: list[str] = []
    store = extract_cohort(
        records,
        ext_cfg,
        norm_cfg,
        base_dir=manifest_path.parent,
        threads=threads,
        skip_keys=skip,
        failures=failures,
    )
    merged = {**existing, **store}
    job_keys = [(j[0], j[1], j[2]) for j in _image_jobs(records)]
    comment = "config: " + json.dumps(
        {
            "manifest": str(manifest_path),
            "n_bins": n_bins,
            "wavelet": wavelet,
            "whitestripe": whitestripe,
            "zscore": zscore,
        },
        sort_keys=True,
    )
    write_features_csv(csv_path, merged, job_keys, comment)
    sidecar = {
        "format_version": 1,
        "manifest": str(manifest_path),
        "extraction": {"n_bins": n_bins, "wavelet": wavelet},
        "normalization": {"zscore": zscore, "whitestripe": whitestripe},
        "rows": len(merged),
        "failures": failures,
    }
    (out / "features.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    click.echo(f"wrote {len(merged)} rows to {csv_path}" + (f" ({len(failures)} failed)" if failures else ""))
    if failures:
        raise DataError(f"{len(failures)} image(s) failed extraction: {failures[:3]}")


# ---------------------------------------------------------------------------
# shared pipeline steps


def _dataset_from_files(manifest_path, features_path, set_id, horizon_days):
    records = load_manifest(manifest_path)
    store = read_features_csv(features_path)
    return records, build_dataset(records, store, feature_set(set_id), horizon_days)


def _correlation_blocks(dataset):
    def block_of(name: str) -> str:
        if name.startswith("clinical-"):
            return "clinical"
        if "-wavelet-" in name:
            return "wavelet"
        if name.startswith("follow-up-mr-"):
            return "followup_mr"
        if name.startswith("Delta-mr-"):
            return "delta"
        if name.startswith("Plan-mr-"):
            return "planning_mr"
        if name.startswith("Plan-ct-"):
            return "planning_ct"
        return "other"

    groups: dict[str, list[int]] = {}
    for k, name in enumerate(dataset.feature_names):
        groups.setdefault(block_of(name), []).append(k)
    return groups


def _write_correlation_tables(dataset, out: Path, comment: str, top: int = 10) -> list[Path]:
    written = []
    for block, cols in _correlation_blocks(dataset).items():
        names = [dataset.feature_names[k] for k in cols]
        report = correlation_report(dataset.X[:, cols], dataset.y, names)
        lines = [f"# {comment}", "rank,feature,r"]
        for rank, (name, r) in enumerate(report.ranked()[:top], start=1):
            lines.append(f"{rank},{name},{r!r}")
        p = out / f"table2_{block}.csv"
        p.write_text("\n".join(lines) + "\n")
        written.append(p)
    return written


# ---------------------------------------------------------------------------
# select


@cli.command()
@click.option("--manifest", required=True)
@click.option("--features", "features_path", required=True)
@click.option("--set", "set_id", type=int, default=7, show_default=True)
@click.option("--horizon", "horizon_days", type=int, default=100, show_default=True)
@click.option("--out", "out_dir", default=None)
def select(manifest, features_path, set_id, horizon_days, out_dir):
    """One-shot MRMR selection on the full assembled matrix (+ ranked correlations)."""
    manifest_path = _require_manifest(manifest)
    out = Path(out_dir or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    _, dataset = _dataset_from_files(manifest_path, features_path, set_id, horizon_days)
    cap = selection_cap(dataset.n_samples)
    result = mrmr_select(dataset.X, dataset.y, cap, dataset.feature_names)
    comment = f"select set={set_id} cap={cap} horizon={horizon_days}"
    payload = {"set_id": set_id, "n_samples": dataset.n_samples, **result.to_dict()}
    (out / "selection.json").write_text(json.dumps(payload, indent=2) + "\n")
    _write_correlation_tables(dataset, out, comment)
    click.echo(f"selected {len(result.selected)}/{cap} features from set {set_id}")


# ---------------------------------------------------------------------------
# train


@cli.command()
@click.option("--manifest", required=True)
@click.option("--features", "features_path", required=True)
@click.option("--set", "set_id", type=int, default=7, show_default=True)
@click.option("--horizon", "horizon_days", type=int, default=100, show_default=True)
@click.option("--c", "-C", "c_value", type=float, default=1.0, show_default=True)
@click.option("--sensitivity-weight", type=float, default=2.0, show_default=True)
@click.option("--theta", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", default=None)
def train(manifest, features_path, set_id, horizon_days, c_value, sensitivity_weight, theta, seed, out_dir):
    """Select features and fit one model on the whole cohort."""
    manifest_path = _require_manifest(manifest)
    out = Path(out_dir or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    _, dataset = _dataset_from_files(manifest_path, features_path, set_id, horizon_days)
    cap = selection_cap(dataset.n_samples)
    selection = mrmr_select(dataset.X, dataset.y, cap, dataset.feature_names)
    cols = selection.indices(dataset.feature_names)
    cfg = clf.ClassifierConfig(C=c_value, sensitivity_weight=sensitivity_weight, threshold=theta, seed=seed)
    model = clf.fit(dataset.X[:, cols], dataset.y, selection.selected, cfg)
    model.save(out / "model.json")
    click.echo(f"trained on {dataset.n_samples} samples, {len(cols)} features -> {out / 'model.json'}")


# ---------------------------------------------------------------------------
# evaluate


def _run_cv(dataset, cfg: PipelineConfig):
    cv_cfg = CvConfig(repeats=cfg.repeats, test_frac=cfg.test_frac, seed=cfg.seed, threads=cfg.threads)
    sel_cfg = SelectionConfig(per_samples=cfg.per_samples, per_fold=cfg.per_fold)
    clf_cfg = clf.ClassifierConfig(
        C=cfg.C, sensitivity_weight=cfg.sensitivity_weight, threshold=cfg.threshold, seed=cfg.seed
    )
    return monte_carlo_cv(dataset, cv_cfg, sel_cfg, clf_cfg)


def _pipeline_config(manifest, sets, merged, out) -> PipelineConfig:
    return PipelineConfig(
        manifest=str(manifest),
        sets=tuple(sets),
        n_bins=merged["n_bins"],
        wavelet=merged["wavelet"],
        whitestripe=merged["whitestripe"],
        zscore=merged["zscore"],
        per_samples=merged["per_samples"],
        per_fold=not merged["global_selection"],
        C=merged["c_value"],
        sensitivity_weight=merged["sensitivity_weight"],
        threshold=merged["theta"],
        repeats=merged["repeats"],
        test_frac=merged["test_frac"],
        seed=merged["seed"],
        horizon_days=merged["horizon_days"],
        threads=merged["threads"],
        out_dir=str(out),
    )


_COMMON_CV_OPTIONS = [
    click.option("--repeats", type=int, default=100, show_default=True),
    click.option("--test-frac", type=float, default=1.0 / 3.0, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--c", "-C", "c_value", type=float, default=1.0, show_default=True),
    click.option("--sensitivity-weight", type=float, default=2.0, show_default=True),
    click.option("--theta", type=float, default=0.0, show_default=True),
    click.option("--per-samples", type=int, default=10, show_default=True, help="selection cap divisor"),
    click.option("--global-selection", is_flag=True, help="select once before CV (leaky; for comparison)"),
    click.option("--horizon-days", type=int, default=100, show_default=True),
    click.option("--threads", type=int, default=1, show_default=True),
]


def _with_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return wrap


@cli.command()
@click.option("--manifest", required=True)
@click.option("--features", "features_path", required=True)
@click.option("--set", "set_id", type=int, default=7, show_default=True)
@_with_options(_COMMON_CV_OPTIONS)
@click.option("--out", "out_dir", default=None)
def evaluate(manifest, features_path, set_id, out_dir, **flags):
    """Monte-Carlo cross-validation of one feature set."""
    manifest_path = _require_manifest(manifest)
    out = Path(out_dir or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    merged = {"n_bins": 0, "wavelet": "-", "whitestripe": "-", "zscore": True, **flags}
    cfg = _pipeline_config(manifest_path, (set_id,), merged, out)
    _, dataset = _dataset_from_files(manifest_path, features_path, set_id, cfg.horizon_days)
    report = _run_cv(dataset, cfg)
    _write_json(out / "cv_report.json", report.to_dict(), cfg)
    scored = report.oof_counts > 0
    if scored.any() and len(np.unique(dataset.y[scored])) == 2:
        roc = roc_curve(report.oof_scores[scored], dataset.y[scored])
        (out / "roc_oof.svg").write_text(
            roc_plot(roc.fpr, roc.tpr, roc.auc, f"set {set_id} out-of-fold ROC", cfg.comment())
        )
    click.echo(f"set {set_id}: mean AUC {report.mean_auc:.3f} (std {report.std_auc:.3f}) over {cfg.repeats} repeats")


# ---------------------------------------------------------------------------
# km


@cli.command()
@click.option("--manifest", required=True)
@click.option("--horizon", "horizon_days", type=int, default=100, show_default=True)
@click.option("--out", "out_dir", default=None)
def km(manifest, horizon_days, out_dir):
    """Cohort-level freedom-from-progression curve (no features needed)."""
    manifest_path = _require_manifest(manifest)
    out = Path(out_dir or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    records = load_manifest(manifest_path)
    labeling = label_samples(records, horizon_days)
    times = [s.days_to_event_or_censor for s in labeling.samples] + [p.days for p in labeling.km_censored]
    events = [not s.censored for s in labeling.samples] + [False] * len(labeling.km_censored)
    curve = kaplan_meier(times, events)
    comment = f"config: {json.dumps({'manifest': str(manifest_path), 'horizon_days': horizon_days})}"
    (out / "km_cohort.svg").write_text(km_plot([("cohort", "#3060c0", curve, False)],
                                               "freedom from progression", comment))
    (out / "km_cohort.csv").write_text(f"# {comment}\n" + _curve_csv(curve))
    median = "not reached" if curve.median is None else f"{curve.median:.0f} days"
    click.echo(f"cohort KM over {curve.n} samples, median {median}")


# ---------------------------------------------------------------------------
# run


@cli.command()
@click.option("--manifest", required=True)
@click.option("--features", "features_path", default=None, help="existing features.csv (else auto-extract)")
@click.option("--sets", default="7", show_default=True, help="e.g. '1-7' or '1,3,7'")
@click.option("--ng", "n_bins", type=int, default=32, show_default=True)
@click.option("--wavelet", type=click.Choice(["haar", "coif1", "none"]), default="haar", show_default=True)
@click.option("--whitestripe", type=click.Choice(["mr", "none"]), default="mr", show_default=True)
@click.option("--zscore/--no-zscore", default=True, show_default=True)
@_with_options(_COMMON_CV_OPTIONS)
@click.option("--config", "config_path", default=None, help="JSON config file (flags win)")
@click.option("--out", "out_dir", default=None)
@click.pass_context
def run(ctx, manifest, features_path, sets, out_dir, config_path, **flags):
    """Full pipeline: extract (if needed), CV per feature set, risk-split report."""
    merged = _merge_config(ctx, config_path, manifest=manifest, features_path=features_path,
                           sets=sets, out_dir=out_dir, **flags)
    manifest_path = _require_manifest(merged["manifest"])
    set_ids = _parse_sets(merged["sets"])
    out = Path(merged["out_dir"] or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    cfg = _pipeline_config(manifest_path, set_ids, merged, out)

    records = load_manifest(manifest_path)
    if merged["features_path"]:
        store = read_features_csv(merged["features_path"])
    else:
        ext_cfg, norm_cfg = _extraction_configs(
            merged["n_bins"], merged["wavelet"], merged["whitestripe"], merged["zscore"]
        )
        store = extract_cohort(records, ext_cfg, norm_cfg, base_dir=manifest_path.parent,
                               threads=merged["threads"])
        job_keys = [(j[0], j[1], j[2]) for j in _image_jobs(records)]
        write_features_csv(out / "features.csv", store, job_keys, cfg.comment())

    set_rows = []
    reports = {}
    datasets = {}
    for set_id in set_ids:
        dataset = build_dataset(records, store, feature_set(set_id), cfg.horizon_days)
        report = _run_cv(dataset, cfg)
        datasets[set_id] = dataset
        reports[set_id] = report
        set_rows.append((set_id, report))
        click.echo(f"set {set_id}: mean AUC {report.mean_auc:.3f} (std {report.std_auc:.3f})")

    _write_table1(out, set_rows, cfg)
    top_set = max(set_ids)
    _write_correlation_tables(datasets[top_set], out, cfg.comment())
    top_report = reports[top_set]
    split = risk_split_report(datasets[top_set], top_report.oof_scores, top_report.oof_counts,
                              cfg.threshold)
    write_risk_split(split, out, cfg.comment())

    payload = {
        "sets": {
            str(set_id): {
                "mean_auc": rep.mean_auc,
                "std_auc": rep.std_auc,
                "pooled_auc": rep.pooled_auc,
                "repeats": len(rep.aucs),
                "confusion": rep.confusion,
            }
            for set_id, rep in set_rows
        },
        "risk_split": {
            "set_id": top_set,
            "median_pred_hrm_days": split.median_hrm_days,
            "median_pred_lrm_days": split.median_lrm_days,
            "logrank_p": split.logrank.p if split.logrank else None,
            "confusion": split.confusion,
            "summary": split.summary_lines(),
        },
        "excluded_lesions": {str(s): datasets[s].excluded_lesions for s in set_ids},
    }
    _write_json(out / "report.json", payload, cfg)
    for line in split.summary_lines():
        click.echo(line)


def _write_table1(out: Path, set_rows, cfg: PipelineConfig) -> None:
    lines = [f"# {cfg.comment()}"]
    lines.append("set,clinical,followup_mr,delta,planning_mr,planning_ct,wavelet,mean_auc,std_auc,pooled_auc")
    for set_id, rep in set_rows:
        spec = feature_set(set_id)
        flags = [spec.clinical, spec.followup_mr, spec.delta, spec.planning_mr, spec.planning_ct, spec.wavelet]
        lines.append(
            f"Set {set_id}," + ",".join("x" if f else "" for f in flags)
            + f",{rep.mean_auc!r},{rep.std_auc!r},{rep.pooled_auc!r}"
        )
    (out / "table1.csv").write_text("\n".join(lines) + "\n")

    # transposed text rendering: blocks as rows, sets as columns
    cols = [set_id for set_id, _ in set_rows]
    width = 36
    text = [" " * width + "".join(f"Set {c:<4}" for c in cols)]
    for key, title in _BLOCK_TITLES.items():
        row = title.ljust(width)
        for set_id, _ in set_rows:
            row += ("x" if getattr(feature_set(set_id), key) else " ").ljust(8)
        text.append(row)
    row = "AUC score".ljust(width)
    for _, rep in set_rows:
        row += f"{rep.mean_auc:.2f}".ljust(8)
    text.append(row)
    (out / "table1.txt").write_text("\n".join(text) + "\n")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        return 130
    except click.exceptions.ClickException as exc:
        exc.show()
        return 2
    except RadriskError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
