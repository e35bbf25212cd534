"""Monte-Carlo cross-validation with lesion-grouped stratified splits.

Every repeat draws a fresh split where all samples of a lesion land wholly in
train or test (stratified on the lesion-level "ever high-risk" flag), fits the
feature selection and the classifier on the training fold only, and scores the
test fold. The report carries per-repeat AUCs, the mean/std AUC, a pooled
confusion at the decision threshold, per-sample out-of-fold mean scores, and a
leakage guard (count of lesions straddling train/test, asserted zero).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import classifier as clf
from ..errors import ConfigError, DataError
from ..pipeline import Dataset
from ..selection import SelectionResult, mrmr_select, selection_cap
from .roc import roc_curve

MAX_SPLIT_RETRIES = 100


@dataclass(frozen=True)
class SelectionConfig:
    per_samples: int = 10  # cap = n_train // per_samples
    per_fold: bool = True  # False = one global (leaky) selection before CV


@dataclass(frozen=True)
class CvConfig:
    repeats: int = 100
    test_frac: float = 1.0 / 3.0
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not 0.0 < self.test_frac < 1.0:
            raise ConfigError(f"test_frac must be in (0, 1), got {self.test_frac}")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")


@dataclass
class CvReport:
    set_id: int
    aucs: list[float]
    mean_auc: float
    std_auc: float
    pooled_auc: float
    repeat_seeds: list[int]
    confusion: dict[str, int]
    oof_scores: np.ndarray
    oof_counts: np.ndarray
    straddle_counts: list[int]
    selected_first_repeat: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "set_id": self.set_id,
            "repeats": len(self.aucs),
            "mean_auc": self.mean_auc,
            "std_auc": self.std_auc,
            "pooled_auc": self.pooled_auc,
            "aucs": self.aucs,
            "repeat_seeds": self.repeat_seeds,
            "confusion": self.confusion,
            "straddle_counts": self.straddle_counts,
            "selected_first_repeat": self.selected_first_repeat,
        }


def _lesion_table(dataset: Dataset):
    lesions: list[str] = []
    flags: list[bool] = []
    index: dict[str, int] = {}
    ever_hrm: dict[str, bool] = {}
    for lid, label in zip(dataset.lesion_ids, dataset.y):
        ever_hrm[lid] = ever_hrm.get(lid, False) or label == 1
    for lid in dataset.lesion_ids:
        if lid not in index:
            index[lid] = len(lesions)
            lesions.append(lid)
            flags.append(ever_hrm[lid])
    return lesions, np.asarray(flags, dtype=bool)


def _split_lesions(lesions, flags, test_frac, rng):
    test: set[str] = set()
    for flag in (True, False):
        stratum = [l for l, f in zip(lesions, flags) if f == flag]
        if not stratum:
            continue
        if len(stratum) < 2:
            raise DataError(f"stratum with flag={flag} has {len(stratum)} lesion(s); need >= 2")
        n_test = int(round(test_frac * len(stratum)))
        n_test = min(max(n_test, 1), len(stratum) - 1)
        order = rng.permutation(len(stratum))
        test.update(stratum[i] for i in order[:n_test])
    return test


def _one_repeat(dataset: Dataset, seed: int, test_frac: float, sel_cfg: SelectionConfig, clf_cfg, global_selection):
    lesions, flags = _lesion_table(dataset)
    lesion_ids = np.asarray(dataset.lesion_ids)
    rng = np.random.default_rng(seed)
    for attempt in range(MAX_SPLIT_RETRIES):
        test_lesions = _split_lesions(lesions, flags, test_frac, rng)
        in_test = np.asarray([lid in test_lesions for lid in lesion_ids])
        y_train = dataset.y[~in_test]
        y_test = dataset.y[in_test]
        if len(np.unique(y_train)) == 2 and len(np.unique(y_test)) == 2:
            break
    else:
        raise DataError(f"no valid stratified split after {MAX_SPLIT_RETRIES} retries (seed {seed})")

    straddle = int(len(set(lesion_ids[in_test]) & set(lesion_ids[~in_test])))

    X_train = dataset.X[~in_test]
    X_test = dataset.X[in_test]
    if global_selection is not None:
        selection = global_selection
    else:
        cap = selection_cap(X_train.shape[0], sel_cfg.per_samples)
        selection = mrmr_select(X_train, y_train, cap, dataset.feature_names)
    cols = selection.indices(dataset.feature_names)
    cfg = clf.ClassifierConfig(
        C=clf_cfg.C,
        sensitivity_weight=clf_cfg.sensitivity_weight,
        threshold=clf_cfg.threshold,
        seed=int(np.random.default_rng(seed + 1).integers(0, 2**31 - 1)),
        max_epochs=clf_cfg.max_epochs,
        tol=clf_cfg.tol,
    )
    model = clf.fit(X_train[:, cols], y_train, selection.selected, cfg)
    scores = clf.decision_scores(model, X_test[:, cols])
    auc_value = roc_curve(scores, y_test).auc
    return auc_value, in_test, scores, straddle, selection.selected


def monte_carlo_cv(
    dataset: Dataset,
    cv_cfg: CvConfig = CvConfig(),
    sel_cfg: SelectionConfig = SelectionConfig(),
    clf_cfg: clf.ClassifierConfig = clf.ClassifierConfig(),
) -> CvReport:
    """Repeated lesion-grouped stratified train/test evaluation of one feature set."""
    lesions, flags = _lesion_table(dataset)
    if flags.sum() < 2 or (~flags).sum() < 2:
        raise DataError(
            f"need >= 2 lesions per class, got {int(flags.sum())} ever-HRM / {int((~flags).sum())} LRM"
        )

    global_selection: SelectionResult | None = None
    if not sel_cfg.per_fold:
        cap = selection_cap(dataset.n_samples, sel_cfg.per_samples)
        global_selection = mrmr_select(dataset.X, dataset.y, cap, dataset.feature_names)

    master = np.random.default_rng(cv_cfg.seed)
    repeat_seeds = [int(s) for s in master.integers(0, 2**31 - 1, size=cv_cfg.repeats)]

    def job(seed):
        return _one_repeat(dataset, seed, cv_cfg.test_frac, sel_cfg, clf_cfg, global_selection)

    if cv_cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cv_cfg.threads) as pool:
            results = list(pool.map(job, repeat_seeds))
    else:
        results = [job(s) for s in repeat_seeds]

    n = dataset.n_samples
    oof_sum = np.zeros(n)
    oof_counts = np.zeros(n, dtype=np.int64)
    aucs = []
    straddles = []
    confusion = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    pooled_scores: list[np.ndarray] = []
    pooled_labels: list[np.ndarray] = []
    selected_first: list[str] = []
    for k, (auc_value, in_test, scores, straddle, selected) in enumerate(results):
        aucs.append(float(auc_value))
        straddles.append(straddle)
        oof_sum[in_test] += scores
        oof_counts[in_test] += 1
        y_test = dataset.y[in_test]
        pred = scores >= clf_cfg.threshold
        pos = y_test == 1
        confusion["tp"] += int((pred & pos).sum())
        confusion["fp"] += int((pred & ~pos).sum())
        confusion["tn"] += int((~pred & ~pos).sum())
        confusion["fn"] += int((~pred & pos).sum())
        pooled_scores.append(scores)
        pooled_labels.append(y_test)
        if k == 0:
            selected_first = list(selected)

    oof = np.divide(oof_sum, oof_counts, out=np.zeros(n), where=oof_counts > 0)
    pooled = roc_curve(np.concatenate(pooled_scores), np.concatenate(pooled_labels)).auc
    return CvReport(
        set_id=dataset.set_id,
        aucs=aucs,
        mean_auc=float(np.mean(aucs)),
        std_auc=float(np.std(aucs)),
        pooled_auc=float(pooled),
        repeat_seeds=repeat_seeds,
        confusion=confusion,
        oof_scores=oof,
        oof_counts=oof_counts,
        straddle_counts=straddles,
        selected_first_repeat=selected_first,
    )
