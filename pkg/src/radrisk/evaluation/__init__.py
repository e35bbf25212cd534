"""Evaluation: ROC/AUC, Monte-Carlo cross-validation, survival statistics,
and the predicted-risk split report."""

from .cv import CvConfig, CvReport, SelectionConfig, monte_carlo_cv
from .report import (
    RiskSplitReport,
    format_confusion,
    format_median_split,
    format_months,
    risk_split_report,
    write_risk_split,
)
from .roc import RocCurve, auc, confusion_at, roc_curve
from .survival import (
    DAYS_PER_MONTH,
    LogRankResult,
    SurvivalCurve,
    days_to_months,
    kaplan_meier,
    log_rank,
)

__all__ = [
    "CvConfig",
    "CvReport",
    "SelectionConfig",
    "monte_carlo_cv",
    "RiskSplitReport",
    "format_confusion",
    "format_median_split",
    "format_months",
    "risk_split_report",
    "write_risk_split",
    "RocCurve",
    "auc",
    "confusion_at",
    "roc_curve",
    "DAYS_PER_MONTH",
    "LogRankResult",
    "SurvivalCurve",
    "days_to_months",
    "kaplan_meier",
    "log_rank",
]
