"""Longitudinal cohort model: patients, lesions, timepoints, risk labeling,
delta features, and feature-set assembly.

Labeling rule (horizon defaults to 100 days): a follow-up image is HRM when a
progression event falls in ``(imaging_date, imaging_date + horizon]``, LRM when
the lesion is observed at least ``horizon`` days past the image without an
event (an event beyond the horizon also counts as observation). Follow-ups
censored before the horizon with no event are excluded from classification but
kept as censored points for survival plotting. Follow-ups dated on or after
the event date are dropped with a warning.
"""

from __future__ import annotations

import datetime
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError
from .volume import RoiMask, VolumeImage, read_volume

log = logging.getLogger(__name__)

HORIZON_DAYS = 100

TAG_FOLLOWUP = "follow-up-mr"
TAG_PLAN_MR = "Plan-mr"
TAG_PLAN_CT = "Plan-ct"
TAG_DELTA = "Delta-mr"

_FILTER_MARKERS = ("-original-", "-wavelet-")

CLINICAL_FEATURE_NAMES = (
    "clinical-rpa_class",
    "clinical-eqd",
    "clinical-n_metastases",
    "clinical-age",
    "clinical-sex",
    "clinical-karnofsky",
    "clinical-primary_lung",
    "clinical-primary_melanoma",
    "clinical-primary_breast",
    "clinical-gap_days",
    "clinical-lesion_count_class",
    "clinical-extracranial",
)


@dataclass(frozen=True)
class ClinicalData:
    """The 12-covariate clinical schema (declared stand-in; only rpa_class,
    eqd and n_metastases are domain-fixed, the rest are synthetic-schema)."""

    rpa_class: int
    eqd: float
    n_metastases: int
    age: float
    sex: int  # 0 = F, 1 = M
    karnofsky: int
    primary_site: str  # lung / melanoma / breast / other
    extracranial: int

    def __post_init__(self):
        if self.rpa_class not in (1, 2, 3):
            raise DataError(f"rpa_class must be 1..3, got {self.rpa_class}")
        if self.n_metastases < 1:
            raise DataError(f"n_metastases must be >= 1, got {self.n_metastases}")


def clinical_features(clinical: ClinicalData, gap_days: int) -> dict[str, float]:
    """Flatten clinical covariates into the 12 feature columns for one sample."""
    n = clinical.n_metastases
    count_class = 1 if n == 1 else (2 if n <= 3 else 3)
    return {
        "clinical-rpa_class": float(clinical.rpa_class),
        "clinical-eqd": float(clinical.eqd),
        "clinical-n_metastases": float(n),
        "clinical-age": float(clinical.age),
        "clinical-sex": float(clinical.sex),
        "clinical-karnofsky": float(clinical.karnofsky),
        "clinical-primary_lung": 1.0 if clinical.primary_site == "lung" else 0.0,
        "clinical-primary_melanoma": 1.0 if clinical.primary_site == "melanoma" else 0.0,
        "clinical-primary_breast": 1.0 if clinical.primary_site == "breast" else 0.0,
        "clinical-gap_days": float(gap_days),
        "clinical-lesion_count_class": float(count_class),
        "clinical-extracranial": float(clinical.extracranial),
    }


@dataclass(frozen=True)
class ImageSource:
    """Reference to one (volume, mask) pair: either in-memory or on disk."""

    image_path: str | None = None
    mask_path: str | None = None
    volume: VolumeImage | None = None
    mask: RoiMask | None = None

    def load(self, base_dir: Path | None = None) -> tuple[VolumeImage, RoiMask]:
        if self.volume is not None and self.mask is not None:
            return self.volume, self.mask
        if self.image_path is None or self.mask_path is None:
            raise DataError("image source has neither in-memory data nor paths")
        base = base_dir or Path(".")
        img = read_volume(base / self.image_path)
        mask_vol = read_volume(base / self.mask_path)
        return img, RoiMask(mask_vol.voxels > 0.5)


@dataclass(frozen=True)
class Followup:
    date: datetime.date
    source: ImageSource


@dataclass(frozen=True)
class MetastasisRecord:
    patient_id: str
    lesion_id: str
    clinical: ClinicalData
    planning_date: datetime.date
    planning_mr: ImageSource
    followups: tuple[Followup, ...]
    censor_date: datetime.date
    planning_ct: ImageSource | None = None
    event_date: datetime.date | None = None

    def __post_init__(self):
        dates = [f.date for f in self.followups]
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise DataError(f"{self.lesion_id}: follow-up dates must be strictly increasing")
        if self.event_date is not None and dates and self.event_date < dates[0]:
            raise DataError(f"{self.lesion_id}: event precedes the first follow-up")
        imaging = [self.planning_date] + dates
        if any(d > self.censor_date for d in imaging):
            raise DataError(f"{self.lesion_id}: censor_date precedes an imaging date")


@dataclass(frozen=True)
class LabeledSample:
    lesion_id: str
    patient_id: str
    imaging_date: datetime.date
    label: str  # "HRM" or "LRM"
    days_to_event_or_censor: int
    censored: bool
    gap_days: int  # planning -> follow-up
    followup_index: int


@dataclass(frozen=True)
class KmPoint:
    """Censored-before-horizon follow-up kept only for survival plotting."""

    lesion_id: str
    imaging_date: datetime.date
    days: int
    censored: bool = True


@dataclass
class LabelingResult:
    samples: list[LabeledSample]
    km_censored: list[KmPoint]
    dropped: list[tuple[str, datetime.date, str]]


def label_samples(records: list[MetastasisRecord], horizon_days: int = HORIZON_DAYS) -> LabelingResult:
    """Apply the risk-labeling rule to every follow-up image of every lesion."""
    if horizon_days <= 0:
        raise DataError(f"horizon must be > 0 days, got {horizon_days}")
    samples: list[LabeledSample] = []
    km_extras: list[KmPoint] = []
    dropped: list[tuple[str, datetime.date, str]] = []
    for rec in records:
        for k, fu in enumerate(rec.followups):
            if rec.event_date is not None and fu.date >= rec.event_date:
                reason = "imaging on/after the progression event"
                log.warning("%s %s dropped: %s", rec.lesion_id, fu.date, reason)
                dropped.append((rec.lesion_id, fu.date, reason))
                continue
            gap = (fu.date - rec.planning_date).days
            if rec.event_date is not None:
                days = (rec.event_date - fu.date).days
                label = "HRM" if days <= horizon_days else "LRM"
                samples.append(
                    LabeledSample(rec.lesion_id, rec.patient_id, fu.date, label, days, False, gap, k)
                )
            else:
                days = (rec.censor_date - fu.date).days
                if days >= horizon_days:
                    samples.append(
                        LabeledSample(rec.lesion_id, rec.patient_id, fu.date, "LRM", days, True, gap, k)
                    )
                else:
                    km_extras.append(KmPoint(rec.lesion_id, fu.date, days))
    return LabelingResult(samples, km_extras, dropped)


# ---------------------------------------------------------------------------
# Delta features and feature-set assembly


def strip_image_tag(name: str) -> str:
    """Drop the leading image tag: 'Plan-mr-original-shape-Volume' -> 'original-shape-Volume'."""
    for marker in _FILTER_MARKERS:
        pos = name.find(marker)
        if pos >= 0:
            return name[pos + 1 :]
    raise DataError(f"feature name {name!r} does not follow the <tag>-<filter>-<class>-<name> grammar")


def delta_features(followup: dict[str, float], planning: dict[str, float], days: int) -> dict[str, float]:
    """Per-day feature change between follow-up and planning MRI."""
    if days <= 0:
        raise DataError(f"elapsed days must be > 0, got {days}")
    planning_by_suffix = {strip_image_tag(n): v for n, v in planning.items()}
    out: dict[str, float] = {}
    for name, value in followup.items():
        suffix = strip_image_tag(name)
        if suffix not in planning_by_suffix:
            raise DataError(f"no planning counterpart for feature {name!r}")
        out[f"{TAG_DELTA}-{suffix}"] = (value - planning_by_suffix[suffix]) / days
    if len(planning_by_suffix) != len(out):
        raise DataError("planning vector has features missing from the follow-up vector")
    return out


_SET_FLAGS = {
    1: ("clinical",),
    2: ("clinical", "followup_mr"),
    3: ("clinical", "delta"),
    4: ("clinical", "planning_mr"),
    5: ("clinical", "planning_ct"),
    6: ("clinical", "followup_mr", "delta", "planning_mr", "planning_ct"),
    7: ("clinical", "followup_mr", "delta", "planning_mr", "planning_ct", "wavelet"),
}

_IMAGE_BLOCKS = ("followup_mr", "delta", "planning_mr", "planning_ct")


@dataclass(frozen=True)
class FeatureSetSpec:
    """One of the 7 canonical feature-set rows."""

    set_id: int
    clinical: bool = False
    followup_mr: bool = False
    delta: bool = False
    planning_mr: bool = False
    planning_ct: bool = False
    wavelet: bool = False

    def __post_init__(self):
        if self.set_id not in _SET_FLAGS:
            raise DataError(f"feature set id must be 1..7, got {self.set_id}")
        expected = _SET_FLAGS[self.set_id]
        actual = tuple(
            name
            for name in ("clinical", "followup_mr", "delta", "planning_mr", "planning_ct", "wavelet")
            if getattr(self, name)
        )
        if actual != expected:
            raise DataError(f"set {self.set_id} flags {actual} do not match the canonical row {expected}")

    @property
    def needs_ct(self) -> bool:
        return self.planning_ct


def feature_set(set_id: int) -> FeatureSetSpec:
    flags = _SET_FLAGS.get(set_id)
    if flags is None:
        raise DataError(f"feature set id must be 1..7, got {set_id}")
    return FeatureSetSpec(set_id, **{name: True for name in flags})


def _filtered(block: dict[str, float], marker: str) -> dict[str, float]:
    return {n: v for n, v in block.items() if marker in n}


def assemble(
    spec: FeatureSetSpec,
    clinical: dict[str, float],
    followup_mr: dict[str, float] | None = None,
    delta: dict[str, float] | None = None,
    planning_mr: dict[str, float] | None = None,
    planning_ct: dict[str, float] | None = None,
) -> dict[str, float]:
    """Concatenate the flagged feature blocks in a stable column order.

    Original-filter columns come first (per block, in canonical block order);
    when the wavelet flag is set, the wavelet-filter columns of every included
    image block are appended as one trailing block.
    """
    blocks = {
        "followup_mr": followup_mr,
        "delta": delta,
        "planning_mr": planning_mr,
        "planning_ct": planning_ct,
    }
    out: dict[str, float] = {}
    if spec.clinical:
        if len(clinical) != len(CLINICAL_FEATURE_NAMES):
            raise DataError(f"clinical block has {len(clinical)} columns, expected 12")
        out.update(clinical)
    for name in _IMAGE_BLOCKS:
        if getattr(spec, name):
            block = blocks[name]
            if block is None:
                raise DataError(f"feature set {spec.set_id} requires the {name} block")
            out.update(_filtered(block, "-original-"))
    if spec.wavelet:
        for name in _IMAGE_BLOCKS:
            if getattr(spec, name):
                out.update(_filtered(blocks[name], "-wavelet-"))
    return out


# ---------------------------------------------------------------------------
# Manifest I/O

MANIFEST_FORMAT_VERSION = 1


def _parse_date(value: str, context: str) -> datetime.date:
    try:
        return datetime.date.fromisoformat(value)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{context}: bad ISO date {value!r}") from exc


def _parse_source(obj: dict | None, context: str) -> ImageSource | None:
    if obj is None:
        return None
    if not isinstance(obj, dict) or "image" not in obj or "mask" not in obj:
        raise DataError(f"{context}: image ref must be an object with 'image' and 'mask'")
    return ImageSource(image_path=obj["image"], mask_path=obj["mask"])


def load_manifest(path: str | Path) -> list[MetastasisRecord]:
    """Load and validate a cohort manifest (schema in the README)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed manifest JSON {path}: {exc}") from exc
    if not isinstance(data, dict) or "patients" not in data:
        raise DataError(f"manifest {path} must be an object with a 'patients' array")
    records: list[MetastasisRecord] = []
    for p in data["patients"]:
        pid = p.get("patient_id")
        if not pid:
            raise DataError("manifest patient missing patient_id")
        try:
            clinical = ClinicalData(**p["clinical"])
        except (KeyError, TypeError) as exc:
            raise DataError(f"{pid}: bad clinical block ({exc})") from exc
        for lesion in p.get("lesions", []):
            lid = lesion.get("lesion_id")
            if not lid:
                raise DataError(f"{pid}: lesion missing lesion_id")
            ctx = f"{pid}/{lid}"
            followups = tuple(
                Followup(_parse_date(f["date"], ctx), _parse_source(f, ctx))
                for f in lesion.get("followups", [])
            )
            event = lesion.get("event_date")
            records.append(
                MetastasisRecord(
                    patient_id=pid,
                    lesion_id=lid,
                    clinical=clinical,
                    planning_date=_parse_date(lesion["planning_date"], ctx),
                    planning_mr=_parse_source(lesion["planning_mr"], ctx),
                    planning_ct=_parse_source(lesion.get("planning_ct"), ctx),
                    followups=followups,
                    event_date=_parse_date(event, ctx) if event else None,
                    censor_date=_parse_date(lesion["censor_date"], ctx),
                )
            )
    return records


def manifest_dict(records: list[MetastasisRecord], source_paths: dict) -> dict:
    """Serialize records to the manifest schema.

    ``source_paths`` maps id(ImageSource) -> {"image": ..., "mask": ...} for
    sources that were written to disk.
    """

    def ref(src: ImageSource | None):
        if src is None:
            return None
        if id(src) in source_paths:
            return source_paths[id(src)]
        return {"image": src.image_path, "mask": src.mask_path}

    patients: dict[str, dict] = {}
    for rec in records:
        pat = patients.setdefault(
            rec.patient_id,
            {
                "patient_id": rec.patient_id,
                "clinical": {
                    "rpa_class": rec.clinical.rpa_class,
                    "eqd": rec.clinical.eqd,
                    "n_metastases": rec.clinical.n_metastases,
                    "age": rec.clinical.age,
                    "sex": rec.clinical.sex,
                    "karnofsky": rec.clinical.karnofsky,
                    "primary_site": rec.clinical.primary_site,
                    "extracranial": rec.clinical.extracranial,
                },
                "lesions": [],
            },
        )
        lesion = {
            "lesion_id": rec.lesion_id,
            "planning_date": rec.planning_date.isoformat(),
            "planning_mr": ref(rec.planning_mr),
            "planning_ct": ref(rec.planning_ct),
            "followups": [
                {"date": fu.date.isoformat(), **ref(fu.source)} for fu in rec.followups
            ],
            "event_date": rec.event_date.isoformat() if rec.event_date else None,
            "censor_date": rec.censor_date.isoformat(),
        }
        pat["lesions"].append(lesion)
    return {"format_version": MANIFEST_FORMAT_VERSION, "patients": list(patients.values())}
