"""Full per-image feature extraction with the naming grammar
``<image-tag>-<filter>-<class>-<feature>``.

An original-only run emits 98 features per image (14 shape + 16 first-order +
22 GLCM + 16 GLRLM + 16 GLSZM + 14 GLDM). With wavelet subbands enabled, the
intensity classes are re-extracted on each of the 8 subbands under the
original mask (shape is mask-only and extracted once), for 98 + 8*84 = 770.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError
from ..volume import RoiMask, VolumeImage, check_aligned, require_nonempty
from ..wavelet import SUBBAND_LABELS, decompose, get_bank
from .firstorder import FIRSTORDER_FEATURES, firstorder_features
from .shape import SHAPE_FEATURES, shape_features
from .texture import TEXTURE_FAMILIES, discretize, texture_features

ORIGINAL_FEATURE_COUNT = 98
WAVELET_FEATURE_COUNT = 770


@dataclass(frozen=True)
class ExtractionConfig:
    n_bins: int = 32
    wavelet: str | None = "haar"  # "haar", "coif1" or None/"none"

    def wavelet_bank(self) -> str | None:
        if self.wavelet in (None, "none", ""):
            return None
        return self.wavelet

    def features_per_image(self) -> int:
        return WAVELET_FEATURE_COUNT if self.wavelet_bank() else ORIGINAL_FEATURE_COUNT


def _intensity_block(img: VolumeImage, mask: RoiMask, n_bins: int, prefix: str, out: dict) -> None:
    fo = firstorder_features(img, mask)
    for name in FIRSTORDER_FEATURES:
        out[f"{prefix}-firstorder-{name}"] = fo[name]
    droi = discretize(img, mask, n_bins)
    for family in TEXTURE_FAMILIES:
        feats = texture_features(droi, family)
        for name, value in feats.items():
            out[f"{prefix}-{family}-{name}"] = value


def extract_all(img: VolumeImage, mask: RoiMask, config: ExtractionConfig, tag: str) -> dict[str, float]:
    """Extract the full feature vector of one (volume, mask) pair.

    ``tag`` is the image-role prefix, e.g. "follow-up-mr", "Plan-mr", "Plan-ct".
    Output order is deterministic: shape, then original intensity classes, then
    subband intensity classes in LLL..HHH order.
    """
    check_aligned(img, mask)
    require_nonempty(mask)
    out: dict[str, float] = {}
    sh = shape_features(mask, img.spacing)
    for name in SHAPE_FEATURES:
        out[f"{tag}-original-shape-{name}"] = sh[name]
    _intensity_block(img, mask, config.n_bins, f"{tag}-original", out)
    bank_name = config.wavelet_bank()
    if bank_name:
        subbands = decompose(img, get_bank(bank_name))
        for label in SUBBAND_LABELS:
            _intensity_block(subbands[label], mask, config.n_bins, f"{tag}-wavelet-{label}", out)
    bad = [name for name, value in out.items() if not np.isfinite(value)]
    if bad:
        raise NumericalError(f"non-finite feature values: {bad[:5]}{'...' if len(bad) > 5 else ''}")
    return out
