"""First-order intensity statistics over an ROI.

Entropy and Uniformity use a fixed 32-bin histogram over the ROI intensity
range (log base 2). Variance is the population variance; Skewness/Kurtosis are
standardized central moments (Kurtosis is not excess-corrected) and defined as
0 for a constant ROI. Percentiles use linear interpolation.
"""

from __future__ import annotations

import numpy as np

from ..volume import RoiMask, VolumeImage, check_aligned, require_nonempty

ENTROPY_BINS = 32

FIRSTORDER_FEATURES = (
    "Mean",
    "Median",
    "Minimum",
    "Maximum",
    "Range",
    "Variance",
    "Skewness",
    "Kurtosis",
    "Energy",
    "Entropy",
    "Uniformity",
    "RootMeanSquared",
    "MeanAbsoluteDeviation",
    "10Percentile",
    "90Percentile",
    "InterquartileRange",
)


def bin_levels(values: np.ndarray, n_bins: int) -> np.ndarray:
    """Fixed-bin-count quantization to integer levels 1..n_bins (constant -> 1)."""
    vmin = values.min()
    vmax = values.max()
    if vmin == vmax:
        return np.ones(values.shape, dtype=np.int64)
    raw = np.floor(n_bins * (values - vmin) / (vmax - vmin)).astype(np.int64) + 1
    return np.minimum(raw, n_bins)


def firstorder_features(img: VolumeImage, mask: RoiMask) -> dict[str, float]:
    """Compute the 16 first-order features for one (volume, mask) pair."""
    check_aligned(img, mask)
    require_nonempty(mask)
    v = img.voxels[mask.voxels]
    n = v.size
    mean = float(v.mean())
    centered = v - mean
    m2 = float(np.mean(centered**2))
    if m2 > 0.0:
        skewness = float(np.mean(centered**3)) / m2**1.5
        kurtosis = float(np.mean(centered**4)) / m2**2
    else:
        skewness = 0.0
        kurtosis = 0.0

    levels = bin_levels(v, ENTROPY_BINS)
    p = np.bincount(levels, minlength=ENTROPY_BINS + 1)[1:].astype(np.float64) / n
    nz = p[p > 0.0]
    entropy = float(-(nz * np.log2(nz)).sum())
    uniformity = float((p**2).sum())

    p10, p25, p75, p90 = np.percentile(v, [10, 25, 75, 90])
    return {
        "Mean": mean,
        "Median": float(np.median(v)),
        "Minimum": float(v.min()),
        "Maximum": float(v.max()),
        "Range": float(v.max() - v.min()),
        "Variance": m2,
        "Skewness": skewness,
        "Kurtosis": kurtosis,
        "Energy": float((v**2).sum()),
        "Entropy": entropy,
        "Uniformity": uniformity,
        "RootMeanSquared": float(np.sqrt(np.mean(v**2))),
        "MeanAbsoluteDeviation": float(np.mean(np.abs(centered))),
        "10Percentile": float(p10),
        "90Percentile": float(p90),
        "InterquartileRange": float(p75 - p25),
    }
