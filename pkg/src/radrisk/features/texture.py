"""Texture-matrix features over a discretized ROI: GLCM, GLRLM, GLSZM, GLDM.

All four families use the 26-neighborhood (Chebyshev distance 1):

* GLCM / GLRLM accumulate over the 13 unique 3D direction pairs, symmetric
  per direction, and report the mean of each feature over directions (GLCM
  directions without any voxel pair are skipped; if no direction has a pair,
  every GLCM feature is 0 by convention).
* GLSZM zones are 26-connected components of equal gray level.
* GLDM dependence counts the center voxel plus its 26-neighbors within the
  ROI whose level differs by at most alpha = 0.
* GLCM ``Correlation`` is 1 by convention when either marginal is degenerate.

Gray levels are 1-based (1..Ng) as produced by :func:`discretize`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ConfigError, DataError
from ..volume import RoiMask, VolumeImage, check_aligned, require_nonempty
from .firstorder import bin_levels

TEXTURE_FAMILIES = ("glcm", "glrlm", "glszm", "gldm")

# one representative per +/- pair of the 26-neighborhood
DIRECTIONS_13 = (
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
    (1, 1, 0),
    (1, -1, 0),
    (1, 0, 1),
    (1, 0, -1),
    (0, 1, 1),
    (0, 1, -1),
    (1, 1, 1),
    (1, 1, -1),
    (1, -1, 1),
    (1, -1, -1),
)

GLDM_ALPHA = 0

GLCM_FEATURES = (
    "Autocorrelation",
    "ClusterProminence",
    "ClusterShade",
    "ClusterTendency",
    "Contrast",
    "Correlation",
    "DifferenceAverage",
    "DifferenceEntropy",
    "DifferenceVariance",
    "Id",
    "Idm",
    "Idmn",
    "Idn",
    "Imc1",
    "Imc2",
    "InverseVariance",
    "JointAverage",
    "JointEnergy",
    "JointEntropy",
    "MaximumProbability",
    "SumEntropy",
    "SumSquares",
)

GLRLM_FEATURES = (
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "GrayLevelVariance",
    "HighGrayLevelRunEmphasis",
    "LongRunEmphasis",
    "LongRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis",
    "LowGrayLevelRunEmphasis",
    "RunEntropy",
    "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized",
    "RunPercentage",
    "RunVariance",
    "ShortRunEmphasis",
    "ShortRunHighGrayLevelEmphasis",
    "ShortRunLowGrayLevelEmphasis",
)

GLSZM_FEATURES = (
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "GrayLevelVariance",
    "HighGrayLevelZoneEmphasis",
    "LargeAreaEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis",
    "LowGrayLevelZoneEmphasis",
    "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized",
    "SmallAreaEmphasis",
    "SmallAreaHighGrayLevelEmphasis",
    "SmallAreaLowGrayLevelEmphasis",
    "ZoneEntropy",
    "ZonePercentage",
    "ZoneVariance",
)

GLDM_FEATURES = (
    "DependenceEntropy",
    "DependenceNonUniformity",
    "DependenceNonUniformityNormalized",
    "DependenceVariance",
    "GrayLevelNonUniformity",
    "GrayLevelVariance",
    "HighGrayLevelEmphasis",
    "LargeDependenceEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis",
    "LowGrayLevelEmphasis",
    "SmallDependenceEmphasis",
    "SmallDependenceHighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis",
)

FAMILY_FEATURES = {
    "glcm": GLCM_FEATURES,
    "glrlm": GLRLM_FEATURES,
    "glszm": GLSZM_FEATURES,
    "gldm": GLDM_FEATURES,
}


@dataclass(frozen=True)
class DiscretizedRoi:
    """Quantized ROI: integer gray level per ROI voxel, plus voxel coordinates."""

    levels: np.ndarray
    n_bins: int
    coords: np.ndarray
    spacing: tuple[float, float, float]

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=np.int64)
        coords = np.asarray(self.coords, dtype=np.int64)
        if levels.size == 0:
            raise DataError("discretized ROI is empty")
        if levels.shape[0] != coords.shape[0] or coords.ndim != 2 or coords.shape[1] != 3:
            raise DataError("levels and coords disagree")
        if levels.min() < 1 or levels.max() > self.n_bins:
            raise DataError(f"levels out of range 1..{self.n_bins}")
        levels.flags.writeable = False
        coords.flags.writeable = False
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    def level_grid(self) -> np.ndarray:
        """Dense level array over the ROI bounding box; 0 marks outside-ROI."""
        mn = self.coords.min(axis=0)
        shape = self.coords.max(axis=0) - mn + 1
        grid = np.zeros(shape, dtype=np.int64)
        grid[tuple((self.coords - mn).T)] = self.levels
        return grid


def discretize(img: VolumeImage, mask: RoiMask, n_bins: int) -> DiscretizedRoi:
    """Fixed-bin-count quantization of ROI intensities into levels 1..n_bins.

    level = min(n_bins, 1 + floor(n_bins * (v - vmin) / (vmax - vmin))); a
    constant ROI maps every voxel to level 1.
    """
    if n_bins < 2:
        raise ConfigError(f"n_bins must be >= 2, got {n_bins}")
    check_aligned(img, mask)
    require_nonempty(mask)
    coords = np.argwhere(mask.voxels)
    values = img.voxels[mask.voxels]
    return DiscretizedRoi(bin_levels(values, n_bins), n_bins, coords, img.spacing)


def _offset_slices(shape, d):
    """Slice pair (src, dst) so that dst = src + d, both in bounds."""
    src = []
    dst = []
    for n, step in zip(shape, d):
        if step >= 0:
            src.append(slice(0, max(n - step, 0)))
            dst.append(slice(step, n))
        else:
            src.append(slice(-step, n))
            dst.append(slice(0, max(n + step, 0)))
    return tuple(src), tuple(dst)


def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0.0]
    return float(-(nz * np.log2(nz)).sum())


# ---------------------------------------------------------------------------
# GLCM


def _glcm_matrix(grid: np.ndarray, d, n_bins: int) -> np.ndarray:
    src, dst = _offset_slices(grid.shape, d)
    a = grid[src].ravel()
    b = grid[dst].ravel()
    sel = (a > 0) & (b > 0)
    mat = np.zeros((n_bins, n_bins), dtype=np.float64)
    np.add.at(mat, (a[sel] - 1, b[sel] - 1), 1.0)
    return mat + mat.T


def _glcm_features(p: np.ndarray) -> dict[str, float]:
    ng = p.shape[0]
    iv = np.arange(1, ng + 1, dtype=np.float64)
    i = iv[:, None]
    j = iv[None, :]
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    ux = float((p * i).sum())
    uy = float((p * j).sum())
    sigx = math.sqrt(float((p * (i - ux) ** 2).sum()))
    sigy = math.sqrt(float((p * (j - uy) ** 2).sum()))

    idx = np.arange(ng)
    sum_idx = np.add.outer(idx, idx).ravel()
    p_sum = np.bincount(sum_idx, weights=p.ravel(), minlength=2 * ng - 1)
    k_sum = np.arange(2, 2 * ng + 1, dtype=np.float64)
    diff_idx = np.abs(np.subtract.outer(idx, idx)).ravel()
    p_diff = np.bincount(diff_idx, weights=p.ravel(), minlength=ng)
    k_diff = np.arange(0, ng, dtype=np.float64)

    hx = _entropy(px)
    hy = _entropy(py)
    hxy = _entropy(p)
    pij = px[:, None] * py[None, :]
    pos = p > 0.0
    hxy1 = float(-(p[pos] * np.log2(pij[pos])).sum())
    posij = pij > 0.0
    hxy2 = float(-(pij[posij] * np.log2(pij[posij])).sum())

    diff_avg = float((k_diff * p_diff).sum())
    autocorr = float((p * i * j).sum())
    if sigx * sigy > 0.0:
        correlation = (autocorr - ux * uy) / (sigx * sigy)
    else:
        correlation = 1.0
    max_h = max(hx, hy)
    imc1 = (hxy - hxy1) / max_h if max_h > 0.0 else 0.0
    # sqrt has an infinite derivative at 0: clamp the exactly-independent case
    # so rounding noise in HXY2 - HXY cannot surface as a spurious ~1e-8 value
    imc2_arg = 1.0 - math.exp(-2.0 * (hxy2 - hxy))
    imc2 = math.sqrt(imc2_arg) if imc2_arg > 1e-12 else 0.0

    return {
        "Autocorrelation": autocorr,
        "ClusterProminence": float((p * (i + j - ux - uy) ** 4).sum()),
        "ClusterShade": float((p * (i + j - ux - uy) ** 3).sum()),
        "ClusterTendency": float((p * (i + j - ux - uy) ** 2).sum()),
        "Contrast": float((k_diff**2 * p_diff).sum()),
        "Correlation": correlation,
        "DifferenceAverage": diff_avg,
        "DifferenceEntropy": _entropy(p_diff),
        "DifferenceVariance": float(((k_diff - diff_avg) ** 2 * p_diff).sum()),
        "Id": float((p_diff / (1.0 + k_diff)).sum()),
        "Idm": float((p_diff / (1.0 + k_diff**2)).sum()),
        "Idmn": float((p_diff / (1.0 + (k_diff / ng) ** 2)).sum()),
        "Idn": float((p_diff / (1.0 + k_diff / ng)).sum()),
        "Imc1": imc1,
        "Imc2": imc2,
        "InverseVariance": float((p_diff[1:] / k_diff[1:] ** 2).sum()) if ng > 1 else 0.0,
        "JointAverage": ux,
        "JointEnergy": float((p**2).sum()),
        "JointEntropy": hxy,
        "MaximumProbability": float(p.max()),
        "SumEntropy": _entropy(p_sum),
        "SumSquares": float((p * (i - ux) ** 2).sum()),
    }


def _glcm(droi: DiscretizedRoi) -> dict[str, float]:
    grid = droi.level_grid()
    per_direction = []
    for d in DIRECTIONS_13:
        mat = _glcm_matrix(grid, d, droi.n_bins)
        total = mat.sum()
        if total > 0.0:
            per_direction.append(_glcm_features(mat / total))
    if not per_direction:
        return {name: 0.0 for name in GLCM_FEATURES}
    return {name: float(np.mean([f[name] for f in per_direction])) for name in GLCM_FEATURES}


# ---------------------------------------------------------------------------
# GLRLM


def _glrlm_matrix(grid: np.ndarray, d, n_bins: int) -> np.ndarray:
    shape = np.asarray(grid.shape)
    prev_same = np.zeros(grid.shape, dtype=bool)
    src, dst = _offset_slices(grid.shape, d)
    a = grid[src]
    b = grid[dst]
    prev_same[dst] = (a == b) & (a > 0)
    starts = (grid > 0) & ~prev_same

    pos = np.argwhere(starts)
    lvl = grid[starts]
    lengths = np.ones(pos.shape[0], dtype=np.int64)
    active = np.arange(pos.shape[0])
    front = pos.copy()
    step = np.asarray(d)
    while active.size:
        front = front + step
        inb = np.all((front >= 0) & (front < shape), axis=1)
        keep = np.zeros(active.size, dtype=bool)
        if inb.any():
            keep[inb] = grid[tuple(front[inb].T)] == lvl[active[inb]]
        active = active[keep]
        front = front[keep]
        lengths[active] += 1

    mat = np.zeros((n_bins, int(lengths.max())), dtype=np.float64)
    np.add.at(mat, (lvl - 1, lengths - 1), 1.0)
    return mat


def _ilm_stats(mat: np.ndarray):
    """Shared helpers for (gray level, run/size/dependence) count matrices."""
    total = mat.sum()
    p = mat / total
    gi = np.arange(1, mat.shape[0] + 1, dtype=np.float64)[:, None]
    sj = np.arange(1, mat.shape[1] + 1, dtype=np.float64)[None, :]
    return total, p, gi, sj


def _glrlm_features(mat: np.ndarray, n_voxels: int) -> dict[str, float]:
    nr, p, gi, lj = _ilm_stats(mat)
    pg = mat.sum(axis=1)
    pl = mat.sum(axis=0)
    mu_g = float((p * gi).sum())
    mu_l = float((p * lj).sum())
    return {
        "GrayLevelNonUniformity": float((pg**2).sum() / nr),
        "GrayLevelNonUniformityNormalized": float((pg**2).sum() / nr**2),
        "GrayLevelVariance": float((p * (gi - mu_g) ** 2).sum()),
        "HighGrayLevelRunEmphasis": float((mat * gi**2).sum() / nr),
        "LongRunEmphasis": float((mat * lj**2).sum() / nr),
        "LongRunHighGrayLevelEmphasis": float((mat * gi**2 * lj**2).sum() / nr),
        "LongRunLowGrayLevelEmphasis": float((mat * lj**2 / gi**2).sum() / nr),
        "LowGrayLevelRunEmphasis": float((mat / gi**2).sum() / nr),
        "RunEntropy": _entropy(p),
        "RunLengthNonUniformity": float((pl**2).sum() / nr),
        "RunLengthNonUniformityNormalized": float((pl**2).sum() / nr**2),
        "RunPercentage": float(nr / n_voxels),
        "RunVariance": float((p * (lj - mu_l) ** 2).sum()),
        "ShortRunEmphasis": float((mat / lj**2).sum() / nr),
        "ShortRunHighGrayLevelEmphasis": float((mat * gi**2 / lj**2).sum() / nr),
        "ShortRunLowGrayLevelEmphasis": float((mat / (gi**2 * lj**2)).sum() / nr),
    }


def _glrlm(droi: DiscretizedRoi) -> dict[str, float]:
    grid = droi.level_grid()
    n_voxels = droi.levels.size
    per_direction = [
        _glrlm_features(_glrlm_matrix(grid, d, droi.n_bins), n_voxels) for d in DIRECTIONS_13
    ]
    return {name: float(np.mean([f[name] for f in per_direction])) for name in GLRLM_FEATURES}


# ---------------------------------------------------------------------------
# GLSZM


def _glszm_matrix(grid: np.ndarray, n_bins: int) -> np.ndarray:
    structure = np.ones((3, 3, 3), dtype=int)
    zones = []
    for level in np.unique(grid[grid > 0]):
        labeled, ncomp = ndimage.label(grid == level, structure=structure)
        if ncomp == 0:
            continue
        sizes = np.bincount(labeled.ravel())[1:]
        zones.extend((int(level), int(s)) for s in sizes)
    max_size = max(s for _, s in zones)
    mat = np.zeros((n_bins, max_size), dtype=np.float64)
    for level, size in zones:
        mat[level - 1, size - 1] += 1.0
    return mat


def _glszm_features(mat: np.ndarray, n_voxels: int) -> dict[str, float]:
    nz, p, gi, sj = _ilm_stats(mat)
    pg = mat.sum(axis=1)
    ps = mat.sum(axis=0)
    mu_g = float((p * gi).sum())
    mu_s = float((p * sj).sum())
    return {
        "GrayLevelNonUniformity": float((pg**2).sum() / nz),
        "GrayLevelNonUniformityNormalized": float((pg**2).sum() / nz**2),
        "GrayLevelVariance": float((p * (gi - mu_g) ** 2).sum()),
        "HighGrayLevelZoneEmphasis": float((mat * gi**2).sum() / nz),
        "LargeAreaEmphasis": float((mat * sj**2).sum() / nz),
        "LargeAreaHighGrayLevelEmphasis": float((mat * gi**2 * sj**2).sum() / nz),
        "LargeAreaLowGrayLevelEmphasis": float((mat * sj**2 / gi**2).sum() / nz),
        "LowGrayLevelZoneEmphasis": float((mat / gi**2).sum() / nz),
        "SizeZoneNonUniformity": float((ps**2).sum() / nz),
        "SizeZoneNonUniformityNormalized": float((ps**2).sum() / nz**2),
        "SmallAreaEmphasis": float((mat / sj**2).sum() / nz),
        "SmallAreaHighGrayLevelEmphasis": float((mat * gi**2 / sj**2).sum() / nz),
        "SmallAreaLowGrayLevelEmphasis": float((mat / (gi**2 * sj**2)).sum() / nz),
        "ZoneEntropy": _entropy(p),
        "ZonePercentage": float(nz / n_voxels),
        "ZoneVariance": float((p * (sj - mu_s) ** 2).sum()),
    }


def _glszm(droi: DiscretizedRoi) -> dict[str, float]:
    return _glszm_features(_glszm_matrix(droi.level_grid(), droi.n_bins), droi.levels.size)


# ---------------------------------------------------------------------------
# GLDM


def _gldm_matrix(grid: np.ndarray, n_bins: int, alpha: int = GLDM_ALPHA) -> np.ndarray:
    neighbors = np.zeros(grid.shape, dtype=np.int64)
    for d in DIRECTIONS_13:
        src, dst = _offset_slices(grid.shape, d)
        a = grid[src]
        b = grid[dst]
        dependent = (a > 0) & (b > 0) & (np.abs(a - b) <= alpha)
        neighbors[src] += dependent
        neighbors[dst] += dependent
    roi = grid > 0
    dep = neighbors[roi] + 1  # center voxel counts as dependent on itself
    lvl = grid[roi]
    mat = np.zeros((n_bins, int(dep.max())), dtype=np.float64)
    np.add.at(mat, (lvl - 1, dep - 1), 1.0)
    return mat


def _gldm_features(mat: np.ndarray) -> dict[str, float]:
    nz, p, gi, dj = _ilm_stats(mat)
    pg = mat.sum(axis=1)
    pd = mat.sum(axis=0)
    mu_g = float((p * gi).sum())
    mu_d = float((p * dj).sum())
    return {
        "DependenceEntropy": _entropy(p),
        "DependenceNonUniformity": float((pd**2).sum() / nz),
        "DependenceNonUniformityNormalized": float((pd**2).sum() / nz**2),
        "DependenceVariance": float((p * (dj - mu_d) ** 2).sum()),
        "GrayLevelNonUniformity": float((pg**2).sum() / nz),
        "GrayLevelVariance": float((p * (gi - mu_g) ** 2).sum()),
        "HighGrayLevelEmphasis": float((mat * gi**2).sum() / nz),
        "LargeDependenceEmphasis": float((mat * dj**2).sum() / nz),
        "LargeDependenceHighGrayLevelEmphasis": float((mat * gi**2 * dj**2).sum() / nz),
        "LargeDependenceLowGrayLevelEmphasis": float((mat * dj**2 / gi**2).sum() / nz),
        "LowGrayLevelEmphasis": float((mat / gi**2).sum() / nz),
        "SmallDependenceEmphasis": float((mat / dj**2).sum() / nz),
        "SmallDependenceHighGrayLevelEmphasis": float((mat * gi**2 / dj**2).sum() / nz),
        "SmallDependenceLowGrayLevelEmphasis": float((mat / (gi**2 * dj**2)).sum() / nz),
    }


def _gldm(droi: DiscretizedRoi) -> dict[str, float]:
    return _gldm_features(_gldm_matrix(droi.level_grid(), droi.n_bins))


_DISPATCH = {"glcm": _glcm, "glrlm": _glrlm, "glszm": _glszm, "gldm": _gldm}


def texture_features(droi: DiscretizedRoi, family: str) -> dict[str, float]:
    """Compute one texture family's feature set for a discretized ROI."""
    family = family.lower()
    if family not in _DISPATCH:
        raise ConfigError(f"unknown texture family {family!r} (expected one of {TEXTURE_FAMILIES})")
    return _DISPATCH[family](droi)
