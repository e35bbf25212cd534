"""Morphological features of a binary ROI on a spaced voxel grid.

Conventions (documented because they differ from mesh-based tools):

* ``Volume`` is voxel count times voxel volume; ``SurfaceArea`` counts exposed
  voxel faces. Both are exact on the voxel grid.
* Axis lengths are ``4 * sqrt(lambda)`` of the physical-coordinate covariance
  eigenvalues of voxel centers (population covariance, descending eigenvalues).
* For a single-voxel ROI the covariance vanishes: axis lengths are 0 and
  ``Elongation``/``Flatness`` are defined as 0.
* Diameters are maximal pairwise distances between voxel centers;
  ``Maximum2DDiameterRow/Column/Slice`` restrict pairs to planes orthogonal to
  the x / y / z axis respectively (0 when every such plane holds one voxel).
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DataError
from ..volume import RoiMask, require_nonempty

SHAPE_FEATURES = (
    "Volume",
    "SurfaceArea",
    "SurfaceVolumeRatio",
    "Sphericity",
    "SphericalDisproportion",
    "MajorAxisLength",
    "MinorAxisLength",
    "LeastAxisLength",
    "Elongation",
    "Flatness",
    "Maximum3DDiameter",
    "Maximum2DDiameterRow",
    "Maximum2DDiameterColumn",
    "Maximum2DDiameterSlice",
)


def _surface_area(fg: np.ndarray, spacing) -> float:
    sx, sy, sz = spacing
    face = (sy * sz, sx * sz, sx * sy)
    area = 0.0
    for axis in range(3):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(0, 1)
        hi[axis] = slice(fg.shape[axis] - 1, fg.shape[axis])
        exposed = int(fg[tuple(lo)].sum()) + int(fg[tuple(hi)].sum())
        a = [slice(None)] * 3
        b = [slice(None)] * 3
        a[axis] = slice(1, None)
        b[axis] = slice(None, -1)
        exposed += int((fg[tuple(a)] & ~fg[tuple(b)]).sum())
        exposed += int((fg[tuple(b)] & ~fg[tuple(a)]).sum())
        area += exposed * face[axis]
    return area


def _max_pairwise(points: np.ndarray) -> float:
    if points.shape[0] < 2:
        return 0.0
    best = 0.0
    # blocked to bound memory on large ROIs
    step = 512
    for i in range(0, points.shape[0], step):
        chunk = points[i : i + step]
        d2 = np.sum((chunk[:, None, :] - points[None, :, :]) ** 2, axis=2)
        best = max(best, float(d2.max()))
    return math.sqrt(best)


def shape_features(mask: RoiMask, spacing) -> dict[str, float]:
    """Compute the 14 shape features for one ROI."""
    require_nonempty(mask)
    spacing = tuple(float(s) for s in spacing)
    if len(spacing) != 3 or any(s <= 0 for s in spacing):
        raise DataError(f"spacing must be three positive floats, got {spacing}")
    fg = mask.voxels
    coords = np.argwhere(fg)
    n = coords.shape[0]
    phys = coords.astype(np.float64) * np.asarray(spacing)

    volume = n * spacing[0] * spacing[1] * spacing[2]
    area = _surface_area(fg, spacing)
    sphericity = (36.0 * math.pi * volume**2) ** (1.0 / 3.0) / area

    centered = phys - phys.mean(axis=0)
    cov = centered.T @ centered / n
    eig = np.linalg.eigvalsh(cov)[::-1]
    eig = np.clip(eig, 0.0, None)
    major, minor, least = (4.0 * math.sqrt(v) for v in eig)
    if eig[0] > 0.0:
        elongation = math.sqrt(eig[1] / eig[0])
        flatness = math.sqrt(eig[2] / eig[0])
    else:
        elongation = 0.0
        flatness = 0.0

    diam3d = _max_pairwise(phys)
    plane_diams = []
    for axis in range(3):
        keep = [a for a in range(3) if a != axis]
        best = 0.0
        for value in np.unique(coords[:, axis]):
            pts = phys[coords[:, axis] == value][:, keep]
            best = max(best, _max_pairwise(pts))
        plane_diams.append(best)

    return {
        "Volume": volume,
        "SurfaceArea": area,
        "SurfaceVolumeRatio": area / volume,
        "Sphericity": sphericity,
        "SphericalDisproportion": 1.0 / sphericity,
        "MajorAxisLength": major,
        "MinorAxisLength": minor,
        "LeastAxisLength": least,
        "Elongation": elongation,
        "Flatness": flatness,
        "Maximum3DDiameter": diam3d,
        "Maximum2DDiameterRow": plane_diams[0],
        "Maximum2DDiameterColumn": plane_diams[1],
        "Maximum2DDiameterSlice": plane_diams[2],
    }
