"""Shared constructors for volume/mask fixtures (x-fastest flat value order)."""

import numpy as np

from radrisk import RoiMask, VolumeImage


def vol(values, dims, spacing=(1.0, 1.0, 1.0), modality="MR"):
    arr = np.asarray(values, dtype=np.float64).reshape(dims, order="F")
    return VolumeImage(arr, spacing, modality)


def vol3d(arr, spacing=(1.0, 1.0, 1.0), modality="MR"):
    return VolumeImage(np.asarray(arr, dtype=np.float64), spacing, modality)


def mask_of(values, dims):
    return RoiMask(np.asarray(values).reshape(dims, order="F").astype(bool))


def full_mask(dims):
    return RoiMask(np.ones(dims, dtype=bool))


def random_roi(rng, max_dim=5, n_bins=4):
    """Random small ROI as (coords-keyed level dict, DiscretizedRoi inputs)."""
    dims = tuple(int(rng.integers(1, max_dim + 1)) for _ in range(3))
    mask = rng.uniform(size=dims) < rng.uniform(0.3, 0.9)
    if not mask.any():
        mask[tuple(int(rng.integers(0, d)) for d in dims)] = True
    values = rng.normal(size=dims)
    return dims, mask, values
