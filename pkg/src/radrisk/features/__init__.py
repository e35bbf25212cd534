"""Radiomic feature extraction: shape, first-order, and texture-matrix classes."""

from .extract import (
    ORIGINAL_FEATURE_COUNT,
    WAVELET_FEATURE_COUNT,
    ExtractionConfig,
    extract_all,
)
from .firstorder import ENTROPY_BINS, FIRSTORDER_FEATURES, bin_levels, firstorder_features
from .shape import SHAPE_FEATURES, shape_features
from .texture import (
    DIRECTIONS_13,
    FAMILY_FEATURES,
    GLCM_FEATURES,
    GLDM_FEATURES,
    GLRLM_FEATURES,
    GLSZM_FEATURES,
    TEXTURE_FAMILIES,
    DiscretizedRoi,
    discretize,
    texture_features,
)

__all__ = [
    "ORIGINAL_FEATURE_COUNT",
    "WAVELET_FEATURE_COUNT",
    "ExtractionConfig",
    "extract_all",
    "ENTROPY_BINS",
    "FIRSTORDER_FEATURES",
    "bin_levels",
    "firstorder_features",
    "SHAPE_FEATURES",
    "shape_features",
    "DIRECTIONS_13",
    "FAMILY_FEATURES",
    "GLCM_FEATURES",
    "GLDM_FEATURES",
    "GLRLM_FEATURES",
    "GLSZM_FEATURES",
    "TEXTURE_FAMILIES",
    "DiscretizedRoi",
    "discretize",
    "texture_features",
]
