"""3D scalar volumes, ROI masks, file I/O and intensity normalization.

Two on-disk formats are supported:

* RAWJSON: ``<name>.json`` holding ``dims`` (3 ints), ``spacing`` (3 floats),
  ``dtype`` ("f32") and ``data_file`` (sibling raw file, little-endian float32,
  x-fastest order).
* Minimal NIfTI-1: uncompressed single file, little-endian, 348-byte header,
  magic ``n+1\\0``, datatype int16 or float32, spacing taken from pixdim.
  No affine handling, no compression, no resampling.

Volumes are immutable after construction; voxel arrays are indexed ``[x, y, z]``
and marked read-only.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

FORMAT_RAWJSON = "rawjson"
FORMAT_NIFTI = "nifti1"

_NIFTI_MAGIC = b"n+1\x00"
_NIFTI_DTYPES = {4: np.dtype("<i2"), 16: np.dtype("<f4")}


@dataclass(frozen=True)
class VolumeImage:
    """3D scalar grid with physical voxel spacing in mm."""

    voxels: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    modality: str = "MR"

    def __post_init__(self):
        vox = np.asarray(self.voxels, dtype=np.float64)
        if vox.ndim != 3 or min(vox.shape) < 1:
            raise DataError(f"volume must be 3D with positive dims, got shape {vox.shape}")
        if not np.all(np.isfinite(vox)):
            raise DataError("volume contains non-finite voxels")
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or any(s <= 0 for s in spacing):
            raise DataError(f"spacing must be three positive floats, got {self.spacing}")
        if self.modality not in ("MR", "CT"):
            raise DataError(f"unknown modality {self.modality!r} (expected MR or CT)")
        vox = vox.copy()
        vox.flags.writeable = False
        object.__setattr__(self, "voxels", vox)
        object.__setattr__(self, "spacing", spacing)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.voxels.shape


@dataclass(frozen=True)
class RoiMask:
    """Binary lesion mask on the same grid as its paired volume."""

    voxels: np.ndarray

    def __post_init__(self):
        vox = np.asarray(self.voxels)
        if vox.ndim != 3 or min(vox.shape) < 1:
            raise DataError(f"mask must be 3D with positive dims, got shape {vox.shape}")
        vox = vox.astype(bool)
        vox.flags.writeable = False
        object.__setattr__(self, "voxels", vox)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.voxels.shape

    @property
    def count(self) -> int:
        return int(self.voxels.sum())


@dataclass(frozen=True)
class NormalizationParams:
    method: str  # "zscore" or "whitestripe"
    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise DataError(f"normalization sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class WhiteStripeConfig:
    tau: float = 0.05
    bins: int = 256
    min_window_voxels: int = 10


def check_aligned(img: VolumeImage, mask: RoiMask) -> None:
    """Volumes and masks must share a grid; mismatches are hard errors (no resampling)."""
    if img.dims != mask.dims:
        raise DataError(f"volume dims {img.dims} do not match mask dims {mask.dims}")


def require_nonempty(mask: RoiMask) -> None:
    if mask.count == 0:
        raise DataError("ROI mask has no foreground voxels")


# ---------------------------------------------------------------------------
# File I/O


def _infer_format(path: Path) -> str:
    if path.suffix == ".json":
        return FORMAT_RAWJSON
    if path.suffix == ".nii":
        return FORMAT_NIFTI
    raise DataError(f"cannot infer volume format from {path.name!r} (expected .json or .nii)")


def read_volume(path: str | Path, format: str | None = None, modality: str | None = None) -> VolumeImage:
    """Load a volume from disk. Voxel order is normalized to x-fastest."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"volume file not found: {path}")
    fmt = format or _infer_format(path)
    if fmt == FORMAT_RAWJSON:
        return _read_rawjson(path, modality)
    if fmt == FORMAT_NIFTI:
        return _read_nifti(path, modality)
    raise DataError(f"unsupported volume format {fmt!r}")


def write_volume(img: VolumeImage, path: str | Path, format: str | None = None) -> Path:
    """Write a volume to disk (float32 payload for both formats)."""
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt == FORMAT_RAWJSON:
        return _write_rawjson(img, path)
    if fmt == FORMAT_NIFTI:
        return _write_nifti(img, path)
    raise DataError(f"unsupported volume format {fmt!r}")


def _read_rawjson(path: Path, modality: str | None) -> VolumeImage:
    try:
        meta = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed RAWJSON header {path}: {exc}") from exc
    for key in ("dims", "spacing", "dtype", "data_file"):
        if key not in meta:
            raise DataError(f"RAWJSON header {path} missing field {key!r}")
    if meta["dtype"] != "f32":
        raise DataError(f"unsupported scalar type {meta['dtype']!r} in {path} (only f32)")
    dims = tuple(int(d) for d in meta["dims"])
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise DataError(f"RAWJSON dims must be 3 positive ints, got {meta['dims']}")
    spacing = tuple(float(s) for s in meta["spacing"])
    raw_path = path.parent / meta["data_file"]
    if not raw_path.exists():
        raise DataError(f"RAWJSON data file not found: {raw_path}")
    raw = raw_path.read_bytes()
    nvox = dims[0] * dims[1] * dims[2]
    if len(raw) != nvox * 4:
        raise DataError(f"RAWJSON payload size {len(raw)} != {nvox * 4} bytes for dims {dims}")
    vox = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(dims, order="F")
    return VolumeImage(vox, spacing, modality or meta.get("modality", "MR"))


def _write_rawjson(img: VolumeImage, path: Path) -> Path:
    if path.suffix != ".json":
        path = path.with_suffix(".json")
    raw_name = path.stem + ".raw"
    payload = np.asarray(img.voxels, dtype="<f4").ravel(order="F").tobytes()
    (path.parent / raw_name).write_bytes(payload)
    meta = {
        "dims": list(img.dims),
        "spacing": list(img.spacing),
        "dtype": "f32",
        "data_file": raw_name,
        "modality": img.modality,
    }
    path.write_text(json.dumps(meta, indent=2) + "\n")
    return path


def _read_nifti(path: Path, modality: str | None) -> VolumeImage:
    buf = path.read_bytes()
    if len(buf) < 352:
        raise DataError(f"NIfTI file too short ({len(buf)} bytes): {path}")
    (sizeof_hdr,) = struct.unpack_from("<i", buf, 0)
    if sizeof_hdr != 348:
        raise DataError(f"malformed NIfTI header (sizeof_hdr={sizeof_hdr}; big-endian unsupported)")
    if buf[344:348] != _NIFTI_MAGIC:
        raise DataError(f"malformed NIfTI header (bad magic {buf[344:348]!r})")
    dim = struct.unpack_from("<8h", buf, 40)
    ndim = dim[0]
    if not 3 <= ndim <= 7 or any(d != 1 for d in dim[4 : ndim + 1]):
        raise DataError(f"unsupported NIfTI dimensionality dim={list(dim)} (need 3D)")
    dims = tuple(int(d) for d in dim[1:4])
    if any(d < 1 for d in dims):
        raise DataError(f"malformed NIfTI header (dims {dims})")
    (datatype,) = struct.unpack_from("<h", buf, 70)
    if datatype not in _NIFTI_DTYPES:
        raise DataError(f"unsupported scalar type (NIfTI datatype code {datatype}; only int16/float32)")
    dtype = _NIFTI_DTYPES[datatype]
    pixdim = struct.unpack_from("<8f", buf, 76)
    spacing = tuple(float(p) for p in pixdim[1:4])
    if any(s <= 0 for s in spacing):
        raise DataError(f"malformed NIfTI header (pixdim {spacing})")
    (vox_offset,) = struct.unpack_from("<f", buf, 108)
    if vox_offset < 352 or vox_offset != int(vox_offset):
        raise DataError(f"malformed NIfTI header (vox_offset {vox_offset})")
    slope, inter = struct.unpack_from("<2f", buf, 112)
    nvox = dims[0] * dims[1] * dims[2]
    start = int(vox_offset)
    end = start + nvox * dtype.itemsize
    if len(buf) < end:
        raise DataError(f"NIfTI payload truncated ({len(buf)} < {end} bytes)")
    vox = np.frombuffer(buf[start:end], dtype=dtype).astype(np.float64)
    if slope not in (0.0, 1.0) or inter != 0.0:
        vox = vox * float(slope) + float(inter)
    if not np.all(np.isfinite(vox)):
        raise DataError(f"NIfTI volume contains non-finite voxels: {path}")
    return VolumeImage(vox.reshape(dims, order="F"), spacing, modality or "MR")


def _write_nifti(img: VolumeImage, path: Path) -> Path:
    if path.suffix != ".nii":
        path = path.with_suffix(".nii")
    hdr = bytearray(352)
    struct.pack_into("<i", hdr, 0, 348)
    nx, ny, nz = img.dims
    struct.pack_into("<8h", hdr, 40, 3, nx, ny, nz, 1, 1, 1, 1)
    struct.pack_into("<h", hdr, 70, 16)  # float32
    struct.pack_into("<h", hdr, 72, 32)
    sx, sy, sz = img.spacing
    struct.pack_into("<8f", hdr, 76, 1.0, sx, sy, sz, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", hdr, 108, 352.0)
    struct.pack_into("<2f", hdr, 112, 1.0, 0.0)
    hdr[344:348] = _NIFTI_MAGIC
    payload = np.asarray(img.voxels, dtype="<f4").ravel(order="F").tobytes()
    path.write_bytes(bytes(hdr) + payload)
    return path


# ---------------------------------------------------------------------------
# Intensity normalization


def z_normalize(img: VolumeImage, mask: RoiMask | None = None) -> tuple[VolumeImage, NormalizationParams]:
    """Center and scale by mean / population std over the reference region.

    The reference region is the mask foreground when a mask is given, the whole
    volume otherwise. A zero-variance reference is an error ("constant image").
    """
    if mask is not None:
        check_aligned(img, mask)
        require_nonempty(mask)
        ref = img.voxels[mask.voxels]
    else:
        ref = img.voxels.ravel()
    mu = float(ref.mean())
    sigma = float(ref.std())
    if sigma == 0.0:
        raise DataError("constant image: zero variance over the normalization region")
    out = VolumeImage((img.voxels - mu) / sigma, img.spacing, img.modality)
    return out, NormalizationParams("zscore", mu, sigma)


def white_stripe_normalize(
    img: VolumeImage, brain_mask: RoiMask, config: WhiteStripeConfig = WhiteStripeConfig()
) -> tuple[VolumeImage, NormalizationParams]:
    """Normalize against the dominant bright-tissue histogram peak.

    The offset is the center of the largest smoothed-histogram peak strictly
    above the masked median (256 bins, 7-bin binomial smoothing); the scale is
    the population std of masked voxels inside the quantile window
    ``[q(p_peak - tau), q(p_peak + tau)]`` around that peak.
    """
    check_aligned(img, brain_mask)
    require_nonempty(brain_mask)
    vals = img.voxels[brain_mask.voxels]
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        raise DataError("no histogram peak above the masked median (constant region)")
    hist, edges = np.histogram(vals, bins=config.bins, range=(lo, hi))
    centers = (edges[:-1] + edges[1:]) / 2.0
    kernel = np.array([1, 6, 15, 20, 15, 6, 1], dtype=np.float64) / 64.0
    smoothed = np.convolve(hist.astype(np.float64), kernel, mode="same")
    med = float(np.median(vals))
    candidates = np.nonzero(centers > med)[0]
    if candidates.size == 0 or smoothed[candidates].max() == 0.0:
        raise DataError("no histogram peak above the masked median")
    peak_idx = int(candidates[np.argmax(smoothed[candidates])])
    mu_ws = float(centers[peak_idx])
    p_peak = float(np.mean(vals <= mu_ws))
    q_lo, q_hi = np.quantile(vals, [max(0.0, p_peak - config.tau), min(1.0, p_peak + config.tau)])
    window = vals[(vals >= q_lo) & (vals <= q_hi)]
    if window.size < config.min_window_voxels:
        raise DataError(
            f"white-stripe window contains {window.size} voxels (< {config.min_window_voxels})"
        )
    sigma_ws = float(window.std())
    if sigma_ws == 0.0:
        raise DataError("constant image: zero variance in the white-stripe window")
    out = VolumeImage((img.voxels - mu_ws) / sigma_ws, img.spacing, img.modality)
    return out, NormalizationParams("whitestripe", mu_ws, sigma_ws)
