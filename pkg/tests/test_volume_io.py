import json
import struct

import numpy as np
import pytest

from radrisk import DataError, VolumeImage, read_volume, write_volume
from helpers import vol


def test_rawjson_identity_roundtrip(tmp_path):
    # 2x2x1 with voxels [0,1,2,3] in x-fastest order, spacing (1,1,1)
    raw = np.array([0, 1, 2, 3], dtype="<f4").tobytes()
    (tmp_path / "v.raw").write_bytes(raw)
    (tmp_path / "v.json").write_text(json.dumps({
        "dims": [2, 2, 1], "spacing": [1, 1, 1], "dtype": "f32", "data_file": "v.raw",
    }))
    img = read_volume(tmp_path / "v.json")
    assert img.dims == (2, 2, 1)
    assert img.spacing == (1.0, 1.0, 1.0)
    assert img.voxels[0, 0, 0] == 0 and img.voxels[1, 0, 0] == 1
    assert img.voxels[0, 1, 0] == 2 and img.voxels[1, 1, 0] == 3


def test_rawjson_write_read_bit_identical(tmp_path):
    rng = np.random.default_rng(11)
    img = vol(rng.normal(size=24).astype(np.float32), (2, 3, 4), spacing=(0.5, 1.25, 2.0))
    p = write_volume(img, tmp_path / "a.json", "rawjson")
    back = read_volume(p)
    assert np.array_equal(back.voxels, img.voxels)
    assert back.spacing == img.spacing
    # write the read volume again: payload bytes must be identical
    write_volume(back, tmp_path / "b.json", "rawjson")
    assert (tmp_path / "a.raw").read_bytes() == (tmp_path / "b.raw").read_bytes()


def _independent_nifti(path, dims, spacing, voxels, datatype=16):
    """Header writer kept independent of the library (field-by-field struct)."""
    hdr = bytearray(352)
    struct.pack_into("<i", hdr, 0, 348)
    struct.pack_into("<8h", hdr, 40, 3, dims[0], dims[1], dims[2], 1, 1, 1, 1)
    struct.pack_into("<h", hdr, 70, datatype)
    struct.pack_into("<h", hdr, 72, {4: 16, 16: 32}[datatype])
    struct.pack_into("<8f", hdr, 76, 1.0, spacing[0], spacing[1], spacing[2], 0, 0, 0, 0)
    struct.pack_into("<f", hdr, 108, 352.0)
    struct.pack_into("<2f", hdr, 112, 1.0, 0.0)
    hdr[344:348] = b"n+1\x00"
    np_dtype = {4: "<i2", 16: "<f4"}[datatype]
    path.write_bytes(bytes(hdr) + np.asarray(voxels, dtype=np_dtype).tobytes())


def test_nifti_read_against_independent_writer(tmp_path):
    voxels = np.arange(32, dtype=np.float32)
    _independent_nifti(tmp_path / "x.nii", (4, 4, 2), (2.0, 2.0, 2.0), voxels)
    img = read_volume(tmp_path / "x.nii")
    assert img.dims == (4, 4, 2)
    assert img.spacing == (2.0, 2.0, 2.0)
    assert np.array_equal(img.voxels.ravel(order="F"), voxels.astype(np.float64))


def test_nifti_int16_and_scaling(tmp_path):
    voxels = np.arange(-4, 4, dtype=np.int16)
    _independent_nifti(tmp_path / "i.nii", (2, 2, 2), (1.0, 1.0, 1.0), voxels, datatype=4)
    img = read_volume(tmp_path / "i.nii")
    assert np.array_equal(img.voxels.ravel(order="F"), voxels.astype(np.float64))


def test_nifti_roundtrip_value_exact(tmp_path):
    rng = np.random.default_rng(5)
    img = vol(rng.normal(size=60).astype(np.float32), (3, 4, 5), spacing=(0.9, 1.1, 3.0))
    p = write_volume(img, tmp_path / "r.nii", "nifti1")
    back = read_volume(p)
    assert np.array_equal(back.voxels, img.voxels)
    assert back.spacing == pytest.approx(img.spacing)


def test_nifti_bad_magic(tmp_path):
    voxels = np.zeros(8, dtype=np.float32)
    _independent_nifti(tmp_path / "bad.nii", (2, 2, 2), (1, 1, 1), voxels)
    data = bytearray((tmp_path / "bad.nii").read_bytes())
    data[344:348] = b"bad\x00"
    (tmp_path / "bad.nii").write_bytes(bytes(data))
    with pytest.raises(DataError, match="magic"):
        read_volume(tmp_path / "bad.nii")


def test_nifti_unsupported_datatype(tmp_path):
    voxels = np.zeros(8, dtype=np.float32)
    _independent_nifti(tmp_path / "dt.nii", (2, 2, 2), (1, 1, 1), voxels)
    data = bytearray((tmp_path / "dt.nii").read_bytes())
    struct.pack_into("<h", data, 70, 64)  # float64: out of scope
    (tmp_path / "dt.nii").write_bytes(bytes(data))
    with pytest.raises(DataError, match="scalar type"):
        read_volume(tmp_path / "dt.nii")


def test_nifti_nonfinite_rejected(tmp_path):
    voxels = np.array([np.nan] + [0.0] * 7, dtype=np.float32)
    _independent_nifti(tmp_path / "nan.nii", (2, 2, 2), (1, 1, 1), voxels)
    with pytest.raises(DataError, match="non-finite"):
        read_volume(tmp_path / "nan.nii")


def test_truncated_payload(tmp_path):
    voxels = np.zeros(8, dtype=np.float32)
    _independent_nifti(tmp_path / "t.nii", (2, 2, 2), (1, 1, 1), voxels)
    data = (tmp_path / "t.nii").read_bytes()
    (tmp_path / "t.nii").write_bytes(data[:-8])
    with pytest.raises(DataError, match="truncated"):
        read_volume(tmp_path / "t.nii")


def test_rawjson_missing_field(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"dims": [1, 1, 1], "spacing": [1, 1, 1], "dtype": "f32"}))
    with pytest.raises(DataError, match="data_file"):
        read_volume(tmp_path / "m.json")


def test_volume_invariants():
    with pytest.raises(DataError):
        VolumeImage(np.zeros((2, 2)), (1, 1, 1))
    with pytest.raises(DataError):
        VolumeImage(np.zeros((2, 2, 2)), (1, 0, 1))
    with pytest.raises(DataError):
        VolumeImage(np.full((2, 2, 2), np.inf), (1, 1, 1))
    img = VolumeImage(np.zeros((2, 2, 2)), (1, 1, 1))
    with pytest.raises(ValueError):
        img.voxels[0, 0, 0] = 1.0  # frozen payload
