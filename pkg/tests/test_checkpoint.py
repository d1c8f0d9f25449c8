"""Checkpoint binary format: round trips and corruption handling."""

import struct

import numpy as np
import pytest

from aqgsim.checkpoint import CheckpointFormatError, read_checkpoint, write_checkpoint
from aqgsim.lemmas import FieldEnsembleSpec, random_band_limited_field


@pytest.fixture
def state(grid64):
    spec = FieldEnsembleSpec(grid64, seed=17, count=1, kmax=10, spectrum_slope=2.0)
    return random_band_limited_field(spec, 0)


def test_round_trip_bitwise(state, params, tmp_path):
    path = tmp_path / "state.aqgs"
    write_checkpoint(path, state, params, 0.375)
    cp = read_checkpoint(path)
    assert np.array_equal(cp.field.coeffs, state.coeffs)
    assert cp.t == 0.375
    assert cp.params == params
    assert cp.grid == state.grid


def test_header_layout(state, params, tmp_path):
    path = tmp_path / "state.aqgs"
    write_checkpoint(path, state, params, 1.5)
    raw = path.read_bytes()
    magic, version, n1, n2 = struct.unpack_from("<4sIII", raw)
    assert magic == b"AQGS"
    assert version == 1
    assert (n1, n2) == (64, 64)
    assert len(raw) == struct.calcsize("<4sIII6d") + 16 * 64 * 64
    # first complex value is coeffs[0, 0] (k1-major ordering)
    re0, im0 = struct.unpack_from("<2d", raw, struct.calcsize("<4sIII6d"))
    assert re0 + 1j * im0 == state.coeffs[0, 0]


def test_truncated_file_rejected(state, params, tmp_path):
    path = tmp_path / "state.aqgs"
    write_checkpoint(path, state, params, 0.0)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(CheckpointFormatError, match="corrupt"):
        read_checkpoint(path)


def test_bad_magic_rejected(state, params, tmp_path):
    path = tmp_path / "state.aqgs"
    write_checkpoint(path, state, params, 0.0)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointFormatError, match="magic"):
        read_checkpoint(path)


def test_unknown_version_rejected(state, params, tmp_path):
    path = tmp_path / "state.aqgs"
    write_checkpoint(path, state, params, 0.0)
    raw = bytearray(path.read_bytes())
    struct.pack_into("<I", raw, 4, 99)
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointFormatError, match="version"):
        read_checkpoint(path)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(CheckpointFormatError, match="cannot read"):
        read_checkpoint(tmp_path / "absent.aqgs")
