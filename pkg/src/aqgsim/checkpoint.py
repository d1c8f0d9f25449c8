"""Binary checkpoint format for solver states.

Little-endian layout: magic "AQGS", format version (u32), n1, n2 (u32),
alpha, beta, mu, nu, s, t (f64), then n1*n2 complex coefficients as
(real, imag) f64 pairs in k1-major transform ordering.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GridSpec, SpectralField
from .operators import DissipParams

MAGIC = b"AQGS"
VERSION = 1
_HEADER = struct.Struct("<4sIII6d")


class CheckpointError(Exception):
    """Base class for checkpoint read/validation failures."""


class CheckpointFormatError(CheckpointError):
    """Corrupt file or unsupported format version."""


class CheckpointMismatchError(CheckpointError):
    """Stored state is incompatible with the requested grid/parameters."""

    def __init__(self, field_name: str):
        self.field_name = field_name
        super().__init__(f"checkpoint mismatch in field '{field_name}'")


@dataclass(frozen=True)
class Checkpoint:
    params: DissipParams
    t: float
    field: SpectralField

    @property
    def grid(self) -> GridSpec:
        return self.field.grid


def write_checkpoint(path, field: SpectralField, p: DissipParams, t: float) -> None:
    grid = field.grid
    header = _HEADER.pack(MAGIC, VERSION, grid.n1, grid.n2,
                          p.alpha, p.beta, p.mu, p.nu, p.s, t)
    body = np.ascontiguousarray(field.coeffs, dtype="<c16").tobytes()
    Path(path).write_bytes(header + body)


def read_checkpoint(path) -> Checkpoint:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointFormatError(f"cannot read checkpoint: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise CheckpointFormatError("corrupt checkpoint: truncated header")
    magic, version, n1, n2, alpha, beta, mu, nu, s, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointFormatError("corrupt checkpoint: bad magic")
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    expected = _HEADER.size + 16 * n1 * n2
    if len(raw) != expected:
        raise CheckpointFormatError(
            f"corrupt checkpoint: expected {expected} bytes, got {len(raw)}")
    coeffs = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(n1, n2)
    grid = GridSpec(int(n1), int(n2))
    params = DissipParams(alpha, beta, mu, nu, s)
    return Checkpoint(params, float(t), SpectralField(grid, coeffs.astype(np.complex128)))
