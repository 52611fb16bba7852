"""Binary checkpoints of the full state.

Little-endian layout:

    magic   4 bytes  "WNLS"
    u32     version (= 1)
    u32     d
    u32     n
    f64     L, t, alpha, beta, lambda, mu
    c128 x n^d   u samples, row-major, interleaved (re, im) f64
    c128 x n^d   v samples, likewise

Save-then-load is bit identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FormatError, UnsupportedVersionError
from ..grid import Field, FieldPair, SpectralGrid
from ..model import SystemParams

__all__ = ["MAGIC", "VERSION", "CheckpointHeader", "save_checkpoint", "load_checkpoint"]

MAGIC = b"WNLS"
VERSION = 1
_HEADER = struct.Struct("<4sIII6d")


@dataclass(frozen=True)
class CheckpointHeader:
    version: int
    d: int
    n: int
    L: float
    t: float
    alpha: float
    beta: float
    lam: float
    mu: float

    def params(self) -> SystemParams:
        # permissive: stored couplings are replayed as-is
        return SystemParams(
            self.d, self.alpha, self.beta, self.lam, self.mu, allow_sign_mismatch=True
        )


def save_checkpoint(path: str | Path, p: SystemParams, state: FieldPair) -> None:
    g = state.grid
    header = _HEADER.pack(
        MAGIC, VERSION, g.d, g.n, g.L, state.t, p.alpha, p.beta, p.lam, p.mu
    )
    u = np.ascontiguousarray(state.u.data, dtype="<c16")
    v = np.ascontiguousarray(state.v.data, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(u.tobytes())
        fh.write(v.tobytes())


def load_checkpoint(path: str | Path) -> tuple[CheckpointHeader, FieldPair]:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError("truncated header", offset=len(blob))
    magic, version, d, n, L, t, alpha, beta, lam, mu = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise UnsupportedVersionError(f"checkpoint version {version}, expected {VERSION}")
    header = CheckpointHeader(version, d, n, L, t, alpha, beta, lam, mu)
    if d not in (1, 2, 3) or n < 8 or n % 2 != 0 or not (L > 0):
        raise FormatError(f"invalid geometry d={d} n={n} L={L}", offset=4)
    count = n**d
    expected = _HEADER.size + 2 * count * 16
    if len(blob) != expected:
        raise FormatError(
            f"expected {expected} bytes, file has {len(blob)}", offset=min(len(blob), expected)
        )
    grid = SpectralGrid(d, n, L)
    raw = np.frombuffer(blob, dtype="<c16", offset=_HEADER.size, count=2 * count)
    u = raw[:count].reshape(grid.shape).copy()
    v = raw[count:].reshape(grid.shape).copy()
    return header, FieldPair(Field(grid, u), Field(grid, v), t)
