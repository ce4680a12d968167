"""Binary checkpoints of solved Dicke-basis states.

Layout, all little-endian::

    magic    8 bytes  b"PDYNCKPT"
    version  uint32
    N        uint32
    params   4 x float64  (coupling, field, collective_rate, local_rate)
    residual float64
    count    uint32       number of sectors
    per sector:
        j2    uint32
        kind  uint8       0 = full block, 1 = diagonal populations
        data  complex128  (2J+1)^2 or (2J+1) values, row-major
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Tuple

import numpy as np

from .dicke import DickeState
from .lmg import LMGParams

MAGIC = b"PDYNCKPT"
VERSION = 1
_HEAD = struct.Struct("<8sII4ddI")
_SECTOR = struct.Struct("<IB")


class CheckpointError(ValueError):
    pass


def save_state(path, state: DickeState, params: LMGParams) -> None:
    residual = float(state.info.get("residual", float("nan")))
    parts = [_HEAD.pack(MAGIC, VERSION, state.N, *params.as_tuple(), residual, len(state.blocks))]
    for j2 in sorted(state.blocks):
        b = state.blocks[j2]
        parts.append(_SECTOR.pack(j2, 1 if b.ndim == 1 else 0))
        parts.append(np.ascontiguousarray(b, dtype="<c16").tobytes())
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(b"".join(parts))
    tmp.replace(path)


def load_state(path) -> Tuple[DickeState, LMGParams]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEAD.size:
        raise CheckpointError("truncated checkpoint header")
    magic, version, N, c, h, G, g, residual, count = _HEAD.unpack_from(raw, 0)
    if magic != MAGIC or version != VERSION:
        raise CheckpointError("not a permadyn checkpoint")
    off = _HEAD.size
    blocks = {}
    for _ in range(count):
        if off + _SECTOR.size > len(raw):
            raise CheckpointError("truncated sector header")
        j2, kind = _SECTOR.unpack_from(raw, off)
        off += _SECTOR.size
        n = j2 + 1
        size = n if kind == 1 else n * n
        end = off + 16 * size
        if end > len(raw):
            raise CheckpointError("truncated sector data")
        data = np.frombuffer(raw, dtype="<c16", count=size, offset=off).astype(complex)
        blocks[j2] = data if kind == 1 else data.reshape(n, n)
        off = end
    if off != len(raw):
        raise CheckpointError("trailing bytes in checkpoint")
    state = DickeState(N, blocks, {"residual": residual})
    return state, LMGParams(c, h, G, g)
