"""Bit-exact binary serialisation of both filter types.

Image layout (all integers little-endian)::

    magic       4 bytes  b"MSF1"
    version     1 byte   upper nibble: digest algorithm id
                         lower nibble: image format version
    kind        1 byte   1 = shifting filter, 2 = spatial filter
    m           u64      cell count
    k           u32      index-hash count
    s           u32      set count
    mode        1 byte   0 = circular, 1 = word-bounded (shifting only)
    w           u64      offset bound (0 when unused)
    seed        u64      hash family seed
    payload_len u64      ceil(m * cell_bits / 8)
    payload     bytes    packed cells

Cell j occupies bit range [j*cell_bits, (j+1)*cell_bits) of the payload
bitstream, least-significant bit first within each byte; cell_bits is 1
for the shifting filter and ceil(log2(s+1)) for the spatial filter.  Any
padding bits in the final byte are zero.

The hash family is reconstructed from the stored seed, which ties an
image to this digest algorithm; the version byte's upper nibble exists so
a changed algorithm fails loudly instead of silently misreading.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .common import FilterStateError
from .hashing import DIGEST_ALGORITHM_ID
from .shifting import MODE_CIRCULAR, MODE_WORD, ShiftingFilter
from .spatial import SpatialFilter, cell_bits_for

MAGIC = b"MSF1"
FORMAT_VERSION = 1
VERSION_BYTE = (DIGEST_ALGORITHM_ID << 4) | FORMAT_VERSION

KIND_SHIFTING = 1
KIND_SPATIAL = 2

_HEADER = struct.Struct("<4sBBQIIBQQQ")


class CodecError(ValueError):
    """Base class for malformed filter images."""


class BadMagicError(CodecError):
    pass


class UnsupportedVersionError(CodecError):
    pass


class TruncatedPayloadError(CodecError):
    pass


class InvalidCellValueError(CodecError):
    pass


def pack_cells(cells: np.ndarray, cell_bits: int) -> bytes:
    """Pack unsigned cell values at cell_bits per cell, LSB-first."""
    if cell_bits == 1:
        return np.packbits(cells.astype(np.uint8), bitorder="little").tobytes()
    shifts = np.arange(cell_bits, dtype=np.uint64)
    bits = (cells.astype(np.uint64)[:, None] >> shifts) & np.uint64(1)
    return np.packbits(bits.astype(np.uint8).ravel(), bitorder="little").tobytes()


def unpack_cells(payload: bytes, m: int, cell_bits: int) -> np.ndarray:
    raw = np.frombuffer(payload, dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little", count=m * cell_bits)
    if cell_bits == 1:
        return bits
    shifts = np.arange(cell_bits, dtype=np.uint64)
    values = (bits.reshape(m, cell_bits).astype(np.uint64) << shifts).sum(axis=1)
    return values


def encode(filt: ShiftingFilter | SpatialFilter) -> bytes:
    """Serialise a sealed filter; structurally equal filters encode identically."""
    if not filt.sealed:
        raise FilterStateError("only sealed filters can be encoded")
    if isinstance(filt, ShiftingFilter):
        kind = KIND_SHIFTING
        mode = 1 if filt.mode == MODE_WORD else 0
        w = filt.w or 0
        payload = pack_cells(filt.bits, 1)
    elif isinstance(filt, SpatialFilter):
        kind = KIND_SPATIAL
        mode = 0
        w = 0
        payload = pack_cells(filt.cells, filt.cell_bits)
    else:
        raise TypeError(f"cannot encode {type(filt).__name__}")
    header = _HEADER.pack(
        MAGIC, VERSION_BYTE, kind, filt.m, filt.k, filt.s, mode, w,
        filt.seed, len(payload),
    )
    return header + payload


def decode(data: bytes) -> ShiftingFilter | SpatialFilter:
    """Rebuild a sealed filter (seeded hash family) from an image."""
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError(
            f"image is {len(data)} bytes, shorter than the {_HEADER.size}-byte header"
        )
    magic, version, kind, m, k, s, mode, w, seed, payload_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION_BYTE:
        raise UnsupportedVersionError(
            f"version byte 0x{version:02x} unsupported (expected 0x{VERSION_BYTE:02x})"
        )
    payload = data[_HEADER.size:]
    if len(payload) != payload_len:
        raise TruncatedPayloadError(
            f"payload is {len(payload)} bytes, header says {payload_len}"
        )
    if kind == KIND_SHIFTING:
        cell_bits = 1
    elif kind == KIND_SPATIAL:
        cell_bits = cell_bits_for(s)
    else:
        raise CodecError(f"unknown filter kind {kind}")
    if mode not in (0, 1) or (kind == KIND_SPATIAL and mode != 0):
        raise CodecError(f"invalid mode byte {mode} for kind {kind}")
    if mode == 0 and w != 0:
        raise CodecError("w must be 0 outside word-bounded mode")
    if mode == 1 and not 1 <= w <= m:
        raise CodecError(f"word bound {w} out of range [1, {m}]")
    expected_len = (m * cell_bits + 7) // 8
    if payload_len != expected_len:
        raise TruncatedPayloadError(
            f"payload length {payload_len} does not match ceil(m*cell_bits/8)={expected_len}"
        )
    cells = unpack_cells(payload, m, cell_bits)
    tail_bits = np.unpackbits(
        np.frombuffer(payload, dtype=np.uint8), bitorder="little"
    )[m * cell_bits:]
    if tail_bits.any():
        raise InvalidCellValueError("padding bits after the last cell are not zero")

    if kind == KIND_SHIFTING:
        filt = ShiftingFilter(
            m, k, s,
            mode=MODE_WORD if mode == 1 else MODE_CIRCULAR,
            w=w if mode == 1 else None,
            seed=seed,
        )
        filt.bits[:] = cells
    else:
        if int(cells.max(initial=0)) > s:
            raise InvalidCellValueError(
                f"cell value {int(cells.max())} exceeds set count {s}"
            )
        filt = SpatialFilter(m, k, s, seed=seed)
        filt.cells[:] = cells.astype(filt.cells.dtype)
    filt.seal()
    return filt


def write_image(path, filt: ShiftingFilter | SpatialFilter) -> None:
    path = Path(path)
    data = encode(filt)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def read_image(path) -> ShiftingFilter | SpatialFilter:
    with open(path, "rb") as fh:
        return decode(fh.read())
