"""Versioned little-endian on-disk index format.

Layout (all integers little-endian)::

    header   magic "RBCX", u16 version, u16 mode flags, u16 n_angles,
             u32 projection length N, u32 n_entries, u32 lbp bins,
             u32 bytes per barcode, f64 white threshold, f64 margin band,
             u8 preprocessing flags, f64 x n_angles angles
    entries  per entry: u16 id length + UTF-8 id, u16 path length + UTF-8
             path, 13 ASCII bytes IRMA code (all zero = unlabeled),
             u64 absolute offset of the entry's payload block
    payload  per entry: f32 x (n_angles * N) projections, Median barcodes,
             MinMax barcodes (n_angles * bytes per barcode each, bits packed
             MSB first), f64 x lbp bins histogram
"""

import os
import struct
from os import PathLike
from pathlib import Path

import numpy as np

from .errors import IndexBoundsError, IndexFormatError
from .imaging import PreprocessConfig
from .index import BuildSummary, Index
from .irma import CODE_LENGTH, parse_code
from .radon import pack_bits, unpack_bits

MAGIC = b"RBCX"
VERSION = 1

FLAG_PROJECTIONS = 1 << 0
FLAG_MEDIAN = 1 << 1
FLAG_MINMAX = 1 << 2
FLAG_LBP = 1 << 3
FLAG_IRMA = 1 << 4
_ALL_FEATURES = FLAG_PROJECTIONS | FLAG_MEDIAN | FLAG_MINMAX | FLAG_LBP

_PRE_PAD, _PRE_LANDMARKS, _PRE_CIRCLE = 1, 2, 4

_HEADER = struct.Struct("<4sHHHIIIIddB")
_U16 = struct.Struct("<H")
_U64 = struct.Struct("<Q")
_NO_CODE = bytes(CODE_LENGTH)


def _encode_str(text: str) -> bytes:
    raw = text.encode("utf-8", "surrogateescape")
    if len(raw) > 0xFFFF:
        raise IndexFormatError(f"string too long for index entry table: {text[:40]!r}...")
    return _U16.pack(len(raw)) + raw


def _block_sizes(n_angles: int, side: int, code_bytes: int, lbp_bins: int):
    return n_angles * side * 4, n_angles * code_bytes, n_angles * code_bytes, lbp_bins * 8


def dumps_index(idx: Index) -> bytes:
    n_angles, n, side = idx.projections.shape
    code_bytes = (side + 7) // 8
    lbp_bins = idx.lbp.shape[1]
    flags = _ALL_FEATURES | (FLAG_IRMA if any(c is not None for c in idx.irma_codes) else 0)
    p = idx.pcfg
    pre_flags = (_PRE_PAD * p.pad_enabled) | (_PRE_LANDMARKS * p.landmarks_enabled) | (_PRE_CIRCLE * p.circle_enabled)
    if p.target_side != side:
        raise IndexFormatError("preprocessing side does not match projection length")

    head = bytearray(
        _HEADER.pack(MAGIC, VERSION, flags, n_angles, side, n, lbp_bins, code_bytes,
                     p.white_threshold_fraction, p.margin_band_fraction, pre_flags)
    )
    head += np.asarray(idx.angles, dtype="<f8").tobytes()

    table = []
    for image_id, path, code in zip(idx.image_ids, idx.source_paths, idx.irma_codes):
        code_raw = _NO_CODE if code is None else code.compact.encode("ascii")
        table.append(_encode_str(image_id) + _encode_str(path) + code_raw)
    table_len = sum(len(t) for t in table) + n * _U64.size
    block = sum(_block_sizes(n_angles, side, code_bytes, lbp_bins))
    payload_start = len(head) + table_len

    proj = idx.projections.transpose(1, 0, 2).astype("<f4")
    median = pack_bits(idx.median_codes.transpose(1, 0, 2))
    minmax = pack_bits(idx.minmax_codes.transpose(1, 0, 2))
    lbp = idx.lbp.astype("<f8")

    out = bytearray(head)
    for i, t in enumerate(table):
        out += t + _U64.pack(payload_start + i * block)
    for i in range(n):
        out += proj[i].tobytes()
        out += median[i].tobytes()
        out += minmax[i].tobytes()
        out += lbp[i].tobytes()
    return bytes(out)


def save_index(idx: Index, path: str | PathLike) -> None:
    """Write ``idx`` to ``path`` atomically (temp file + rename)."""
    path = Path(path)
    data = dumps_index(idx)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write index {path}: {exc.strerror}") from exc


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if n < 0 or end > len(self.data):
            raise IndexBoundsError(
                f"index truncated: need {n} bytes at offset {self.pos}, file has {len(self.data)}"
            )
        chunk = self.data[self.pos : end]
        self.pos = end
        return chunk

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))

    def string(self) -> str:
        (n,) = self.unpack(_U16)
        return self.take(n).decode("utf-8", "surrogateescape")


def loads_index(data: bytes) -> Index:
    r = _Reader(data)
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise IndexFormatError("not an rbcx index (bad magic)")
    (_, version, flags, n_angles, side, n, lbp_bins, code_bytes,
     white, margin, pre_flags) = r.unpack(_HEADER)
    if version != VERSION:
        raise IndexFormatError(f"unsupported index version {version} (expected {VERSION})")
    if flags & _ALL_FEATURES != _ALL_FEATURES:
        raise IndexFormatError(f"index lacks required feature blocks (flags {flags:#x})")
    if code_bytes != (side + 7) // 8 or n_angles == 0 or n == 0:
        raise IndexFormatError("inconsistent header dimensions")
    angles = np.frombuffer(r.take(8 * n_angles), dtype="<f8").tolist()

    ids, paths, codes, offsets = [], [], [], []
    for _ in range(n):
        ids.append(r.string())
        paths.append(r.string())
        raw = r.take(CODE_LENGTH)
        try:
            codes.append(None if raw == _NO_CODE else parse_code(raw.decode("ascii")))
        except (UnicodeDecodeError, ValueError) as exc:
            raise IndexFormatError(f"bad IRMA code in entry {ids[-1]!r}: {exc}") from None
        (off,) = r.unpack(_U64)
        offsets.append(off)

    sizes = _block_sizes(n_angles, side, code_bytes, lbp_bins)
    block = sum(sizes)
    table_end = r.pos
    proj = np.empty((n, n_angles, side), dtype=np.float32)
    median = np.empty((n, n_angles, code_bytes), dtype=np.uint8)
    minmax = np.empty_like(median)
    lbp = np.empty((n, lbp_bins), dtype=np.float64)
    for i, off in enumerate(offsets):
        if off < table_end or off + block > len(data):
            raise IndexBoundsError(
                f"entry {ids[i]!r} payload [{off}, {off + block}) outside file of {len(data)} bytes"
            )
        o = off
        proj[i] = np.frombuffer(data, dtype="<f4", count=n_angles * side, offset=o).reshape(n_angles, side)
        o += sizes[0]
        median[i] = np.frombuffer(data, dtype=np.uint8, count=sizes[1], offset=o).reshape(n_angles, code_bytes)
        o += sizes[1]
        minmax[i] = np.frombuffer(data, dtype=np.uint8, count=sizes[2], offset=o).reshape(n_angles, code_bytes)
        o += sizes[2]
        lbp[i] = np.frombuffer(data, dtype="<f8", count=lbp_bins, offset=o)

    try:
        pcfg = PreprocessConfig(
            target_side=side,
            white_threshold_fraction=white,
            margin_band_fraction=margin,
            pad_enabled=bool(pre_flags & _PRE_PAD),
            landmarks_enabled=bool(pre_flags & _PRE_LANDMARKS),
            circle_enabled=bool(pre_flags & _PRE_CIRCLE),
        )
        return Index(
            ids, paths, codes, angles, pcfg,
            proj.transpose(1, 0, 2),
            unpack_bits(median, side).transpose(1, 0, 2),
            unpack_bits(minmax, side).transpose(1, 0, 2),
            lbp,
            BuildSummary(n_indexed=n),
        )
    except ValueError as exc:
        raise IndexFormatError(f"invalid index contents: {exc}") from None


def load_index(path: str | PathLike) -> Index:
    """Read an index written by :func:`save_index`; nothing partial is returned."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read index {path}: {exc.strerror}") from exc
    try:
        return loads_index(data)
    except IndexFormatError as exc:
        raise type(exc)(f"{path}: {exc}") from None
