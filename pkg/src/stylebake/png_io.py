"""Minimal PNG codec for 8- and 16-bit grayscale / RGB images.

Pillow cannot round-trip 16-bit RGB PNGs losslessly, and 16-bit channels are
required for geometry maps, so the codec is implemented here directly on top
of zlib.  Scope is deliberately narrow: color types 0 (gray) and 2 (RGB) at
bit depths 8/16, no interlacing, no palette.  Files are written with filter
type 0 on every scanline; the reader handles all five standard filters so
externally produced files decode too.
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import ImageFormatError

_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(tag: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def write_png(path: str | Path, array: np.ndarray, bitdepth: int = 8) -> None:
    """Write an integer array (H,W) or (H,W,3) as a PNG file.

    dtype must already hold values in [0, 2**bitdepth - 1].
    """
    if bitdepth not in (8, 16):
        raise ImageFormatError(f"unsupported bit depth {bitdepth}")
    arr = np.asarray(array)
    if arr.ndim == 2:
        color_type, channels = 0, 1
    elif arr.ndim == 3 and arr.shape[2] == 3:
        color_type, channels = 2, 3
    else:
        raise ImageFormatError(f"expected (H,W) or (H,W,3) array, got {arr.shape}")
    h, w = arr.shape[:2]
    dtype = np.uint8 if bitdepth == 8 else ">u2"  # PNG 16-bit samples are big-endian
    raw = np.ascontiguousarray(arr).astype(dtype).tobytes()
    stride = w * channels * (bitdepth // 8)
    lines = bytearray()
    for y in range(h):
        lines.append(0)  # filter type None
        lines += raw[y * stride:(y + 1) * stride]
    ihdr = struct.pack(">IIBBBBB", w, h, bitdepth, color_type, 0, 0, 0)
    payload = zlib.compress(bytes(lines), 6)
    with open(path, "wb") as f:
        f.write(_SIGNATURE)
        f.write(_chunk(b"IHDR", ihdr))
        f.write(_chunk(b"IDAT", payload))
        f.write(_chunk(b"IEND", b""))


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def _unfilter(data: bytes, h: int, stride: int, bpp: int) -> np.ndarray:
    out = np.zeros((h, stride), dtype=np.uint8)
    pos = 0
    prev = np.zeros(stride, dtype=np.uint8)
    for y in range(h):
        ftype = data[pos]
        pos += 1
        line = np.frombuffer(data, dtype=np.uint8, count=stride, offset=pos).copy()
        pos += stride
        if ftype == 0:
            rec = line
        elif ftype == 1:  # Sub: cumulative sum per byte lane
            rec = line.reshape(-1, bpp)
            rec = (np.cumsum(rec.astype(np.int64), axis=0) % 256).astype(np.uint8)
            rec = rec.reshape(-1)
        elif ftype == 2:  # Up
            rec = line + prev
        elif ftype == 3:  # Average
            rec = np.empty(stride, dtype=np.uint8)
            for x in range(stride):
                left = int(rec[x - bpp]) if x >= bpp else 0
                rec[x] = (int(line[x]) + (left + int(prev[x])) // 2) % 256
        elif ftype == 4:  # Paeth
            rec = np.empty(stride, dtype=np.uint8)
            for x in range(stride):
                left = int(rec[x - bpp]) if x >= bpp else 0
                up = int(prev[x])
                ul = int(prev[x - bpp]) if x >= bpp else 0
                rec[x] = (int(line[x]) + _paeth(left, up, ul)) % 256
        else:
            raise ImageFormatError(f"unknown PNG filter type {ftype}")
        out[y] = rec
        prev = out[y]
    return out


def read_png(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a PNG file; returns (array, bitdepth).

    Array is uint8 or uint16 with shape (H,W) for grayscale or (H,W,3) for RGB.
    """
    blob = Path(path).read_bytes()
    if blob[:8] != _SIGNATURE:
        raise ImageFormatError(f"{path}: not a PNG file")
    pos = 8
    ihdr = None
    idat = bytearray()
    while pos < len(blob):
        (length,) = struct.unpack(">I", blob[pos:pos + 4])
        tag = blob[pos + 4:pos + 8]
        payload = blob[pos + 8:pos + 8 + length]
        pos += 12 + length
        if tag == b"IHDR":
            ihdr = struct.unpack(">IIBBBBB", payload)
        elif tag == b"IDAT":
            idat += payload
        elif tag == b"IEND":
            break
    if ihdr is None:
        raise ImageFormatError(f"{path}: missing IHDR")
    w, h, bitdepth, color_type, compression, filt, interlace = ihdr
    if interlace != 0:
        raise ImageFormatError(f"{path}: interlaced PNG not supported")
    if color_type not in (0, 2) or bitdepth not in (8, 16):
        raise ImageFormatError(
            f"{path}: unsupported PNG (color type {color_type}, depth {bitdepth}); "
            "only 8/16-bit grayscale and RGB are handled"
        )
    channels = 1 if color_type == 0 else 3
    stride = w * channels * (bitdepth // 8)
    bpp = channels * (bitdepth // 8)
    data = zlib.decompress(bytes(idat))
    if len(data) != h * (stride + 1):
        raise ImageFormatError(f"{path}: truncated pixel data")
    rows = _unfilter(data, h, stride, bpp)
    if bitdepth == 8:
        arr = rows.reshape(h, w, channels).astype(np.uint8)
    else:
        arr = rows.reshape(h, -1).view(">u2").astype(np.uint16).reshape(h, w, channels)
    if channels == 1:
        arr = arr[:, :, 0]
    return arr, bitdepth
