"""On-disk formats: FMAP feature files, binary PGM (P5), and PNG input."""

from __future__ import annotations

import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

FMAP_MAGIC = b"FMAP"
FMAP_VERSION = 1
_FMAP_HEADER = struct.Struct("<4sIIII")


class FormatError(ValueError):
    """Raised for malformed or unsupported file contents."""


def atomic_write(path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ----------------------------------------------------------------------------
# FMAP
# ----------------------------------------------------------------------------

def encode_fmap(data: np.ndarray) -> bytes:
    """Serialize an (h, w, d) array as FMAP: header then float32 LE, channel-last."""
    data = np.asarray(data)
    if data.ndim != 3:
        raise ValueError(f"expected (height, width, dim) array, got shape {data.shape}")
    h, w, d = data.shape
    header = _FMAP_HEADER.pack(FMAP_MAGIC, FMAP_VERSION, h, w, d)
    return header + np.ascontiguousarray(data, dtype="<f4").tobytes()


def decode_fmap(payload: bytes) -> np.ndarray:
    if len(payload) < _FMAP_HEADER.size:
        raise FormatError("FMAP: truncated header")
    magic, version, h, w, d = _FMAP_HEADER.unpack_from(payload)
    if magic != FMAP_MAGIC:
        raise FormatError(f"FMAP: bad magic {magic!r}")
    if version != FMAP_VERSION:
        raise FormatError(f"FMAP: unsupported version {version}")
    expected = h * w * d * 4
    body = payload[_FMAP_HEADER.size:]
    if len(body) != expected:
        raise FormatError(f"FMAP: expected {expected} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f4").reshape(h, w, d).astype(np.float64)


def write_fmap(path, data: np.ndarray) -> None:
    atomic_write(path, encode_fmap(data))


def read_fmap(path) -> np.ndarray:
    return decode_fmap(Path(path).read_bytes())


# ----------------------------------------------------------------------------
# PGM (binary P5, 8 or 16 bit)
# ----------------------------------------------------------------------------

def encode_pgm(img: np.ndarray, maxval: int | None = None) -> bytes:
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError(f"PGM needs a 2-D array, got shape {img.shape}")
    if maxval is None:
        maxval = 255 if img.size == 0 or img.max() <= 255 else 65535
    if not 0 < maxval <= 65535:
        raise ValueError(f"PGM maxval out of range: {maxval}")
    if img.size and (img.min() < 0 or img.max() > maxval):
        raise ValueError(f"PGM values must lie in [0, {maxval}]")
    h, w = img.shape
    dtype = "u1" if maxval < 256 else ">u2"
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    return header + np.ascontiguousarray(img, dtype=dtype).tobytes()


def _pgm_tokens(payload: bytes, count: int):
    """Pull `count` whitespace-separated header tokens, skipping # comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(payload) and payload[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(payload):
            raise FormatError("PGM: truncated header")
        if payload[pos:pos + 1] == b"#":
            while pos < len(payload) and payload[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(payload) and not payload[pos:pos + 1].isspace():
            pos += 1
        tokens.append(payload[start:pos])
    # exactly one whitespace byte separates header from raster
    return tokens, pos + 1


def decode_pgm(payload: bytes) -> np.ndarray:
    tokens, offset = _pgm_tokens(payload, 4)
    if tokens[0] != b"P5":
        raise FormatError(f"PGM: unsupported magic {tokens[0]!r} (only binary P5)")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError("PGM: non-integer header field") from exc
    if not 0 < maxval <= 65535:
        raise FormatError(f"PGM: unsupported maxval {maxval}")
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    n = w * h * dtype.itemsize
    body = payload[offset:offset + n]
    if len(body) != n:
        raise FormatError(f"PGM: expected {n} raster bytes, found {len(body)}")
    return np.frombuffer(body, dtype=dtype).reshape(h, w).astype(np.int64)


def write_pgm(path, img: np.ndarray, maxval: int | None = None) -> None:
    atomic_write(path, encode_pgm(img, maxval))


def read_pgm(path) -> np.ndarray:
    return decode_pgm(Path(path).read_bytes())


# ----------------------------------------------------------------------------
# generic raster decoding
# ----------------------------------------------------------------------------

def decode_raster(payload: bytes) -> np.ndarray:
    """Decode PGM or PNG bytes into an (h, w) or (h, w, 3) uint8 array.

    Only 8-bit grayscale and RGB(A) rasters are accepted; the alpha channel
    is dropped.
    """
    if payload[:2] == b"P5":
        img = decode_pgm(payload)
        _, _, maxval = (int(t) for t in _pgm_tokens(payload, 4)[0][1:])
        if maxval > 255:
            raise FormatError(f"PGM: {maxval=} is not an 8-bit raster")
        return img.astype(np.uint8)

    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(io.BytesIO(payload)) as im:
            im.load()
            mode = im.mode
            if mode in ("L", "RGB"):
                return np.asarray(im, dtype=np.uint8)
            if mode == "RGBA":
                return np.asarray(im.convert("RGB"), dtype=np.uint8)
            if mode == "P":
                return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise FormatError(f"cannot decode image: {exc}") from exc
    raise FormatError(f"unsupported image mode {mode!r}; need 8-bit grayscale or RGB")
