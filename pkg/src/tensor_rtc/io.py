"""File formats: binary tensors, text masks, PPM/PGM images, CSV tables.

Tensor file (``.t3d``)
    4-byte magic ``T3D1``, three little-endian uint64 dims ``n1 n2 n3``,
    then ``n1*n2*n3`` little-endian float64 values in C order of the
    ``(n1, n2, n3)`` array (the frontal-slice index varies fastest).

Mask file (text)
    Header lines starting with ``#`` of the form ``# key value...`` for
    ``dims``, ``model``, ``rate`` and ``seed``, followed by one 1-based
    ``i j k`` triple per observed entry in lexicographic order.

Every writer goes through :func:`atomic_write`, so a failed run never
leaves a partial file behind.
"""

from __future__ import annotations

import csv
import hashlib
import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .exceptions import (
    BadMagic,
    DimOverflow,
    FormatError,
    TruncatedPayload,
    UnsupportedFormat,
)
from .sampling import ObservationMask
from .validation import check_tensor3

MAGIC = b"T3D1"
_HEADER = struct.Struct("<3Q")
_MAX_ENTRIES = (2**63 - 1) // 8


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --- tensors -----------------------------------------------------------------


def tensor_to_bytes(a) -> bytes:
    a = check_tensor3(a)
    return MAGIC + _HEADER.pack(*a.shape) + a.astype("<f8").tobytes(order="C")


def tensor_from_bytes(raw: bytes) -> np.ndarray:
    if raw[:4] != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, found {raw[:4]!r}")
    if len(raw) < 4 + _HEADER.size:
        raise TruncatedPayload("file ends inside the header")
    dims = _HEADER.unpack_from(raw, 4)
    if 0 in dims:
        raise FormatError(f"header has an empty dimension: {dims}")
    count = 1
    for d in dims:
        count *= d
        if count > _MAX_ENTRIES:
            raise DimOverflow(f"header dims {dims} overflow the addressable size")
    payload = raw[4 + _HEADER.size:]
    if len(payload) < 8 * count:
        raise TruncatedPayload(
            f"header promises {count} values but payload holds {len(payload) // 8}"
        )
    if len(payload) > 8 * count:
        raise FormatError(f"{len(payload) - 8 * count} trailing bytes after payload")
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(dims)


def write_tensor(path, a) -> None:
    atomic_write(path, tensor_to_bytes(a))


def read_tensor(path) -> np.ndarray:
    return tensor_from_bytes(Path(path).read_bytes())


# --- masks -------------------------------------------------------------------


def mask_to_text(mask: ObservationMask) -> str:
    buf = io.StringIO()
    buf.write("# tensor_rtc mask v1\n")
    buf.write("# dims {} {} {}\n".format(*mask.dims))
    buf.write(f"# model {mask.model or 'none'}\n")
    buf.write(f"# rate {mask.rate if mask.rate is not None else 'none'}\n")
    buf.write(f"# seed {mask.seed if mask.seed is not None else 'none'}\n")
    np.savetxt(buf, mask.indices() + 1, fmt="%d")
    return buf.getvalue()


def mask_from_text(text: str) -> ObservationMask:
    meta: dict[str, str] = {}
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split(None, 1)
            if len(parts) == 2:
                meta[parts[0]] = parts[1]
            continue
        fields = line.split()
        if len(fields) != 3:
            raise FormatError(f"line {lineno}: expected 'i j k', got {line!r}")
        rows.append([int(f) for f in fields])
    if "dims" not in meta:
        raise FormatError("mask file lacks a '# dims n1 n2 n3' header")
    dims = tuple(int(d) for d in meta["dims"].split())
    idx = np.array(rows, dtype=np.int64).reshape(-1, 3) - 1

    def opt(key, conv):
        value = meta.get(key, "none")
        return None if value == "none" else conv(value)

    return ObservationMask.from_indices(
        dims, idx, model=opt("model", str), rate=opt("rate", float), seed=opt("seed", int)
    )


def write_mask(path, mask: ObservationMask) -> None:
    atomic_write(path, mask_to_text(mask).encode())


def read_mask(path) -> ObservationMask:
    return mask_from_text(Path(path).read_text())


# --- images ------------------------------------------------------------------


def _netpbm_header(raw: bytes, magic: bytes):
    """Parse a binary netpbm header, returning ``(width, height, maxval, offset)``."""
    if raw[:2] != magic:
        raise UnsupportedFormat(f"expected {magic.decode()} image, found {raw[:2]!r}")
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise UnsupportedFormat("truncated image header")
        tokens.append(int(raw[start:pos]))
    # exactly one whitespace byte separates the header from the raster
    return tokens[0], tokens[1], tokens[2], pos + 1


def read_ppm(path) -> np.ndarray:
    """Binary 8-bit PPM as an ``h x w x 3`` tensor with values in [0, 1]."""
    raw = Path(path).read_bytes()
    width, height, maxval, offset = _netpbm_header(raw, b"P6")
    if maxval != 255:
        raise UnsupportedFormat(f"only 8-bit images are supported (maxval {maxval})")
    data = raw[offset:offset + 3 * width * height]
    if len(data) < 3 * width * height:
        raise UnsupportedFormat("pixel data is truncated")
    pixels = np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3)
    return pixels.astype(np.float64) / 255.0


def quantize8(a) -> np.ndarray:
    """Map [0, 1] to 0..255, clipping and rounding half up."""
    return np.floor(np.clip(np.asarray(a, dtype=np.float64), 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def write_ppm(path, a) -> None:
    a = check_tensor3(a)
    if a.shape[2] != 3:
        raise UnsupportedFormat(f"PPM needs three channels, got shape {a.shape}")
    h, w, _ = a.shape
    atomic_write(path, f"P6\n{w} {h}\n255\n".encode() + quantize8(a).tobytes())


def write_pgm(path, gray: np.ndarray) -> None:
    gray = np.asarray(gray, dtype=np.uint8)
    h, w = gray.shape
    atomic_write(path, f"P5\n{w} {h}\n255\n".encode() + gray.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    width, height, maxval, offset = _netpbm_header(raw, b"P5")
    if maxval != 255:
        raise UnsupportedFormat(f"only 8-bit images are supported (maxval {maxval})")
    return np.frombuffer(raw[offset:offset + width * height], dtype=np.uint8).reshape(height, width)


# --- tables and heatmaps -------------------------------------------------------


def csv_text(rows: list[dict], columns=None) -> str:
    columns = list(columns or (rows[0].keys() if rows else []))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_csv(path, rows: list[dict], columns=None) -> None:
    atomic_write(path, csv_text(rows, columns).encode())


def heatmap_pixels(success: np.ndarray) -> np.ndarray:
    """Gray levels for a success-fraction matrix indexed ``[rank, gamma]``.

    The image has one column per rank and one row per corruption fraction,
    with the largest fraction on the top row; gray is
    ``round(255 * fraction)`` with halves rounded up (0 = black = no
    success).
    """
    gray = np.floor(255.0 * np.asarray(success, dtype=np.float64) + 0.5).astype(np.uint8)
    return gray.T[::-1]


def emit_heatmap(grid, path) -> Path:
    """Write the grid as a PGM image plus a sidecar CSV; returns the CSV path."""
    path = Path(path)
    write_pgm(path, heatmap_pixels(grid.success))
    rows = [
        {"rank": r, "gamma": g, "rho": grid.rho, "success_fraction": grid.success[a, b], "trials": grid.trials}
        for a, r in enumerate(grid.ranks)
        for b, g in enumerate(grid.gammas)
    ]
    sidecar = path.with_suffix(".csv")
    write_csv(sidecar, rows)
    return sidecar
