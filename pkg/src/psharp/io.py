"""
Raster file formats.

PSRAS1 is a plain-text header followed by little-endian float32 samples,
band-sequential and row-major::

    PSRAS1
    width=<int>
    height=<int>
    bands=<int>
    pixel_size=<float>
    <payload>

ASCII/binary PGM is supported for single-band import and export.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .raster import Raster

MAGIC = "PSRAS1"
_KEYS = ("width", "height", "bands", "pixel_size")


class FormatError(InvalidArgument):
    pass


def encode_psras(r: Raster) -> bytes:
    header = f"{MAGIC}\nwidth={r.width}\nheight={r.height}\nbands={r.bands}\npixel_size={r.pixel_size!r}\n"
    payload = r.data.astype("<f4").tobytes(order="C")
    return header.encode("ascii") + payload


def decode_psras(blob: bytes) -> Raster:
    pos = 0
    lines = []
    for _ in range(1 + len(_KEYS)):
        end = blob.find(b"\n", pos)
        if end < 0:
            raise FormatError("truncated PSRAS1 header")
        lines.append(blob[pos:end].decode("ascii", errors="replace"))
        pos = end + 1
    if lines[0] != MAGIC:
        raise FormatError(f"bad magic {lines[0]!r}, expected {MAGIC}")
    values = {}
    for line, key in zip(lines[1:], _KEYS):
        k, sep, v = line.partition("=")
        if not sep or k.strip() != key:
            raise FormatError(f"expected header field {key!r}, got {line!r}")
        values[key] = v.strip()
    try:
        w, h, k = int(values["width"]), int(values["height"]), int(values["bands"])
        pixel_size = float(values["pixel_size"])
    except ValueError as exc:
        raise FormatError(f"bad header value: {exc}") from None
    if w <= 0 or h <= 0 or k <= 0:
        raise FormatError(f"bad dimensions {w}x{h}x{k}")
    expected = w * h * k * 4
    payload = blob[pos:]
    if len(payload) != expected:
        raise FormatError(f"payload is {len(payload)} bytes, expected {expected}")
    data = np.frombuffer(payload, dtype="<f4").reshape(k, h, w).astype(np.float64)
    return Raster(data, pixel_size)


def write_psras(path, r: Raster) -> None:
    Path(path).write_bytes(encode_psras(r))


def read_psras(path) -> Raster:
    return decode_psras(Path(path).read_bytes())


def _pgm_tokens(blob: bytes):
    """Parse the four header tokens (comments skipped); also return the payload offset."""
    tokens = []
    i = 0
    while len(tokens) < 4:
        while i < len(blob) and blob[i : i + 1].isspace():
            i += 1
        if blob[i : i + 1] == b"#":
            while i < len(blob) and blob[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(blob) and not blob[j : j + 1].isspace():
            j += 1
        if j == i:
            raise FormatError("truncated PGM header")
        tokens.append(blob[i:j].decode("ascii"))
        i = j
    return tokens, i + 1


def read_pgm(path) -> Raster:
    blob = Path(path).read_bytes()
    (magic, w, h, maxval), offset = _pgm_tokens(blob)
    w, h, maxval = int(w), int(h), int(maxval)
    if magic == "P2":
        values = np.array(blob[offset:].split(), dtype=np.float64)
        if values.size != w * h:
            raise FormatError(f"PGM has {values.size} samples, expected {w * h}")
    elif magic == "P5":
        dtype = ">u2" if maxval > 255 else "u1"
        values = np.frombuffer(blob, dtype=dtype, count=w * h, offset=offset).astype(np.float64)
    else:
        raise FormatError(f"not a PGM file (magic {magic!r})")
    return Raster(values.reshape(1, h, w))


def write_pgm(path, r: Raster, band: int = 0) -> None:
    """ASCII PGM; samples are rounded and clipped to [0, 65535]."""
    values = np.clip(np.rint(r.data[band]), 0, 65535).astype(np.int64)
    maxval = max(1, int(values.max()))
    lines = [f"P2\n{r.width} {r.height}\n{maxval}"]
    lines += [" ".join(str(v) for v in row) for row in values]
    Path(path).write_text("\n".join(lines) + "\n")


def read_raster(path) -> Raster:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    return read_psras(path)


def write_raster(path, r: Raster) -> None:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        if r.bands != 1:
            raise FormatError("PGM output needs a single-band raster")
        write_pgm(path, r)
    else:
        write_psras(path, r)
