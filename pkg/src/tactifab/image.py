"""8-bit raster handling: binary PGM/PPM files, gray conversion, resizing.

Images are plain numpy arrays throughout the package:

* gray image  -- ``(M, N) uint8``  (M rows, N columns)
* RGB image   -- ``(M, N, 3) uint8``
* real plane  -- ``(M, N) float64`` intermediate values

File I/O is restricted to binary PGM (P5) and PPM (P6) with maxval 255 so
round trips are bit-exact and need no third-party codec.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

# ITU-R BT.601 luma weights, fixed so gray conversion is deterministic.
GRAY_WEIGHTS = (0.299, 0.587, 0.114)


class ImageFormatError(ValueError):
    """A PGM/PPM file does not match the supported subset."""


def round_half_up(values: np.ndarray) -> np.ndarray:
    """Round nonnegative values half away from zero (0.5 -> 1, 1.5 -> 2)."""
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


def _tokenize_header(data: bytes, count: int):
    """Pull `count` whitespace-separated tokens after the magic, skipping
    '#' comments. Returns (tokens, offset of the byte after the last one)."""
    tokens = []
    i = 2  # past the 2-byte magic
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise ImageFormatError("malformed header: missing size/maxval fields")
        tokens.append(data[start:i])
    return tokens, i


def load_image(path) -> np.ndarray:
    """Load a binary PGM (P5) or PPM (P6) file.

    Returns a ``(M, N) uint8`` array for P5 and ``(M, N, 3) uint8`` for P6.
    Raises FileNotFoundError for a missing file and ImageFormatError with a
    message naming the defect for anything else.
    """
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"malformed header: unknown magic {magic!r}")
    tokens, end = _tokenize_header(data, 3)
    if not all(t.isdigit() for t in tokens):
        raise ImageFormatError("malformed header: non-numeric size/maxval")
    width, height, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise ImageFormatError(f"unsupported maxval {maxval} (only 255)")
    if width < 1 or height < 1:
        raise ImageFormatError("malformed header: zero image dimension")
    if end >= len(data) or not data[end : end + 1].isspace():
        raise ImageFormatError("malformed header: missing raster separator")
    raster = data[end + 1 :]
    channels = 1 if magic == b"P5" else 3
    expected = width * height * channels
    if len(raster) < expected:
        raise ImageFormatError(
            f"truncated pixel data: expected {expected} bytes, got {len(raster)}"
        )
    if len(raster) > expected:
        raise ImageFormatError("unexpected trailing bytes after pixel raster")
    pixels = np.frombuffer(raster, dtype=np.uint8)
    if channels == 1:
        return pixels.reshape(height, width).copy()
    return pixels.reshape(height, width, 3).copy()


def save_image(img: np.ndarray, path) -> None:
    """Write a gray image as binary P5 (or an RGB image as binary P6).

    Header uses single-'\\n' separators ("P5\\n<w> <h>\\n255\\n") so that
    save/load round trips are bit-exact.
    """
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        raise ValueError("image must be uint8")
    if arr.ndim == 2:
        magic = b"P5"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError("image must be (M, N) gray or (M, N, 3) RGB")
    height, width = arr.shape[:2]
    header = magic + b"\n%d %d\n255\n" % (width, height)
    Path(path).write_bytes(header + arr.tobytes())


def rgb_to_gray(img: np.ndarray) -> np.ndarray:
    """BT.601 luma conversion, rounded half away from zero."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected (M, N, 3) RGB image")
    gray = arr[..., 0] * GRAY_WEIGHTS[0] + arr[..., 1] * GRAY_WEIGHTS[1] + arr[..., 2] * GRAY_WEIGHTS[2]
    return np.clip(round_half_up(gray), 0, 255).astype(np.uint8)


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel alignment.

    Destination pixel (r, c) samples the source at
    ``src = (dst + 0.5) * (in_size / out_size) - 0.5``, edge-clamped.
    Output is rounded back to uint8.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError("zero target dimension")
    src = np.asarray(img, dtype=np.float64)
    in_h, in_w = src.shape

    def axis_coords(out_n, in_n):
        pos = (np.arange(out_n) + 0.5) * (in_n / out_n) - 0.5
        lo = np.floor(pos).astype(np.int64)
        frac = pos - lo
        return np.clip(lo, 0, in_n - 1), np.clip(lo + 1, 0, in_n - 1), frac

    r0, r1, fr = axis_coords(out_h, in_h)
    c0, c1, fc = axis_coords(out_w, in_w)

    top = src[np.ix_(r0, c0)] * (1.0 - fc) + src[np.ix_(r0, c1)] * fc
    bot = src[np.ix_(r1, c0)] * (1.0 - fc) + src[np.ix_(r1, c1)] * fc
    out = top * (1.0 - fr)[:, None] + bot * fr[:, None]
    return np.clip(round_half_up(out), 0, 255).astype(np.uint8)


def mean_intensity(plane) -> float:
    """Arithmetic mean over all values of a plane or gray image."""
    arr = np.asarray(plane, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty plane")
    return float(arr.mean())
