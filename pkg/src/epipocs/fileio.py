"""
Grayscale PGM images and CSV signals/tables.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np


class PGMError(ValueError):
    code = 10


class MalformedHeaderError(PGMError):
    code = 11


class TruncatedPayloadError(PGMError):
    code = 12


class UnsupportedFormatError(PGMError):
    code = 13


class UnsupportedMaxvalError(PGMError):
    code = 14


class CSVFormatError(ValueError):
    pass


class EmptyInputError(CSVFormatError):
    pass


# --------------------------------------------------------------------------
# PGM


def _header_tokens(data: bytes, count: int):
    """Read `count` whitespace-separated header tokens, skipping comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last one.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and (data[pos : pos + 1].isspace() or data[pos : pos + 1] == b"#"):
            if data[pos : pos + 1] == b"#":
                while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise MalformedHeaderError("PGM header ends early")
        tokens.append(data[start:pos])
    if pos >= n or not data[pos : pos + 1].isspace():
        if count == 4 and pos >= n:
            raise TruncatedPayloadError("PGM file has no pixel data")
        raise MalformedHeaderError("PGM header not terminated by whitespace")
    return tokens, pos + 1


def load_pgm(path) -> np.ndarray:
    """Read a P5 (binary) or P2 (ASCII) PGM with maxval <= 255.

    Returns a float64 ``(H, W)`` array on the 0..255 scale.
    """
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise UnsupportedFormatError(f"unsupported image format {magic!r}")
    if len(data) < 3 or not data[2:3].isspace():
        raise MalformedHeaderError("bad PGM magic line")
    tokens, offset = _header_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedHeaderError(f"non-integer PGM header field in {tokens[1:]}") from None
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"bad PGM size {width}x{height}")
    if not 1 <= maxval <= 255:
        raise UnsupportedMaxvalError(f"unsupported maxval {maxval}")
    count = width * height
    if magic == b"P5":
        payload = data[offset : offset + count]
        if len(payload) < count:
            raise TruncatedPayloadError(f"expected {count} pixels, found {len(payload)}")
        pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    else:
        fields = data[offset:].split()
        if len(fields) < count:
            raise TruncatedPayloadError(f"expected {count} pixels, found {len(fields)}")
        try:
            pixels = np.array([int(f) for f in fields[:count]], dtype=np.float64)
        except ValueError:
            raise MalformedHeaderError("non-integer pixel in ASCII PGM") from None
    if pixels.max() > maxval:
        raise MalformedHeaderError(f"pixel value exceeds maxval {maxval}")
    if maxval != 255:
        pixels = pixels * (255.0 / maxval)
    return pixels.reshape(height, width)


def save_pgm(path, image) -> None:
    """Write `image` as a binary P5 PGM, clamped to [0, 255] and rounded."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("PGM images must be 2-D")
    pixels = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    h, w = pixels.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + pixels.tobytes())


# --------------------------------------------------------------------------
# CSV


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def save_csv(path, header, rows, comment: str | None = None) -> None:
    """Write a table with an optional ``#`` comment line and a header row.

    Floats are printed with 17 significant digits so they read back exactly.
    """
    buf = io.StringIO()
    if comment is not None:
        buf.write("# " + comment.replace("\n", " ") + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), newline="")


def save_signal_csv(path, x, comment: str | None = None) -> None:
    """Write a 1-D signal, one value per line."""
    lines = [] if comment is None else ["# " + comment.replace("\n", " ")]
    lines += ["%.17g" % v for v in np.asarray(x, dtype=np.float64).ravel()]
    Path(path).write_text("\n".join(lines) + "\n", newline="")


def load_csv_signal(path) -> np.ndarray:
    """Read one number per line; ``#`` comment lines and blank lines are skipped."""
    values = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise CSVFormatError(f"{path}:{lineno}: not a number: {text!r}") from None
    if not values:
        raise EmptyInputError(f"{path}: no values")
    return np.array(values)


def load_csv_table(path):
    """Read a table written by `save_csv`.

    Returns ``(comments, header, rows)`` with rows as lists of strings.
    """
    comments, lines = [], []
    with open(path, newline="") as fh:
        for line in fh:
            (comments if line.startswith("#") else lines).append(line)
    rows = list(csv.reader(lines))
    if not rows:
        raise EmptyInputError(f"{path}: no header")
    return [c[1:].strip() for c in comments], rows[0], rows[1:]
