"""Image file formats: binary PGM/PPM and a plain-text float matrix.

PGM (P5) holds one channel and PPM (P6) three, both binary with maxval
255, rows top to bottom.  The text format keeps full float precision: a
header line ``H W C`` followed by whitespace-separated values in [0, 1],
pixel-major with channels interleaved.  Quantisation happens only at the
PGM/PPM boundary.
"""

from __future__ import annotations

import numpy as np

from .geometry import validate_image


class ImageFormatError(ValueError):
    """Unreadable or malformed image file."""


def write_image(path, image) -> None:
    path = str(path)
    img = validate_image(image, check_range=True)
    if path.endswith(".txt"):
        _write_text(path, img)
    elif path.endswith(".pgm"):
        if img.shape[2] != 1:
            raise ImageFormatError("PGM holds exactly one channel")
        _write_netpbm(path, img, b"P5")
    elif path.endswith(".ppm"):
        if img.shape[2] != 3:
            raise ImageFormatError("PPM holds exactly three channels")
        _write_netpbm(path, img, b"P6")
    else:
        raise ImageFormatError(f"unsupported image extension: {path}")


def read_image(path) -> np.ndarray:
    path = str(path)
    if path.endswith(".txt"):
        return _read_text(path)
    if path.endswith(".pgm") or path.endswith(".ppm"):
        return _read_netpbm(path)
    raise ImageFormatError(f"unsupported image extension: {path}")


def _write_netpbm(path: str, img: np.ndarray, magic: bytes) -> None:
    h, w, _ = img.shape
    data = np.rint(img * 255.0).clip(0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(data.tobytes())


def _read_netpbm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    tokens = []
    i = 0
    # header: magic, width, height, maxval, with '#' comments allowed
    while len(tokens) < 4:
        if i >= len(raw):
            raise ImageFormatError(f"truncated header in {path}")
        ch = raw[i : i + 1]
        if ch == b"#":
            while i < len(raw) and raw[i : i + 1] != b"\n":
                i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(raw) and not raw[j : j + 1].isspace():
                j += 1
            tokens.append(raw[i:j])
            i = j
    i += 1  # single whitespace byte after maxval
    magic, width, height, maxval = tokens
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise ImageFormatError(f"unsupported magic {magic!r} in {path}")
    try:
        w, h, mv = int(width), int(height), int(maxval)
    except ValueError as exc:
        raise ImageFormatError(f"bad header in {path}") from exc
    if mv < 1 or mv > 255:
        raise ImageFormatError(f"unsupported maxval {mv} in {path}")
    body = raw[i:]
    expected = w * h * channels
    if len(body) < expected:
        raise ImageFormatError(f"truncated pixel data in {path}")
    data = np.frombuffer(body[:expected], dtype=np.uint8).astype(float) / mv
    return data.reshape(h, w, channels)


def _write_text(path: str, img: np.ndarray) -> None:
    h, w, c = img.shape
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{h} {w} {c}\n")
        for row in img.reshape(h, -1):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _read_text(path: str) -> np.ndarray:
    try:
        with open(path) as fh:
            header = fh.readline().split()
            if len(header) != 3:
                raise ImageFormatError(f"bad text-image header in {path}")
            h, w, c = (int(t) for t in header)
            values = np.array(fh.read().split(), dtype=float)
    except OSError as exc:
        raise ImageFormatError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ImageFormatError(f"bad value in {path}: {exc}") from exc
    if values.size != h * w * c:
        raise ImageFormatError(
            f"expected {h * w * c} values in {path}, found {values.size}"
        )
    return values.reshape(h, w, c)
