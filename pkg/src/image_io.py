"""16-bit binary PGM (NetPBM P5) maps of field intensity and phase."""

from pathlib import Path
from typing import Union

import numpy as np

from src.errors import ValidationError
from src.field_core import ComplexField2D

PGM_MAXVAL = 65535


def save_pgm16(pixels: np.ndarray, path: Union[str, Path]) -> Path:
    """Write a 2D uint16 array as P5 with maxval 65535 (big-endian samples).

    Row 0 of ``pixels`` is the bottom of the image (smallest y); PGM stores the
    top row first, so rows are flipped on the way out.
    """
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValidationError(f"expected a 2D array, got shape {pixels.shape}")
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n{PGM_MAXVAL}\n".encode("ascii")
    path = Path(path)
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.flipud(pixels).astype(">u2").tobytes())
    return path


def load_pgm16(path: Union[str, Path]) -> np.ndarray:
    """Read back a P5 file written by save_pgm16 (same row orientation)."""
    with open(path, "rb") as f:
        data = f.read()
    tokens = []
    offset = 0
    while len(tokens) < 4 and offset < len(data):
        while offset < len(data) and data[offset:offset + 1].isspace():
            offset += 1
        start = offset
        while offset < len(data) and not data[offset:offset + 1].isspace():
            offset += 1
        tokens.append(data[start:offset].decode("ascii", errors="replace"))
    offset += 1
    try:
        magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    except (IndexError, ValueError):
        raise ValidationError(f"{path}: unreadable PGM header")
    if magic != "P5" or maxval != PGM_MAXVAL:
        raise ValidationError(f"{path}: not a 16-bit P5 file")
    if len(data) - offset < 2 * width * height:
        raise ValidationError(f"{path}: truncated pixel data")
    pixels = np.frombuffer(data, dtype=">u2", count=width * height, offset=offset)
    return np.flipud(pixels.reshape(height, width)).astype(np.uint16)


def intensity_pixels(field: ComplexField2D) -> np.ndarray:
    """|field|^2 scaled so the brightest sample maps to 65535."""
    intensity = field.intensity()
    peak = float(np.max(intensity))
    if peak == 0.0:
        return np.zeros(field.grid.shape, dtype=np.uint16)
    return np.rint(intensity / peak * PGM_MAXVAL).astype(np.uint16)


def phase_pixels(field: ComplexField2D) -> np.ndarray:
    """Phase wrapped to [0, 2 pi) mapped linearly onto [0, 65535]."""
    phase = np.mod(field.phase(), 2.0 * np.pi)
    levels = np.floor(phase / (2.0 * np.pi) * (PGM_MAXVAL + 1))
    return np.clip(levels, 0, PGM_MAXVAL).astype(np.uint16)


def save_intensity_map(field: ComplexField2D, path: Union[str, Path]) -> Path:
    return save_pgm16(intensity_pixels(field), path)


def save_phase_map(field: ComplexField2D, path: Union[str, Path]) -> Path:
    return save_pgm16(phase_pixels(field), path)
