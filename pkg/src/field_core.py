"""Sampled transverse fields, the two stored beam shapes and the probe/coherence map.

Fields are sampled at pixel centers on a uniform grid. Arrays are indexed
``values[iy, ix]`` so rows run along y and each row along x, which is also the
row-major order of the field CSV format.
"""

import math
from dataclasses import dataclass, field as dataclass_field, replace
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import pandas as pd

from src.errors import ConfigurationError, ValidationError

# Extent the Gaussian-family beams need, in waists, before truncation loss matters
MIN_EXTENT_IN_WAISTS = 6.0
MIN_SAMPLES = 8

FIELD_CSV_COLUMNS = ["x_m", "y_m", "re", "im"]


@dataclass(frozen=True)
class GridSpec:
    """Uniform transverse grid with physical pitch (meters)."""

    nx: int
    ny: int
    pitch: float
    origin: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValidationError(f"grid sample counts must be integers, got {self.nx}x{self.ny}")
        if self.nx < MIN_SAMPLES or self.ny < MIN_SAMPLES:
            raise ValidationError(f"grid needs at least {MIN_SAMPLES} samples per axis, got {self.nx}x{self.ny}")
        if not (math.isfinite(self.pitch) and self.pitch > 0):
            raise ValidationError(f"pitch must be positive and finite, got {self.pitch}")
        if not all(math.isfinite(c) for c in self.origin):
            raise ValidationError(f"origin must be finite, got {self.origin}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def extent_x(self) -> float:
        return self.nx * self.pitch

    @property
    def extent_y(self) -> float:
        return self.ny * self.pitch

    @property
    def half_extent(self) -> float:
        """Half the smaller physical extent."""
        return 0.5 * min(self.extent_x, self.extent_y)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def cell_area(self) -> float:
        return self.pitch * self.pitch

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Sample-center coordinates along x and y."""
        x = self.origin[0] + (np.arange(self.nx) - 0.5 * (self.nx - 1)) * self.pitch
        y = self.origin[1] + (np.arange(self.ny) - 0.5 * (self.ny - 1)) * self.pitch
        return x, y

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        x, y = self.axes()
        return np.meshgrid(x, y, indexing="xy")

    def polar(self, center: Tuple[float, float] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Radius and azimuth of every sample about ``center`` (grid origin by default)."""
        if center is None:
            center = self.origin
        xx, yy = self.coordinates()
        dx = xx - center[0]
        dy = yy - center[1]
        return np.hypot(dx, dy), np.arctan2(dy, dx)

    def contains(self, point: Tuple[float, float]) -> bool:
        x, y = self.axes()
        return x[0] <= point[0] <= x[-1] and y[0] <= point[1] <= y[-1]


@dataclass(frozen=True, eq=False)
class ComplexField2D:
    """Complex field or coherence sampled on a GridSpec."""

    grid: GridSpec
    values: np.ndarray = dataclass_field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != self.grid.shape:
            raise ValidationError(f"values shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def phase(self) -> np.ndarray:
        return np.angle(self.values)

    def total_power(self) -> float:
        """Sum of |value|^2 times the cell area."""
        return float(np.sum(self.intensity()) * self.grid.cell_area)

    def max_amplitude(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values: np.ndarray) -> "ComplexField2D":
        return ComplexField2D(self.grid, values)

    def scaled(self, factor: complex) -> "ComplexField2D":
        return ComplexField2D(self.grid, self.values * factor)


def total_power(field: ComplexField2D) -> float:
    return field.total_power()


@dataclass(frozen=True)
class LGModeSpec:
    """LG_0^m helical mode: winding number, waist (m) and total power."""

    m: int
    w0: float
    P: float = 1.0

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 0:
            raise ValidationError(f"winding number must be a non-negative integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        _check_waist_and_power(self.w0, self.P)

    def rewaisted(self, w0: float) -> "LGModeSpec":
        return replace(self, w0=w0)


@dataclass(frozen=True)
class FlatHoleSpec:
    """Gaussian beam with a centered circular stop of radius r0 and flat phase."""

    w0: float
    r0: float
    P: float = 1.0

    def __post_init__(self):
        _check_waist_and_power(self.w0, self.P)
        if not (math.isfinite(self.r0) and self.r0 >= 0):
            raise ValidationError(f"stop radius must be non-negative and finite, got {self.r0}")


@dataclass(frozen=True)
class CouplingRatio:
    """The combination g/Omega; g and Omega never appear separately."""

    ratio: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.ratio) and self.ratio > 0):
            raise ValidationError(f"coupling ratio must be positive and finite, got {self.ratio}")


def _check_waist_and_power(w0: float, P: float):
    if not (math.isfinite(w0) and w0 > 0):
        raise ValidationError(f"waist must be positive and finite, got {w0}")
    if not (math.isfinite(P) and P > 0):
        raise ValidationError(f"power must be positive and finite, got {P}")


def _check_extent(grid: GridSpec, w0: float):
    need = MIN_EXTENT_IN_WAISTS * w0
    if grid.extent_x < need or grid.extent_y < need:
        raise ConfigurationError(
            f"grid extent {grid.extent_x:.4g} x {grid.extent_y:.4g} m is below "
            f"{MIN_EXTENT_IN_WAISTS:g} waists ({need:.4g} m)"
        )


def lg_amplitude(r: Union[float, np.ndarray], m: int, w0: float, P: float = 1.0) -> Union[float, np.ndarray]:
    """Ring-shaped radial cross-section A_m(r, w0)."""
    r = np.asarray(r, dtype=float)
    norm = math.sqrt(2.0 * P / (math.pi * math.factorial(m))) / w0
    return norm * (math.sqrt(2.0) * r / w0) ** m * np.exp(-(r * r) / (w0 * w0))


def make_lg_field(spec: LGModeSpec, grid: GridSpec) -> ComplexField2D:
    """Sample A_m(r, w0) exp(-i m theta) at the sample centers."""
    _check_extent(grid, spec.w0)
    r, theta = grid.polar()
    values = lg_amplitude(r, spec.m, spec.w0, spec.P) * np.exp(-1j * spec.m * theta)
    return ComplexField2D(grid, values)


def stop_mask(r: np.ndarray, r0: float) -> np.ndarray:
    """True where the stop leaves the beam open.

    The ring r == r0 counts as blocked; a zero-radius stop blocks nothing.
    """
    if r0 == 0:
        return np.ones_like(r, dtype=bool)
    return r > r0


def make_flat_hole_field(spec: FlatHoleSpec, grid: GridSpec) -> ComplexField2D:
    """Sample Theta(r - r0) A_0(r, w0): a blocked Gaussian with zero phase."""
    _check_extent(grid, spec.w0)
    if spec.r0 >= 3.0 * spec.w0:
        raise ValidationError(f"stop radius {spec.r0:.4g} m must stay below 3 w0 ({3.0 * spec.w0:.4g} m)")
    if spec.r0 >= grid.half_extent:
        raise ValidationError(f"stop radius {spec.r0:.4g} m exceeds the grid half-extent {grid.half_extent:.4g} m")
    r, _ = grid.polar()
    amplitude = np.where(stop_mask(r, spec.r0), lg_amplitude(r, 0, spec.w0, spec.P), 0.0)
    return ComplexField2D(grid, amplitude.astype(np.complex128))


def imaged_stop_radius(stop_radius: float, magnification: float) -> float:
    """Radius of the dark hole on the atoms for a stop imaged with ``magnification``."""
    if stop_radius < 0 or magnification <= 0:
        raise ValidationError("stop radius must be >= 0 and magnification > 0")
    return stop_radius * magnification


def store(probe: ComplexField2D, coupling: CouplingRatio = CouplingRatio()) -> ComplexField2D:
    """Map a probe field onto the ground-state coherence, rho12 = (-g/Omega) E."""
    return probe.scaled(-coupling.ratio)


def retrieve(coherence: ComplexField2D, coupling: CouplingRatio = CouplingRatio()) -> ComplexField2D:
    """Map the coherence back onto the probe, E = (-Omega/g) rho12."""
    return coherence.scaled(-1.0 / coupling.ratio)


def field_to_frame(field: ComplexField2D) -> pd.DataFrame:
    xx, yy = field.grid.coordinates()
    return pd.DataFrame({
        "x_m": xx.ravel(),
        "y_m": yy.ravel(),
        "re": field.values.real.ravel(),
        "im": field.values.imag.ravel(),
    }, columns=FIELD_CSV_COLUMNS)


def save_field_csv(field: ComplexField2D, path: Union[str, Path], float_format: str = "%.12g") -> Path:
    """Write the field as ``x_m,y_m,re,im`` rows in row-major order."""
    path = Path(path)
    field_to_frame(field).to_csv(path, index=False, float_format=float_format)
    return path


def load_field_csv(path: Union[str, Path]) -> ComplexField2D:
    """Read a field CSV and rebuild its grid from the coordinate columns."""
    frame = pd.read_csv(path)
    missing = [c for c in FIELD_CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise ValidationError(f"{path}: missing columns {missing}")

    x = np.unique(frame["x_m"].to_numpy())
    y = np.unique(frame["y_m"].to_numpy())
    if len(x) * len(y) != len(frame):
        raise ValidationError(f"{path}: samples do not form a full rectangular grid")

    pitch = _uniform_pitch(x, path)
    pitch_y = _uniform_pitch(y, path)
    if not math.isclose(pitch, pitch_y, rel_tol=1e-6):
        raise ValidationError(f"{path}: x pitch {pitch:.6g} and y pitch {pitch_y:.6g} differ")

    frame = frame.sort_values(["y_m", "x_m"], kind="mergesort")
    grid = GridSpec(nx=len(x), ny=len(y), pitch=pitch,
                    origin=(0.5 * (x[0] + x[-1]), 0.5 * (y[0] + y[-1])))
    values = (frame["re"].to_numpy() + 1j * frame["im"].to_numpy()).reshape(grid.shape)
    return ComplexField2D(grid, values)


def _uniform_pitch(axis: np.ndarray, path) -> float:
    steps = np.diff(axis)
    if len(steps) == 0:
        raise ValidationError(f"{path}: single-sample axis")
    pitch = float(np.mean(steps))
    if np.max(np.abs(steps - pitch)) > 1e-6 * pitch:
        raise ValidationError(f"{path}: sample coordinates are not uniformly spaced")
    return pitch
