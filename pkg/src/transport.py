"""Diffusion and decay of stored coherence fields.

Two solvers evolve d(rho)/dt = D lap(rho) on the transverse plane: a spectral
propagator that multiplies Fourier modes by exp(-D k^2 t), and a direct quadrature
of the normalized Gaussian kernel used as its oracle. Both treat the grid as
periodic; the spectral solver warns when the diffused beam gets wide enough for
the periodic images to matter.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from src.errors import ValidationError, WrapAroundWarning
from src.field_core import ComplexField2D

DEFAULT_GUARD_FACTOR = 6.0

# Periodic images are summed until the kernel tail falls below exp(-KERNEL_TAIL)
KERNEL_TAIL = 40.0


@dataclass(frozen=True)
class MediumParams:
    """Diffusion coefficient D (m^2/s) and coherence intensity decay rate gamma (1/s)."""

    D: float
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("D", "gamma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be non-negative and finite, got {value}")


def _check_time(t: float, strict: bool = False):
    if not math.isfinite(t) or t < 0 or (strict and t == 0):
        bound = "positive" if strict else "non-negative"
        raise ValidationError(f"duration must be {bound} and finite, got {t}")


def wavenumbers(n: int, pitch: float) -> np.ndarray:
    """k = 2 pi j / extent in the standard FFT frequency layout."""
    return 2.0 * np.pi * np.fft.fftfreq(n, d=pitch)


def predicted_waist(field: ComplexField2D, D: float, t: float) -> float:
    """Waist the beam will have after diffusing for t.

    Uses sqrt(2 <r^2>) of the intensity about its centroid as the starting waist,
    which is exact for a Gaussian and generous for ring-shaped modes.
    """
    intensity = field.intensity()
    total = float(np.sum(intensity))
    if total == 0.0:
        return math.sqrt(4.0 * D * t)
    xx, yy = field.grid.coordinates()
    cx = float(np.sum(intensity * xx)) / total
    cy = float(np.sum(intensity * yy)) / total
    mean_r2 = float(np.sum(intensity * ((xx - cx) ** 2 + (yy - cy) ** 2))) / total
    return math.sqrt(2.0 * mean_r2 + 4.0 * D * t)


def check_wrap_around(field: ComplexField2D, medium: MediumParams, t: float,
                      guard_factor: float = DEFAULT_GUARD_FACTOR, waist: float = None) -> bool:
    """Warn if the diffused waist exceeds 1/guard_factor of the grid extent.

    ``waist`` is the undiffused beam waist when the caller knows it; otherwise it is
    estimated from the intensity moments.
    """
    if waist is None:
        waist = predicted_waist(field, medium.D, t)
    else:
        waist = math.sqrt(waist * waist + 4.0 * medium.D * t)
    extent = min(field.grid.extent_x, field.grid.extent_y)
    if guard_factor * waist > extent:
        warnings.warn(
            f"diffused waist {waist:.4g} m needs an extent of {guard_factor * waist:.4g} m "
            f"but the grid spans {extent:.4g} m; periodic wrap-around may bias the result",
            WrapAroundWarning,
            stacklevel=3,
        )
        return False
    return True


def diffuse_spectral(field: ComplexField2D, medium: MediumParams, t: float,
                     guard_factor: float = DEFAULT_GUARD_FACTOR, waist: float = None) -> ComplexField2D:
    """Solve the diffusion equation for a duration t by Fourier multiplication."""
    _check_time(t)
    if t == 0 or medium.D == 0:
        return field.with_values(field.values)

    check_wrap_around(field, medium, t, guard_factor, waist)

    grid = field.grid
    kx = wavenumbers(grid.nx, grid.pitch)
    ky = wavenumbers(grid.ny, grid.pitch)
    k2 = ky[:, None] ** 2 + kx[None, :] ** 2
    propagator = np.exp(-medium.D * t * k2)

    spectrum = np.fft.fft2(field.values)
    return field.with_values(np.fft.ifft2(spectrum * propagator))


def periodic_kernel_matrix(coords: np.ndarray, period: float, four_dt: float, pitch: float) -> np.ndarray:
    """1D heat kernel between samples, summed over periodic images and weighted by pitch."""
    separation = coords[:, None] - coords[None, :]
    images = 1 + int(math.ceil(math.sqrt(KERNEL_TAIL * four_dt) / period))
    kernel = np.zeros_like(separation)
    for n in range(-images, images + 1):
        kernel += np.exp(-(separation - n * period) ** 2 / four_dt)
    return kernel * (pitch / math.sqrt(math.pi * four_dt))


def diffuse_direct(field: ComplexField2D, medium: MediumParams, t: float) -> ComplexField2D:
    """Midpoint-quadrature convolution with (4 pi D t)^-1 exp(-|r - r'|^2 / 4Dt).

    The 2D kernel factorizes into x and y parts, so the double sum over source
    samples is evaluated as Ky @ values @ Kx^T. Sources enter with all their
    periodic images, the same boundary the spectral solver has. Intended as a
    reference for grids up to about 128 x 128.
    """
    _check_time(t, strict=True)
    if medium.D == 0:
        return field.with_values(field.values)

    grid = field.grid
    x, y = grid.axes()
    four_dt = 4.0 * medium.D * t
    kernel_x = periodic_kernel_matrix(x, grid.extent_x, four_dt, grid.pitch)
    kernel_y = periodic_kernel_matrix(y, grid.extent_y, four_dt, grid.pitch)
    return field.with_values(kernel_y @ field.values @ kernel_x.T)


def apply_decay(field: ComplexField2D, medium: MediumParams, t: float) -> ComplexField2D:
    """Scale amplitudes by exp(-gamma t / 2) so the power falls as exp(-gamma t)."""
    _check_time(t)
    if t == 0 or medium.gamma == 0:
        return field.with_values(field.values)
    return field.scaled(math.exp(-0.5 * medium.gamma * t))
