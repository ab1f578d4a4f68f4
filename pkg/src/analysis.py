"""Observables of retrieved beams: radial cross-sections, topological charge,
darkness of the core, and fits of the diffusion coefficient to profile series."""

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.analytic import eval_flat_analytic, predict_profile
from src.errors import (BracketError, IndeterminatePhaseError, NoCrossingError,
                        ValidationError, WindingSamplingError)
from src.field_core import ComplexField2D, FlatHoleSpec, LGModeSpec
from src.numerics import bisect_increasing, golden_section_minimize
from src.transport import MediumParams

Point = Tuple[float, float]

MIN_BINS = 8
MIN_LOOP_SAMPLES = 64
DEFAULT_AMP_FLOOR = 1e-6
WINDING_TOLERANCE = 0.05

# Geometry of the analytic fill ratio, in waists: the smallest grid that holds a beam
ANALYTIC_RMAX_IN_WAISTS = 3.0
DEFAULT_FILL_BINS = 64
# The stored flat hole of radius w0/2 is taken as filled at t = 0.15 w0^2 / D
CALIBRATION_STOP_IN_WAISTS = 0.5
CALIBRATION_TIME = 0.15
FILL_SCAN_STEPS = 32

PROFILE_CSV_COLUMNS = ["r_m", "intensity", "count"]


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Azimuthally averaged intensity against radius; empty bins are left out."""

    bin_centers: np.ndarray
    intensity: np.ndarray
    counts: np.ndarray
    bin_width: float

    def __post_init__(self):
        centers = np.array(self.bin_centers, dtype=float)
        intensity = np.array(self.intensity, dtype=float)
        counts = np.array(self.counts, dtype=int)
        if not (centers.shape == intensity.shape == counts.shape) or centers.ndim != 1 or len(centers) == 0:
            raise ValidationError("profile arrays must be one-dimensional, non-empty and equally long")
        if np.any(np.diff(centers) <= 0):
            raise ValidationError("bin centers must be strictly increasing")
        if np.any(intensity < 0) or not np.all(np.isfinite(intensity)):
            raise ValidationError("profile intensity must be finite and non-negative")
        if np.any(counts < 1):
            raise ValidationError("every reported bin needs at least one sample")
        if not (self.bin_width > 0):
            raise ValidationError(f"bin width must be positive, got {self.bin_width}")
        for name, arr in (("bin_centers", centers), ("intensity", intensity), ("counts", counts)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def total_intensity(self) -> float:
        """Integral of the profile over the plane, sum of I 2 pi r dr."""
        return float(np.sum(self.intensity * 2.0 * np.pi * self.bin_centers * self.bin_width))

    def peak_radius(self) -> float:
        return float(self.bin_centers[int(np.argmax(self.intensity))])

    def scaled(self, factor: float) -> "RadialProfile":
        return RadialProfile(self.bin_centers, self.intensity * factor, self.counts, self.bin_width)

    def same_binning(self, other: "RadialProfile") -> bool:
        return (math.isclose(self.bin_width, other.bin_width, rel_tol=1e-12)
                and self.bin_centers.shape == other.bin_centers.shape
                and np.allclose(self.bin_centers, other.bin_centers, rtol=1e-12, atol=0.0))


@dataclass(frozen=True)
class FitResult:
    D_hat: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class EffectiveTimeResult:
    t_eff: float
    residual: float
    iterations: int


def intensity_centroid(field: ComplexField2D) -> Point:
    """Centroid of |field|^2, for beams whose center is not known in advance."""
    intensity = field.intensity()
    total = float(np.sum(intensity))
    if total == 0.0:
        raise ValidationError("cannot locate the centroid of an all-zero field")
    xx, yy = field.grid.coordinates()
    return float(np.sum(intensity * xx)) / total, float(np.sum(intensity * yy)) / total


def _resolve_center(field: ComplexField2D, center: Optional[Point]) -> Point:
    if center is None:
        return field.grid.origin
    if not field.grid.contains(center):
        raise ValidationError(f"center {center} lies outside the grid")
    return float(center[0]), float(center[1])


def _profile_radius(field: ComplexField2D, center: Point) -> float:
    """Largest radius whose full circle stays on the grid."""
    x, y = field.grid.axes()
    half = 0.5 * field.grid.pitch
    return min(center[0] - (x[0] - half), (x[-1] + half) - center[0],
               center[1] - (y[0] - half), (y[-1] + half) - center[1])


def radial_profile(field: ComplexField2D, center: Optional[Point] = None, nbins: int = 64) -> RadialProfile:
    """Mean |value|^2 in annuli of width r_max / nbins about ``center``.

    r_max is half the smaller grid extent for a centered beam, and shrinks to the
    distance to the nearest grid edge when the center is moved.
    """
    if nbins < MIN_BINS:
        raise ValidationError(f"need at least {MIN_BINS} bins, got {nbins}")
    center = _resolve_center(field, center)
    r_max = _profile_radius(field, center)
    if r_max < 4.0 * field.grid.pitch:
        raise ValidationError(f"profile radius {r_max:.4g} m spans fewer than 4 samples")
    width = r_max / nbins

    r, _ = field.grid.polar(center)
    index = np.floor(r / width).astype(int).ravel()
    keep = index < nbins
    index = index[keep]
    intensity = field.intensity().ravel()[keep]

    counts = np.bincount(index, minlength=nbins)
    sums = np.bincount(index, weights=intensity, minlength=nbins)
    occupied = counts > 0
    centers = (np.arange(nbins) + 0.5) * width
    return RadialProfile(centers[occupied], sums[occupied] / counts[occupied], counts[occupied], width)


def normalize_profiles(profiles: Sequence[RadialProfile]) -> List[RadialProfile]:
    """Rescale every profile to the total intensity of the first one."""
    if len(profiles) == 0:
        raise ValidationError("need at least one profile")
    reference = profiles[0]
    target = reference.total_intensity()
    normalized = []
    for profile in profiles:
        if not reference.same_binning(profile):
            raise ValidationError("profiles must share the same binning")
        total = profile.total_intensity()
        if total == 0.0:
            raise ValidationError("cannot normalize an all-zero profile")
        normalized.append(profile if profile is reference else profile.scaled(target / total))
    return normalized


def bilinear_sample(field: ComplexField2D, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Complex values at arbitrary points by bilinear interpolation between sample centers."""
    x, y = field.grid.axes()
    if np.any(xs < x[0]) or np.any(xs > x[-1]) or np.any(ys < y[0]) or np.any(ys > y[-1]):
        raise ValidationError("interpolation points fall outside the sampled grid")
    fx = (xs - x[0]) / field.grid.pitch
    fy = (ys - y[0]) / field.grid.pitch
    ix = np.clip(np.floor(fx).astype(int), 0, field.grid.nx - 2)
    iy = np.clip(np.floor(fy).astype(int), 0, field.grid.ny - 2)
    tx = fx - ix
    ty = fy - iy
    v = field.values
    return ((1 - tx) * (1 - ty) * v[iy, ix] + tx * (1 - ty) * v[iy, ix + 1]
            + (1 - tx) * ty * v[iy + 1, ix] + tx * ty * v[iy + 1, ix + 1])


def winding_circulation(field: ComplexField2D, center: Optional[Point], loop_radius: float,
                        nsamples: int = 256, amp_floor: float = DEFAULT_AMP_FLOOR) -> float:
    """Phase circulation around the loop in turns, before rounding.

    The loop runs clockwise, so a stored mode A(r) exp(-i m theta) circulates +m.
    """
    if nsamples < MIN_LOOP_SAMPLES:
        raise ValidationError(f"need at least {MIN_LOOP_SAMPLES} loop samples, got {nsamples}")
    if not (loop_radius > 0):
        raise ValidationError(f"loop radius must be positive, got {loop_radius}")
    center = _resolve_center(field, center)

    angles = -2.0 * np.pi * np.arange(nsamples) / nsamples
    values = bilinear_sample(field, center[0] + loop_radius * np.cos(angles),
                             center[1] + loop_radius * np.sin(angles))

    floor = amp_floor * field.max_amplitude()
    weakest = float(np.min(np.abs(values)))
    if weakest <= floor:
        raise IndeterminatePhaseError(
            f"amplitude {weakest:.3g} on the loop of radius {loop_radius:.4g} m is below the floor {floor:.3g}"
        )
    steps = np.angle(np.roll(values, -1) / values)
    return float(np.sum(steps) / (2.0 * np.pi))


def winding_number(field: ComplexField2D, center: Optional[Point], loop_radius: float,
                   nsamples: int = 256, amp_floor: float = DEFAULT_AMP_FLOOR) -> int:
    """Topological charge enclosed by a circle of ``loop_radius`` about ``center``."""
    circulation = winding_circulation(field, center, loop_radius, nsamples, amp_floor)
    charge = int(round(circulation))
    if abs(circulation - charge) > WINDING_TOLERANCE:
        raise WindingSamplingError(
            f"phase circulation {circulation:.4f} is not within {WINDING_TOLERANCE} of an integer; "
            f"increase nsamples (now {nsamples})"
        )
    return charge


def fill_metric(field: ComplexField2D, center: Optional[Point] = None, nbins: int = DEFAULT_FILL_BINS) -> float:
    """Mean intensity within one bin width of the center over the peak bin intensity.

    Zero for a perfectly dark core.
    """
    if field.max_amplitude() == 0.0:
        raise ValidationError("fill metric is undefined for an all-zero field")
    center = _resolve_center(field, center)
    profile = radial_profile(field, center, nbins)
    r, _ = field.grid.polar(center)
    core = r < profile.bin_width
    if not np.any(core):
        raise ValidationError(
            f"no samples within {profile.bin_width:.4g} m of the center; use fewer bins or a finer pitch"
        )
    return float(np.mean(field.intensity()[core]) / np.max(profile.intensity))


_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)


def analytic_fill_ratio(spec: FlatHoleSpec, medium: MediumParams, t: float,
                        nbins: int = DEFAULT_FILL_BINS, r_max: Optional[float] = None) -> float:
    """Fill metric of the diffused flat-hole beam evaluated on its analytic radial curve.

    The core mean is the area-weighted average of the intensity over r < r_max / nbins;
    the peak is the largest intensity at the bin centers.
    """
    if r_max is None:
        r_max = ANALYTIC_RMAX_IN_WAISTS * spec.w0
    width = r_max / nbins
    # Gauss-Legendre on [0, width] for (2 / width^2) int I(r) r dr
    nodes = 0.5 * width * (_GAUSS_NODES + 1.0)
    core_intensity = np.asarray(eval_flat_analytic(spec, medium, t, nodes)) ** 2
    core_mean = float(np.sum(_GAUSS_WEIGHTS * core_intensity * nodes) * 0.5 * width * 2.0 / width ** 2)

    centers = (np.arange(nbins) + 0.5) * width
    peak = float(np.max(np.asarray(eval_flat_analytic(spec, medium, t, centers)) ** 2))
    if peak == 0.0:
        raise ValidationError("analytic profile vanishes at every bin center")
    return core_mean / peak


@lru_cache(maxsize=None)
def calibrated_fill_threshold(nbins: int = DEFAULT_FILL_BINS) -> float:
    """Fill ratio of a w0/2 hole at t = 0.15 w0^2 / D: the default meaning of "filled".

    The ratio depends only on D t / w0^2 and the hole size in waists, so it is
    computed once with w0 = 1 m and D = 1 m^2/s.
    """
    spec = FlatHoleSpec(w0=1.0, r0=CALIBRATION_STOP_IN_WAISTS, P=1.0)
    return analytic_fill_ratio(spec, MediumParams(D=1.0), CALIBRATION_TIME, nbins=nbins)


def fill_time(spec: FlatHoleSpec, medium: MediumParams, threshold: Optional[float] = None,
              nbins: int = DEFAULT_FILL_BINS, tol: float = 1e-7) -> float:
    """Earliest diffusion time at which the analytic fill ratio reaches ``threshold``.

    The search runs in the dimensionless time D t / w0^2 over [0, 1]: a coarse scan
    finds the first bracket that crosses, then bisection narrows it to
    min(1e-6, tol D / w0^2).
    """
    if threshold is None:
        threshold = calibrated_fill_threshold(nbins)
    if not (0.0 < threshold < 1.0):
        raise ValidationError(f"threshold must lie in (0, 1), got {threshold}")
    if medium.D <= 0:
        raise ValidationError("fill time needs a positive diffusion coefficient")

    time_unit = spec.w0 ** 2 / medium.D

    def excess(tau: float) -> float:
        return analytic_fill_ratio(spec, medium, tau * time_unit, nbins=nbins) - threshold

    if excess(0.0) >= 0:
        return 0.0
    previous = 0.0
    for step in range(1, FILL_SCAN_STEPS + 1):
        tau = step / FILL_SCAN_STEPS
        if excess(tau) >= 0:
            tau_tol = min(1e-6, tol / time_unit)
            return bisect_increasing(excess, previous, tau, tau_tol) * time_unit
        previous = tau
    raise NoCrossingError(
        f"fill ratio never reaches {threshold:.4g} for t up to w0^2/D = {time_unit:.4g} s"
    )


def _normalized_residual(measured: RadialProfile, model: np.ndarray) -> float:
    weights = 2.0 * np.pi * measured.bin_centers * measured.bin_width
    model_total = float(np.sum(model * weights))
    if model_total > 0.0:
        model = model * (measured.total_intensity() / model_total)
    return float(np.sum((measured.intensity - model) ** 2))


def fit_diffusion(profiles: Sequence[Tuple[float, RadialProfile]], spec: LGModeSpec,
                  bracket: Tuple[float, float], rtol: float = 1e-4) -> FitResult:
    """Least-squares diffusion coefficient for a time series of helical-beam profiles.

    Each model profile is normalized to the measured total intensity before the
    intensity residuals are summed. Time series without diffusion information
    leave the residual flat, which surfaces as a BracketError.
    """
    if len(profiles) < 2:
        raise ValidationError("need at least two profiles to fit D")
    d_lo, d_hi = bracket
    if not (0.0 < d_lo < d_hi):
        raise ValidationError(f"bracket must satisfy 0 < D_lo < D_hi, got {bracket}")

    def residual(D: float) -> float:
        medium = MediumParams(D=D)
        return sum(_normalized_residual(profile, predict_profile(spec, medium, t, profile.bin_centers))
                   for t, profile in profiles)

    result = golden_section_minimize(residual, d_lo, d_hi, rtol=rtol)
    if result.at_edge:
        raise BracketError(
            f"best D {result.x:.4g} m^2/s sits on the edge of [{d_lo:.4g}, {d_hi:.4g}]; widen the bracket"
        )
    return FitResult(D_hat=result.x, residual=result.fun, iterations=result.iterations)


def effective_storage_time(profile: RadialProfile, spec: LGModeSpec, medium: MediumParams,
                           bracket: Tuple[float, float], rtol: float = 1e-4) -> EffectiveTimeResult:
    """Diffusion time that best turns the undiffused helical beam into ``profile``.

    Used to express the diffusion a beam suffers while it is slowed as an
    equivalent extra storage duration.
    """
    t_lo, t_hi = bracket
    if not (0.0 <= t_lo < t_hi):
        raise ValidationError(f"bracket must satisfy 0 <= t_lo < t_hi, got {bracket}")

    def residual(t: float) -> float:
        return _normalized_residual(profile, predict_profile(spec, medium, t, profile.bin_centers))

    result = golden_section_minimize(residual, t_lo, t_hi, rtol=rtol)
    if result.at_edge:
        raise BracketError(
            f"best time {result.x:.4g} s sits on the edge of [{t_lo:.4g}, {t_hi:.4g}]; widen the bracket"
        )
    return EffectiveTimeResult(t_eff=result.x, residual=result.fun, iterations=result.iterations)


def profile_to_frame(profile: RadialProfile, model_intensity: Optional[np.ndarray] = None) -> pd.DataFrame:
    frame = pd.DataFrame({
        "r_m": profile.bin_centers,
        "intensity": profile.intensity,
        "count": profile.counts,
    }, columns=PROFILE_CSV_COLUMNS)
    if model_intensity is not None:
        frame["model_intensity"] = model_intensity
    return frame


def save_profile_csv(profile: RadialProfile, path: Union[str, Path],
                     model_intensity: Optional[np.ndarray] = None, float_format: str = "%.12g") -> Path:
    path = Path(path)
    profile_to_frame(profile, model_intensity).to_csv(path, index=False, float_format=float_format)
    return path


def load_profile_csv(path: Union[str, Path], bin_width: Optional[float] = None) -> RadialProfile:
    """Read a profile CSV; the bin width defaults to the smallest spacing of the radii."""
    frame = pd.read_csv(path)
    missing = [c for c in PROFILE_CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise ValidationError(f"{path}: missing columns {missing}")
    centers = frame["r_m"].to_numpy(dtype=float)
    if bin_width is None:
        if len(centers) < 2:
            raise ValidationError(f"{path}: cannot infer the bin width from a single bin")
        bin_width = float(np.min(np.diff(centers)))
    return RadialProfile(centers, frame["intensity"].to_numpy(dtype=float),
                         frame["count"].to_numpy(dtype=int), bin_width)
