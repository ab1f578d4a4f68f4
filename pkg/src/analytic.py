"""Closed-form results for diffused helical and flat-phase beams.

A diffused LG_0^m mode stays an LG_0^m mode with its waist-squared scaled by
s(t) = (w0^2 + 4Dt) / w0^2 and its amplitude by s^-(m+1)/2. A flat-phase
blocked Gaussian has no closed form away from the axis; its radial profile is a
one-dimensional integral over the blocked Gaussian weighted by I0, and its
on-axis value reduces to (1/s) sqrt(2P / pi w0^2) exp(-s r0^2 / 4Dt).

All amplitudes here are probe-scaled (coupling ratio 1); callers apply -g/Omega.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from src.errors import BesselRangeError, QuadratureError, ValidationError
from src.field_core import FlatHoleSpec, LGModeSpec, lg_amplitude, stop_mask
from src.numerics import adaptive_simpson
from src.transport import MediumParams

ArrayLike = Union[float, np.ndarray]

QUADRATURE_RTOL = 1e-8
QUADRATURE_MAX_DEPTH = 40
QUADRATURE_PANELS = 64
# Upper limit of the flat-beam integral, in units of max(w0/sqrt 2, sqrt(4Dt)) beyond r0
TRUNCATION_WIDTHS = 12.0

# Abramowitz & Stegun 9.8.1 and 9.8.2
_I0_SMALL = (1.0, 3.5156229, 3.0899424, 1.2067492, 0.2659732, 0.0360768, 0.0045813)
_I0_LARGE = (0.39894228, 0.01328592, 0.00225319, -0.00157565, 0.00916281,
             -0.02057706, 0.02635537, -0.01647633, 0.00392377)
_I0_BRANCH = 3.75
I0_OVERFLOW_LIMIT = 700.0


@dataclass(frozen=True)
class ScalingFactor:
    """Waist-squared growth ratio s = (w0^2 + 4Dt) / w0^2."""

    s: float

    def __post_init__(self):
        if not (math.isfinite(self.s) and self.s >= 1.0):
            raise ValidationError(f"scaling factor must be >= 1, got {self.s}")

    def __float__(self) -> float:
        return self.s

    def waist(self, w0: float) -> float:
        return math.sqrt(self.s) * w0


def scaling_factor(w0: float, D: float, t: float) -> ScalingFactor:
    if not (w0 > 0 and D >= 0 and t >= 0):
        raise ValidationError(f"scaling factor needs w0 > 0, D >= 0, t >= 0 (got {w0}, {D}, {t})")
    return ScalingFactor((w0 * w0 + 4.0 * D * t) / (w0 * w0))


def _as_nonnegative(x: ArrayLike) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0):
        raise ValidationError("Bessel argument must be finite and non-negative")
    return x


def _i0_small_poly(x: np.ndarray) -> np.ndarray:
    t2 = (x / _I0_BRANCH) ** 2
    return np.polyval(_I0_SMALL[::-1], t2)


def _i0_large_poly(x: np.ndarray) -> np.ndarray:
    # Guard the division; the small branch covers x < 3.75
    inv_t = _I0_BRANCH / np.maximum(x, _I0_BRANCH)
    return np.polyval(_I0_LARGE[::-1], inv_t)


def bessel_i0(x: ArrayLike) -> ArrayLike:
    """Modified Bessel function I0 by the classical two-branch polynomial fit (|error| < 2e-7 relative)."""
    arr = _as_nonnegative(x)
    if np.any(arr > I0_OVERFLOW_LIMIT):
        raise BesselRangeError(
            f"I0({float(np.max(arr)):.6g}) overflows; use bessel_i0_scaled for arguments above {I0_OVERFLOW_LIMIT:g}"
        )
    small = arr <= _I0_BRANCH
    result = np.where(small, _i0_small_poly(arr),
                      _i0_large_poly(arr) * np.exp(arr) / np.sqrt(np.maximum(arr, _I0_BRANCH)))
    return float(result) if np.ndim(x) == 0 else result


def bessel_i0_scaled(x: ArrayLike) -> ArrayLike:
    """exp(-x) I0(x), finite for every non-negative argument."""
    arr = _as_nonnegative(x)
    small = arr <= _I0_BRANCH
    result = np.where(small, _i0_small_poly(arr) * np.exp(-np.minimum(arr, _I0_BRANCH)),
                      _i0_large_poly(arr) / np.sqrt(np.maximum(arr, _I0_BRANCH)))
    return float(result) if np.ndim(x) == 0 else result


def eval_helical_analytic(spec: LGModeSpec, medium: MediumParams, t: float,
                          r: ArrayLike, theta: ArrayLike) -> Union[complex, np.ndarray]:
    """Diffused LG mode: s^-(m+1)/2 A_m(r, sqrt(s) w0) exp(-i m theta)."""
    if t < 0:
        raise ValidationError(f"duration must be non-negative, got {t}")
    s = scaling_factor(spec.w0, medium.D, t)
    amplitude = s.s ** (-0.5 * (spec.m + 1)) * lg_amplitude(r, spec.m, s.waist(spec.w0), spec.P)
    value = amplitude * np.exp(-1j * spec.m * np.asarray(theta, dtype=float))
    return complex(value) if np.ndim(value) == 0 else value


def truncation_radius(spec: FlatHoleSpec, medium: MediumParams, t: float,
                      widths: float = TRUNCATION_WIDTHS) -> float:
    return spec.r0 + widths * max(spec.w0 / math.sqrt(2.0), math.sqrt(4.0 * medium.D * t))


def _flat_prefactor(spec: FlatHoleSpec) -> float:
    return math.sqrt(2.0 * spec.P / math.pi) / spec.w0


def _i0_scaled_on_branch(x: np.ndarray, large: bool) -> np.ndarray:
    """exp(-x) I0(x) from one named branch of the fit, whichever side of 3.75 x rounds to."""
    if large:
        return np.polyval(_I0_LARGE[::-1], _I0_BRANCH / x) / np.sqrt(x)
    return _i0_small_poly(x) * np.exp(-x)


def _flat_at_radius(spec: FlatHoleSpec, medium: MediumParams, t: float, r: float,
                    rtol: float, widths: float) -> float:
    four_dt = 4.0 * medium.D * t
    s = scaling_factor(spec.w0, medium.D, t).s
    upper = truncation_radius(spec, medium, t, widths)

    def integrand_on(large: bool):
        def integrand(rp: np.ndarray) -> np.ndarray:
            # exp(-(r^2 + s r'^2)/4Dt) I0(2 r r'/4Dt), regrouped so nothing overflows
            x = 2.0 * r * rp / four_dt
            exponent = -((r - rp) ** 2 + (s - 1.0) * rp * rp) / four_dt
            return rp * np.exp(exponent) * _i0_scaled_on_branch(x, large)
        return integrand

    # The I0 fit jumps slightly where it switches branches, so each side is
    # integrated on its own with its branch fixed
    if r == 0:
        pieces = [(spec.r0, upper, False)]
    else:
        branch_point = _I0_BRANCH * four_dt / (2.0 * r)
        if branch_point <= spec.r0:
            pieces = [(spec.r0, upper, True)]
        elif branch_point >= upper:
            pieces = [(spec.r0, upper, False)]
        else:
            pieces = [(spec.r0, branch_point, False), (branch_point, upper, True)]

    total = 0.0
    for lo, hi, large in pieces:
        try:
            result = adaptive_simpson(integrand_on(large), lo, hi, rtol=rtol,
                                      max_depth=QUADRATURE_MAX_DEPTH, panels=QUADRATURE_PANELS)
        except QuadratureError as exc:
            raise QuadratureError(
                f"flat-beam integral at r={r:.6g} m, t={t:.6g} s: {exc}",
                estimate=exc.estimate, error=exc.error,
            ) from exc
        total += result.value
    return (2.0 / four_dt) * _flat_prefactor(spec) * total


def eval_flat_analytic(spec: FlatHoleSpec, medium: MediumParams, t: float, r: ArrayLike,
                       rtol: float = QUADRATURE_RTOL,
                       truncation_widths: float = TRUNCATION_WIDTHS) -> ArrayLike:
    """Diffused flat-phase hole beam amplitude at radius r.

    At t = 0 (or D = 0) returns the undiffused Theta(r - r0) A_0(r, w0).
    """
    if t < 0:
        raise ValidationError(f"duration must be non-negative, got {t}")
    radii = np.asarray(r, dtype=float)
    if np.any(radii < 0):
        raise ValidationError("radius must be non-negative")

    if t == 0 or medium.D == 0:
        values = np.where(stop_mask(radii, spec.r0), lg_amplitude(radii, 0, spec.w0, spec.P), 0.0)
    elif spec.r0 == 0:
        # Nothing blocked: the diffused Gaussian, without the I0 fit error
        s = scaling_factor(spec.w0, medium.D, t)
        values = lg_amplitude(radii, 0, s.waist(spec.w0), spec.P) / math.sqrt(s.s)
    else:
        values = np.array([_flat_at_radius(spec, medium, t, float(ri), rtol, truncation_widths)
                           for ri in radii.ravel()]).reshape(radii.shape)
    values = np.maximum(values, 0.0)
    return float(values) if np.ndim(r) == 0 else values


def center_value_flat(spec: FlatHoleSpec, medium: MediumParams, t: float) -> float:
    """On-axis amplitude of the diffused flat beam, (1/s) sqrt(2P / pi w0^2) exp(-s r0^2 / 4Dt).

    For r0 = w0/2 this is sqrt(2P / pi w0^2) e^-1/4 exp[1/(4(1 - s))] / s.
    """
    if not (t > 0 and medium.D > 0):
        raise ValidationError(f"center value needs D t > 0 (got D={medium.D}, t={t})")
    if spec.r0 <= 0:
        raise ValidationError("center value needs a stop radius r0 > 0")
    s = scaling_factor(spec.w0, medium.D, t).s
    return _flat_prefactor(spec) * math.exp(-s * spec.r0 ** 2 / (4.0 * medium.D * t)) / s


def center_value_peak_time(spec: FlatHoleSpec, medium: MediumParams) -> float:
    """Time at which the on-axis flat-beam amplitude peaks.

    With c = (r0/w0)^2 and 4Dt = (s - 1) w0^2, d ln(value)/ds = c/(s-1)^2 - 1/s
    vanishes at the root s* > 1 of s^2 - (2 + c) s + 1 = 0.
    """
    if spec.r0 <= 0 or medium.D <= 0:
        raise ValidationError("peak time needs r0 > 0 and D > 0")
    c = (spec.r0 / spec.w0) ** 2
    s_star = 0.5 * ((2.0 + c) + math.sqrt((2.0 + c) ** 2 - 4.0))
    return (s_star - 1.0) * spec.w0 ** 2 / (4.0 * medium.D)


def predict_profile(beam: Union[LGModeSpec, FlatHoleSpec], medium: MediumParams, t: float,
                    radii: np.ndarray) -> np.ndarray:
    """Analytic radial intensity |field|^2 of a diffused beam at the given radii."""
    radii = np.asarray(radii, dtype=float)
    if isinstance(beam, LGModeSpec):
        return np.abs(eval_helical_analytic(beam, medium, t, radii, np.zeros_like(radii))) ** 2
    if isinstance(beam, FlatHoleSpec):
        return np.asarray(eval_flat_analytic(beam, medium, t, radii)) ** 2
    raise ValidationError(f"unsupported beam type {type(beam).__name__}")

