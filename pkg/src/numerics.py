"""Quadrature and one-dimensional search routines shared by the analytic and analysis modules."""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.errors import QuadratureError, ValidationError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    evaluations: int


def adaptive_simpson(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    rtol: float = 1e-8,
    max_depth: int = 40,
    panels: int = 16,
    atol: float = 0.0,
) -> QuadratureResult:
    """Adaptive Simpson's rule with Richardson correction.

    ``f`` must accept and return numpy arrays. All intervals of one refinement
    level are evaluated in a single call. An interval is accepted once its error
    estimate is below its share (by length) of max(rtol * |estimate|, atol).

    Raises:
        QuadratureError: an interval reached ``max_depth`` bisections without converging.
    """
    if a == b:
        return QuadratureResult(0.0, 0.0, 0)
    if b < a:
        result = adaptive_simpson(f, b, a, rtol, max_depth, panels, atol)
        return QuadratureResult(-result.value, result.error, result.evaluations)

    edges = np.linspace(a, b, panels + 1)
    left, right = edges[:-1], edges[1:]
    mid = 0.5 * (left + right)
    f_edges = np.asarray(f(edges), dtype=float)
    f_left, f_right = f_edges[:-1], f_edges[1:]
    f_mid = np.asarray(f(mid), dtype=float)
    whole = (right - left) / 6.0 * (f_left + 4.0 * f_mid + f_right)
    evaluations = len(edges) + len(mid)

    tolerance = max(rtol * abs(float(np.sum(whole))), atol)
    span = b - a
    total = 0.0
    total_error = 0.0

    for depth in range(max_depth + 1):
        quarter_left = 0.5 * (left + mid)
        quarter_right = 0.5 * (mid + right)
        f_ql = np.asarray(f(quarter_left), dtype=float)
        f_qr = np.asarray(f(quarter_right), dtype=float)
        evaluations += 2 * len(left)

        half = 0.5 * (right - left)
        s_left = half / 6.0 * (f_left + 4.0 * f_ql + f_mid)
        s_right = half / 6.0 * (f_mid + 4.0 * f_qr + f_right)
        refined = s_left + s_right
        error = (refined - whole) / 15.0

        done = np.abs(error) <= tolerance * (right - left) / span
        total += float(np.sum(refined[done] + error[done]))
        total_error += float(np.sum(np.abs(error[done])))
        if np.all(done):
            return QuadratureResult(total, total_error, evaluations)

        if depth == max_depth:
            pending = ~done
            estimate = total + float(np.sum(refined[pending]))
            raise QuadratureError(
                f"adaptive Simpson did not converge on [{a:.6g}, {b:.6g}] within {max_depth} levels",
                estimate=estimate,
                error=total_error + float(np.sum(np.abs(error[pending]))),
            )

        todo = ~done
        l, m, r = left[todo], mid[todo], right[todo]
        fl, fm, fr = f_left[todo], f_mid[todo], f_right[todo]
        fql, fqr = f_ql[todo], f_qr[todo]
        sl, sr = s_left[todo], s_right[todo]

        left = np.concatenate([l, m])
        mid = np.concatenate([0.5 * (l + m), 0.5 * (m + r)])
        right = np.concatenate([m, r])
        f_left = np.concatenate([fl, fm])
        f_mid = np.concatenate([fql, fqr])
        f_right = np.concatenate([fm, fr])
        whole = np.concatenate([sl, sr])

    raise AssertionError("unreachable")


@dataclass(frozen=True)
class MinimizeResult:
    x: float
    fun: float
    iterations: int
    at_edge: bool


def golden_section_minimize(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    rtol: float = 1e-4,
    max_iter: int = 500,
) -> MinimizeResult:
    """Golden-section search for a minimum of a unimodal f on [lo, hi].

    Stops when the bracket width drops below rtol times the current estimate.
    ``at_edge`` is set when the final bracket still touches lo or hi, i.e. the
    minimum was never enclosed away from the bracket ends.
    """
    if not (lo < hi):
        raise ValidationError(f"search bracket must satisfy lo < hi, got [{lo}, {hi}]")

    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    iterations = 0
    while iterations < max_iter and (b - a) > rtol * 0.5 * (abs(c) + abs(d)):
        iterations += 1
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)

    x, fx = (c, fc) if fc < fd else (d, fd)
    return MinimizeResult(x=x, fun=fx, iterations=iterations, at_edge=(a == lo or b == hi))


def bisect_increasing(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float,
    max_iter: int = 200,
) -> float:
    """Smallest x in [lo, hi] (to xtol) with g(x) >= 0, given g(lo) < 0 <= g(hi)."""
    iterations = 0
    while hi - lo > xtol and iterations < max_iter:
        iterations += 1
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi
