import math

import numpy as np
import pytest

from src.errors import QuadratureError, ValidationError
from src.numerics import adaptive_simpson, bisect_increasing, golden_section_minimize


def test_simpson_integrates_smooth_functions():
    result = adaptive_simpson(np.sin, 0.0, math.pi)
    assert result.value == pytest.approx(2.0, rel=1e-9)
    assert result.evaluations > 0

    gaussian = adaptive_simpson(lambda x: np.exp(-x * x), 0.0, 10.0, rtol=1e-10)
    assert gaussian.value == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-9)


def test_simpson_orientation_and_empty_interval():
    assert adaptive_simpson(np.cos, 1.0, 1.0).value == 0.0
    forward = adaptive_simpson(np.exp, 0.0, 1.0).value
    backward = adaptive_simpson(np.exp, 1.0, 0.0).value
    assert backward == pytest.approx(-forward)
    assert forward == pytest.approx(math.e - 1, rel=1e-9)


def test_simpson_reports_the_depth_cap():
    step = lambda x: np.where(x > 1.0 / 3.0, 1.0, 0.0)
    with pytest.raises(QuadratureError) as info:
        adaptive_simpson(step, 0.0, 1.0, rtol=1e-12, max_depth=3, panels=1)
    assert math.isfinite(info.value.estimate)
    assert info.value.estimate == pytest.approx(2.0 / 3.0, abs=0.1)


def test_golden_section_finds_interior_minimum():
    result = golden_section_minimize(lambda x: (x - 2.0) ** 2 + 1.0, 0.0, 5.0, rtol=1e-8)
    assert result.x == pytest.approx(2.0, abs=1e-6)
    assert result.fun == pytest.approx(1.0)
    assert not result.at_edge


def test_golden_section_flags_edge_minimum():
    result = golden_section_minimize(lambda x: x, 1.0, 3.0)
    assert result.at_edge
    assert result.x == pytest.approx(1.0, abs=1e-3)

    flat = golden_section_minimize(lambda x: 0.0, 1.0, 3.0)
    assert flat.at_edge


def test_golden_section_rejects_empty_bracket():
    with pytest.raises(ValidationError):
        golden_section_minimize(lambda x: x, 2.0, 2.0)


def test_bisect_increasing():
    root = bisect_increasing(lambda x: x - 0.3, 0.0, 1.0, xtol=1e-12)
    assert root == pytest.approx(0.3, abs=1e-11)
    assert root >= 0.3
