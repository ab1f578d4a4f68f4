import os
import sys

import pytest

# Add repo root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.field_core import GridSpec, LGModeSpec
from src.transport import MediumParams

# Probe waist and diffusion coefficient of the rubidium vapor cell runs
WAIST = 670e-6
DIFFUSION = 1.1e-3
DECAY_RATE = 20000.0


@pytest.fixture
def w0():
    return WAIST


@pytest.fixture
def medium():
    return MediumParams(D=DIFFUSION)


@pytest.fixture
def lg1():
    return LGModeSpec(m=1, w0=WAIST)


@pytest.fixture
def coarse_grid():
    """64 x 64 at w0/8: 8 waists across, cheap enough for end-to-end runs."""
    return GridSpec(nx=64, ny=64, pitch=WAIST / 8)


@pytest.fixture
def fine_grid():
    """256 x 256 at w0/16: holds an LG mode diffused for well over 100 us."""
    return GridSpec(nx=256, ny=256, pitch=WAIST / 16)
