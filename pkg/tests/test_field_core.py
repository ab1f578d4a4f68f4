import math

import numpy as np
import pandas as pd
import pytest

from src.analysis import winding_number
from src.errors import ConfigurationError, ValidationError
from src.field_core import (ComplexField2D, CouplingRatio, FlatHoleSpec, GridSpec, LGModeSpec,
                            imaged_stop_radius, lg_amplitude, load_field_csv, make_flat_hole_field,
                            make_lg_field, retrieve, save_field_csv, stop_mask, store, total_power)

W0 = 670e-6


def test_grid_rejects_bad_shapes():
    with pytest.raises(ValidationError):
        GridSpec(nx=4, ny=64, pitch=1e-5)
    with pytest.raises(ValidationError):
        GridSpec(nx=64, ny=64, pitch=0.0)
    with pytest.raises(ValidationError):
        GridSpec(nx=64, ny=64, pitch=float("nan"))


def test_grid_axes_are_centered_on_origin():
    grid = GridSpec(nx=10, ny=8, pitch=2.0, origin=(1.0, -3.0))
    x, y = grid.axes()
    assert x[0] + x[-1] == pytest.approx(2.0)
    assert y[0] + y[-1] == pytest.approx(-6.0)
    assert np.allclose(np.diff(x), 2.0)
    assert grid.shape == (8, 10)
    assert grid.extent_x == 20.0
    assert grid.half_extent == 8.0


def test_field_values_are_read_only_and_finite():
    grid = GridSpec(nx=8, ny=8, pitch=1.0)
    field = ComplexField2D(grid, np.ones(grid.shape))
    assert field.values.dtype == np.complex128
    with pytest.raises(ValueError):
        field.values[0, 0] = 2.0
    with pytest.raises(ValidationError):
        ComplexField2D(grid, np.full(grid.shape, np.inf))
    with pytest.raises(ValidationError):
        ComplexField2D(grid, np.ones((8, 9)))


def test_mode_specs_validate():
    with pytest.raises(ValidationError):
        LGModeSpec(m=-1, w0=W0)
    with pytest.raises(ValidationError):
        LGModeSpec(m=1.5, w0=W0)
    with pytest.raises(ValidationError):
        LGModeSpec(m=1, w0=0.0)
    with pytest.raises(ValidationError):
        FlatHoleSpec(w0=W0, r0=-1e-6)
    with pytest.raises(ValidationError):
        CouplingRatio(0.0)


def test_lg_amplitude_vanishes_on_axis_for_helical_modes():
    assert lg_amplitude(0.0, 1, W0) == 0.0
    assert lg_amplitude(0.0, 0, W0) == pytest.approx(math.sqrt(2.0 / math.pi) / W0)


@pytest.mark.parametrize("m", [0, 1, 2])
def test_lg_field_carries_its_power(fine_grid, m):
    field = make_lg_field(LGModeSpec(m=m, w0=W0, P=2.5), fine_grid)
    assert total_power(field) == pytest.approx(2.5, rel=1e-8)


def test_lg_field_phase_winds_clockwise(coarse_grid):
    field = make_lg_field(LGModeSpec(m=1, w0=W0), coarse_grid)
    r, theta = coarse_grid.polar()
    ring = (r > 0.5 * W0) & (r < W0)
    assert np.allclose(np.exp(1j * field.phase()[ring]), np.exp(-1j * theta[ring]))


def test_lg_field_needs_six_waists_of_grid():
    with pytest.raises(ConfigurationError):
        make_lg_field(LGModeSpec(m=1, w0=W0), GridSpec(nx=32, ny=32, pitch=W0 / 8))


def test_stop_mask_blocks_the_boundary_ring():
    r = np.array([0.0, 0.5, 0.6])
    assert stop_mask(r, 0.5).tolist() == [False, False, True]
    assert stop_mask(r, 0.0).tolist() == [True, True, True]


def test_flat_hole_field_is_dark_inside_and_real(coarse_grid):
    spec = FlatHoleSpec(w0=W0, r0=0.5 * W0)
    field = make_flat_hole_field(spec, coarse_grid)
    r, _ = coarse_grid.polar()
    assert np.all(field.values[r <= spec.r0] == 0)
    assert np.all(field.values.imag == 0)
    assert np.all(field.values.real >= 0)


def test_flat_hole_without_stop_is_the_gaussian(coarse_grid):
    flat = make_flat_hole_field(FlatHoleSpec(w0=W0, r0=0.0), coarse_grid)
    gaussian = make_lg_field(LGModeSpec(m=0, w0=W0), coarse_grid)
    assert np.allclose(flat.values, gaussian.values, rtol=1e-15, atol=0.0)


def test_flat_hole_power_is_the_unblocked_gaussian_tail():
    # The hard stop is sampled at pixel centers; w0/32 keeps the power within 1%
    grid = GridSpec(nx=200, ny=200, pitch=W0 / 32)
    field = make_flat_hole_field(FlatHoleSpec(w0=W0, r0=335e-6), grid)
    assert total_power(field) == pytest.approx(math.exp(-2 * 335e-6 ** 2 / W0 ** 2), rel=1e-2)
    assert math.exp(-0.5) == pytest.approx(0.6065, abs=1e-4)


def test_flat_hole_has_no_winding(fine_grid):
    flat = make_flat_hole_field(FlatHoleSpec(w0=W0, r0=0.5 * W0), fine_grid)
    assert winding_number(flat, (0.0, 0.0), W0) == 0
    assert winding_number(store(flat), (0.0, 0.0), 2 * W0) == 0


def test_flat_hole_rejects_oversized_stops(coarse_grid):
    with pytest.raises(ValidationError):
        make_flat_hole_field(FlatHoleSpec(w0=W0, r0=3.0 * W0), coarse_grid)


def test_store_and_retrieve_are_inverse(coarse_grid):
    probe = make_lg_field(LGModeSpec(m=1, w0=W0), coarse_grid)
    coupling = CouplingRatio(2.0)
    coherence = store(probe, coupling)
    assert np.allclose(coherence.values, -2.0 * probe.values)
    restored = retrieve(coherence, coupling)
    assert np.max(np.abs(restored.values - probe.values)) <= 1e-15 * probe.max_amplitude()


def test_imaged_stop_radius():
    assert imaged_stop_radius(300e-6, 1.4) == pytest.approx(420e-6)
    with pytest.raises(ValidationError):
        imaged_stop_radius(300e-6, 0.0)


def test_field_csv_restores_grid_and_values(tmp_path):
    grid = GridSpec(nx=12, ny=10, pitch=5e-5, origin=(1e-4, -2e-4))
    rng = np.random.default_rng(3)
    field = ComplexField2D(grid, rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape))

    path = save_field_csv(field, tmp_path / "field.csv")
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["x_m", "y_m", "re", "im"]
    assert len(frame) == 120

    loaded = load_field_csv(path)
    assert (loaded.grid.nx, loaded.grid.ny) == (12, 10)
    assert loaded.grid.pitch == pytest.approx(5e-5, rel=1e-9)
    assert loaded.grid.origin == pytest.approx((1e-4, -2e-4), abs=1e-15)
    assert np.allclose(loaded.values, field.values, rtol=1e-10, atol=1e-10)


def test_field_csv_rejects_ragged_grids(tmp_path):
    path = tmp_path / "ragged.csv"
    pd.DataFrame({"x_m": [0.0, 1.0, 3.0] * 3, "y_m": np.repeat([0.0, 1.0, 2.0], 3),
                  "re": 1.0, "im": 0.0}).to_csv(path, index=False)
    with pytest.raises(ValidationError):
        load_field_csv(path)

    missing = tmp_path / "missing.csv"
    pd.DataFrame({"x_m": [0.0], "y_m": [0.0]}).to_csv(missing, index=False)
    with pytest.raises(ValidationError):
        load_field_csv(missing)
