import json
import math
import re

import numpy as np
import pytest
from click.testing import CliRunner

from main import cli
from src.analysis import RadialProfile, calibrated_fill_threshold, save_profile_csv
from src.analytic import predict_profile
from src.field_core import LGModeSpec, load_field_csv
from src.transport import MediumParams

W0 = 670e-6
D = 1.1e-3
GRID = ["--grid-n", "64", "--pitch", repr(W0 / 8)]


@pytest.fixture
def runner():
    return CliRunner()


def _invoke(runner, out, *args):
    return runner.invoke(cli, ["--out", str(out), *GRID, *args])


def _small_scenario(path, **overrides):
    document = {
        "name": "small",
        "grid": {"nx": 64, "ny": 64, "pitch": W0 / 8},
        "beam": {"type": "lg", "m": 1, "w0": W0},
        "medium": {"D": D, "gamma": 20000.0},
        "sequence": {"slowing_delay": 50e-6, "storage_time": 30e-6},
        "nbins": 32,
    }
    document.update(overrides)
    path.write_text(json.dumps(document))
    return path


def test_generate_writes_field_and_maps(runner, tmp_path):
    result = _invoke(runner, tmp_path, "generate", "--beam", "lg", "--m", "1")
    assert result.exit_code == 0, result.output
    for name in ("probe_field.csv", "probe_intensity.pgm", "probe_phase.pgm"):
        assert (tmp_path / name).exists()


def test_generate_flat_hole(runner, tmp_path):
    result = _invoke(runner, tmp_path, "generate", "--beam", "flat_hole", "--r0", "335e-6", "--name", "flat")
    assert result.exit_code == 0, result.output
    assert (tmp_path / "flat_field.csv").exists()


def test_undersized_grid_is_a_validation_error(runner, tmp_path):
    result = runner.invoke(cli, ["--out", str(tmp_path), "--grid-n", "16", "--pitch", repr(W0 / 8), "generate"])
    assert result.exit_code == 2
    assert "Error:" in result.output


def test_propagate_profile_and_winding(runner, tmp_path):
    assert _invoke(runner, tmp_path, "generate").exit_code == 0
    field = tmp_path / "probe_field.csv"

    result = _invoke(runner, tmp_path, "propagate", str(field), "--time", "30e-6", "--gamma", "20000")
    assert result.exit_code == 0, result.output
    diffused = tmp_path / "probe_field_diffused.csv"
    assert diffused.exists()

    result = _invoke(runner, tmp_path, "propagate", str(field), "--time", "30e-6", "--method", "direct",
                     "--output", str(tmp_path / "direct.csv"))
    assert result.exit_code == 0, result.output

    result = _invoke(runner, tmp_path, "profile", str(diffused), "--nbins", "32")
    assert result.exit_code == 0, result.output
    assert (tmp_path / "probe_field_diffused_profile.csv").exists()

    result = _invoke(runner, tmp_path, "winding", str(diffused), "--radius", repr(W0 / math.sqrt(2)))
    assert result.exit_code == 0, result.output
    assert result.output.strip().splitlines()[-1] == "1"


def test_propagate_rejects_negative_time(runner, tmp_path):
    assert _invoke(runner, tmp_path, "generate").exit_code == 0
    result = _invoke(runner, tmp_path, "propagate", str(tmp_path / "probe_field.csv"), "--time=-1e-6")
    assert result.exit_code == 2


def test_direct_propagation_for_zero_time_copies_the_field(runner, tmp_path):
    assert _invoke(runner, tmp_path, "generate").exit_code == 0
    source = tmp_path / "probe_field.csv"
    target = tmp_path / "same.csv"
    result = _invoke(runner, tmp_path, "propagate", str(source), "--time", "0", "--method", "direct",
                     "--output", str(target))
    assert result.exit_code == 0, result.output
    assert np.array_equal(load_field_csv(target).values, load_field_csv(source).values)


def test_missing_input_is_an_io_error(runner, tmp_path):
    result = _invoke(runner, tmp_path, "profile", str(tmp_path / "nowhere.csv"))
    assert result.exit_code == 4
    assert "Error:" in result.output


def test_winding_inside_dark_core_is_a_numerical_error(runner, tmp_path):
    assert _invoke(runner, tmp_path, "generate", "--beam", "flat_hole", "--r0", repr(0.5 * W0)).exit_code == 0
    result = _invoke(runner, tmp_path, "winding", str(tmp_path / "probe_field.csv"), "--radius", repr(W0 / 8))
    assert result.exit_code == 3


def test_fill_time(runner, tmp_path):
    result = _invoke(runner, tmp_path, "fill-time", "--w0", repr(W0), "-D", repr(D), "--nbins", "64")
    assert result.exit_code == 0, result.output
    assert "61.21" in result.output


def test_fill_time_with_a_custom_threshold(runner, tmp_path):
    threshold = 0.5 * calibrated_fill_threshold(64)
    result = _invoke(runner, tmp_path, "fill-time", "--w0", repr(W0), "-D", repr(D), "--nbins", "64",
                     "--threshold", repr(threshold))
    assert result.exit_code == 0, result.output
    t = float(re.search(r"Fill time: (\S+) s", result.output).group(1))
    assert 0 < t < 61.2e-6


def test_fit(runner, tmp_path):
    spec = LGModeSpec(m=1, w0=W0)
    width = 4 * W0 / 64
    centers = (np.arange(64) + 0.5) * width
    pairs = []
    for t in (30e-6, 70e-6, 110e-6):
        profile = RadialProfile(centers, predict_profile(spec, MediumParams(D=D), t, centers),
                                np.ones(64, dtype=int), width)
        path = save_profile_csv(profile, tmp_path / f"p{round(t * 1e6)}.csv", float_format="%.17g")
        pairs.append(f"{t!r}={path}")

    result = _invoke(runner, tmp_path, "fit", *pairs, "--w0", repr(W0))
    assert result.exit_code == 0, result.output
    fitted = float(re.search(r"D = (\S+) m\^2/s", result.output).group(1))
    assert fitted == pytest.approx(D, rel=5e-3)

    result = _invoke(runner, tmp_path, "fit", "nonsense")
    assert result.exit_code == 2


def test_scenario_command(runner, tmp_path):
    path = _small_scenario(tmp_path / "small.json")
    result = _invoke(runner, tmp_path / "out", "scenario", str(path))
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / "out" / "small_summary.json").read_text())
    assert summary["winding"] == 1
    assert '"winding": 1' in result.output

    via_config = runner.invoke(cli, ["--config", str(path), "--out", str(tmp_path / "cfg"), "scenario"])
    assert via_config.exit_code == 0, via_config.output


def test_scenario_errors(runner, tmp_path):
    assert _invoke(runner, tmp_path, "scenario").exit_code == 2
    bad = _small_scenario(tmp_path / "bad.json", beam={"type": "bessel"})
    assert _invoke(runner, tmp_path, "scenario", str(bad)).exit_code == 2


def test_figures_for_one_beam(runner, tmp_path):
    path = _small_scenario(tmp_path / "helical.json")
    result = _invoke(runner, tmp_path / "figs", "figures", "--which", "helical", "--helical", str(path))
    assert result.exit_code == 0, result.output
    written = sorted(p.name for p in (tmp_path / "figs").glob("*.csv"))
    assert written == sorted([
        "helical_m1_off_resonance.csv", "helical_m1_slowed.csv", "helical_m1_stored_30us.csv",
        "helical_m1_stored_70us.csv", "helical_m1_stored_110us.csv"])
