"""Scenario configuration and the store, diffuse and retrieve experiment pipeline."""

import json
import math
from dataclasses import dataclass, field as dataclass_field, replace
from pathlib import Path
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from config.config import Config
from src.analysis import (RadialProfile, fill_metric, normalize_profiles, radial_profile,
                          save_profile_csv, winding_number)
from src.analytic import predict_profile, scaling_factor
from src.errors import ConfigurationError, ValidationError, VortexSimError
from src.field_core import (ComplexField2D, CouplingRatio, FlatHoleSpec, GridSpec, LGModeSpec,
                            make_flat_hole_field, make_lg_field, retrieve, save_field_csv, store)
from src.image_io import save_intensity_map, save_phase_map
from src.transport import MediumParams, apply_decay, diffuse_spectral

BeamSpec = Union[LGModeSpec, FlatHoleSpec]

OUTPUT_KINDS = frozenset({"field", "profiles", "maps", "winding", "fill_metric"})

# Storage durations of the standard cross-section sets
HELICAL_STORAGE_TIMES = (30e-6, 70e-6, 110e-6)
FLAT_STORAGE_TIMES = (10e-6, 30e-6)


@dataclass(frozen=True)
class StorageSequence:
    """Experiment timeline: group delay while slowed, then storage."""

    storage_time: float = 0.0
    slowing_delay: float = 50e-6
    decay_during_slowing: bool = False

    def __post_init__(self):
        for name in ("storage_time", "slowing_delay"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be non-negative and finite, got {value}")

    @property
    def diffusion_time(self) -> float:
        return self.slowing_delay + self.storage_time

    @property
    def decay_time(self) -> float:
        return self.storage_time + (self.slowing_delay if self.decay_during_slowing else 0.0)

    def label(self) -> str:
        if self.diffusion_time == 0:
            return "off_resonance"
        if self.storage_time == 0:
            return "slowed"
        return f"stored_{_micro_label(self.storage_time)}us"


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    grid: GridSpec
    beam: BeamSpec
    medium: MediumParams
    sequence: StorageSequence
    outputs: FrozenSet[str] = OUTPUT_KINDS
    nbins: int = 64
    coupling: CouplingRatio = CouplingRatio()

    def __post_init__(self):
        outputs = frozenset(self.outputs)
        if not outputs:
            raise ValidationError("a scenario must request at least one output")
        unknown = outputs - OUTPUT_KINDS
        if unknown:
            raise ValidationError(f"unknown outputs {sorted(unknown)}; choose from {sorted(OUTPUT_KINDS)}")
        object.__setattr__(self, "outputs", outputs)
        if not isinstance(self.beam, (LGModeSpec, FlatHoleSpec)):
            raise ValidationError(f"unsupported beam type {type(self.beam).__name__}")

    def beam_tag(self) -> str:
        if isinstance(self.beam, LGModeSpec):
            return f"helical_m{self.beam.m}"
        return f"flat_r{_micro_label(self.beam.r0)}um"


@dataclass
class ScenarioReport:
    name: str
    summary: Dict[str, object]
    files: Dict[str, Path] = dataclass_field(default_factory=dict)
    probe: Optional[ComplexField2D] = None
    retrieved: Optional[ComplexField2D] = None
    profile: Optional[RadialProfile] = None


def _micro_label(value: float) -> str:
    """A time in seconds or a length in meters, in micro-units for file names (1.5e-5 -> 15)."""
    return f"{value * 1e6:g}".replace(".", "p")


def _require(mapping: Mapping, key: str, where: str):
    if key not in mapping:
        raise ConfigurationError(f"scenario {where} is missing '{key}'")
    return mapping[key]


def scenario_from_dict(data: Mapping, config: Optional[Config] = None,
                       grid_n: Optional[int] = None, pitch: Optional[float] = None) -> ScenarioConfig:
    """Build a ScenarioConfig from the JSON document layout, filling gaps from Config."""
    config = config or Config()
    try:
        grid_data = dict(data.get("grid", {}))
        nx = grid_n or grid_data.get("nx", grid_data.get("n", config.GRID_N))
        ny = grid_n or grid_data.get("ny", grid_data.get("n", config.GRID_N))
        grid = GridSpec(nx=nx, ny=ny,
                        pitch=pitch or grid_data.get("pitch", config.PITCH),
                        origin=tuple(grid_data.get("origin", (0.0, 0.0))))

        beam_data = dict(_require(data, "beam", "document"))
        beam_type = _require(beam_data, "type", "beam")
        w0 = beam_data.get("w0", config.WAIST)
        power = beam_data.get("P", 1.0)
        if beam_type == "lg":
            beam = LGModeSpec(m=_require(beam_data, "m", "beam"), w0=w0, P=power)
        elif beam_type == "flat_hole":
            beam = FlatHoleSpec(w0=w0, r0=_require(beam_data, "r0", "beam"), P=power)
        else:
            raise ConfigurationError(f"unknown beam type '{beam_type}' (expected 'lg' or 'flat_hole')")

        medium_data = dict(data.get("medium", {}))
        medium = MediumParams(D=medium_data.get("D", config.DIFFUSION_COEFFICIENT),
                              gamma=medium_data.get("gamma", config.DECAY_RATE))

        sequence_data = dict(data.get("sequence", {}))
        sequence = StorageSequence(
            storage_time=sequence_data.get("storage_time", 0.0),
            slowing_delay=sequence_data.get("slowing_delay", config.SLOWING_DELAY),
            decay_during_slowing=bool(sequence_data.get("decay_during_slowing", False)),
        )

        coupling = CouplingRatio(dict(data.get("coupling", {})).get("ratio", config.COUPLING_RATIO))
        return ScenarioConfig(
            name=str(data.get("name", "scenario")),
            grid=grid,
            beam=beam,
            medium=medium,
            sequence=sequence,
            outputs=frozenset(data.get("outputs", OUTPUT_KINDS)),
            nbins=int(data.get("nbins", config.NBINS)),
            coupling=coupling,
        )
    except ValidationError:
        raise
    except (TypeError, AttributeError, KeyError, ValueError) as e:
        raise ConfigurationError(f"malformed scenario document: {e}") from e


def load_scenario_config(path: Union[str, Path], config: Optional[Config] = None,
                         grid_n: Optional[int] = None, pitch: Optional[float] = None) -> ScenarioConfig:
    """Read a scenario JSON file (SI units, lower_snake_case keys)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a JSON object at the top level")
    return scenario_from_dict(data, config, grid_n, pitch)


def scenario_to_dict(scenario: ScenarioConfig) -> Dict[str, object]:
    if isinstance(scenario.beam, LGModeSpec):
        beam = {"type": "lg", "m": scenario.beam.m, "w0": scenario.beam.w0, "P": scenario.beam.P}
    else:
        beam = {"type": "flat_hole", "r0": scenario.beam.r0, "w0": scenario.beam.w0, "P": scenario.beam.P}
    return {
        "name": scenario.name,
        "grid": {"nx": scenario.grid.nx, "ny": scenario.grid.ny, "pitch": scenario.grid.pitch,
                 "origin": list(scenario.grid.origin)},
        "beam": beam,
        "medium": {"D": scenario.medium.D, "gamma": scenario.medium.gamma},
        "coupling": {"ratio": scenario.coupling.ratio},
        "sequence": {"slowing_delay": scenario.sequence.slowing_delay,
                     "storage_time": scenario.sequence.storage_time,
                     "decay_during_slowing": scenario.sequence.decay_during_slowing},
        "outputs": sorted(scenario.outputs),
        "nbins": scenario.nbins,
    }


def figure_set(base: ScenarioConfig, storage_times: Optional[Sequence[float]] = None) -> List[ScenarioConfig]:
    """Off-resonance, slowed-only and stored variants of ``base`` for one cross-section figure."""
    if storage_times is None:
        storage_times = HELICAL_STORAGE_TIMES if isinstance(base.beam, LGModeSpec) else FLAT_STORAGE_TIMES
    slowing = base.sequence.slowing_delay
    sequences = [replace(base.sequence, slowing_delay=0.0, storage_time=0.0),
                 replace(base.sequence, storage_time=0.0)]
    sequences += [replace(base.sequence, slowing_delay=slowing, storage_time=t) for t in storage_times]
    return [replace(base, name=f"{base.beam_tag()}_{seq.label()}", sequence=seq) for seq in sequences]


def generate_probe(scenario: ScenarioConfig) -> ComplexField2D:
    if isinstance(scenario.beam, LGModeSpec):
        return make_lg_field(scenario.beam, scenario.grid)
    return make_flat_hole_field(scenario.beam, scenario.grid)


def wrap_guard_waist(beam: BeamSpec) -> float:
    """Gaussian-equivalent waist sqrt(2 <r^2>) of the undiffused beam.

    An LG_0^m ring has <r^2> = (m + 1) w0^2 / 2; the blocked Gaussian is bounded by w0.
    """
    if isinstance(beam, LGModeSpec):
        return beam.w0 * math.sqrt(beam.m + 1)
    return beam.w0


def winding_loop_radius(scenario: ScenarioConfig, profile: RadialProfile) -> float:
    """Loop radius for the charge measurement: the diffused ring for LG modes, the profile peak otherwise.

    For a hole beam the loop keeps 1.5 pitches clear of the stop edge so that no
    interpolation cell lies wholly inside the dark disk.
    """
    if isinstance(scenario.beam, LGModeSpec):
        if scenario.beam.m > 0:
            s = scaling_factor(scenario.beam.w0, scenario.medium.D, scenario.sequence.diffusion_time)
            return s.waist(scenario.beam.w0) * math.sqrt(scenario.beam.m / 2.0)
        return profile.peak_radius()
    return max(profile.peak_radius(), scenario.beam.r0 + 1.5 * scenario.grid.pitch)


def model_intensity(scenario: ScenarioConfig, profile: RadialProfile) -> np.ndarray:
    """Analytic cross-section at the profile radii, scaled to the profile's total intensity."""
    model = predict_profile(scenario.beam, scenario.medium, scenario.sequence.diffusion_time,
                            profile.bin_centers)
    weights = 2.0 * np.pi * profile.bin_centers * profile.bin_width
    total = float(np.sum(model * weights))
    if total == 0.0:
        return model
    return model * (profile.total_intensity() / total)


class StorageExperiment:
    """Runs slow -> store -> diffuse -> retrieve -> analyze pipelines and writes their data."""

    def __init__(self, config: Optional[Config] = None, output_dir: Optional[Union[str, Path]] = None,
                 verbose: Optional[bool] = None):
        self.config = config or Config()
        self.output_dir = Path(output_dir or self.config.OUTPUT_PATH)
        self.verbose = self.config.VERBOSE if verbose is None else verbose

    def _log(self, message: str):
        if self.verbose:
            print(message)

    def simulate(self, scenario: ScenarioConfig, split_diffusion: bool = False) -> Tuple[ComplexField2D, ComplexField2D]:
        """Return (probe, retrieved probe) for one scenario.

        Slowing is treated as extra diffusion time before storage. The diffusion is
        one propagator call over slowing + storage unless ``split_diffusion`` asks
        for the two stages separately.
        """
        probe = generate_probe(scenario)
        coherence = store(probe, scenario.coupling)
        sequence = scenario.sequence
        guard = self.config.WRAP_GUARD_FACTOR
        waist = wrap_guard_waist(scenario.beam)
        if split_diffusion:
            coherence = diffuse_spectral(coherence, scenario.medium, sequence.slowing_delay, guard, waist)
            slowed_waist = math.sqrt(waist * waist + 4.0 * scenario.medium.D * sequence.slowing_delay)
            coherence = diffuse_spectral(coherence, scenario.medium, sequence.storage_time, guard, slowed_waist)
        else:
            coherence = diffuse_spectral(coherence, scenario.medium, sequence.diffusion_time, guard, waist)
        coherence = apply_decay(coherence, scenario.medium, sequence.decay_time)
        return probe, retrieve(coherence, scenario.coupling)

    def analyze(self, scenario: ScenarioConfig, probe: ComplexField2D,
                retrieved: ComplexField2D) -> Tuple[RadialProfile, Dict[str, object]]:
        profile = radial_profile(retrieved, None, scenario.nbins)
        s = scaling_factor(scenario.beam.w0, scenario.medium.D, scenario.sequence.diffusion_time)
        summary: Dict[str, object] = {
            "name": scenario.name,
            "beam": scenario.beam_tag(),
            "storage_time": scenario.sequence.storage_time,
            "slowing_delay": scenario.sequence.slowing_delay,
            "total_power_in": probe.total_power(),
            "total_power_out": retrieved.total_power(),
            "s_factor": s.s,
            "winding": None,
            "fill_metric": None,
        }
        if "winding" in scenario.outputs:
            summary["winding"] = winding_number(retrieved, None, winding_loop_radius(scenario, profile))
        if "fill_metric" in scenario.outputs:
            summary["fill_metric"] = fill_metric(retrieved, None, scenario.nbins)
        return profile, summary

    def run_scenario(self, scenario: ScenarioConfig, output_dir: Optional[Union[str, Path]] = None) -> ScenarioReport:
        """Simulate one scenario and write its requested artifacts plus a JSON summary."""
        out = Path(output_dir or self.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        self._log(f"Running scenario: {scenario.name}")

        probe, retrieved = self.simulate(scenario)
        profile, summary = self.analyze(scenario, probe, retrieved)
        report = ScenarioReport(scenario.name, summary, probe=probe, retrieved=retrieved, profile=profile)

        if "field" in scenario.outputs:
            report.files["field"] = save_field_csv(retrieved, out / f"{scenario.name}_field.csv",
                                                   self.config.FLOAT_FORMAT)
        if "maps" in scenario.outputs:
            report.files["intensity_map"] = save_intensity_map(retrieved, out / f"{scenario.name}_intensity.pgm")
            report.files["phase_map"] = save_phase_map(retrieved, out / f"{scenario.name}_phase.pgm")
        if "profiles" in scenario.outputs:
            report.files["profile"] = save_profile_csv(profile, out / f"{scenario.name}_profile.csv",
                                                       model_intensity(scenario, profile),
                                                       self.config.FLOAT_FORMAT)

        summary_path = out / f"{scenario.name}_summary.json"
        with open(summary_path, "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
        report.files["summary"] = summary_path

        self._log(f"✓ {scenario.name}: winding={summary['winding']}, fill_metric={_fmt(summary['fill_metric'])}")
        return report

    def run_scenarios(self, scenarios: Sequence[ScenarioConfig],
                      output_dir: Optional[Union[str, Path]] = None) -> Dict[str, bool]:
        """Run several scenarios, keep going past failures, then re-raise the first one."""
        results = {}
        first_error = None
        for scenario in scenarios:
            try:
                self.run_scenario(scenario, output_dir)
                results[scenario.name] = True
            except (VortexSimError, OSError) as e:
                self._log(f"✗ {scenario.name}: {e}")
                results[scenario.name] = False
                first_error = first_error or e

        successful = sum(1 for ok in results.values() if ok)
        self._log(f"\nSummary: {successful}/{len(scenarios)} scenarios completed")
        if first_error is not None:
            raise first_error
        return results

    def emit_figure_data(self, scenarios: Sequence[ScenarioConfig],
                         output_dir: Optional[Union[str, Path]] = None) -> List[Path]:
        """One normalized cross-section CSV per scenario, named by beam type and storage stage.

        All scenarios must share grid and binning; profiles are normalized to the
        first scenario's total intensity, and each carries the analytic model
        curve scaled the same way.
        """
        if not scenarios:
            raise ValidationError("figure data needs at least one scenario")
        reference = scenarios[0]
        for scenario in scenarios[1:]:
            if scenario.grid != reference.grid or scenario.nbins != reference.nbins:
                raise ValidationError("figure scenarios must share grid and binning")

        out = Path(output_dir or self.output_dir)
        out.mkdir(parents=True, exist_ok=True)

        profiles = []
        models = []
        for scenario in tqdm(scenarios, desc="Cross-sections", disable=not self.verbose):
            _, retrieved = self.simulate(scenario)
            profile = radial_profile(retrieved, None, scenario.nbins)
            profiles.append(profile)
            models.append(model_intensity(scenario, profile))

        normalized = normalize_profiles(profiles)
        paths = []
        for scenario, raw, profile, model in zip(scenarios, profiles, normalized, models):
            scale = profile.total_intensity() / raw.total_intensity()
            name = f"{scenario.beam_tag()}_{scenario.sequence.label()}.csv"
            paths.append(save_profile_csv(profile, out / name, model * scale, self.config.FLOAT_FORMAT))
            self._log(f"✓ Wrote {name}")
        return paths

    def compare_beams(self, helical: ScenarioConfig, flat: ScenarioConfig) -> Dict[str, float]:
        """Fill metrics of a helical and a flat-phase scenario and their ratio."""
        helical_field = self.simulate(helical)[1]
        flat_field = self.simulate(flat)[1]
        h = fill_metric(helical_field, None, helical.nbins)
        f = fill_metric(flat_field, None, flat.nbins)
        loop = winding_loop_radius(helical, radial_profile(helical_field, None, helical.nbins))
        return {
            "helical_fill_metric": h,
            "flat_fill_metric": f,
            "contrast": f / h if h > 0 else math.inf,
            "helical_winding": winding_number(helical_field, None, loop),
        }


def _fmt(value) -> str:
    return "n/a" if value is None else f"{value:.4g}"


def run_scenario(config: ScenarioConfig, output_dir: Optional[Union[str, Path]] = None) -> ScenarioReport:
    return StorageExperiment(verbose=False).run_scenario(config, output_dir)


def emit_figure_data(configs: Sequence[ScenarioConfig], output_dir: Optional[Union[str, Path]] = None) -> List[Path]:
    return StorageExperiment(verbose=False).emit_figure_data(configs, output_dir)
