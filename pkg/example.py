#!/usr/bin/env python3
"""
Example usage of the Stored-Vortex Diffusion Simulator
"""

import sys
from pathlib import Path

# Add the current directory to Python path
sys.path.append(str(Path(__file__).parent))

from config.config import Config
from src.analysis import fill_time
from src.analytic import center_value_peak_time, scaling_factor
from src.field_core import FlatHoleSpec
from src.storage_experiment import StorageExperiment, figure_set, load_scenario_config
from src.transport import MediumParams


def main():
    """Compare a stored vortex with a stored flat-phase beam that has a dark hole."""
    print("Stored-Vortex Diffusion Simulator - Example Usage")
    print("=" * 50)

    config = Config()
    scenarios = Path(config.SCENARIOS_PATH)
    experiment = StorageExperiment(config)

    helical = load_scenario_config(scenarios / "helical_m1.json", config)
    flat = load_scenario_config(scenarios / "flat_hole.json", config)

    # Closed-form numbers first: no grid needed
    medium = MediumParams(D=config.DIFFUSION_COEFFICIENT)
    s = scaling_factor(helical.beam.w0, medium.D, helical.sequence.diffusion_time)
    print(f"\nHelical beam after {helical.sequence.diffusion_time * 1e6:.0f} us of diffusion:")
    print(f"  scaling factor s = {s.s:.4f}, waist {s.waist(helical.beam.w0) * 1e6:.0f} um")

    hole = FlatHoleSpec(w0=config.WAIST, r0=config.WAIST / 2)
    print(f"\nFlat beam with a {hole.r0 * 1e6:.0f} um hole:")
    print(f"  on-axis intensity peaks after {center_value_peak_time(hole, medium) * 1e6:.1f} us")
    print(f"  the hole counts as filled after {fill_time(hole, medium) * 1e6:.1f} us")

    print("\nSimulating both beams on the grid...")
    comparison = experiment.compare_beams(helical, flat)
    print(f"  helical winding number: {comparison['helical_winding']}")
    print(f"  helical fill metric:    {comparison['helical_fill_metric']:.3e}")
    print(f"  flat fill metric:       {comparison['flat_fill_metric']:.3e}")
    print(f"  contrast:               {comparison['contrast']:.1f}")

    print("\nWriting cross-section data...")
    paths = experiment.emit_figure_data(figure_set(helical))
    paths += experiment.emit_figure_data(figure_set(flat))
    print(f"Wrote {len(paths)} profile files to {experiment.output_dir}")

    print("\nTo run a single scenario with all artifacts, run:")
    print("python main.py scenario scenarios/helical_m1.json")


if __name__ == "__main__":
    main()
