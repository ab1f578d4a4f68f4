#!/usr/bin/env python3
"""
Stored-Vortex Diffusion Simulator - Main CLI Interface

This script provides a command-line interface for simulating light storage in a
diffusing atomic vapor. You can generate probe beams, diffuse stored fields,
measure their cross-sections and topological charge, and run whole scenarios.
"""

import functools
import json
import os
import sys
from pathlib import Path

import click

# Add repo root to path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from config.config import Config
from src.analysis import (fill_time, fit_diffusion, load_profile_csv, radial_profile,
                          save_profile_csv, winding_circulation, winding_number)
from src.errors import NumericalError, ValidationError
from src.field_core import (FlatHoleSpec, GridSpec, LGModeSpec, load_field_csv,
                            make_flat_hole_field, make_lg_field, save_field_csv)
from src.image_io import save_intensity_map, save_phase_map
from src.storage_experiment import (FLAT_STORAGE_TIMES, HELICAL_STORAGE_TIMES, StorageExperiment,
                                    figure_set, load_scenario_config)
from src.transport import MediumParams, apply_decay, diffuse_direct, diffuse_spectral

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def handle_errors(command):
    """Map library failures onto exit codes and print them to stderr."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ValidationError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_VALIDATION)
        except NumericalError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_NUMERICAL)
        except OSError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_IO)
    return wrapper


def _out_dir(ctx) -> Path:
    out = Path(ctx.obj['out'])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid(ctx) -> GridSpec:
    config = ctx.obj['config']
    n = ctx.obj['grid_n'] or config.GRID_N
    return GridSpec(nx=n, ny=n, pitch=ctx.obj['pitch'] or config.PITCH)


def _scenario(ctx, path=None):
    path = path or ctx.obj['scenario_path']
    if path is None:
        raise ValidationError("no scenario given; pass --config <path> or a scenario file")
    return load_scenario_config(path, ctx.obj['config'], ctx.obj['grid_n'], ctx.obj['pitch'])


def _center(center):
    return tuple(center) if center else None


@click.group()
@click.option('--config', 'scenario_path', type=click.Path(dir_okay=False),
              help='Scenario JSON file (SI units)')
@click.option('--out', default=None, help='Output directory (default: OUTPUT_PATH)')
@click.option('--grid-n', type=int, default=None, help='Samples per grid side')
@click.option('--pitch', type=float, default=None, help='Grid pitch in meters')
@click.pass_context
def cli(ctx, scenario_path, out, grid_n, pitch):
    """Stored-Vortex Diffusion Simulator - diffuse stored light and watch the dark core."""
    ctx.ensure_object(dict)
    config = Config()
    ctx.obj['config'] = config
    ctx.obj['scenario_path'] = scenario_path
    ctx.obj['out'] = out or config.OUTPUT_PATH
    ctx.obj['grid_n'] = grid_n
    ctx.obj['pitch'] = pitch


@cli.command()
@click.option('--beam', type=click.Choice(['lg', 'flat_hole']), default='lg', help='Beam type')
@click.option('--m', default=1, help='Topological charge of the LG mode')
@click.option('--w0', type=float, default=None, help='Waist in meters (default: WAIST)')
@click.option('--r0', type=float, default=None, help='Stop radius in meters (default: w0/2)')
@click.option('--power', type=float, default=1.0, help='Beam power (arbitrary units)')
@click.option('--name', default='probe', help='Base name of the output files')
@click.pass_context
@handle_errors
def generate(ctx, beam, m, w0, r0, power, name):
    """Generate a probe beam and write its field CSV and maps."""
    if ctx.obj['scenario_path']:
        scenario = _scenario(ctx)
        grid, spec = scenario.grid, scenario.beam
    else:
        grid = _grid(ctx)
        w0 = w0 or ctx.obj['config'].WAIST
        if beam == 'lg':
            spec = LGModeSpec(m=m, w0=w0, P=power)
        else:
            spec = FlatHoleSpec(w0=w0, r0=0.5 * w0 if r0 is None else r0, P=power)

    if isinstance(spec, LGModeSpec):
        field = make_lg_field(spec, grid)
    else:
        field = make_flat_hole_field(spec, grid)

    out = _out_dir(ctx)
    paths = [
        save_field_csv(field, out / f"{name}_field.csv", ctx.obj['config'].FLOAT_FORMAT),
        save_intensity_map(field, out / f"{name}_intensity.pgm"),
        save_phase_map(field, out / f"{name}_phase.pgm"),
    ]
    print(f"Generated {grid.nx}x{grid.ny} field (total power {field.total_power():.6g})")
    for path in paths:
        print(f"  {path}")


@cli.command()
@click.argument('field_csv', type=click.Path(dir_okay=False))
@click.option('--time', 't', type=float, required=True, help='Diffusion time in seconds')
@click.option('-D', '--diffusion', 'D', type=float, default=None, help='Diffusion coefficient in m^2/s')
@click.option('--gamma', type=float, default=0.0, help='Intensity decay rate in 1/s (0 = no decay)')
@click.option('--method', type=click.Choice(['spectral', 'direct']), default='spectral',
              help='Diffusion solver')
@click.option('--output', default=None, help='Output CSV (default: <out>/<name>_diffused.csv)')
@click.pass_context
@handle_errors
def propagate(ctx, field_csv, t, D, gamma, method, output):
    """Diffuse a stored field for a given time and write the result."""
    config = ctx.obj['config']
    field = load_field_csv(field_csv)
    medium = MediumParams(D=config.DIFFUSION_COEFFICIENT if D is None else D, gamma=gamma)

    if method == 'direct' and t == 0:
        diffused = field
    elif method == 'direct':
        diffused = diffuse_direct(field, medium, t)
    else:
        diffused = diffuse_spectral(field, medium, t, config.WRAP_GUARD_FACTOR)
    diffused = apply_decay(diffused, medium, t)

    path = Path(output) if output else _out_dir(ctx) / f"{Path(field_csv).stem}_diffused.csv"
    save_field_csv(diffused, path, config.FLOAT_FORMAT)
    print(f"Diffused for {t * 1e6:.4g} us with D={medium.D:.4g} m^2/s ({method}): {path}")


@cli.command()
@click.argument('field_csv', type=click.Path(dir_okay=False))
@click.option('--nbins', type=int, default=None, help='Number of radial bins (default: NBINS)')
@click.option('--center', type=float, nargs=2, default=None, help='Center x y in meters')
@click.option('--output', default=None, help='Output CSV (default: <out>/<name>_profile.csv)')
@click.pass_context
@handle_errors
def profile(ctx, field_csv, nbins, center, output):
    """Compute the azimuthally averaged cross-section of a field."""
    config = ctx.obj['config']
    field = load_field_csv(field_csv)
    result = radial_profile(field, _center(center), nbins or config.NBINS)
    path = Path(output) if output else _out_dir(ctx) / f"{Path(field_csv).stem}_profile.csv"
    save_profile_csv(result, path, float_format=config.FLOAT_FORMAT)
    print(f"Peak at r={result.peak_radius() * 1e6:.4g} um, {len(result.bin_centers)} bins: {path}")


@cli.command()
@click.argument('field_csv', type=click.Path(dir_okay=False))
@click.option('--radius', type=float, required=True, help='Loop radius in meters')
@click.option('--center', type=float, nargs=2, default=None, help='Center x y in meters')
@click.option('--samples', type=int, default=256, help='Points on the loop')
@click.option('--show-circulation', is_flag=True, help='Also print the raw phase circulation')
@click.pass_context
@handle_errors
def winding(ctx, field_csv, radius, center, samples, show_circulation):
    """Measure the topological charge enclosed by a circular loop."""
    field = load_field_csv(field_csv)
    if show_circulation:
        circulation = winding_circulation(field, _center(center), radius, samples)
        print(f"Circulation: {circulation:.6f}")
    print(winding_number(field, _center(center), radius, samples))


@cli.command('fill-time')
@click.option('--w0', type=float, default=None, help='Waist in meters (default: WAIST)')
@click.option('--r0', type=float, default=None, help='Stop radius in meters (default: w0/2)')
@click.option('-D', '--diffusion', 'D', type=float, default=None, help='Diffusion coefficient in m^2/s')
@click.option('--threshold', type=float, default=None, help='Fill ratio counted as filled')
@click.option('--nbins', type=int, default=None, help='Bins of the fill metric (default: NBINS)')
@click.pass_context
@handle_errors
def fill_time_command(ctx, w0, r0, D, threshold, nbins):
    """Time for diffusion to fill the dark center of a flat-phase hole beam."""
    config = ctx.obj['config']
    w0 = w0 or config.WAIST
    spec = FlatHoleSpec(w0=w0, r0=0.5 * w0 if r0 is None else r0)
    medium = MediumParams(D=config.DIFFUSION_COEFFICIENT if D is None else D)
    t = fill_time(spec, medium, threshold, nbins or config.NBINS)
    print(f"Fill time: {t:.6e} s ({t * 1e6:.4f} us, {t * medium.D / w0 ** 2:.4f} w0^2/D)")


def _parse_timed_profile(item: str):
    time_text, sep, path = item.partition('=')
    if not sep or not path:
        raise ValidationError(f"expected TIME=PATH, got '{item}'")
    try:
        t = float(time_text)
    except ValueError:
        raise ValidationError(f"bad time '{time_text}' in '{item}'")
    return t, load_profile_csv(path)


@cli.command()
@click.argument('profiles', nargs=-1, required=True)
@click.option('--m', default=1, help='Topological charge of the stored LG mode')
@click.option('--w0', type=float, default=None, help='Waist in meters (default: WAIST)')
@click.option('--d-min', type=float, default=1e-5, help='Lower end of the D bracket (m^2/s)')
@click.option('--d-max', type=float, default=1e-2, help='Upper end of the D bracket (m^2/s)')
@click.pass_context
@handle_errors
def fit(ctx, profiles, m, w0, d_min, d_max):
    """Fit D to helical-beam profiles given as TIME=PATH pairs."""
    spec = LGModeSpec(m=m, w0=w0 or ctx.obj['config'].WAIST)
    timed = [_parse_timed_profile(item) for item in profiles]
    result = fit_diffusion(timed, spec, (d_min, d_max))
    print(f"D = {result.D_hat:.6e} m^2/s ({result.D_hat * 1e4:.4f} cm^2/s)")
    print(f"Residual: {result.residual:.6e} after {result.iterations} iterations")


@cli.command()
@click.argument('scenario_json', required=False, type=click.Path(dir_okay=False))
@click.pass_context
@handle_errors
def scenario(ctx, scenario_json):
    """Run one scenario file (or --config) and print its summary."""
    config = _scenario(ctx, scenario_json)
    experiment = StorageExperiment(ctx.obj['config'], ctx.obj['out'])
    report = experiment.run_scenario(config)
    print(json.dumps(report.summary, indent=2, sort_keys=True))


@cli.command()
@click.option('--helical', 'helical_path', default=None, help='Helical scenario JSON')
@click.option('--flat', 'flat_path', default=None, help='Flat-hole scenario JSON')
@click.option('--which', type=click.Choice(['both', 'helical', 'flat']), default='both',
              help='Which cross-section set to emit')
@click.pass_context
@handle_errors
def figures(ctx, helical_path, flat_path, which):
    """Write normalized cross-sections for every storage stage of each beam."""
    config = ctx.obj['config']
    scenarios_dir = Path(config.SCENARIOS_PATH)
    experiment = StorageExperiment(config, ctx.obj['out'])

    batches = []
    if which in ('both', 'helical'):
        batches.append((helical_path or scenarios_dir / 'helical_m1.json', HELICAL_STORAGE_TIMES))
    if which in ('both', 'flat'):
        batches.append((flat_path or scenarios_dir / 'flat_hole.json', FLAT_STORAGE_TIMES))

    for path, storage_times in batches:
        base = _scenario(ctx, path)
        print(f"Emitting cross-sections for {base.beam_tag()}...")
        paths = experiment.emit_figure_data(figure_set(base, storage_times))
        print(f"{len(paths)} files written")


# Example usage function
def show_examples():
    """Show example usage commands."""
    examples = [
        "# Generate an LG m=1 probe on the default grid",
        "python main.py generate --beam lg --m 1",
        "",
        "# Generate a flat-phase hole beam with a 335 um stop",
        "python main.py generate --beam flat_hole --r0 335e-6 --name flat",
        "",
        "# Diffuse a stored field for 160 us",
        "python main.py propagate data/output/probe_field.csv --time 160e-6",
        "",
        "# Radial cross-section of a field",
        "python main.py profile data/output/probe_field_diffused.csv --nbins 64",
        "",
        "# Topological charge on a loop of radius 600 um",
        "python main.py winding data/output/probe_field_diffused.csv --radius 600e-6",
        "",
        "# Fill time of a w0/2 hole",
        "python main.py fill-time",
        "",
        "# Fit D to profiles measured at 30, 70 and 110 us",
        "python main.py fit 30e-6=p30.csv 70e-6=p70.csv 110e-6=p110.csv",
        "",
        "# Run a scenario file",
        "python main.py scenario scenarios/helical_m1.json",
        "",
        "# Emit all cross-section data",
        "python main.py --out data/figures figures",
    ]

    print("Example Usage:")
    print("=" * 50)
    for example in examples:
        print(example)


if __name__ == "__main__":
    # Show examples if no arguments provided
    if len(sys.argv) == 1:
        print("Stored-Vortex Diffusion Simulator")
        print("=" * 40)
        print("No command provided. Here are some examples:\n")
        show_examples()
        print("\nFor full help, run: python main.py --help")
    else:
        cli()
