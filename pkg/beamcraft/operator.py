"""
Operator module for beamcraft. This module contains the main function for the beamcraft CLI.
"""
import os
from dataclasses import replace
import numpy as np
import pandas as pd
from .array_geometry import ArrayConfig, make_grid
from .cg_solver import convergence_frame
from .doa_tracker import track_frame
from .inc_builder import eigen_frame
from .metrics import beampattern, beampattern_frame, null_depth, output_sinr
from .pipeline import CmrIspsBeamformer, PipelineConfig, PipelineTrace
from .scene_simulator import Scenario, SourceSpec, apply_mismatch, simulate
from .spectrum import capon_spectrum, me_spectrum, sample_covariance, spectrum_frame
from .sweeper import SweepSpec, run_sweep
from .validator import validate_analysis
from .errors import BeamcraftError, ConfigurationError
from .debug import Debug as debug
from . import utils

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION = 0, 1, 2

BEAMPATTERN_FAMILIES = {'close': (20.0, -40.0), 'far': (-40.0, 50.0)}


def load_scenario(args) -> Scenario:
    """Scenario from the JSON file (or defaults) with command-line overrides applied."""
    scenario = Scenario.from_dict(utils.load_json(args.input)) if args.input else Scenario()
    if args.sensors is not None:
        # perturbation tuples are sized for the old M
        scenario = replace(scenario, array=ArrayConfig(m=args.sensors,
                                                       spacing_wavelengths=scenario.array.spacing_wavelengths))
    if args.snapshots is not None:
        scenario = replace(scenario, snapshots=args.snapshots)
    if args.snr_db is not None:
        if scenario.soi is None:
            raise ConfigurationError('--snr-db needs a signal of interest in the scenario')
        scenario = replace(scenario, soi=replace(scenario.soi, power_db=args.snr_db))
    if args.inr_db is not None:
        scenario = replace(scenario, interferers=tuple(replace(i, power_db=args.inr_db) for i in scenario.interferers))
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    return apply_mismatch(scenario, args.mismatch)


def pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(grid_size=args.grid_size, margin_deg=args.margin, scan_half_width_deg=args.scan_width,
                          coarse_snapshots=args.coarse_snapshots, anchor_sectors=not args.grid_sectors,
                          solver=args.solver, tol=args.tol, max_iter=args.max_iter)


def output_file(args, name):
    return os.path.join(utils.get_output_path(args.out_dir), name)


def run_simulate(args, scenario):
    snap = simulate(scenario)
    sensors, snapshots = np.meshgrid(np.arange(snap.m), np.arange(snap.k), indexing='ij')
    frame = pd.DataFrame({'snapshot_index': snapshots.ravel() + 1, 'sensor': sensors.ravel(),
                          'real': snap.data.real.ravel(), 'imag': snap.data.imag.ravel()})
    frame = frame.sort_values(['snapshot_index', 'sensor'], kind='mergesort')
    utils.write_csv(frame, output_file(args, 'snapshots.csv'))
    debug.log_value(f'Sensors: {snap.m}')
    debug.log_value(f'Snapshots: {snap.k}')
    debug.log_value(f'Interferers: {len(scenario.interferers)}')


def run_spectrum(args, scenario):
    snap = simulate(scenario)
    grid = make_grid(args.grid_size)
    cfg = ArrayConfig(m=snap.m, spacing_wavelengths=scenario.array.spacing_wavelengths)
    r = sample_covariance(snap)
    utils.write_csv(spectrum_frame(capon_spectrum(r, grid, cfg), me_spectrum(r, grid, cfg)),
                    output_file(args, 'spectrum.csv'))
    if args.dump_inc:
        _, trace = CmrIspsBeamformer(pipeline_config(args)).main(snap)
        utils.write_csv(eigen_frame(trace.inc), output_file(args, 'inc_eigenvalues.csv'))


def run_track(args, scenario):
    snap = simulate(scenario)
    beamformer = CmrIspsBeamformer(pipeline_config(args))
    trace = beamformer.track(snap, PipelineTrace(), scenario.soi_sector)
    utils.write_csv(track_frame(trace.tracks), output_file(args, 'tracks.csv'))
    rows = [(s.interferer_id, int(i), beamformer.grid.degrees[i])
            for s in trace.sectors.interferer_sectors for i in s.indices]
    utils.write_csv(pd.DataFrame(rows, columns=['interferer_id', 'grid_index', 'angle_deg']),
                    output_file(args, 'sectors.csv'))
    for track in trace.tracks:
        low, high = np.rad2deg(track.theta_range)
        debug.log_any(f'Interferer <{track.interferer_id}> between <{low:.2f}> and <{high:.2f}> deg', 'track')
    if trace.sectors.crossing:
        debug.log_warning('An interferer sector crosses the SOI sector')


def run_beampattern(args, scenario):
    """Beampatterns of the CMR-ISPS weights; without a scenario file, the close and far families."""
    if args.input:
        families = {'scenario': scenario}
    else:
        families = {name: replace(scenario, interferers=tuple(replace(i, doa_deg=doa) for i, doa in
                                                              zip(_two_interferers(scenario), doas)))
                    for name, doas in BEAMPATTERN_FAMILIES.items()}
    grid = make_grid(args.grid_size)
    for name, family in families.items():
        snap = simulate(family)
        weights, _ = CmrIspsBeamformer(pipeline_config(args)).main(snap)
        array = family.array.ideal
        pattern = beampattern(weights, grid, array)
        suffix = '' if name == 'scenario' else f'_{name}'
        utils.write_csv(beampattern_frame(pattern), output_file(args, f'beampattern{suffix}.csv'))
        depths = null_depth(weights, np.deg2rad(snap.truth.interferer_doas_deg[:, 0]), array)
        for doa, depth in zip(snap.truth.interferer_doas_deg[:, 0], np.atleast_1d(depths)):
            debug.log_value(f'{name} null at {doa:.1f} deg: {depth:.1f} dB')
        debug.log_value(f'{name} output SINR: {output_sinr(weights, snap.truth).output_sinr_db:.2f} dB')


def _two_interferers(scenario):
    interferers = list(scenario.interferers[:2])
    while len(interferers) < 2:
        interferers.append(SourceSpec(0.0, 30.0))
    return interferers


def run_sweep_operation(args, scenario):
    axis_values = args.axis_values or (list(range(-20, 25, 5)) if args.axis == 'snr' else list(range(20, 220, 20)))
    spec = SweepSpec(scenario=scenario, axis_name=args.axis, axis_values=tuple(axis_values),
                     trials=args.trials, methods=tuple(args.methods), master_seed=scenario.seed,
                     pipeline=pipeline_config(args), workers=args.workers)
    run_sweep(spec).write(args.out_dir)


def run_validate(args):
    report = validate_analysis(seed=args.seed or 0)
    report.write(args.out_dir)
    print(report.text(), end='')
    if not report.passed:
        debug.log_error(f'<{len(report.failures)}> validation checks failed')
        return EXIT_VALIDATION
    debug.log_done('All validation checks passed')
    return EXIT_OK


def run_convergence(args, scenario):
    snap = simulate(scenario)
    config = replace(pipeline_config(args), solver='cg')
    _, trace = CmrIspsBeamformer(config).main(snap)
    utils.write_csv(convergence_frame(trace.state), output_file(args, 'convergence.csv'))
    debug.log_value(f'Iterations: {trace.state.iter}')
    debug.log_value(f'Q_L: {trace.inc.q_l}')
    for kind, macs in sorted(trace.counter.counts.items()):
        debug.log_value(f'{kind} MACs: {macs}')


def main(args):
    """
    Runs the requested operation and returns the process exit code.

    Args:
        args (argparse.Namespace): The command-line arguments.

    Returns:
        int: 0 on success, 1 on usage or configuration errors, 2 when validation checks fail.
    """
    debug.set_level('verbose' if args.verbose else ('quiet' if args.quiet else 'normal'))
    debug.log_info(f'Running <{args.operation}>')
    try:
        if args.operation == 'validate':
            return run_validate(args)
        scenario = load_scenario(args)
        operations = {'simulate': run_simulate, 'spectrum': run_spectrum, 'track': run_track,
                      'beampattern': run_beampattern, 'sweep': run_sweep_operation,
                      'convergence': run_convergence}
        operations[args.operation](args, scenario)
    except ConfigurationError as e:
        debug.log_error(f'Invalid configuration: {e}')
        return EXIT_USAGE
    except BeamcraftError as e:
        debug.log_error(str(e))
        return EXIT_USAGE
    debug.log_done(f'<{args.operation}> finished')
    return EXIT_OK
