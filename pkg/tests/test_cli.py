"""
Command-line tests: every operation writes its files with the expected
header, outputs are byte-identical across runs, and errors map to exit codes.
"""
import json
import logging
import os
import pandas as pd
import pytest
import bmc
from beamcraft import operator


def run(*argv):
    return operator.main(bmc.build_parser().parse_args([*argv, '--quiet']))


def read_header(path):
    with open(path, encoding='utf-8') as file:
        return file.readline()


def read_bytes(path):
    with open(path, 'rb') as file:
        return file.read()


def test_simulate_is_deterministic(tmp_path):
    assert run('simulate', '-o', str(tmp_path / 'a'), '--seed', '3') == operator.EXIT_OK
    assert run('simulate', '-o', str(tmp_path / 'b'), '--seed', '3') == operator.EXIT_OK
    first, second = tmp_path / 'a' / 'snapshots.csv', tmp_path / 'b' / 'snapshots.csv'
    assert read_bytes(first) == read_bytes(second)
    frame = pd.read_csv(first)
    assert len(frame) == 10 * 50
    assert frame['snapshot_index'].min() == 1


def test_outputs_use_lf_line_endings(tmp_path):
    run('simulate', '-o', str(tmp_path), '-k', '2')
    assert b'\r\n' not in read_bytes(tmp_path / 'snapshots.csv')


def test_spectrum_with_inc_dump(tmp_path, golden):
    assert run('spectrum', '-o', str(tmp_path), '--dump-inc') == operator.EXIT_OK
    assert read_header(tmp_path / 'spectrum.csv') == golden('spectrum.csv')
    assert read_header(tmp_path / 'inc_eigenvalues.csv') == golden('inc_eigenvalues.csv')
    assert len(pd.read_csv(tmp_path / 'spectrum.csv')) == 200
    assert len(pd.read_csv(tmp_path / 'inc_eigenvalues.csv')) == 10


def test_grid_size_override(tmp_path):
    run('spectrum', '-o', str(tmp_path), '-q', '360')
    assert len(pd.read_csv(tmp_path / 'spectrum.csv')) == 360


def test_track(tmp_path, golden):
    assert run('track', '-o', str(tmp_path)) == operator.EXIT_OK
    assert read_header(tmp_path / 'tracks.csv') == golden('tracks.csv')
    assert read_header(tmp_path / 'sectors.csv') == golden('sectors.csv')
    tracks = pd.read_csv(tmp_path / 'tracks.csv')
    assert set(tracks['snapshot_index']) == set(range(1, 51))


def test_beampattern_families(tmp_path, golden):
    assert run('beampattern', '-o', str(tmp_path)) == operator.EXIT_OK
    for name in ('beampattern_close.csv', 'beampattern_far.csv'):
        assert read_header(tmp_path / name) == golden('beampattern.csv')
        assert pd.read_csv(tmp_path / name)['gain_db'].max() == pytest.approx(0.0)


def test_beampattern_from_scenario_file(tmp_path, golden):
    scenario = tmp_path / 'scenario.json'
    scenario.write_text(json.dumps({'interferers': [{'doa_deg': -30.0, 'power_db': 25.0}]}), encoding='utf-8')
    assert run('beampattern', str(scenario), '-o', str(tmp_path)) == operator.EXIT_OK
    assert read_header(tmp_path / 'beampattern.csv') == golden('beampattern.csv')


def test_convergence(tmp_path, golden):
    assert run('convergence', '-o', str(tmp_path), '--solver', 'direct') == operator.EXIT_OK
    assert read_header(tmp_path / 'convergence.csv') == golden('convergence.csv')
    frame = pd.read_csv(tmp_path / 'convergence.csv')
    assert frame['iter'].iloc[0] == 0
    assert frame['grad_norm'].iloc[-1] < frame['grad_norm'].iloc[0]


def test_sweep(tmp_path, golden):
    code = run('sweep', '-o', str(tmp_path), '--trials', '2', '--axis-values', '0', '10',
               '--methods', 'smi', 'optimal', '--workers', '1')
    assert code == operator.EXIT_OK
    assert read_header(tmp_path / 'sweep_records.csv') == golden('sweep_records.csv')
    assert read_header(tmp_path / 'sweep_summary.csv') == golden('sweep_summary.csv')
    assert len(pd.read_csv(tmp_path / 'sweep_records.csv')) == 2 * 2 * 2


def test_validate(tmp_path):
    assert run('validate', '-o', str(tmp_path)) == operator.EXIT_OK
    assert os.path.isfile(tmp_path / 'validation_report.txt')


def test_scenario_file_with_overrides(tmp_path):
    scenario = tmp_path / 'scenario.json'
    scenario.write_text(json.dumps({'array': {'m': 8}, 'snapshots': 30, 'seed': 4}), encoding='utf-8')
    assert run('simulate', str(scenario), '-o', str(tmp_path), '-k', '5') == operator.EXIT_OK
    frame = pd.read_csv(tmp_path / 'snapshots.csv')
    assert len(frame) == 8 * 5


def test_sensor_override(tmp_path):
    assert run('simulate', '-o', str(tmp_path), '-m', '20', '--mismatch', 'gainphase') == operator.EXIT_OK
    frame = pd.read_csv(tmp_path / 'snapshots.csv')
    assert frame['sensor'].nunique() == 20


def test_sensor_override_keeps_spacing():
    args = bmc.build_parser().parse_args(['simulate', '-m', '20'])
    scenario = operator.load_scenario(args)
    assert scenario.array.m == 20
    assert scenario.array.spacing_wavelengths == 0.5


def test_beampattern_on_quarter_wavelength_array(tmp_path):
    scenario = tmp_path / 'scenario.json'
    scenario.write_text(json.dumps({'array': {'m': 10, 'spacing_wavelengths': 0.25},
                                    'interferers': [{'doa_deg': 40.0, 'power_db': 30.0}]}), encoding='utf-8')
    assert run('beampattern', str(scenario), '-o', str(tmp_path)) == operator.EXIT_OK
    frame = pd.read_csv(tmp_path / 'beampattern.csv')
    gain = frame['gain_db'].to_numpy()
    assert gain[frame['angle_deg'].sub(40.0).abs().argmin()] < -15.0


def test_track_reports_each_interferer(tmp_path, caplog):
    logger = logging.getLogger('beamcraft.message')
    logger.addHandler(caplog.handler)
    try:
        assert operator.main(bmc.build_parser().parse_args(['track', '-o', str(tmp_path)])) == operator.EXIT_OK
    finally:
        logger.removeHandler(caplog.handler)
    tagged = [r for r in caplog.records if 'TRACK' in getattr(r, 'level', '')]
    assert len(tagged) == 2


def test_mismatch_option(tmp_path):
    assert run('simulate', '-o', str(tmp_path), '--mismatch', 'gainphase') == operator.EXIT_OK


def test_malformed_scenario_exits_1(tmp_path):
    scenario = tmp_path / 'broken.json'
    scenario.write_text('{"snapshots": ', encoding='utf-8')
    assert run('simulate', str(scenario), '-o', str(tmp_path)) == operator.EXIT_USAGE
    assert run('simulate', str(tmp_path / 'missing.json'), '-o', str(tmp_path)) == operator.EXIT_USAGE


def test_snr_override_without_soi_exits_1(tmp_path):
    scenario = tmp_path / 'no_soi.json'
    scenario.write_text(json.dumps({'soi': None, 'presumed_soi_deg': 10.0}), encoding='utf-8')
    assert run('simulate', str(scenario), '-o', str(tmp_path), '--snr-db', '5') == operator.EXIT_USAGE


def test_unknown_operation_exits_1():
    with pytest.raises(SystemExit) as info:
        bmc.build_parser().parse_args(['transmogrify'])
    assert info.value.code == operator.EXIT_USAGE
