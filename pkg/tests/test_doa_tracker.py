"""
DoA tracking and sector tests.

Proves:
  - the coarse DFT finds interferers, skips the SOI sector and stays quiet on noise
  - the DFT taper is built without warnings
  - refinement stays in its window, breaks ties low and tracks linear motion
  - sectors are contiguous, never empty, and respect the SOI sector
  - anchored sectors keep the grid spacing on a lattice through the spectrum peak
"""
import warnings
import numpy as np
import pytest
from beamcraft.array_geometry import ArrayConfig, angle_to_index
from beamcraft.doa_tracker import (SCAN_HALF_WIDTH, SCAN_STEP, anchor_sectors, build_sectors, chebyshev_taper,
                                   coarse_doas, dft_spectrum, full_sector_set, refine_track, soi_indices,
                                   static_track, track_frame)
from beamcraft.errors import ConfigurationError
from beamcraft.scene_simulator import Scenario, SnapshotMatrix, SourceSpec, simulate
from beamcraft.spectrum import CovarianceMatrix, me_spectrum
from conftest import on_grid_deg

SOI_SECTOR = (10.0, 4.0)


def test_dft_spectrum_axis_is_increasing():
    angles, power = dft_spectrum(np.ones((10, 1)))
    assert np.all(np.diff(angles) >= 0)
    assert np.all(np.abs(angles) <= np.pi / 2)
    assert angles[np.argmax(power)] == pytest.approx(0.0, abs=1e-3)


def test_noiseless_single_interferer(steer):
    snap = SnapshotMatrix(np.sqrt(1000) * steer(-40.0)[:, None])
    found = coarse_doas(snap, SOI_SECTOR)
    assert len(found) == 1
    assert abs(np.rad2deg(found[0]) + 40.0) < 0.2


def test_impulse_has_no_peaks():
    """u_1 has a flat spatial spectrum."""
    data = np.zeros((10, 1), dtype=complex)
    data[0] = 1.0
    assert coarse_doas(SnapshotMatrix(data), SOI_SECTOR) == []


def test_soi_inside_its_sector_is_skipped(steer):
    snap = SnapshotMatrix(10 * steer(10.0)[:, None])
    assert coarse_doas(snap, SOI_SECTOR) == []


def test_taper_builds_without_warnings():
    chebyshev_taper.cache_clear()
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        angles, _ = dft_spectrum(np.ones((10, 2)))
    assert len(angles) > 0


def _interferers_found(snapshots, seeds=range(100)):
    hits = 0
    for seed in seeds:
        snap = simulate(Scenario(seed=seed))
        found = sorted(np.rad2deg(coarse_doas(snap, SOI_SECTOR, snapshots=snapshots)))
        if len(found) == 2 and abs(found[0] + 40.0) < 2 and abs(found[1] - 20.0) < 2:
            hits += 1
    return hits


def test_two_interferers_found_over_seeds():
    assert _interferers_found(snapshots=None) >= 95


def test_first_snapshot_alone_finds_most_interferers():
    """x(1) carries one Rayleigh draw of every amplitude, so a source can fade into the SOI's lobe."""
    assert _interferers_found(snapshots=1) >= 75


def test_noise_only_has_no_peaks():
    for seed in range(20):
        snap = simulate(Scenario(soi=None, interferers=(), presumed_soi_deg=10.0, seed=seed))
        assert coarse_doas(snap, SOI_SECTOR, snapshots=None) == []


def test_peak_count_is_capped():
    snap = simulate(Scenario(seed=1))
    assert len(coarse_doas(snap, SOI_SECTOR, snapshots=None, n_sources=1)) == 1


def test_refine_noiseless_static(steer):
    rng = np.random.default_rng(0)
    waveforms = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    snap = SnapshotMatrix(np.outer(steer(20.0), waveforms))
    coarse = np.deg2rad(20.0)
    track = refine_track(snap, coarse)
    assert np.allclose(track.per_snapshot_doa, coarse, atol=1e-12)
    assert track.spread < 1e-9
    assert np.allclose(track.fitted, coarse, atol=1e-9)
    assert track.theta_center == pytest.approx(coarse, abs=1e-9)


def test_refine_tie_goes_to_smallest_angle():
    coarse = np.deg2rad(20.0)
    track = refine_track(SnapshotMatrix(np.zeros((10, 3))), coarse)
    n = int(round(SCAN_HALF_WIDTH / SCAN_STEP))
    assert np.allclose(track.per_snapshot_doa, coarse - n * SCAN_STEP)


def test_refine_stays_in_window():
    snap = simulate(Scenario(seed=4))
    coarse = np.deg2rad(-35.0)
    track = refine_track(snap, coarse)
    assert np.all(np.abs(track.per_snapshot_doa - coarse) <= SCAN_HALF_WIDTH + 1e-12)


def test_refine_uses_the_array_spacing():
    array = ArrayConfig(m=10, spacing_wavelengths=0.25)
    snap = simulate(Scenario(array=array, soi=None, presumed_soi_deg=10.0,
                             interferers=(SourceSpec(40.0, 30.0),), seed=0))
    track = refine_track(snap, np.deg2rad(40.0), cfg=array)
    assert np.rad2deg(track.theta_center) == pytest.approx(40.0, abs=0.5)
    with pytest.raises(ConfigurationError):
        refine_track(snap, np.deg2rad(40.0), cfg=ArrayConfig(m=8))


def test_refine_rejects_bad_scan():
    with pytest.raises(ConfigurationError):
        refine_track(SnapshotMatrix(np.ones((10, 2))), 0.0, c=0.0)


def test_linear_motion_spread():
    """An interferer drifting 20 -> 24 deg over 50 snapshots gives a 3-5 deg fitted range."""
    moving = SourceSpec(20.0, 30.0, motion=(4.0 / 49, 0.0))
    good = 0
    for seed in range(10):
        snap = simulate(Scenario(interferers=(moving,), seed=seed))
        coarse = coarse_doas(snap, SOI_SECTOR, snapshots=None)
        track = refine_track(snap, coarse[0])
        if 3.0 <= np.rad2deg(track.spread) <= 5.0:
            good += 1
    assert good >= 9


def test_moving_interferer_stays_inside_its_sector(grid):
    moving = SourceSpec(20.0, 30.0, motion=(4.0 / 49, 0.0))
    covered = 0
    for seed in range(10):
        snap = simulate(Scenario(interferers=(moving,), seed=seed))
        track = refine_track(snap, coarse_doas(snap, SOI_SECTOR, snapshots=None)[0])
        sectors = build_sectors([track], grid, SOI_SECTOR)
        truth = [angle_to_index(grid, np.deg2rad(d)) for d in snap.truth.interferer_doas_deg[0]]
        if set(truth) <= set(sectors.union_indices.tolist()):
            covered += 1
    assert covered >= 9


def test_static_sector_is_contiguous(grid):
    n = angle_to_index(grid, np.deg2rad(20.0))
    sectors = build_sectors([static_track(np.deg2rad(20.0))], grid, SOI_SECTOR, margin_deg=4.0)
    assert sectors.union_indices.tolist() == list(range(n - 4, n + 5))
    assert sectors.interferer_sectors[0].width == 9
    assert not sectors.crossing


def test_two_sectors(grid):
    tracks = [static_track(np.deg2rad(20.0), interferer_id=0), static_track(np.deg2rad(-40.0), interferer_id=1)]
    sectors = build_sectors(tracks, grid, SOI_SECTOR)
    assert len(sectors.interferer_sectors) == 2
    assert sectors.size == 18


def test_sector_inside_soi_sector_is_dropped(grid):
    sectors = build_sectors([static_track(np.deg2rad(10.0), interferer_id=3)], grid, SOI_SECTOR)
    assert sectors.size == 0
    assert sectors.dropped == (3,)


def test_sector_crossing_soi_sector(grid):
    sectors = build_sectors([static_track(np.deg2rad(16.0))], grid, SOI_SECTOR)
    assert sectors.crossing
    assert 0 < sectors.size < 9
    assert not set(sectors.union_indices.tolist()) & set(soi_indices(grid, SOI_SECTOR).tolist())


def test_sector_clipped_at_grid_edge(grid):
    sectors = build_sectors([static_track(np.deg2rad(-89.5))], grid, SOI_SECTOR)
    assert sectors.union_indices.min() == 0
    assert np.all(sectors.union_indices < grid.q)


def test_full_sector_set(grid):
    sectors = full_sector_set(grid, SOI_SECTOR)
    assert sectors.size == grid.q - len(soi_indices(grid, SOI_SECTOR))
    assert sectors.interferer_sectors[0].interferer_id == -1


def test_soi_indices_use_grid_angles(grid):
    indices = soi_indices(grid, SOI_SECTOR)
    assert np.all(np.abs(grid.degrees[indices] - 10.0) <= 4.0 + 1e-9)
    assert on_grid_deg(grid, 10.0) in grid.degrees[indices]


def test_track_frame():
    tracks = [static_track(0.1, k=3, interferer_id=0), static_track(-0.2, k=3, interferer_id=1)]
    frame = track_frame(tracks)
    assert list(frame.columns) == ['snapshot_index', 'interferer_id', 'doa_deg', 'fitted_doa_deg']
    assert len(frame) == 6
    assert frame['snapshot_index'].tolist() == [1, 2, 3, 1, 2, 3]


def _anchored(grid, cfg, steer, degrees, track_degrees=None):
    a = steer(degrees)
    spec = me_spectrum(CovarianceMatrix(np.eye(10) + 1000 * np.outer(a, a.conj())), grid, cfg)
    track = static_track(np.deg2rad(degrees if track_degrees is None else track_degrees))
    sectors = build_sectors([track], grid, SOI_SECTOR)
    return sectors, anchor_sectors(sectors, spec, grid)


def test_anchored_lattice_passes_through_the_peak(grid, cfg, steer):
    sectors, anchored = _anchored(grid, cfg, steer, 20.3)
    lattice = anchored.interferer_sectors[0].angles
    assert anchored.anchored and not sectors.anchored
    assert len(lattice) == sectors.interferer_sectors[0].width
    assert np.allclose(np.diff(lattice), grid.delta)
    assert np.min(np.abs(lattice - np.deg2rad(20.3))) < 1e-6
    assert np.array_equal(anchored.union_indices, sectors.union_indices)
    assert np.array_equal(anchored.sample_angles(grid), lattice)


def test_anchored_lattice_skips_the_soi_sector(grid, cfg, steer):
    _, anchored = _anchored(grid, cfg, steer, 16.3, track_degrees=16.0)
    lattice = np.rad2deg(anchored.interferer_sectors[0].angles)
    assert np.all(np.abs(lattice - 10.0) > 4.0)
    assert np.min(np.abs(lattice - 16.3)) < 1e-4


def test_anchoring_without_sectors(grid, cfg):
    spec = me_spectrum(CovarianceMatrix(np.eye(10)), grid, cfg)
    anchored = anchor_sectors(build_sectors([], grid, SOI_SECTOR), spec, grid)
    assert anchored.size == 0
    assert len(anchored.sample_angles(grid)) == 0
