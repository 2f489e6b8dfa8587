"""
End-to-end CMR-ISPS beamformer: sample covariance, maximum-entropy spectrum,
interferer tracking, sector INC reconstruction, SOI steering estimate and the
conjugate gradient weight solve.
"""
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import List, Optional
import numpy as np
from .array_geometry import ArrayConfig, make_grid
from .cg_solver import BeamformerWeights, CgState, OperationCounter, cg_solve, direct_weights
from .doa_tracker import (DoaTrack, SectorSet, anchor_sectors, build_sectors, coarse_doas, refine_track,
                          static_track)
from .inc_builder import IncModel, SoiEstimate, build_capon_inc_baseline, build_inc, estimate_soi
from .spectrum import CovarianceMatrix, SpectrumEstimate, me_spectrum, noise_floor, sample_covariance
from .errors import BeamcraftError, ConfigurationError, PipelineError
from .debug import Debug as debug


@dataclass(frozen=True)
class PipelineConfig:
    grid_size: int = 200
    margin_deg: float = 4.0
    scan_half_width_deg: float = 5.0
    scan_step_deg: float = 0.25
    # None averages every snapshot for the coarse DFT, 1 uses x(1) only
    coarse_snapshots: Optional[int] = None
    n_sources: Optional[int] = None
    peak_threshold_db: float = 10.0
    # sample each interferer sector on a lattice through its spectrum peak
    anchor_sectors: bool = True
    interferer_doas_deg: Optional[tuple] = None
    solver: str = 'cg'
    tol: Optional[float] = None
    max_iter: Optional[int] = None

    def __post_init__(self):
        if self.solver not in ('cg', 'direct'):
            raise ConfigurationError(f'Unknown solver: {self.solver}')
        if self.scan_half_width_deg <= 0 or self.scan_step_deg <= 0 or self.margin_deg < 0:
            raise ConfigurationError('Scan width, scan step and margin must be positive')


@dataclass
class PipelineTrace:
    covariance: Optional[CovarianceMatrix] = None
    spectrum: Optional[SpectrumEstimate] = None
    coarse: List[float] = field(default_factory=list)
    tracks: List[DoaTrack] = field(default_factory=list)
    sectors: Optional[SectorSet] = None
    noise: float = 0.0
    inc: Optional[IncModel] = None
    soi: Optional[SoiEstimate] = None
    state: Optional[CgState] = None
    counter: OperationCounter = field(default_factory=OperationCounter)
    weights: Optional[BeamformerWeights] = None


@contextmanager
def stage(name):
    try:
        yield
    except PipelineError:
        raise
    except (BeamcraftError, np.linalg.LinAlgError, ValueError, ArithmeticError) as e:
        raise PipelineError(name, e) from e


class CmrIspsBeamformer:
    """Runs every stage on one snapshot block and keeps the intermediates in a trace."""

    def __init__(self, config=None, presumed_soi_deg=None, soi_half_width_deg=None):
        self.config = config or PipelineConfig()
        self.presumed_soi_deg = presumed_soi_deg
        self.soi_half_width_deg = soi_half_width_deg
        self.grid = make_grid(self.config.grid_size)

    def _soi_sector(self, snap):
        scenario = snap.scenario
        center = self.presumed_soi_deg if self.presumed_soi_deg is not None else (
            scenario.presumed_soi_deg if scenario is not None else None)
        half_width = self.soi_half_width_deg if self.soi_half_width_deg is not None else (
            scenario.soi_sector_half_width_deg if scenario is not None else 4.0)
        if center is None:
            raise ConfigurationError('A presumed SOI direction is required')
        return (float(center), float(half_width))

    def _array(self, snap):
        spacing = snap.scenario.array.spacing_wavelengths if snap.scenario is not None else 0.5
        return ArrayConfig(m=snap.m, spacing_wavelengths=spacing)

    def track(self, snap, trace, soi_sector):
        """Coarse DoAs, refined tracks and sectors, stored on the trace."""
        cfg = self.config
        if cfg.interferer_doas_deg is not None:
            trace.tracks = [static_track(np.deg2rad(doa), snap.k, l) for l, doa in enumerate(cfg.interferer_doas_deg)]
        else:
            with stage('coarse-doa'):
                trace.coarse = coarse_doas(snap, soi_sector, snapshots=cfg.coarse_snapshots,
                                           n_sources=cfg.n_sources, threshold_db=cfg.peak_threshold_db,
                                           spacing=self._array(snap).spacing_wavelengths)
            with stage('tracking'):
                trace.tracks = [refine_track(snap, coarse, c=np.deg2rad(cfg.scan_half_width_deg),
                                             step=np.deg2rad(cfg.scan_step_deg), interferer_id=l,
                                             cfg=self._array(snap))
                                for l, coarse in enumerate(trace.coarse)]
        with stage('sectors'):
            trace.sectors = build_sectors(trace.tracks, self.grid, soi_sector, cfg.margin_deg)
        return trace

    def main(self, snap):
        cfg = self.config
        trace = PipelineTrace()
        soi_sector = self._soi_sector(snap)
        array = self._array(snap)

        with stage('covariance'):
            trace.covariance = sample_covariance(snap)
        with stage('spectrum'):
            trace.spectrum = me_spectrum(trace.covariance, self.grid, array)
        self.track(snap, trace, soi_sector)
        if cfg.anchor_sectors:
            with stage('anchor'):
                trace.sectors = anchor_sectors(trace.sectors, trace.spectrum, self.grid)
        with stage('noise-floor'):
            interferers = min(len(trace.sectors.interferer_sectors), snap.m - 2)
            trace.noise = noise_floor(trace.covariance, interferers)
        with stage('inc'):
            trace.inc = build_inc(trace.spectrum, trace.sectors, array, trace.noise)
        with stage('soi'):
            trace.soi = estimate_soi(trace.spectrum, soi_sector, array, np.deg2rad(soi_sector[0]))
        with stage('solve'):
            if cfg.solver == 'cg':
                trace.weights, trace.state = cg_solve(trace.inc, trace.soi.a_hat, tol=cfg.tol,
                                                      max_iter=cfg.max_iter, counter=trace.counter)
            else:
                trace.weights = direct_weights(trace.inc, trace.soi.a_hat, counter=trace.counter)
        debug.log_debug(f'Pipeline done: <{len(trace.tracks)}> interferers, Q_L = <{trace.inc.q_l}>')
        return trace.weights, trace

    def capon_baseline(self, snap, trace) -> BeamformerWeights:
        """MVDR weights on the full-sector Capon INC with the same SOI estimate."""
        with stage('capon-baseline'):
            inc = build_capon_inc_baseline(trace.covariance, self.grid, self._soi_sector(snap), self._array(snap))
            weights = direct_weights(inc, trace.soi.a_hat)
        return BeamformerWeights(w=weights.w, normalization=weights.normalization, method='capon-baseline')


def run_pipeline(snap, config=None, presumed_soi_deg=None):
    """Distortionless CMR-ISPS weights for one snapshot block plus the stage trace."""
    return CmrIspsBeamformer(config, presumed_soi_deg=presumed_soi_deg).main(snap)
