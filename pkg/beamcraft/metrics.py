"""
Output SINR against the simulator's ground truth, optimal SINR (point source
and scattered source) and beampatterns.
"""
from dataclasses import dataclass
from typing import Optional
import numpy as np
import scipy.linalg
from numpy.typing import NDArray
from .array_geometry import AngularGrid, ArrayConfig, make_grid, manifold
from .cg_solver import BeamformerWeights
from . import utils


@dataclass(frozen=True)
class SinrReport:
    output_sinr_db: float
    optimal_sinr_db: float
    scenario: str = ''
    seed: Optional[int] = None

    @property
    def deviation_db(self):
        return self.optimal_sinr_db - self.output_sinr_db


@dataclass(frozen=True)
class Beampattern:
    grid: AngularGrid
    gain_db: NDArray[np.float64]

    @property
    def peak_angle(self):
        return float(self.grid.angles[np.argmax(self.gain_db)])


def _vector(w):
    return w.w if isinstance(w, BeamformerWeights) else np.asarray(w, dtype=complex)


def _quadratic(w, r):
    return float(np.real(np.vdot(w, r @ w)))


def output_sinr(w, truth, scenario='', seed=None) -> SinrReport:
    """sigma_0^2 |w^H a_0|^2 / (w^H R_in w) with the realized a_0 and R_in.

    Scattered scenarios are evaluated with the generalized form on truth.r_s.
    """
    if truth.scattered:
        return scattering_sinr(w, truth.r_s, truth.r_in, scenario=scenario, seed=seed)
    w = _vector(w)
    sinr = truth.soi_power * abs(np.vdot(w, truth.a_0)) ** 2 / _quadratic(w, truth.r_in)
    optimal = truth.soi_power * np.real(np.vdot(truth.a_0, scipy.linalg.solve(truth.r_in, truth.a_0, assume_a='pos')))
    return SinrReport(utils.power_to_db(sinr), utils.power_to_db(optimal), scenario, seed)


def scattering_sinr(w, r_s, r_in, scenario='', seed=None) -> SinrReport:
    """w^H R_s w / w^H R_in w, with the largest generalized eigenvalue as the optimum."""
    w = _vector(w)
    sinr = _quadratic(w, r_s) / _quadratic(w, r_in)
    optimal = scipy.linalg.eigh(r_s, r_in, eigvals_only=True)[-1]
    return SinrReport(utils.power_to_db(sinr), utils.power_to_db(optimal), scenario, seed)


def scattering_optimal(r_s, r_in) -> BeamformerWeights:
    """Principal generalized eigenvector of (R_s, R_in), i.e. of R_in^-1 R_s."""
    _, vectors = scipy.linalg.eigh(r_s, r_in)
    return BeamformerWeights(w=vectors[:, -1], normalization='raw', method='optimal')


def beampattern(w, grid: AngularGrid, cfg: ArrayConfig) -> Beampattern:
    """20 log10 |w^H a(phi)| over the grid, 0 dB at the maximum."""
    response = manifold(cfg, grid.angles).conj().T @ _vector(w)
    return Beampattern(grid=grid, gain_db=utils.amplitude_to_db(response))


def null_depth(w, angles, cfg: ArrayConfig, grid: Optional[AngularGrid] = None):
    """Gain in dB at the given angles (radians) relative to the mainlobe peak."""
    w = _vector(w)
    grid = grid or make_grid(3600)
    peak = np.max(np.abs(manifold(cfg, grid.angles).conj().T @ w))
    response = np.abs(manifold(cfg, np.atleast_1d(angles)).conj().T @ w)
    return utils.amplitude_to_db(response / peak, normalise=False)


def beampattern_frame(pattern: Beampattern):
    return utils.frame_from_columns([('angle_deg', pattern.grid.degrees), ('gain_db', pattern.gain_db)])
