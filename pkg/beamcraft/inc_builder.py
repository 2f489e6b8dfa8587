"""
Interference-plus-noise covariance (INC) reconstruction from a spatial
spectrum restricted to the interferer sectors, SOI covariance and
steering-vector estimation, and the SINR-loss analysis helpers.
"""
from dataclasses import dataclass, field
from typing import Optional
import numpy as np
import scipy.linalg
from numpy.typing import NDArray
from .array_geometry import ArrayConfig, manifold, steering_vector
from .doa_tracker import SectorSet, full_sector_set, soi_indices
from .spectrum import CovarianceMatrix, SpectrumEstimate, capon_spectrum
from .errors import ConfigurationError
from .debug import Debug as debug
from . import utils


@dataclass
class IncModel:
    """R = sum_j w_j a_j a_j^H + noise_load * I, kept as its sector terms.

    angles holds the physical sample angle of every term, in radians.

    Products with R are formed implicitly in O(Q_L * M); the M x M matrix is
    only built when explicit() is called.
    """
    angles: NDArray[np.float64]
    weights: NDArray[np.float64]
    steering: NDArray[np.complex128]
    noise_load: float
    _explicit: Optional[NDArray[np.complex128]] = field(default=None, repr=False)

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ConfigurationError('INC sector weights must be strictly positive')
        if self.noise_load < 0:
            raise ConfigurationError(f'Noise load must be non-negative, got {self.noise_load}')

    @property
    def m(self):
        return self.steering.shape[0]

    @property
    def q_l(self):
        return len(self.angles)

    def matvec(self, v, counter=None):
        """R @ v without forming R."""
        if counter is not None:
            counter.add('matvec', 2 * self.q_l * self.m)
        return self.steering @ (self.weights * (self.steering.conj().T @ v)) + self.noise_load * v

    def explicit(self):
        if self._explicit is None:
            r = (self.steering * self.weights) @ self.steering.conj().T
            self._explicit = utils.hermitian(r + self.noise_load * np.eye(self.m))
        return self._explicit

    def eigenvalues(self):
        """Eigenvalues of the materialized matrix, largest first."""
        return scipy.linalg.eigvalsh(self.explicit())[::-1]

    def scaled(self, c):
        return IncModel(self.angles, c * self.weights, self.steering, c * self.noise_load)


@dataclass(frozen=True)
class SoiEstimate:
    r_s: NDArray[np.complex128]
    a_hat: NDArray[np.complex128]
    s_points: int


def _sector_model(spec: SpectrumEstimate, indices, cfg: ArrayConfig, noise, angles=None):
    """Terms at the grid indices, or at off-grid angles evaluated from the spectrum."""
    if angles is None:
        indices = np.asarray(indices, dtype=np.int64)
        angles, power = spec.grid.angles[indices], spec.values[indices]
    else:
        angles = np.asarray(angles, dtype=float)
        power = spec.evaluate(angles) if len(angles) else np.array([])
    steering = manifold(cfg, angles) if len(angles) else np.zeros((cfg.m, 0), dtype=complex)
    return IncModel(angles=angles, weights=power * spec.grid.delta, steering=steering, noise_load=float(noise))


def build_inc(spec: SpectrumEstimate, sectors: SectorSet, cfg: ArrayConfig, noise) -> IncModel:
    """INC from the maximum-entropy spectrum summed over the interferer sectors.

    noise is added as noise_load * I; with noise=0 and a full sector set this
    is the full-sector reconstruction used in the analysis. Anchored sectors
    are sampled at their lattice angles instead of the grid.
    """
    if spec.estimator != 'max-entropy':
        debug.log_warning(f'Building the INC from a <{spec.estimator}> spectrum')
    if len(sectors.union_indices) and sectors.union_indices.max() >= spec.grid.q:
        raise ConfigurationError('Sector indices do not belong to the spectrum grid')
    if noise < 0:
        raise ConfigurationError(f'Noise must be non-negative, got {noise}')
    angles = sectors.sample_angles(spec.grid) if sectors.anchored else None
    inc = _sector_model(spec, sectors.union_indices, cfg, noise, angles)
    debug.log_debug(f'INC built from <{inc.q_l}> sample points, noise load <{noise:.4g}>')
    return inc


def build_capon_inc_baseline(r: CovarianceMatrix, grid, soi_sector, cfg: ArrayConfig) -> IncModel:
    """Capon-spectrum INC summed over every grid point outside the SOI sector."""
    spec = capon_spectrum(r, grid, cfg)
    return _sector_model(spec, full_sector_set(grid, soi_sector).union_indices, cfg, 0.0)


def estimate_soi(spec: SpectrumEstimate, soi_sector, cfg: ArrayConfig, presumed_doa) -> SoiEstimate:
    """SOI covariance over the SOI sector and the steering estimate a_hat = R_s a_bar.

    a_bar is the presumed steering vector on the ideal manifold. a_hat is
    scaled to ||a_hat||^2 = M and rotated so that a_hat^H a_bar is real positive.
    """
    indices = soi_indices(spec.grid, soi_sector)
    if len(indices) == 0:
        raise ConfigurationError(f'SOI sector {soi_sector} holds no grid points')
    steering = manifold(cfg, spec.grid.angles[indices])
    r_s = utils.hermitian((steering * (spec.values[indices] * spec.grid.delta)) @ steering.conj().T)
    a_bar = steering_vector(cfg.ideal, presumed_doa).values
    a_hat = r_s @ a_bar
    norm = np.linalg.norm(a_hat)
    if norm == 0 or not np.isfinite(norm):
        raise ConfigurationError('SOI spectrum vanishes over the SOI sector')
    a_hat = a_hat * np.sqrt(cfg.m) / norm
    alignment = np.vdot(a_hat, a_bar)
    a_hat = a_hat * alignment / abs(alignment)
    return SoiEstimate(r_s=r_s, a_hat=a_hat, s_points=len(indices))


#######################
# SINR-loss analysis
#######################
def predicted_sinr_loss(phi, eps_res):
    """SINR ratio 1 - eps_res^2 phi^2 / 12 for a small electrical mismatch phi."""
    loss = 1.0 - (eps_res ** 2) * (phi ** 2) / 12.0
    if not 0 < loss <= 1:
        raise ConfigurationError(f'Mismatch {phi} is outside the small-angle regime')
    return loss


def residual_noise_ratio(s_points, q, snr):
    """eps_res = S / (Q * SNR), SNR linear."""
    return s_points / (q * snr)


def sine_ratio(m, phi):
    """|a_bar^H a|^2 = sin^2(M phi/2) / sin^2(phi/2) for an electrical mismatch phi."""
    phi = np.asarray(phi, dtype=float)
    half = np.sin(phi / 2)
    safe = np.where(half == 0, 1.0, half)
    return np.where(half == 0, float(m) ** 2, np.sin(m * phi / 2) ** 2 / safe ** 2)


def eigen_frame(inc: IncModel):
    eigenvalues = inc.eigenvalues()
    return utils.frame_from_columns([('index', np.arange(len(eigenvalues))), ('eigenvalue', eigenvalues)])
