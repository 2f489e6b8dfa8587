"""
Sample covariance, Capon and maximum-entropy spatial spectra, and the
closed-form single-interferer covariance used as an oracle.
"""
from dataclasses import dataclass, field
from typing import Optional
import numpy as np
import scipy.linalg
import scipy.optimize
from numpy.typing import NDArray
from .array_geometry import AngularGrid, ArrayConfig, manifold, steering_vector
from .errors import ConfigurationError, SingularCovarianceError
from .debug import Debug as debug
from . import utils

LOADING_FACTOR = 1e-8
PEAK_SCAN_STEP = np.deg2rad(0.05)


@dataclass(frozen=True)
class CovarianceMatrix:
    values: NDArray[np.complex128]
    kind: str = 'sample'

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ConfigurationError(f'Covariance must be square, got shape {values.shape}')
        object.__setattr__(self, 'values', values)

    @property
    def m(self):
        return self.values.shape[0]

    def scaled(self, c):
        return CovarianceMatrix(c * self.values, self.kind)


@dataclass(frozen=True)
class SpectrumEstimate:
    """Spectrum sampled on a grid.

    Estimates built from a covariance keep its Cholesky factor so that the
    same spectrum can be evaluated off the grid.
    """
    grid: AngularGrid
    values: NDArray[np.float64]
    estimator: str
    epsilon: Optional[float] = None
    factor: Optional[NDArray[np.complex128]] = field(default=None, repr=False)
    array: Optional[ArrayConfig] = None

    @property
    def db(self):
        return utils.power_to_db(self.values)

    def evaluate(self, angles) -> NDArray[np.float64]:
        """Spectrum at arbitrary physical angles (radians)."""
        if self.factor is None or self.array is None:
            raise ConfigurationError(f'The <{self.estimator}> estimate keeps no covariance factor')
        steering = manifold(self.array, np.atleast_1d(np.asarray(angles, dtype=float)))
        if self.estimator == 'max-entropy':
            return _me_power(self.factor, steering)[0]
        return _capon_power(self.factor, steering)

    def peak(self, low, high, step=PEAK_SCAN_STEP) -> float:
        """Angle of the spectrum maximum inside [low, high].

        A dense scan brackets the maximum, a bounded scalar search on -log P
        then places it.
        """
        if not high >= low:
            raise ConfigurationError(f'Empty peak search interval [{low}, {high}]')
        n = max(8, int(np.ceil((high - low) / step)))
        scan = np.linspace(low, high, n + 1)
        values = self.evaluate(scan)
        best = int(np.argmax(values))
        bounds = (scan[max(best - 1, 0)], scan[min(best + 1, n)])
        if bounds[1] <= bounds[0]:
            return float(scan[best])
        result = scipy.optimize.minimize_scalar(lambda t: -np.log(self.evaluate(t)[0]), bounds=bounds,
                                                method='bounded', options={'xatol': 1e-10})
        return float(result.x) if -result.fun > np.log(values[best]) else float(scan[best])


def sample_covariance(snap) -> CovarianceMatrix:
    """R = (1/K) sum_k x(k) x(k)^H, symmetrized."""
    data = snap.data
    if data.shape[1] < 1:
        raise ConfigurationError('Sample covariance needs at least one snapshot')
    r = data @ data.conj().T / data.shape[1]
    return CovarianceMatrix(utils.hermitian(r), 'sample')


def loaded(values):
    """Diagonal loading guard: tr/M * 1e-8 is added when R is near singular."""
    m = values.shape[0]
    level = LOADING_FACTOR * np.real(np.trace(values)) / m
    if scipy.linalg.eigvalsh(values)[0] < level:
        debug.log_debug(f'Diagonal loading <{level:.3e}> applied')
        return values + level * np.eye(m)
    return values


def cholesky_factor(values):
    """Lower Cholesky factor of the loaded covariance."""
    values = loaded(utils.hermitian(np.asarray(values, dtype=complex)))
    try:
        return scipy.linalg.cholesky(values, lower=True)
    except np.linalg.LinAlgError as e:
        raise SingularCovarianceError('Covariance is not positive definite after loading',
                                      condition=np.linalg.cond(values)) from e


def _capon_power(lower, steering):
    whitened = scipy.linalg.solve_triangular(lower, steering, lower=True)
    return 1.0 / np.sum(np.abs(whitened) ** 2, axis=0)


def _me_power(lower, steering):
    """1/(eps |a^H R^-1 u_1|^2) with eps = 1/(u_1^H R^-1 u_1), and eps."""
    u1 = np.zeros(lower.shape[0], dtype=complex)
    u1[0] = 1.0
    b = scipy.linalg.cho_solve((lower, True), u1)
    if abs(b[0].imag) > 1e-10 * abs(b[0]):
        raise SingularCovarianceError('u_1^H R^-1 u_1 is not real', condition=np.linalg.cond(lower) ** 2)
    epsilon = 1.0 / b[0].real
    return 1.0 / (epsilon * np.abs(steering.conj().T @ b) ** 2), epsilon


def capon_spectrum(r: CovarianceMatrix, grid: AngularGrid, cfg: ArrayConfig) -> SpectrumEstimate:
    """P(phi) = 1/(a^H R^-1 a) on every grid angle from one factorization."""
    lower = cholesky_factor(r.values)
    power = _capon_power(lower, manifold(cfg, grid.angles))
    return SpectrumEstimate(grid=grid, values=power, estimator='capon', factor=lower, array=cfg)


def me_spectrum(r: CovarianceMatrix, grid: AngularGrid, cfg: ArrayConfig) -> SpectrumEstimate:
    """P(phi) = 1/(eps |a^H R^-1 u_1|^2) with eps = 1/(u_1^H R^-1 u_1)."""
    lower = cholesky_factor(r.values)
    power, epsilon = _me_power(lower, manifold(cfg, grid.angles))
    return SpectrumEstimate(grid=grid, values=power, estimator='max-entropy', epsilon=epsilon,
                            factor=lower, array=cfg)


#######################
# Closed forms
#######################
def theoretical_single_interferer(m, sigma_l2, theta_l, noise=1.0) -> CovarianceMatrix:
    """R = noise*I + sigma_l2 * a a^H for an ideal M-sensor array; theta_l in radians."""
    if sigma_l2 < 0:
        raise ConfigurationError(f'Interferer power must be non-negative, got {sigma_l2}')
    a = steering_vector(ArrayConfig(m=m), theta_l).values
    return CovarianceMatrix(noise * np.eye(m) + sigma_l2 * np.outer(a, a.conj()), 'theoretical')


def woodbury_inverse(m, sigma_l2, theta_l, noise=1.0):
    """(noise*I + sigma_l2 a a^H)^-1 = (1/noise)(I - a a^H/(rho + M)), rho = noise/sigma_l2."""
    identity = np.eye(m, dtype=complex)
    if sigma_l2 == 0:
        return identity / noise
    a = steering_vector(ArrayConfig(m=m), theta_l).values
    rho = noise / sigma_l2
    return (identity - np.outer(a, a.conj()) / (rho + m)) / noise


def capon_peak(m, sigma_l2, noise=1.0):
    """Capon power at the interferer: sigma_l2 + noise/M."""
    return sigma_l2 + noise / m

def me_peak(m, sigma_l2, noise=1.0):
    """Exact ME power at the interferer, (noise + M sigma_l2)^2 / eps."""
    rho = noise / sigma_l2
    epsilon = noise * (rho + m) / (rho + m - 1)
    return (noise + m * sigma_l2) ** 2 / epsilon

def me_peak_large_m(m, sigma_l2, noise=1.0):
    """Large-M approximation noise + (2M + M^2 INR) sigma_l2."""
    return noise + (2 * m + m ** 2 * sigma_l2 / noise) * sigma_l2


def noise_floor(r: CovarianceMatrix, l: int) -> float:
    """Mean of the M-L-1 smallest eigenvalues of r."""
    if l < 0 or l >= r.m - 1:
        raise ConfigurationError(f'Interferer count {l} leaves no noise subspace for M={r.m}')
    eigenvalues = scipy.linalg.eigvalsh(utils.hermitian(r.values))
    return float(np.mean(eigenvalues[:r.m - l - 1]))


def spectrum_frame(capon: SpectrumEstimate, me: SpectrumEstimate):
    return utils.frame_from_columns([
        ('angle_deg', capon.grid.degrees),
        ('p_capon', capon.values),
        ('p_me', me.values),
        ('p_capon_db', capon.db),
        ('p_me_db', me.db),
    ])
