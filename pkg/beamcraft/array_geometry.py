"""
Array manifold: nominal and perturbed steering vectors of a uniform linear
array, the physical angular grid and index mappings onto it.

Physical angles phi in [-pi/2, pi/2) are the public unit. The electrical angle
2*pi*(d/lambda)*sin(phi) only appears inside steering_vector.
"""
from dataclasses import dataclass, field, replace
import numpy as np
from numpy.typing import NDArray
from .errors import ConfigurationError


@dataclass(frozen=True)
class ArrayConfig:
    """Sensor count, spacing and per-element errors of a linear array.

    Args:
        m: Sensor count, at least 2.
        spacing_wavelengths: Element spacing d/lambda.
        position_offsets: Per-element position errors in wavelengths.
        gains: Per-element real amplitude factors.
        phases: Per-element phase offsets in radians.
    """
    m: int = 10
    spacing_wavelengths: float = 0.5
    position_offsets: tuple = field(default=None)
    gains: tuple = field(default=None)
    phases: tuple = field(default=None)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ConfigurationError(f'Array needs at least 2 sensors, got {self.m}')
        if not self.spacing_wavelengths > 0:
            raise ConfigurationError(f'Spacing must be positive, got {self.spacing_wavelengths}')
        for name, default in (('position_offsets', 0.0), ('gains', 1.0), ('phases', 0.0)):
            values = getattr(self, name)
            values = (default,) * self.m if values is None else tuple(float(v) for v in values)
            if len(values) != self.m:
                raise ConfigurationError(f'{name} must have {self.m} entries, got {len(values)}')
            object.__setattr__(self, name, values)

    @property
    def positions(self) -> NDArray[np.float64]:
        """Element positions in wavelengths."""
        return np.arange(self.m) * self.spacing_wavelengths + np.asarray(self.position_offsets)

    @property
    def response(self) -> NDArray[np.complex128]:
        """Per-element complex gain gain_m * exp(j*phase_m)."""
        return np.asarray(self.gains) * np.exp(1j * np.asarray(self.phases))

    @property
    def is_ideal(self):
        return (not any(self.position_offsets) and all(g == 1.0 for g in self.gains)
                and not any(self.phases))

    @property
    def ideal(self):
        """The same array with every perturbation removed."""
        return replace(self, position_offsets=None, gains=None, phases=None)


@dataclass(frozen=True)
class AngularGrid:
    q: int
    angles: NDArray[np.float64]
    delta: float

    @property
    def degrees(self):
        return np.rad2deg(self.angles)


@dataclass(frozen=True)
class SteeringVector:
    values: NDArray[np.complex128]
    angle: float


def _check_angle(phi):
    phi = np.asarray(phi, dtype=float)
    if np.any(np.abs(phi) > np.pi / 2 + 1e-12) or not np.all(np.isfinite(phi)):
        raise ConfigurationError(f'Physical angle outside [-90, 90] degrees: {np.rad2deg(phi)}')
    return phi


def manifold(cfg: ArrayConfig, phis) -> NDArray[np.complex128]:
    """Steering vectors for many angles at once, one per column (M x len(phis))."""
    phis = np.atleast_1d(_check_angle(phis))
    phase = -2j * np.pi * np.outer(cfg.positions, np.sin(phis))
    return cfg.response[:, None] * np.exp(phase)


def steering_vector(cfg: ArrayConfig, phi: float) -> SteeringVector:
    """Array response to a unit plane wave from physical angle phi (radians)."""
    return SteeringVector(values=manifold(cfg, phi)[:, 0], angle=float(phi))


def make_grid(q: int) -> AngularGrid:
    """Uniform grid of q physical angles over [-pi/2, pi/2)."""
    if int(q) != q or q < 2:
        raise ConfigurationError(f'Grid needs at least 2 points, got {q}')
    q = int(q)
    delta = np.pi / q
    return AngularGrid(q=q, angles=-np.pi / 2 + delta * np.arange(q), delta=delta)


def angle_to_index(grid: AngularGrid, phi: float) -> int:
    """Index of the grid point nearest to phi, ties rounding up."""
    phi = float(_check_angle(phi))
    position = (phi + np.pi / 2) / grid.delta
    # snap float noise so grid points map back onto themselves
    position = np.round(position, 9)
    return int(min(np.floor(position + 0.5), grid.q - 1))
