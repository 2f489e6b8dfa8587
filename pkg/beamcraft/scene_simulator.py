"""
Snapshot generation for beamforming scenarios: a signal of interest, L
interferers and unit-power white noise, with array perturbations, DoA jitter,
interferer motion and incoherent local scattering of the SOI.
"""
from dataclasses import dataclass, field, replace
from typing import Optional
import numpy as np
from numpy.typing import NDArray
from .array_geometry import ArrayConfig, manifold
from .errors import ConfigurationError
from .debug import Debug as debug
from . import utils

MISMATCHES = ('none', 'look', 'geometry', 'gainphase', 'scattering')
ARRAY_KINDS = ('none', 'geometry', 'gainphase')

GEOMETRY_ERROR_WAVELENGTHS = 0.05
GAIN_ERROR_STD = 0.05
PHASE_ERROR_STD = 0.025 * np.pi
LOOK_ERROR_DEG = 4.0


@dataclass(frozen=True)
class SourceSpec:
    """A narrowband point source.

    Args:
        doa_deg: Nominal physical DoA in degrees.
        power_db: Power relative to the unit noise floor.
        doa_jitter_deg: Half-width of the uniform DoA perturbation.
        motion: (linear, quadratic) DoA drift in degrees per snapshot.
    """
    doa_deg: float
    power_db: float = 0.0
    doa_jitter_deg: float = 0.0
    motion: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not np.isfinite(self.doa_deg) or abs(self.doa_deg) > 90:
            raise ConfigurationError(f'DoA must lie in [-90, 90] degrees, got {self.doa_deg}')
        if not np.isfinite(self.power_db):
            raise ConfigurationError(f'Source power must be finite, got {self.power_db}')
        if self.doa_jitter_deg < 0:
            raise ConfigurationError(f'DoA jitter must be non-negative, got {self.doa_jitter_deg}')
        motion = tuple(float(c) for c in self.motion)
        if len(motion) != 2:
            raise ConfigurationError(f'Motion takes (linear, quadratic) terms, got {self.motion}')
        object.__setattr__(self, 'motion', motion)

    @property
    def power(self):
        return utils.db_to_power(self.power_db)

    def trajectory(self, snapshots, offset=0.0) -> NDArray[np.float64]:
        """Realized DoA in degrees at every snapshot."""
        k = np.arange(snapshots)
        doas = self.doa_deg + self.motion[0] * k + self.motion[1] * k ** 2 + offset
        return np.clip(doas, -90.0, 90.0)

    @classmethod
    def from_dict(cls, data):
        return cls(doa_deg=float(data['doa_deg']), power_db=float(data.get('power_db', 0.0)),
                   doa_jitter_deg=float(data.get('doa_jitter_deg', 0.0)),
                   motion=tuple(data.get('motion', (0.0, 0.0))))


@dataclass(frozen=True)
class ScatteringSpec:
    paths: int = 4
    spread_deg: float = 4.0

    def __post_init__(self):
        if self.paths < 0 or self.spread_deg < 0:
            raise ConfigurationError(f'Invalid scattering spec: {self}')


def _default_interferers():
    return (SourceSpec(20.0, 30.0), SourceSpec(-40.0, 30.0))


@dataclass(frozen=True)
class Scenario:
    """Everything needed to generate one block of snapshots.

    The SOI may be None (interferers and noise only). The beamformer only knows
    presumed_soi_deg and the SOI sector half-width, never the realized DoAs.
    """
    soi: Optional[SourceSpec] = field(default_factory=lambda: SourceSpec(10.0, 10.0))
    interferers: tuple = field(default_factory=_default_interferers)
    snapshots: int = 50
    array: ArrayConfig = field(default_factory=ArrayConfig)
    array_errors: str = 'none'
    scattering: Optional[ScatteringSpec] = None
    jitter_per_snapshot: bool = False
    seed: int = 0
    presumed_soi_deg: Optional[float] = None
    soi_sector_half_width_deg: float = 4.0
    name: str = 'default'

    def __post_init__(self):
        if int(self.snapshots) != self.snapshots or self.snapshots < 1:
            raise ConfigurationError(f'Need at least one snapshot, got {self.snapshots}')
        if self.array_errors not in ARRAY_KINDS:
            raise ConfigurationError(f'Unknown array error model: {self.array_errors}')
        object.__setattr__(self, 'interferers', tuple(self.interferers))
        if self.presumed_soi_deg is None:
            presumed = self.soi.doa_deg if self.soi is not None else 0.0
            object.__setattr__(self, 'presumed_soi_deg', float(presumed))
        if abs(self.presumed_soi_deg) > 90 or self.soi_sector_half_width_deg <= 0:
            raise ConfigurationError('Invalid presumed SOI direction or sector width')

    @property
    def soi_sector(self):
        """(center, half-width) of the SOI sector in degrees."""
        return (self.presumed_soi_deg, self.soi_sector_half_width_deg)

    def realize_array(self) -> ArrayConfig:
        if self.array_errors == 'none':
            return self.array
        return perturb_array(self.array_errors, self.seed, m=self.array.m,
                             spacing=self.array.spacing_wavelengths)

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    @classmethod
    def from_dict(cls, data):
        """Build a scenario from the JSON schema; absent fields keep defaults."""
        try:
            kwargs = {}
            if 'array' in data:
                array = data['array']
                kwargs['array'] = ArrayConfig(m=int(array.get('m', 10)),
                                              spacing_wavelengths=float(array.get('spacing_wavelengths', 0.5)))
                kwargs['array_errors'] = array.get('mismatch', 'none')
            if 'soi' in data:
                kwargs['soi'] = None if data['soi'] is None else SourceSpec.from_dict(data['soi'])
            if 'interferers' in data:
                kwargs['interferers'] = tuple(SourceSpec.from_dict(i) for i in data['interferers'])
            if data.get('scattering') is not None:
                kwargs['scattering'] = ScatteringSpec(**data['scattering'])
            for key in ('snapshots', 'seed'):
                if key in data:
                    kwargs[key] = int(data[key])
            for key in ('presumed_soi_deg', 'soi_sector_half_width_deg'):
                if key in data:
                    kwargs[key] = float(data[key])
            if 'jitter_per_snapshot' in data:
                kwargs['jitter_per_snapshot'] = bool(data['jitter_per_snapshot'])
            if 'name' in data:
                kwargs['name'] = str(data['name'])
        except (KeyError, TypeError, AttributeError) as e:
            raise ConfigurationError(f'Malformed scenario: {e}') from e
        return cls(**kwargs)


@dataclass(frozen=True)
class Truth:
    """Realized ground truth of one simulated block.

    Steering vectors are those of the realized (possibly perturbed) array at
    the first snapshot. r_in and r_s are time averages over the block.
    """
    array: ArrayConfig
    soi_doa_deg: NDArray[np.float64]
    interferer_doas_deg: NDArray[np.float64]
    a_0: NDArray[np.complex128]
    a_l: NDArray[np.complex128]
    soi_power: float
    interferer_powers: NDArray[np.float64]
    r_in: NDArray[np.complex128]
    r_s: NDArray[np.complex128]
    noise_power: float = 1.0
    scattering_doas_deg: Optional[NDArray[np.float64]] = None

    @property
    def scattered(self):
        return self.scattering_doas_deg is not None


@dataclass(frozen=True)
class SnapshotMatrix:
    data: NDArray[np.complex128]
    truth: Optional[Truth] = None
    scenario: Optional[Scenario] = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise ConfigurationError(f'Snapshot data must be M x K, got shape {data.shape}')
        object.__setattr__(self, 'data', data)

    @property
    def m(self):
        return self.data.shape[0]

    @property
    def k(self):
        return self.data.shape[1]


def perturb_array(kind, seed, m=10, spacing=0.5) -> ArrayConfig:
    """Draw a perturbed array.

    Args:
        kind: 'geometry' for position offsets uniform on [-0.05, 0.05]
            wavelengths, 'gainphase' for gains ~ N(1, 0.05^2) and phases
            ~ N(0, (0.025 pi)^2), 'none' for the ideal array.
        seed: Scenario seed; the draw uses its perturbation stream.
    """
    rng = utils.rng_stream(seed, 'perturbation')
    if kind == 'none':
        return ArrayConfig(m=m, spacing_wavelengths=spacing)
    if kind == 'geometry':
        offsets = rng.uniform(-GEOMETRY_ERROR_WAVELENGTHS, GEOMETRY_ERROR_WAVELENGTHS, m)
        return ArrayConfig(m=m, spacing_wavelengths=spacing, position_offsets=offsets)
    if kind == 'gainphase':
        gains = rng.normal(1.0, GAIN_ERROR_STD, m)
        phases = rng.normal(0.0, PHASE_ERROR_STD, m)
        return ArrayConfig(m=m, spacing_wavelengths=spacing, gains=gains, phases=phases)
    raise ConfigurationError(f'Unknown perturbation kind: {kind}')


def apply_mismatch(scn: Scenario, kind: str) -> Scenario:
    """Scenario variant for one of the mismatch families."""
    if kind not in MISMATCHES:
        raise ConfigurationError(f'Unknown mismatch: {kind}. Choose from {MISMATCHES}')
    if kind == 'none':
        return scn
    if kind == 'look':
        jitter = lambda s: replace(s, doa_jitter_deg=LOOK_ERROR_DEG)
        return replace(scn, soi=None if scn.soi is None else jitter(scn.soi),
                       interferers=tuple(jitter(i) for i in scn.interferers))
    if kind == 'scattering':
        return replace(scn, scattering=ScatteringSpec())
    return replace(scn, array_errors=kind)


def _complex_normal(rng, power, size):
    return np.sqrt(power / 2) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def _realize_doas(scn, rng):
    sources = ([scn.soi] if scn.soi is not None else []) + list(scn.interferers)
    tracks = []
    for source in sources:
        size = scn.snapshots if scn.jitter_per_snapshot else 1
        offset = rng.uniform(-1.0, 1.0, size) * source.doa_jitter_deg
        tracks.append(source.trajectory(scn.snapshots, offset))
    if scn.soi is None:
        tracks.insert(0, np.full(scn.snapshots, scn.presumed_soi_deg))
    return tracks[0], np.array(tracks[1:]).reshape(len(scn.interferers), scn.snapshots)


def _interference(scn, array, doas, rng):
    """Interferer contribution (M x K), first-snapshot steering and averaged covariance."""
    m, k = array.m, scn.snapshots
    data = np.zeros((m, k), dtype=complex)
    r_in = np.eye(m, dtype=complex)
    a_l = np.zeros((len(scn.interferers), m), dtype=complex)
    for l, source in enumerate(scn.interferers):
        steering = manifold(array, np.deg2rad(doas[l]))
        data += steering * _complex_normal(rng, source.power, k)
        r_in += source.power * (steering @ steering.conj().T) / k
        a_l[l] = steering[:, 0]
    return data, a_l, utils.hermitian(r_in)


def simulate(scn: Scenario) -> SnapshotMatrix:
    """Generate x(k) = s_0(k) a_0 + sum_l s_l(k) a_l + n(k), k = 1..K.

    Deterministic given scn.seed. Dispatches to simulate_scattered when the
    scenario carries a scattering spec.
    """
    if scn.scattering is not None:
        return simulate_scattered(scn)
    array = scn.realize_array()
    m, k = array.m, scn.snapshots
    soi_doas, interferer_doas = _realize_doas(scn, utils.rng_stream(scn.seed, 'jitter'))

    waveforms = utils.rng_stream(scn.seed, 'waveforms')
    data, a_l, r_in = _interference(scn, array, interferer_doas, waveforms)

    soi_power = scn.soi.power if scn.soi is not None else 0.0
    soi_steering = manifold(array, np.deg2rad(soi_doas))
    if scn.soi is not None:
        data += soi_steering * _complex_normal(waveforms, soi_power, k)
    r_s = soi_power * (soi_steering @ soi_steering.conj().T) / k

    data += _complex_normal(utils.rng_stream(scn.seed, 'noise'), 1.0, (m, k))
    truth = Truth(array=array, soi_doa_deg=soi_doas, interferer_doas_deg=interferer_doas,
                  a_0=soi_steering[:, 0], a_l=a_l, soi_power=soi_power,
                  interferer_powers=np.array([i.power for i in scn.interferers]),
                  r_in=r_in, r_s=utils.hermitian(r_s))
    debug.log_debug(f'Simulated <{m}x{k}> block, scenario <{scn.name}>, seed <{scn.seed}>')
    return SnapshotMatrix(data=data, truth=truth, scenario=scn)


def simulate_scattered(scn: Scenario) -> SnapshotMatrix:
    """Snapshots under incoherent local scattering of the SOI.

    P+1 paths arrive from angles drawn once per run from N(theta_0, spread^2)
    and each carries an independent waveform of power sigma_0^2/(P+1) redrawn
    every snapshot. The SOI covariance r_s is then of rank up to P+1.
    """
    if scn.scattering is None:
        raise ConfigurationError('simulate_scattered needs a scattering spec')
    if scn.soi is None:
        raise ConfigurationError('Scattering needs a signal of interest')
    array = scn.realize_array()
    m, k = array.m, scn.snapshots
    soi_doas, interferer_doas = _realize_doas(scn, utils.rng_stream(scn.seed, 'jitter'))

    waveforms = utils.rng_stream(scn.seed, 'waveforms')
    data, a_l, r_in = _interference(scn, array, interferer_doas, waveforms)

    spec = scn.scattering
    scatter = utils.rng_stream(scn.seed, 'scattering')
    n_paths = spec.paths + 1
    path_doas = np.clip(scatter.normal(soi_doas[0], spec.spread_deg, n_paths), -90.0, 90.0)
    path_steering = manifold(array, np.deg2rad(path_doas))
    path_power = scn.soi.power / n_paths
    data += path_steering @ _complex_normal(scatter, path_power, (n_paths, k))
    r_s = path_power * (path_steering @ path_steering.conj().T)

    data += _complex_normal(utils.rng_stream(scn.seed, 'noise'), 1.0, (m, k))
    truth = Truth(array=array, soi_doa_deg=soi_doas, interferer_doas_deg=interferer_doas,
                  a_0=manifold(array, np.deg2rad(soi_doas[0]))[:, 0], a_l=a_l,
                  soi_power=scn.soi.power,
                  interferer_powers=np.array([i.power for i in scn.interferers]),
                  r_in=r_in, r_s=utils.hermitian(r_s), scattering_doas_deg=path_doas)
    debug.log_debug(f'Simulated scattered block, <{n_paths}> paths, seed <{scn.seed}>')
    return SnapshotMatrix(data=data, truth=truth, scenario=scn)
