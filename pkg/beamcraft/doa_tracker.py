"""
Interferer DoA tracking and sector construction.

A coarse estimate comes from the zero-padded spatial DFT of the snapshots.
Every snapshot is then refined by a correlation scan around it, the refined
angles are fitted with a degree-2 polynomial in the snapshot index, and the
spread of the fit sets the width of the interferer's angular sector.
"""
import functools
import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional
import numpy as np
import scipy.signal
from numpy.typing import NDArray
from sklearn.linear_model import LinearRegression
from sklearn.preprocessing import PolynomialFeatures
from .array_geometry import AngularGrid, ArrayConfig, angle_to_index, manifold
from .errors import ConfigurationError
from .debug import Debug as debug
from . import utils

SCAN_HALF_WIDTH = np.deg2rad(5.0)
SCAN_STEP = np.deg2rad(0.25)
PEAK_THRESHOLD_DB = 10.0
TAPER_SIDELOBE_DB = 30.0
MARGIN_DEG = 4.0


@dataclass(frozen=True)
class DoaTrack:
    """Refined per-snapshot DoAs of one interferer and their quadratic fit.

    Angles are physical, in radians. fit_coeffs are (c0, c1, c2) of
    c0 + c1*k + c2*k^2 with k = 1..K.
    """
    interferer_id: int
    per_snapshot_doa: NDArray[np.float64]
    fit_coeffs: NDArray[np.float64]
    theta_range: tuple
    theta_center: float

    @property
    def fitted(self):
        k = np.arange(1, len(self.per_snapshot_doa) + 1)
        c0, c1, c2 = self.fit_coeffs
        return c0 + c1 * k + c2 * k ** 2

    @property
    def spread(self):
        return self.theta_range[1] - self.theta_range[0]


@dataclass(frozen=True)
class Sector:
    interferer_id: int
    start: int
    width: int
    indices: NDArray[np.int64]
    # off-grid sample angles, radians; None samples the grid at indices
    angles: Optional[NDArray[np.float64]] = None

    def sample_angles(self, grid: AngularGrid):
        return grid.angles[self.indices] if self.angles is None else self.angles


@dataclass(frozen=True)
class SectorSet:
    """SOI sector in degrees, interferer sectors as grid-index ranges and their union."""
    soi_sector: tuple
    interferer_sectors: List[Sector]
    union_indices: NDArray[np.int64]
    crossing: bool = False
    dropped: tuple = field(default_factory=tuple)

    @property
    def size(self):
        return len(self.union_indices)

    @property
    def anchored(self):
        return any(s.angles is not None for s in self.interferer_sectors)

    def sample_angles(self, grid: AngularGrid) -> NDArray[np.float64]:
        """Sorted angles the INC is sampled at."""
        if not self.anchored:
            return grid.angles[self.union_indices]
        return np.unique(np.concatenate([s.sample_angles(grid) for s in self.interferer_sectors]))


def soi_indices(grid: AngularGrid, soi_sector) -> NDArray[np.int64]:
    """Grid indices inside the SOI sector (center, half-width) in degrees."""
    center, half_width = soi_sector
    return np.flatnonzero(np.abs(grid.degrees - center) <= half_width + 1e-9)


@functools.lru_cache(maxsize=None)
def chebyshev_taper(m, sidelobe_db=TAPER_SIDELOBE_DB):
    """Dolph-Chebyshev taper of length m, column-shaped."""
    with warnings.catch_warnings():
        # scipy flags attenuations under 45 dB as unsuited to spectral analysis
        warnings.filterwarnings('ignore', message='.*attenuation', category=UserWarning)
        taper = scipy.signal.get_window(('chebwin', sidelobe_db), m, fftbins=False)
    return taper[:, None]


def dft_spectrum(data, spacing=0.5, nfft=None):
    """Zero-padded spatial periodogram averaged over the given snapshots.

    A 30 dB Chebyshev taper keeps sidelobes of strong sources under the peak threshold.

    Returns:
        Physical angles (radians, increasing) and the power at each.
    """
    m = data.shape[0]
    nfft = nfft or max(1024, 2 ** int(np.ceil(np.log2(16 * m))))
    taper = chebyshev_taper(m)
    power = np.mean(np.abs(np.fft.fft(taper * data, n=nfft, axis=0)) ** 2, axis=1)
    freqs = np.fft.fftshift(np.fft.fftfreq(nfft))
    power = np.fft.fftshift(power)
    # e^{-j 2 pi d sin(phi) m} peaks at f = -d sin(phi)
    sines = -freqs / spacing
    valid = np.abs(sines) <= 1.0
    order = np.argsort(sines[valid])
    return np.arcsin(sines[valid][order]), power[valid][order]


def coarse_doas(snap, soi_sector, snapshots=1, n_sources=None, threshold_db=PEAK_THRESHOLD_DB,
                spacing=0.5) -> List[float]:
    """Coarse interferer DoAs from the spatial DFT of the first snapshots.

    Args:
        snap: SnapshotMatrix.
        soi_sector: (center, half-width) in degrees; peaks inside are dropped.
        snapshots: How many leading snapshots to average, 1 uses x(1) alone.
        n_sources: Keep at most this many peaks. Defaults to M-1.
        threshold_db: Peaks must clear the median bin power by this much.

    Returns:
        Physical angles in radians, strongest first.
    """
    if snap.k < 1:
        raise ConfigurationError('Coarse DoA estimation needs at least one snapshot')
    snapshots = max(1, min(int(snapshots or snap.k), snap.k))
    angles, power = dft_spectrum(snap.data[:, :snapshots], spacing=spacing)
    peaks, _ = scipy.signal.find_peaks(power, height=np.median(power) * utils.db_to_power(threshold_db))
    center, half_width = soi_sector
    peaks = [p for p in peaks if abs(np.rad2deg(angles[p]) - center) > half_width]
    peaks = sorted(peaks, key=lambda p: power[p], reverse=True)
    limit = snap.m - 1 if n_sources is None else min(n_sources, snap.m - 1)
    found = [float(angles[p]) for p in peaks[:limit]]
    debug.log_debug(f'Coarse DoAs: <{np.round(np.rad2deg(found), 2).tolist()}> deg')
    return found


def _fit_quadratic(per_snapshot):
    k = np.arange(1, len(per_snapshot) + 1, dtype=float)[:, None]
    degree = min(2, len(per_snapshot) - 1)
    if degree == 0:
        return np.array([per_snapshot[0], 0.0, 0.0])
    features = PolynomialFeatures(degree=degree, include_bias=False).fit_transform(k)
    model = LinearRegression().fit(features, per_snapshot)
    coeffs = np.zeros(3)
    coeffs[0] = model.intercept_
    coeffs[1:degree + 1] = model.coef_
    return coeffs


def _fitted_range(coeffs, k):
    c0, c1, c2 = coeffs
    candidates = [1.0, float(k)]
    if c2 != 0:
        vertex = -c1 / (2 * c2)
        if 1.0 <= vertex <= k:
            candidates.append(vertex)
    values = [c0 + c1 * x + c2 * x ** 2 for x in candidates]
    return min(values), max(values)


def refine_track(snap, coarse, c=SCAN_HALF_WIDTH, step=SCAN_STEP, interferer_id=0,
                 cfg: Optional[ArrayConfig] = None) -> DoaTrack:
    """Per-snapshot argmax of |x(k)^H a(phi)| over [coarse - c, coarse + c], then a quadratic fit.

    Ties go to the smallest scanned angle. The scan uses the ideal manifold of
    cfg, a half-wavelength array of snap.m sensors by default.
    """
    if c <= 0 or step <= 0:
        raise ConfigurationError(f'Scan half-width and step must be positive, got {c}, {step}')
    n = int(round(c / step))
    scan = coarse + step * np.arange(-n, n + 1)
    scan = scan[np.abs(scan) <= np.pi / 2]
    if len(scan) == 0:
        raise ConfigurationError(f'Scan window around {np.rad2deg(coarse):.2f} deg is empty')
    cfg = ArrayConfig(m=snap.m) if cfg is None else cfg.ideal
    if cfg.m != snap.m:
        raise ConfigurationError(f'Array has {cfg.m} sensors but the snapshots have {snap.m}')
    correlation = np.abs(snap.data.conj().T @ manifold(cfg, scan))
    per_snapshot = scan[np.argmax(correlation, axis=1)]
    coeffs = _fit_quadratic(per_snapshot)
    low, high = _fitted_range(coeffs, snap.k)
    return DoaTrack(interferer_id=interferer_id, per_snapshot_doa=per_snapshot, fit_coeffs=coeffs,
                    theta_range=(low, high), theta_center=(low + high) / 2)


def static_track(doa, k=1, interferer_id=0) -> DoaTrack:
    """Track for an interferer whose DoA is supplied rather than estimated."""
    return DoaTrack(interferer_id=interferer_id, per_snapshot_doa=np.full(k, float(doa)),
                    fit_coeffs=np.array([float(doa), 0.0, 0.0]), theta_range=(doa, doa),
                    theta_center=float(doa))


def build_sectors(tracks, grid: AngularGrid, soi_sector, margin_deg=MARGIN_DEG) -> SectorSet:
    """Grid-index sectors around each tracked interferer, minus the SOI sector.

    Width is max(floor(spread/delta), margin bins) centred on the index of
    theta_center, where margin bins span +/- margin_deg.
    """
    margin_bins = 2 * int(np.floor(np.deg2rad(margin_deg) / grid.delta)) + 1
    excluded = set(soi_indices(grid, soi_sector).tolist())
    sectors, dropped, crossing = [], [], False
    for track in tracks:
        width = max(int(np.floor(track.spread / grid.delta)), margin_bins, 1)
        start = angle_to_index(grid, track.theta_center) - width // 2
        indices = np.arange(start, start + width)
        indices = np.unique(np.clip(indices, 0, grid.q - 1))
        kept = np.array([i for i in indices if i not in excluded], dtype=np.int64)
        if len(kept) == 0:
            debug.log_warning(f'Interferer <{track.interferer_id}> lies inside the SOI sector, dropped')
            dropped.append(track.interferer_id)
            continue
        if len(kept) < len(indices):
            debug.log_warning(f'Interferer <{track.interferer_id}> sector crosses the SOI sector')
            crossing = True
        sectors.append(Sector(track.interferer_id, int(start), width, kept))
    union = np.unique(np.concatenate([s.indices for s in sectors])) if sectors else np.array([], dtype=np.int64)
    return SectorSet(soi_sector=tuple(soi_sector), interferer_sectors=sectors,
                     union_indices=union.astype(np.int64), crossing=crossing, dropped=tuple(dropped))


def anchor_sectors(sectors: SectorSet, spectrum, grid: AngularGrid) -> SectorSet:
    """Shift each interferer sector's samples onto a lattice through its spectrum peak.

    The lattice keeps the grid spacing and the angular span of the grid block,
    so a sector holds as many samples as before, one of them on the peak.
    Samples inside the SOI sector or within half a grid step of an earlier
    sector's samples are left out.
    """
    center, half_width = sectors.soi_sector
    anchored, dropped, taken = [], list(sectors.dropped), np.array([])
    for sector in sectors.interferer_sectors:
        kept = grid.angles[sector.indices]
        peak = spectrum.peak(kept.min(), kept.max())
        first = grid.angles[np.clip(sector.start, 0, grid.q - 1)]
        last = grid.angles[np.clip(sector.start + sector.width - 1, 0, grid.q - 1)]
        low, high = first - grid.delta / 2, last + grid.delta / 2
        steps = np.arange(np.ceil((low - peak) / grid.delta), np.floor((high - peak) / grid.delta) + 1)
        lattice = peak + grid.delta * steps
        lattice = lattice[(np.abs(lattice) < np.pi / 2) & (np.abs(np.rad2deg(lattice) - center) > half_width)]
        if len(taken):
            lattice = lattice[np.min(np.abs(lattice[:, None] - taken[None, :]), axis=1) >= grid.delta / 2]
        if len(lattice) == 0:
            debug.log_warning(f'Interferer <{sector.interferer_id}> has no samples left after anchoring, dropped')
            dropped.append(sector.interferer_id)
            continue
        debug.log_debug(f'Interferer <{sector.interferer_id}> sector anchored at <{np.rad2deg(peak):.4f}> deg')
        taken = np.concatenate([taken, lattice])
        anchored.append(replace(sector, angles=lattice))
    union = np.unique(np.concatenate([s.indices for s in anchored])) if anchored else np.array([], dtype=np.int64)
    return replace(sectors, interferer_sectors=anchored, union_indices=union.astype(np.int64),
                   dropped=tuple(dropped))


def full_sector_set(grid: AngularGrid, soi_sector) -> SectorSet:
    """Every grid point outside the SOI sector, as one sector."""
    excluded = soi_indices(grid, soi_sector)
    union = np.setdiff1d(np.arange(grid.q), excluded).astype(np.int64)
    sector = Sector(-1, 0, grid.q, union)
    return SectorSet(soi_sector=tuple(soi_sector), interferer_sectors=[sector], union_indices=union)


def track_frame(tracks):
    rows = []
    for track in tracks:
        for k, (doa, fit) in enumerate(zip(track.per_snapshot_doa, track.fitted), start=1):
            rows.append((k, track.interferer_id, np.rad2deg(doa), np.rad2deg(fit)))
    rows = np.array(rows, dtype=float).reshape(-1, 4)
    return utils.frame_from_columns([
        ('snapshot_index', rows[:, 0].astype(int)),
        ('interferer_id', rows[:, 1].astype(int)),
        ('doa_deg', rows[:, 2]),
        ('fitted_doa_deg', rows[:, 3]),
    ])
