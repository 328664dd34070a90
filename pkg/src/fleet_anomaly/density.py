"""Between-vessel distance distributions and their kernel density estimates."""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSampleError, InsufficientVesselsError
from .geo import DistanceSample, pairwise_distances

DEFAULT_GRID_KM = np.linspace(0.0, 1600.0, 512)
_SQRT_2PI = np.sqrt(2.0 * np.pi)
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass
class DensityEstimate:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    @property
    def argmax_km(self) -> float:
        return float(self.grid[np.argmax(self.density)])

    def mass(self) -> float:
        return float(_trapezoid(self.density, self.grid))


def distance_distribution(panel, t: int) -> DistanceSample:
    """Pairwise distances among the vessels present at hour ``t``."""
    positions = panel.present_positions(t)
    if positions.shape[0] < 2:
        raise InsufficientVesselsError(
            f"hour {t}: {positions.shape[0]} vessel(s) present, need 2")
    return pairwise_distances(positions, t)


class SampleStore:
    """Sorted distance sample per hour of a panel, ``None`` for invalid hours.

    Sorting happens once here so that every KS comparison downstream is a
    pair of binary searches.
    """

    def __init__(self, samples):
        self.samples = []
        for s in samples:
            if s is None:
                self.samples.append(None)
                continue
            values = s.distances if isinstance(s, DistanceSample) else s
            values = np.sort(np.asarray(values, dtype=float).ravel())
            self.samples.append(values if values.size else None)

    @classmethod
    def from_panel(cls, panel) -> "SampleStore":
        samples = []
        for t in range(panel.n_hours):
            try:
                samples.append(distance_distribution(panel, t))
            except InsufficientVesselsError:
                samples.append(None)
        return cls(samples)

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, t):
        return self.samples[t]

    @property
    def valid(self) -> np.ndarray:
        return np.array([s is not None for s in self.samples], dtype=bool)


def silverman_bandwidth(sample) -> float:
    """0.9 * min(std, IQR / 1.34) * n ** (-1/5).

    ``std`` uses ddof=1.  If the IQR is zero while the standard deviation is
    not, the standard deviation alone is used.
    """
    x = np.asarray(sample, dtype=float)
    sigma = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    iqr = float(q75 - q25) / 1.34
    spread = min(sigma, iqr) if iqr > 0 else sigma
    return 0.9 * spread * x.size ** (-0.2)


def kde_pdf(sample, grid=None, bandwidth=None, chunk=4096) -> DensityEstimate:
    """Gaussian kernel density estimate of a distance sample on a km grid.

    Parameters
    ----------
    sample : DistanceSample or array_like
        At least two values with non-zero spread.
    grid : array_like, optional
        Evaluation points in km, defaults to 512 points spanning 0-1600 km.
    bandwidth : float, optional
        Kernel standard deviation in km, defaults to
        :func:`silverman_bandwidth`.
    chunk : int
        Sample values processed per block; bounds memory for large fleets.
    """
    x = np.asarray(sample.distances if isinstance(sample, DistanceSample) else sample,
                   dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSampleError(f"need at least 2 values, got {x.size}")
    if np.ptp(x) == 0:
        raise DegenerateSampleError("zero-variance sample")
    grid = DEFAULT_GRID_KM if grid is None else np.asarray(grid, dtype=float)
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise DegenerateSampleError(f"bandwidth must be positive, got {h}")

    x = np.sort(x)
    density = np.zeros(grid.shape, dtype=float)
    for lo in range(0, x.size, chunk):
        z = (grid[:, None] - x[None, lo:lo + chunk]) / h
        density += np.exp(-0.5 * z * z).sum(axis=1)
    density /= x.size * h * _SQRT_2PI
    return DensityEstimate(grid, density, h)


def density_matrix(panel, grid=None, bandwidth=None):
    """Grid x hour matrix of KDE values; columns for hours with < 2 vessels are NaN."""
    grid = DEFAULT_GRID_KM if grid is None else np.asarray(grid, dtype=float)
    out = np.full((grid.size, panel.n_hours), np.nan)
    for t in range(panel.n_hours):
        try:
            est = kde_pdf(distance_distribution(panel, t), grid, bandwidth)
        except (InsufficientVesselsError, DegenerateSampleError):
            continue
        out[:, t] = est.density
    return grid, out
