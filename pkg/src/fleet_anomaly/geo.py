"""Great-circle geometry on a spherical Earth."""
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CoordinateError, InsufficientVesselsError

#: Mean Earth radius, km.
EARTH_RADIUS_KM = 6371.0
#: Kilometres per degree of arc along a great circle.
KM_PER_DEGREE = EARTH_RADIUS_KM * np.pi / 180.0


class GeoPoint(NamedTuple):
    lat: float
    lon: float


class DistanceSample(NamedTuple):
    """Strict upper triangle of the pairwise distance matrix at one hour."""

    time_index: int
    distances: np.ndarray


def wrap_longitude(lon):
    """Wrap longitudes into [-180, 180]; in-range values are returned untouched."""
    lon = np.asarray(lon, dtype=float)
    wrapped = (lon + 180.0) % 360.0 - 180.0
    wrapped = np.where((wrapped == -180.0) & (lon > 0), 180.0, wrapped)
    return np.where(np.abs(lon) <= 180.0, lon, wrapped)


def check_coordinates(lat, lon):
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if not (np.all(np.isfinite(lat)) and np.all(np.isfinite(lon))):
        raise CoordinateError("non-finite coordinate")
    if np.any(np.abs(lat) > 90.0):
        raise CoordinateError(f"latitude outside [-90, 90]: {lat}")
    if np.any(np.abs(lon) > 180.0):
        raise CoordinateError(f"longitude outside [-180, 180]: {lon}")
    return lat, lon


def _haversine(lat1, lon1, lat2, lon2):
    # inputs in radians; argument clipped so rounding can't push arcsin past 1
    h = (np.sin(0.5 * (lat2 - lat1)) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin(0.5 * (lon2 - lon1)) ** 2)
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def haversine_km(a, b) -> float:
    """Great-circle distance in km between two (lat, lon) points in degrees.

    The haversine terms are symmetric in their arguments, so
    ``haversine_km(a, b) == haversine_km(b, a)`` holds bit for bit.
    """
    lat1, lon1 = check_coordinates(a[0], a[1])
    lat2, lon2 = check_coordinates(b[0], b[1])
    return float(_haversine(np.radians(lat1), np.radians(lon1),
                            np.radians(lat2), np.radians(lon2)))


def haversine_array(lat1, lon1, lat2, lon2):
    """Vectorised haversine distance (km) with numpy broadcasting; no validation."""
    return _haversine(np.radians(lat1), np.radians(lon1),
                      np.radians(lat2), np.radians(lon2))


def pairwise_distances(positions: Sequence, time_index: int = 0) -> DistanceSample:
    """All N(N-1)/2 great-circle distances between ``positions``.

    Parameters
    ----------
    positions : sequence of (lat, lon) or array of shape (N, 2)
        Points in degrees.
    time_index : int
        Hour index stored on the result.

    Returns
    -------
    DistanceSample
        Distances ordered row-major over the strict upper triangle, i.e.
        (0,1), (0,2), ..., (0,N-1), (1,2), ...
    """
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = pts.shape[0]
    if n < 2:
        raise InsufficientVesselsError(f"need at least 2 positions, got {n}")
    lat, lon = check_coordinates(pts[:, 0], pts[:, 1])
    rows, cols = np.triu_indices(n, k=1)
    phi = np.radians(lat)
    lam = np.radians(lon)
    d = _haversine(phi[rows], lam[rows], phi[cols], lam[cols])
    return DistanceSample(int(time_index), d)


def offset_km_to_degrees(lat, east_km, north_km):
    """Convert a local (east, north) offset in km to (dlat, dlon) degrees.

    Local equirectangular approximation; fine at regional scale away from the
    poles.
    """
    dlat = np.asarray(north_km) / KM_PER_DEGREE
    dlon = np.asarray(east_km) / (KM_PER_DEGREE * np.cos(np.radians(lat)))
    return dlat, dlon


def local_offset_km(lat0, lon0, lat, lon):
    """(east, north) km of (lat, lon) relative to (lat0, lon0), equirectangular."""
    north = (np.asarray(lat) - lat0) * KM_PER_DEGREE
    dlon = (np.asarray(lon) - lon0 + 180.0) % 360.0 - 180.0
    east = dlon * KM_PER_DEGREE * np.cos(np.radians(0.5 * (np.asarray(lat) + lat0)))
    return east, north
