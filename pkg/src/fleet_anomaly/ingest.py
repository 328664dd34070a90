"""AIS ping parsing, cleaning and hourly panel assembly.

Input is comma-separated text with a header row containing at least
``mmsi,timestamp,lat,lon`` (ISO-8601 UTC timestamps); other columns are
ignored.  Cleaning rules, applied in this order so that each removed ping is
charged to exactly one rule:

1. ``window`` -- outside the bounding box or the time window;
2. ``shore`` -- inside a shore/land polygon;
3. ``speed`` -- implied speed from the last kept ping exceeds the cutoff;
4. ``mobility`` -- vessel travelled less than ``min_daily_travel_km`` on
   every observed UTC day (whole vessel removed).

Positions are interpolated linearly in (lat, lon) onto the hourly grid,
never across gaps longer than ``max_gap_hours`` and never beyond a vessel's
first or last ping.
"""
import csv
import io
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .anomaly import empirical_percentile
from .errors import (ConfigError, CorruptInputError, EmptyPanelError,
                     EmptySampleError, InputNotFoundError)
from .geo import GeoPoint, haversine_array, wrap_longitude
from .panel import ONE_HOUR, Panel, isoformat, to_datetime64

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("mmsi", "timestamp", "lat", "lon")
RULES = ("window", "shore", "speed", "mobility")
SECONDS_PER_DAY = 86400


@dataclass(frozen=True)
class VesselPing:
    vessel_id: str
    timestamp: np.datetime64
    position: GeoPoint
    speed_kmh: float | None = None

    @property
    def lat(self) -> float:
        return self.position.lat

    @property
    def lon(self) -> float:
        return self.position.lon


class RecordError(NamedTuple):
    line: int
    reason: str
    text: str


# -- parsing -------------------------------------------------------------------

def _open_stream(source):
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise InputNotFoundError(str(path))
        return path.read_text(encoding="utf-8").splitlines()
    return source


def parse_pings(source, max_bad_fraction: float = 0.5):
    """Parse ping records into ``(pings, errors)``.

    ``source`` is a file path or any iterable of text lines (an open file,
    ``io.StringIO``, a list of strings).
    Malformed rows become :class:`RecordError` entries.  Returned pings are
    sorted by (vessel_id, timestamp) with exact duplicates dropped; a second
    report from one vessel at the same instant but a different position is
    reported as an error and dropped.  ``speed_kmh`` is derived from the
    vessel's previous ping.

    Raises
    ------
    InputNotFoundError
        ``source`` names a missing file.
    CorruptInputError
        Missing header columns, or more than ``max_bad_fraction`` of the rows
        are malformed.
    """
    lines = _open_stream(source)
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        return [], []
    header = [h.strip().lower() for h in header]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise CorruptInputError(f"input lacks required columns {missing}")
    col = {c: header.index(c) for c in REQUIRED_COLUMNS}

    records, errors = [], []
    n_rows = 0
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        n_rows += 1
        text = ",".join(row)
        try:
            vid = row[col["mmsi"]].strip()
            if not vid:
                raise ValueError("empty vessel id")
            ts = to_datetime64(row[col["timestamp"]])
            lat = float(row[col["lat"]])
            lon = float(row[col["lon"]])
        except (IndexError, ValueError) as exc:
            errors.append(RecordError(lineno, f"malformed: {exc}", text))
            continue
        if not (np.isfinite(lat) and np.isfinite(lon)):
            errors.append(RecordError(lineno, "non-finite coordinate", text))
            continue
        if abs(lat) > 90.0:
            errors.append(RecordError(lineno, f"coordinate out of range: lat={lat}", text))
            continue
        records.append((vid, ts, lat, float(wrap_longitude(lon)), lineno, text))

    if n_rows and len(errors) > max_bad_fraction * n_rows:
        raise CorruptInputError(f"{len(errors)} of {n_rows} records malformed")

    records.sort(key=lambda r: (r[0], r[1], r[4]))
    pings = []
    for vid, ts, lat, lon, lineno, text in records:
        if pings and pings[-1].vessel_id == vid and pings[-1].timestamp == ts:
            prev = pings[-1]
            if (prev.lat, prev.lon) != (lat, lon):
                errors.append(RecordError(lineno, "conflicting position at same timestamp", text))
            continue
        pings.append(VesselPing(vid, ts, GeoPoint(lat, lon)))
    return with_speeds(pings), errors


def with_speeds(pings):
    """Recompute ``speed_kmh`` from each vessel's previous ping.

    ``pings`` must be grouped by vessel and time-ordered within a vessel.
    """
    out = []
    prev = None
    for p in pings:
        speed = None
        if prev is not None and prev.vessel_id == p.vessel_id:
            hours = (p.timestamp - prev.timestamp) / ONE_HOUR
            km = float(haversine_array(prev.lat, prev.lon, p.lat, p.lon))
            speed = km / hours if hours > 0 else float("inf")
        out.append(VesselPing(p.vessel_id, p.timestamp, p.position, speed))
        prev = p
    return out


def write_pings(pings, path=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["mmsi", "timestamp", "lat", "lon", "speed_kmh"])
    for p in pings:
        writer.writerow([p.vessel_id, isoformat(p.timestamp), repr(p.lat), repr(p.lon),
                         "" if p.speed_kmh is None else repr(p.speed_kmh)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def compute_speed_threshold(pings, percentile: float = 0.99) -> float:
    """Empirical ``percentile`` of all derived ping speeds (km/h).

    Uses linear interpolation between order statistics, see
    :func:`fleet_anomaly.anomaly.empirical_percentile`.
    """
    speeds = [p.speed_kmh for p in pings if p.speed_kmh is not None]
    if not speeds:
        raise EmptySampleError("no derivable speeds (every vessel has a single ping)")
    return empirical_percentile(speeds, percentile)


# -- cleaning --------------------------------------------------------------------

class ShorePolygons:
    """Land/port polygons loaded from GeoJSON, coordinates as (lon, lat)."""

    def __init__(self, geometry):
        from shapely import prepare
        self.geometry = geometry
        prepare(self.geometry)

    @classmethod
    def from_geojson(cls, source) -> "ShorePolygons":
        from shapely.geometry import shape
        from shapely.ops import unary_union

        if isinstance(source, (str, Path)) and not str(source).lstrip().startswith("{"):
            path = Path(source)
            if not path.exists():
                raise InputNotFoundError(str(path))
            data = json.loads(path.read_text(encoding="utf-8"))
        elif isinstance(source, dict):
            data = source
        else:
            data = json.loads(source)
        if data.get("type") == "FeatureCollection":
            geoms = [f["geometry"] for f in data["features"]]
        elif data.get("type") == "Feature":
            geoms = [data["geometry"]]
        else:
            geoms = [data]
        shapes = [shape(g) for g in geoms]
        for s in shapes:
            if s.geom_type not in ("Polygon", "MultiPolygon"):
                raise ConfigError(f"shore geometry must be polygonal, got {s.geom_type}")
        return cls(unary_union(shapes))

    def contains(self, lat, lon) -> np.ndarray:
        import shapely
        lat = np.atleast_1d(np.asarray(lat, dtype=float))
        lon = np.atleast_1d(np.asarray(lon, dtype=float))
        # boundary points count as on land
        return shapely.intersects_xy(self.geometry, lon, lat)


@dataclass
class CleanConfig:
    """Cleaning and panel-building parameters.

    ``speed_cutoff_kmh`` wins over ``speed_percentile`` when both are set;
    set the cutoff to ``None`` to derive it from the data instead.
    ``bbox`` is ``(lat_min, lat_max, lon_min, lon_max)``; ``time_window`` is
    a half-open ``[start, end)`` pair of ISO-8601 UTC instants.
    """

    speed_cutoff_kmh: float | None = 32.0
    speed_percentile: float = 0.99
    min_daily_travel_km: float = 1.0
    shore_polygons: str | None = None
    bbox: tuple | None = None
    time_window: tuple | None = None
    max_gap_hours: float = 24.0
    _shore: ShorePolygons | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.speed_cutoff_kmh is not None and not self.speed_cutoff_kmh > 0:
            raise ConfigError("speed cutoff must be positive")
        if not 0.0 < self.speed_percentile < 1.0:
            raise ConfigError("speed_percentile must lie in (0, 1)")
        if self.min_daily_travel_km < 0:
            raise ConfigError("min_daily_travel_km must be non-negative")
        if not self.max_gap_hours > 0:
            raise ConfigError("max_gap_hours must be positive")
        if self.bbox is not None:
            if len(self.bbox) != 4:
                raise ConfigError("bbox is (lat_min, lat_max, lon_min, lon_max)")
            la0, la1, lo0, lo1 = map(float, self.bbox)
            if not (-90 <= la0 < la1 <= 90 and -180 <= lo0 < lo1 <= 180):
                raise ConfigError(f"invalid bbox {self.bbox}")
        if self.time_window is not None:
            try:
                start, end = (to_datetime64(t) for t in self.time_window)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid time window: {exc}") from None
            if not start < end:
                raise ConfigError("time window start must precede end")

    @property
    def shore(self) -> ShorePolygons | None:
        if self._shore is None and self.shore_polygons is not None:
            self._shore = ShorePolygons.from_geojson(self.shore_polygons)
        return self._shore

    @classmethod
    def from_dict(cls, data: dict) -> "CleanConfig":
        known = {k: v for k, v in data.items() if not k.startswith("_")}
        try:
            return cls(**known)
        except TypeError as exc:
            raise ConfigError(f"invalid clean config: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "speed_cutoff_kmh": self.speed_cutoff_kmh,
            "speed_percentile": self.speed_percentile,
            "min_daily_travel_km": self.min_daily_travel_km,
            "shore_polygons": self.shore_polygons,
            "bbox": list(self.bbox) if self.bbox is not None else None,
            "time_window": list(self.time_window) if self.time_window is not None else None,
            "max_gap_hours": self.max_gap_hours,
        }


@dataclass
class CleanReport:
    input_count: int
    removed: dict
    survivors: int
    speed_cutoff_kmh: float
    vessels_in: int = 0
    vessels_out: int = 0
    warnings: list = field(default_factory=list)

    @property
    def reconciles(self) -> bool:
        return self.survivors + sum(self.removed.values()) == self.input_count

    def to_dict(self) -> dict:
        return {
            "schema": "fleet-anomaly/clean-report",
            "version": 1,
            "input_count": self.input_count,
            "removed": dict(self.removed),
            "survivors": self.survivors,
            "speed_cutoff_kmh": self.speed_cutoff_kmh,
            "vessels_in": self.vessels_in,
            "vessels_out": self.vessels_out,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _group(pings):
    groups = {}
    for p in pings:
        groups.setdefault(p.vessel_id, []).append(p)
    return groups


def _speed_filter(track, cutoff):
    kept = []
    for p in track:
        if kept:
            last = kept[-1]
            hours = (p.timestamp - last.timestamp) / ONE_HOUR
            km = float(haversine_array(last.lat, last.lon, p.lat, p.lon))
            if hours <= 0 or km / hours > cutoff:
                continue
        kept.append(p)
    return kept


def _daily_travel(track):
    """Km travelled per UTC day; a leg is charged to the day of its later ping."""
    days = Counter()
    prev = None
    for p in track:
        day = int(p.timestamp.astype("int64") // SECONDS_PER_DAY)
        days[day] += 0.0
        if prev is not None:
            days[day] += float(haversine_array(prev.lat, prev.lon, p.lat, p.lon))
        prev = p
    return days


def clean(pings, config: CleanConfig | None = None):
    """Apply the cleaning rules; returns ``(survivors, CleanReport)``.

    Survivors keep the (vessel_id, timestamp) order of the input and carry
    speeds recomputed against the previous surviving ping.  Cleaning is
    idempotent.
    """
    config = config or CleanConfig()
    config.validate()
    pings = sorted(pings, key=lambda p: (p.vessel_id, p.timestamp))
    removed = dict.fromkeys(RULES, 0)
    warnings_ = []

    keep = []
    window = None
    if config.time_window is not None:
        window = tuple(to_datetime64(t) for t in config.time_window)
    for p in pings:
        if config.bbox is not None:
            la0, la1, lo0, lo1 = config.bbox
            if not (la0 <= p.lat <= la1 and lo0 <= p.lon <= lo1):
                removed["window"] += 1
                continue
        if window is not None and not window[0] <= p.timestamp < window[1]:
            removed["window"] += 1
            continue
        keep.append(p)

    shore = config.shore
    if shore is None:
        warnings_.append("no shore polygons configured; land/port rule limited to bbox")
    elif keep:
        inside = shore.contains([p.lat for p in keep], [p.lon for p in keep])
        removed["shore"] = int(inside.sum())
        keep = [p for p, bad in zip(keep, inside) if not bad]

    cutoff = config.speed_cutoff_kmh
    if cutoff is None:
        cutoff = compute_speed_threshold(with_speeds(keep), config.speed_percentile)
    groups = _group(keep)
    survivors = []
    for vid, track in groups.items():
        kept = _speed_filter(track, cutoff)
        removed["speed"] += len(track) - len(kept)
        travel = _daily_travel(kept)
        if all(km < config.min_daily_travel_km for km in travel.values()):
            removed["mobility"] += len(kept)
            continue
        survivors.extend(kept)

    report = CleanReport(
        input_count=len(pings),
        removed=removed,
        survivors=len(survivors),
        speed_cutoff_kmh=float(cutoff),
        vessels_in=len({p.vessel_id for p in pings}),
        vessels_out=len({p.vessel_id for p in survivors}),
        warnings=warnings_,
    )
    log.info("clean: %d in, %d out, removed %s", report.input_count, report.survivors, removed)
    return with_speeds(survivors), report


# -- panel ---------------------------------------------------------------------------

def interpolate_hourly(pings_one_vessel, hours, max_gap_hours: float = 24.0):
    """Linear (lat, lon) interpolation of one vessel's pings onto ``hours``.

    Returns ``(lat, lon, presence)`` arrays of ``len(hours)``.  Hours before
    the first ping, after the last, or inside a gap longer than
    ``max_gap_hours`` are absent.  A vessel with a single ping is present at
    the grid hour nearest to it only.
    """
    hours = np.asarray(hours).astype("datetime64[s]")
    n = hours.size
    lat = np.full(n, np.nan)
    lon = np.full(n, np.nan)
    presence = np.zeros(n, dtype=bool)
    track = list(pings_one_vessel)
    if not track or n == 0:
        return lat, lon, presence

    ts = np.array([p.timestamp for p in track]).astype("datetime64[s]").astype("int64")
    plat = np.array([p.lat for p in track])
    plon = np.array([p.lon for p in track])
    h = hours.astype("int64")

    if ts.size == 1:
        nearest = int(np.argmin(np.abs(h - ts[0])))
        # only if the ping actually falls within half an hour of the grid
        if abs(h[nearest] - ts[0]) <= 1800:
            lat[nearest], lon[nearest], presence[nearest] = plat[0], plon[0], True
        return lat, lon, presence

    inside = (h >= ts[0]) & (h <= ts[-1])
    right = np.clip(np.searchsorted(ts, h, side="left"), 1, ts.size - 1)
    left = right - 1
    gap = ts[right] - ts[left]
    exact = ts[np.clip(np.searchsorted(ts, h), 0, ts.size - 1)] == h
    ok = inside & ((gap <= max_gap_hours * 3600) | exact)
    w = np.where(gap > 0, (h - ts[left]) / np.where(gap > 0, gap, 1), 0.0)
    lat_i = plat[left] + w * (plat[right] - plat[left])
    lon_i = plon[left] + w * (plon[right] - plon[left])
    lat[ok] = lat_i[ok]
    lon[ok] = lon_i[ok]
    presence[ok] = True
    return lat, lon, presence


def hour_grid(pings, config: CleanConfig | None = None) -> np.ndarray:
    """Hourly UTC instants covered by the panel.

    With a time window: every whole hour in ``[start, end)``.  Otherwise from
    the hour at or before the first ping to the hour at or after the last.
    """
    if config is not None and config.time_window is not None:
        start, end = (to_datetime64(t) for t in config.time_window)
        first = start.astype("datetime64[h]")
        if first < start:
            first = first + np.timedelta64(1, "h")
        stop = end.astype("datetime64[h]")
        if stop < end:
            stop = stop + np.timedelta64(1, "h")
        return np.arange(first, stop, np.timedelta64(1, "h")).astype("datetime64[s]")
    ts = np.array([p.timestamp for p in pings]).astype("datetime64[s]")
    first = ts.min().astype("datetime64[h]")
    last = ts.max().astype("datetime64[h]")
    if last < ts.max():
        last = last + np.timedelta64(1, "h")
    return np.arange(first, last + np.timedelta64(1, "h"),
                     np.timedelta64(1, "h")).astype("datetime64[s]")


def build_panel(pings, config: CleanConfig | None = None) -> Panel:
    """Assemble cleaned pings into a balanced N x T panel.

    Vessel rows follow first appearance in ``pings``.

    Raises
    ------
    EmptyPanelError
        No pings to build from.
    """
    pings = list(pings)
    if not pings:
        raise EmptyPanelError("no vessels survived cleaning")
    config = config or CleanConfig()
    hours = hour_grid(pings, config)
    if hours.size == 0:
        raise EmptyPanelError("time window contains no whole hours")
    order, groups = [], {}
    for p in pings:
        if p.vessel_id not in groups:
            order.append(p.vessel_id)
            groups[p.vessel_id] = []
        groups[p.vessel_id].append(p)

    lat = np.full((len(order), hours.size), np.nan)
    lon = np.full_like(lat, np.nan)
    presence = np.zeros(lat.shape, dtype=bool)
    for i, vid in enumerate(order):
        track = sorted(groups[vid], key=lambda p: p.timestamp)
        lat[i], lon[i], presence[i] = interpolate_hourly(track, hours, config.max_gap_hours)
    return Panel(order, hours[0], lat, lon, presence)
