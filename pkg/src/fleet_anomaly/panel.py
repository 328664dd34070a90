"""Balanced vessel x hour panel and its JSON / CSV serialisations."""
import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, CorruptInputError, InputNotFoundError

PANEL_SCHEMA = "fleet-anomaly/panel"
PANEL_SCHEMA_VERSION = 1
ONE_HOUR = np.timedelta64(3600, "s")


def to_datetime64(value) -> np.datetime64:
    """Parse an ISO-8601 UTC instant (``Z`` or ``+00:00`` suffix allowed)."""
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[s]")
    text = str(value).strip()
    if text.endswith("Z") or text.endswith("z"):
        text = text[:-1]
    elif text.endswith("+00:00"):
        text = text[:-6]
    elif len(text) > 19 and text[-6] in "+-" and text[-3] == ":":
        raise ValueError(f"non-UTC offset in timestamp {value!r}")
    return np.datetime64(text, "s")


def isoformat(t: np.datetime64) -> str:
    return str(np.datetime64(t, "s")) + "Z"


@dataclass
class Panel:
    """Vessel x hour grid of positions.

    ``lat``/``lon`` have shape (N, T) and hold NaN wherever ``presence`` is
    False.  Hours are ``start + k`` hours for ``k = 0..T-1``.
    """

    vessel_ids: list
    start: np.datetime64
    lat: np.ndarray
    lon: np.ndarray
    presence: np.ndarray

    def __post_init__(self):
        self.vessel_ids = [str(v) for v in self.vessel_ids]
        self.start = to_datetime64(self.start)
        self.lat = np.asarray(self.lat, dtype=float)
        self.lon = np.asarray(self.lon, dtype=float)
        self.presence = np.asarray(self.presence, dtype=bool)
        shape = (len(self.vessel_ids), self.lat.shape[-1] if self.lat.ndim == 2 else 0)
        if self.lat.ndim != 2 or self.lat.shape != shape:
            raise ConfigError(f"lat grid must be N x T, got {self.lat.shape}")
        if self.lon.shape != shape or self.presence.shape != shape:
            raise ConfigError("lat, lon and presence grids must share one N x T shape")
        if len(set(self.vessel_ids)) != len(self.vessel_ids):
            raise ConfigError("duplicate vessel ids in panel")

    @property
    def n_vessels(self) -> int:
        return self.lat.shape[0]

    @property
    def n_hours(self) -> int:
        return self.lat.shape[1]

    @property
    def n_observations(self) -> int:
        return self.n_vessels * self.n_hours

    @property
    def hours(self) -> np.ndarray:
        return self.start + np.arange(self.n_hours) * ONE_HOUR

    def hour_index(self, when) -> int:
        """Index of the hour ``when`` (ISO string or datetime64); may fall outside the grid."""
        delta = (to_datetime64(when) - self.start) / ONE_HOUR
        return int(np.floor(delta))

    def present_positions(self, t: int) -> np.ndarray:
        """(M, 2) array of (lat, lon) for vessels present at hour ``t``."""
        mask = self.presence[:, t]
        return np.column_stack([self.lat[mask, t], self.lon[mask, t]])

    def copy(self) -> "Panel":
        return Panel(list(self.vessel_ids), self.start, self.lat.copy(),
                     self.lon.copy(), self.presence.copy())

    def equals(self, other: "Panel") -> bool:
        """Bit-for-bit equality, NaN cells compared by position."""
        return (self.vessel_ids == other.vessel_ids
                and self.start == other.start
                and self.presence.shape == other.presence.shape
                and np.array_equal(self.presence, other.presence)
                and np.array_equal(self.lat, other.lat, equal_nan=True)
                and np.array_equal(self.lon, other.lon, equal_nan=True))

    # -- serialisation -------------------------------------------------

    def to_dict(self) -> dict:
        def grid(values):
            return [[float(v) if p else None for v, p in zip(row, prow)]
                    for row, prow in zip(values, self.presence)]

        return {
            "schema": PANEL_SCHEMA,
            "version": PANEL_SCHEMA_VERSION,
            "start": isoformat(self.start),
            "n_vessels": self.n_vessels,
            "n_hours": self.n_hours,
            "vessel_ids": self.vessel_ids,
            "lat": grid(self.lat),
            "lon": grid(self.lon),
            "presence": self.presence.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Panel":
        if data.get("schema") != PANEL_SCHEMA:
            raise CorruptInputError(f"not a panel document (schema={data.get('schema')!r})")
        if data.get("version") != PANEL_SCHEMA_VERSION:
            raise CorruptInputError(f"unsupported panel version {data.get('version')!r}")
        n, t = data["n_vessels"], data["n_hours"]

        def grid(rows):
            arr = np.array([[np.nan if v is None else v for v in row] for row in rows],
                           dtype=float)
            return arr.reshape(n, t)

        presence = np.array(data["presence"], dtype=bool).reshape(n, t)
        return cls(data["vessel_ids"], data["start"], grid(data["lat"]),
                   grid(data["lon"]), presence)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    def to_csv(self) -> str:
        """Flat ``vessel_id,hour,lat,lon,present`` rows, vessel-major."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["vessel_id", "hour", "lat", "lon", "present"])
        hours = [isoformat(h) for h in self.hours]
        for i, vid in enumerate(self.vessel_ids):
            for t, h in enumerate(hours):
                if self.presence[i, t]:
                    writer.writerow([vid, h, repr(float(self.lat[i, t])),
                                     repr(float(self.lon[i, t])), 1])
                else:
                    writer.writerow([vid, h, "", "", 0])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Panel":
        reader = csv.DictReader(io.StringIO(text))
        missing = {"vessel_id", "hour", "lat", "lon", "present"} - set(reader.fieldnames or [])
        if missing:
            raise CorruptInputError(f"panel CSV lacks columns {sorted(missing)}")
        ids, cells = [], {}
        hours = set()
        for row in reader:
            vid = row["vessel_id"]
            if vid not in cells:
                ids.append(vid)
                cells[vid] = {}
            h = to_datetime64(row["hour"])
            hours.add(h)
            if row["present"].strip() in ("1", "true", "True"):
                cells[vid][h] = (float(row["lat"]), float(row["lon"]))
            else:
                cells[vid].setdefault(h, None)
        if not ids:
            raise CorruptInputError("panel CSV has no rows")
        start, stop = min(hours), max(hours)
        n_hours = int((stop - start) / ONE_HOUR) + 1
        lat = np.full((len(ids), n_hours), np.nan)
        lon = np.full_like(lat, np.nan)
        presence = np.zeros(lat.shape, dtype=bool)
        for i, vid in enumerate(ids):
            for h, pos in cells[vid].items():
                if pos is None:
                    continue
                t = int((h - start) / ONE_HOUR)
                lat[i, t], lon[i, t] = pos
                presence[i, t] = True
        return cls(ids, start, lat, lon, presence)

    def save(self, path) -> None:
        path = Path(path)
        text = self.to_csv() if path.suffix.lower() == ".csv" else self.to_json()
        path.write_text(text, encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Panel":
        path = Path(path)
        if not path.exists():
            raise InputNotFoundError(str(path))
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() == ".csv":
            return cls.from_csv(text)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CorruptInputError(f"{path}: {exc}") from None
        return cls.from_dict(data)
