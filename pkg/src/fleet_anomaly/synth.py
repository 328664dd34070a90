"""Synthetic fleets with hotspot clustering and injectable avoidance events.

Vessels follow a mean-reverting random walk: each hour a vessel moves a
fraction ``attraction_strength`` of the way toward its assigned hotspot
centre and then takes an isotropic Gaussian step of ``step_noise_km`` per
axis.  A :class:`DarkEvent` makes a seeded subset of the vessels near an
unobserved location steam radially away from it for the duration of the
event, replacing their normal motion.  Steps use a local equirectangular
km-to-degree conversion, which is adequate at regional scale.
"""
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .geo import GeoPoint, haversine_array, local_offset_km, offset_km_to_degrees
from .panel import Panel, to_datetime64

DEFAULT_START = "2018-01-01T00:00:00Z"


@dataclass
class Hotspot:
    center: GeoPoint
    radius_km: float


@dataclass
class FleetScenario:
    n_vessels: int
    hotspots: list
    duration_hours: int
    step_noise_km: float = 2.0
    attraction_strength: float = 0.05
    seed: int = 0
    start: str = DEFAULT_START

    def __post_init__(self):
        spots = []
        for h in self.hotspots:
            if isinstance(h, Hotspot):
                spots.append(Hotspot(GeoPoint(*h.center), float(h.radius_km)))
            elif isinstance(h, dict):
                spots.append(Hotspot(GeoPoint(float(h["lat"]), float(h["lon"])),
                                     float(h["radius_km"])))
            else:
                (lat, lon), radius = h
                spots.append(Hotspot(GeoPoint(float(lat), float(lon)), float(radius)))
        self.hotspots = spots
        self.validate()

    def validate(self):
        if self.n_vessels < 2:
            raise ConfigError("a fleet needs at least 2 vessels")
        if self.duration_hours < 2:
            raise ConfigError("duration must be at least 2 hours")
        if not self.hotspots:
            raise ConfigError("at least one hotspot is required")
        for h in self.hotspots:
            if not h.radius_km > 0:
                raise ConfigError(f"hotspot radius must be positive, got {h.radius_km}")
            if abs(h.center.lat) > 85:
                raise ConfigError("hotspot latitude too close to a pole for local steps")
        if not 0.0 <= self.attraction_strength <= 1.0:
            raise ConfigError("attraction_strength must lie in [0, 1]")
        if self.step_noise_km < 0:
            raise ConfigError("step_noise_km must be non-negative")
        try:
            to_datetime64(self.start)
        except ValueError as exc:
            raise ConfigError(f"bad start time: {exc}") from None

    @classmethod
    def from_dict(cls, data: dict) -> "FleetScenario":
        try:
            return cls(**data)
        except (TypeError, KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid scenario: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hotspots"] = [{"lat": h.center.lat, "lon": h.center.lon, "radius_km": h.radius_km}
                         for h in self.hotspots]
        return d


@dataclass
class DarkEvent:
    """Avoidance response to an unseen vessel at ``location``.

    Vessels within ``avoidance_radius_km`` of the location at ``start_hour``
    are candidates; a seeded ``response_fraction`` of them move away at
    ``repulsion_km_per_hour`` during hours ``start_hour + 1 .. end_hour``.
    """

    location: GeoPoint
    start_hour: int
    end_hour: int
    avoidance_radius_km: float
    repulsion_km_per_hour: float
    response_fraction: float = 1.0
    name: str = field(default="event")

    def __post_init__(self):
        if isinstance(self.location, dict):
            self.location = GeoPoint(float(self.location["lat"]), float(self.location["lon"]))
        else:
            self.location = GeoPoint(*map(float, self.location))
        if not self.start_hour < self.end_hour:
            raise ConfigError("event start_hour must precede end_hour")
        if not self.avoidance_radius_km > 0:
            raise ConfigError("avoidance radius must be positive")
        if self.repulsion_km_per_hour < 0:
            raise ConfigError("repulsion must be non-negative")
        if not 0.0 <= self.response_fraction <= 1.0:
            raise ConfigError("response_fraction must lie in [0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> "DarkEvent":
        try:
            return cls(**data)
        except (TypeError, KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid event: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["location"] = {"lat": self.location.lat, "lon": self.location.lon}
        return d

    @property
    def window(self) -> tuple:
        """Half-open hour range covering the event."""
        return (self.start_hour, self.end_hour + 1)


def _wrap(lon):
    return np.where(np.abs(lon) > 180.0, (lon + 180.0) % 360.0 - 180.0, lon)


def _uniform_disc(rng, n, radius_km):
    r = radius_km * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return r * np.cos(theta), r * np.sin(theta)


def generate_fleet(scenario: FleetScenario) -> Panel:
    """Simulate a hotspot-clustered fleet; every vessel is present every hour.

    Initial positions are uniform on the disc of each hotspot's radius.
    Identical scenarios (including ``seed``) give bit-identical panels.
    """
    scenario.validate()
    rng = np.random.default_rng(scenario.seed)
    n, T = scenario.n_vessels, scenario.duration_hours
    spots = scenario.hotspots
    assign = rng.integers(len(spots), size=n)
    c_lat = np.array([spots[k].center.lat for k in assign])
    c_lon = np.array([spots[k].center.lon for k in assign])
    radius = np.array([spots[k].radius_km for k in assign])

    lat = np.empty((n, T))
    lon = np.empty((n, T))
    east, north = _uniform_disc(rng, n, 1.0)
    dlat, dlon = offset_km_to_degrees(c_lat, east * radius, north * radius)
    lat[:, 0] = c_lat + dlat
    lon[:, 0] = c_lon + dlon

    a = scenario.attraction_strength
    sigma = scenario.step_noise_km
    for t in range(1, T):
        # (1 - a) * x + a * c lands exactly on c when a == 1
        la = (1.0 - a) * lat[:, t - 1] + a * c_lat
        lo = (1.0 - a) * lon[:, t - 1] + a * c_lon
        noise = rng.standard_normal((2, n)) * sigma
        if sigma > 0:
            dlat, dlon = offset_km_to_degrees(la, noise[0], noise[1])
            la = la + dlat
            lo = lo + dlon
        lat[:, t] = la
        lon[:, t] = _wrap(lo)

    ids = [f"SIM{i:05d}" for i in range(n)]
    return Panel(ids, to_datetime64(scenario.start), lat, lon, np.ones((n, T), dtype=bool))


def responding_vessels(panel: Panel, event: DarkEvent, seed: int = 0) -> np.ndarray:
    """Indices of the vessels that react to ``event`` (sorted)."""
    t0 = event.start_hour
    present = panel.presence[:, t0]
    dist = np.full(panel.n_vessels, np.inf)
    dist[present] = haversine_array(event.location.lat, event.location.lon,
                                    panel.lat[present, t0], panel.lon[present, t0])
    candidates = np.flatnonzero(dist <= event.avoidance_radius_km)
    k = int(round(event.response_fraction * candidates.size))
    # a fixed permutation makes responder sets nested as the fraction grows
    order = np.random.default_rng(seed).permutation(candidates.size)
    return np.sort(candidates[order[:k]])


def inject_event(panel: Panel, event: DarkEvent, seed: int = 0) -> Panel:
    """Return a copy of ``panel`` with the avoidance response applied.

    Responders keep their position at ``start_hour`` and are then pushed
    radially away from the event location by ``repulsion_km_per_hour`` each
    hour through ``end_hour``, overriding their simulated motion.  Cells of
    every other vessel and hour are copied unchanged.
    """
    if event.start_hour < 0 or event.end_hour >= panel.n_hours:
        raise ConfigError(f"event hours [{event.start_hour}, {event.end_hour}] "
                          f"outside panel of {panel.n_hours} hours")
    out = panel.copy()
    if event.response_fraction == 0 or event.repulsion_km_per_hour == 0:
        return out
    movers = responding_vessels(panel, event, seed)
    if movers.size == 0:
        return out
    rng = np.random.default_rng([seed, 1])
    step = event.repulsion_km_per_hour
    ev_lat, ev_lon = event.location
    t0 = event.start_hour
    lat = panel.lat[movers, t0].copy()
    lon = panel.lon[movers, t0].copy()
    east, north = local_offset_km(ev_lat, ev_lon, lat, lon)
    norm = np.hypot(east, north)
    # a vessel sitting exactly on the event picks a random heading
    theta = 2.0 * np.pi * rng.random(movers.size)
    ux = np.where(norm > 0, east / np.where(norm > 0, norm, 1.0), np.cos(theta))
    uy = np.where(norm > 0, north / np.where(norm > 0, norm, 1.0), np.sin(theta))
    for t in range(t0 + 1, event.end_hour + 1):
        dlat, dlon = offset_km_to_degrees(lat, ux * step, uy * step)
        lat = np.clip(lat + dlat, -89.9, 89.9)
        lon = _wrap(lon + dlon)
        out.lat[movers, t] = lat
        out.lon[movers, t] = lon
        out.presence[movers, t] = True
    return out


def load_scenario(path) -> FleetScenario:
    with open(path, encoding="utf-8") as fh:
        return FleetScenario.from_dict(json.load(fh))


def load_event(path) -> DarkEvent:
    with open(path, encoding="utf-8") as fh:
        return DarkEvent.from_dict(json.load(fh))


__all__ = ["Hotspot", "FleetScenario", "DarkEvent", "generate_fleet", "inject_event",
           "responding_vessels", "load_scenario", "load_event"]
