"""
From raw pings to a balanced hourly panel
=========================================

Raw position reports are noisy: vessels report from land, jump across the
map, or sit moored in port. The cleaning rules drop those pings, and the
survivors are interpolated onto an hourly grid with one row per vessel.
"""
import numpy as np

from fleet_anomaly.geo import GeoPoint
from fleet_anomaly.ingest import CleanConfig, VesselPing, build_panel, clean, with_speeds
from fleet_anomaly.panel import to_datetime64

t0 = to_datetime64("2016-03-01T00:00:00Z")
hour = np.timedelta64(3600, "s")
rng = np.random.default_rng(3)

pings = []
for v in range(4):
    lat, lon = -44.0, -61.0 + v * 0.3
    for h in range(0, 72, 3):
        if v == 0:
            step = (0.0, 0.0)            # moored all along
        else:
            step = rng.normal(0, 0.05, 2)
        lat, lon = lat + step[0], lon + step[1]
        reported = lat + (4.0 if (v == 1 and h == 30) else 0.0)   # one spoofed jump
        pings.append(VesselPing(f"V{v}", t0 + h * hour, GeoPoint(reported, lon)))
pings = with_speeds(pings)

config = CleanConfig(bbox=(-47.0, -40.0, -65.0, -55.0),
                     time_window=("2016-03-01T00:00:00Z", "2016-03-04T00:00:00Z"))
survivors, report = clean(pings, config)
print("input pings:", len(pings))
print("removed per rule:", report.removed)
print("survivors:", report.survivors)

# The moored vessel is gone; the jump cost vessel V1 a single ping
panel = build_panel(survivors, config)
print("panel shape (vessels x hours):", panel.lat.shape)
print("vessels:", panel.vessel_ids)
print("present cells per vessel:", panel.presence.sum(axis=1))
