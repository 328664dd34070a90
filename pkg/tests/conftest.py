import io

import numpy as np
import pytest

from fleet_anomaly.panel import Panel


def brute_force_ks(a, b):
    """Largest |ECDF_a - ECDF_b| checked at every sample point by counting."""
    a = list(map(float, a))
    b = list(map(float, b))
    best = 0.0
    for x in a + b:
        fa = sum(1 for v in a if v <= x) / len(a)
        fb = sum(1 for v in b if v <= x) / len(b)
        best = max(best, abs(fa - fb))
    return best


def type7_percentile(values, p):
    """Linear interpolation between order statistics at position p * (n - 1)."""
    x = sorted(values)
    h = p * (len(x) - 1)
    lo = int(h)
    if lo + 1 >= len(x):
        return x[-1]
    return x[lo] + (h - lo) * (x[lo + 1] - x[lo])


def make_panel(lat, lon, presence=None, start="2018-01-01T00:00:00Z"):
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if presence is None:
        presence = ~np.isnan(lat)
    ids = [f"V{i}" for i in range(lat.shape[0])]
    return Panel(ids, start, lat, lon, presence)


def stationary_panel(n=20, hours=100, seed=0, jitter_km=0.0):
    """Fixed anchors around (-42.8, -62.0), optionally with i.i.d. hourly jitter."""
    rng = np.random.default_rng(seed)
    lat0 = -42.8 + rng.uniform(-0.5, 0.5, n)
    lon0 = -62.0 + rng.uniform(-0.7, 0.7, n)
    lat = np.repeat(lat0[:, None], hours, axis=1)
    lon = np.repeat(lon0[:, None], hours, axis=1)
    if jitter_km:
        lat = lat + rng.standard_normal(lat.shape) * jitter_km / 111.19
        lon = lon + rng.standard_normal(lon.shape) * jitter_km / (111.19 * np.cos(np.radians(lat0[:, None])))
    return make_panel(lat, lon)


def csv_lines(rows, header="mmsi,timestamp,lat,lon"):
    return io.StringIO("\n".join([header, *rows]) + "\n")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def event_panel(seed=0, n=30, hours=300, start=120, end=144, fraction=0.5, lag=48):
    """Hotspot fleet with one avoidance event; returns (panel, event)."""
    from fleet_anomaly.synth import DarkEvent, FleetScenario, generate_fleet, inject_event

    scenario = FleetScenario(n, [((-42.77, -62.0), 30.0)], hours, step_noise_km=3.0,
                             attraction_strength=0.02, seed=seed)
    event = DarkEvent((-42.77, -62.0), start, end, 100.0, 10.0, fraction)
    return inject_event(generate_fleet(scenario), event, seed), event


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.RESULTS:
        terminalreporter.write_line(line)
