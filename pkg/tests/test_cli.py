import hashlib
import json

import numpy as np
import pytest

from conftest import stationary_panel
from fleet_anomaly.cli import load_preset, main, preset_names, resolve_windows
from fleet_anomaly.density import distance_distribution, kde_pdf
from fleet_anomaly.geo import KM_PER_DEGREE
from fleet_anomaly.panel import Panel

PINGS = """mmsi,timestamp,lat,lon,sog
111,2016-03-01T00:00:00Z,-44.0,-60.0,3
111,2016-03-01T01:00:00Z,{a},-60.0,3
111,2016-03-01T02:00:00Z,{jump},-60.0,3
111,2016-03-01T03:00:00Z,{b},-60.0,3
111,2016-03-01T04:00:00Z,{c},-60.0,3
222,2016-03-01T00:00:00Z,-43.0,-61.0,0
222,2016-03-01T12:00:00Z,-43.0,-61.0,0
222,2016-03-02T12:00:00Z,-43.0,-61.0,0
333,2016-03-01T00:00:00Z,-42.0,-59.0,2
333,2016-03-01T02:00:00Z,-42.05,-59.0,2
333,2016-03-01T04:00:00Z,-42.1,-59.0,2
"""


def _step(km):
    return -44.0 + km / KM_PER_DEGREE


@pytest.fixture
def pings_file(tmp_path):
    path = tmp_path / "pings.csv"
    path.write_text(PINGS.format(a=_step(5), jump=_step(5 + 100), b=_step(15), c=_step(20)))
    return path


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(*argv):
    return main([str(a) for a in argv])


def test_clean_command(pings_file, tmp_path, capsys):
    before = _digest(pings_file)
    assert run("clean", "--input", pings_file, "--out", tmp_path / "c") == 0
    report = json.loads((tmp_path / "c" / "clean_report.json").read_text())
    assert report["removed"]["speed"] == 1
    assert report["removed"]["mobility"] == 3
    assert report["survivors"] + sum(report["removed"].values()) == report["input_count"] == 11
    assert (tmp_path / "c" / "cleaned.csv").read_text().count("\n") == 1 + 7
    assert _digest(pings_file) == before


def test_missing_input_reports_code(tmp_path, capsys):
    assert run("clean", "--input", tmp_path / "absent.csv", "--out", tmp_path / "o") != 0
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "input-not-found"


def test_panel_command(pings_file, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"clean": {"time_window": ["2016-03-01T00:00:00Z",
                                                       "2016-03-02T00:00:00Z"]}}))
    assert run("panel", "--input", pings_file, "--config", cfg, "--out", tmp_path / "p") == 0
    panel = Panel.load(tmp_path / "p" / "panel.json")
    assert panel.lat.shape == (3, 24)
    assert Panel.load(tmp_path / "p" / "panel.csv").equals(panel)


def test_simulate_preset_has_short_distance_mode(tmp_path):
    assert run("simulate", "--preset", "hotspot-baseline", "--out", tmp_path / "s") == 0
    panel = Panel.load(tmp_path / "s" / "panel.json")
    assert panel.lat.shape == (50, 240)
    assert kde_pdf(distance_distribution(panel, 200)).argmax_km < 50


def test_simulate_event_preset_differs_only_locally(tmp_path):
    assert run("simulate", "--preset", "hotspot-event", "--out", tmp_path / "e") == 0
    cfg = load_preset("hotspot-event")
    base_cfg = tmp_path / "base.json"
    base_cfg.write_text(json.dumps({"scenario": cfg["scenario"]}))
    assert run("simulate", "--config", base_cfg, "--out", tmp_path / "b") == 0
    event = Panel.load(tmp_path / "e" / "panel.json")
    base = Panel.load(tmp_path / "b" / "panel.json")
    _, cols = np.nonzero(event.lat != base.lat)
    ev = cfg["event"]
    assert cols.size > 0
    assert cols.min() > ev["start_hour"] and cols.max() <= ev["end_hour"]


def test_simulate_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"scenario": {"n_vessels": 1, "hotspots": [], "duration_hours": 5}}))
    assert run("simulate", "--config", cfg, "--out", tmp_path / "x") != 0
    assert json.loads(capsys.readouterr().err)["error"] == "config-invalid"
    assert run("simulate", "--preset", "no-such-preset", "--out", tmp_path / "x") != 0
    assert json.loads(capsys.readouterr().err)["error"] == "config-invalid"


def test_detect_on_stationary_panel(tmp_path):
    stationary_panel(n=10, hours=60).save(tmp_path / "still.json")
    cfg = tmp_path / "d.json"
    cfg.write_text(json.dumps({"null_windows": [[30, 60]]}))
    with pytest.warns(UserWarning, match="recommended"):
        assert run("detect", "--input", tmp_path / "still.json", "--config", cfg,
                   "--lag-hours", 12, "--kind", "mean", "--out", tmp_path / "d") == 0
    rows = (tmp_path / "d" / "mean.csv").read_text().splitlines()
    assert rows[0] == "hour,value,flag,threshold"
    values = [r.split(",") for r in rows[2:]]
    assert all(float(v[1]) == 0.0 and v[2] == "0" for v in values)
    manifest = json.loads((tmp_path / "d" / "manifest.json").read_text())
    assert set(manifest["outputs"]) >= {"mean.csv", "heatmap.csv"}


def test_detect_event_preset_flags_event(tmp_path):
    assert run("simulate", "--preset", "hotspot-event", "--out", tmp_path / "s") == 0
    assert run("detect", "--preset", "hotspot-event", "--input", tmp_path / "s" / "panel.json",
               "--out", tmp_path / "d") == 0
    lines = (tmp_path / "d" / "mean.csv").read_text().splitlines()[1:]
    flagged = [int(r.split(",")[0]) for r in lines if r.split(",")[2] == "1"]
    assert any(168 - 72 <= h <= 192 + 72 for h in flagged)
    heat = (tmp_path / "d" / "heatmap.csv").read_text().splitlines()
    assert heat[0].split(",")[:3] == ["hour", "1", "2"] and len(heat[0].split(",")) == 73
    assert (tmp_path / "d" / "kurtosis.csv").exists()


def test_detect_window_too_short(tmp_path, capsys):
    stationary_panel(n=4, hours=10).save(tmp_path / "p.json")
    assert run("detect", "--input", tmp_path / "p.json", "--lag-hours", 10,
               "--out", tmp_path / "d") != 0
    assert json.loads(capsys.readouterr().err)["error"] == "window-too-short"


def test_heatmap_density_and_calibrate(tmp_path):
    assert run("simulate", "--preset", "hotspot-baseline", "--out", tmp_path / "s") == 0
    panel = tmp_path / "s" / "panel.json"
    assert run("heatmap", "--input", panel, "--lag-hours", 24, "--out", tmp_path / "h") == 0
    assert (tmp_path / "h" / "heatmap.csv").read_text().count("\n") == 241
    assert run("density", "--input", panel, "--out", tmp_path / "k") == 0
    dens = (tmp_path / "k" / "density.csv").read_text().splitlines()
    assert len(dens) == 513 and dens[0].startswith("km,0,1,")
    assert run("detect", "--input", panel, "--lag-hours", 24, "--kind", "mean",
               "--out", tmp_path / "d") == 0
    cfg = tmp_path / "nulls.json"
    cfg.write_text(json.dumps({"null_windows": [[120, 240]], "percentile": 0.95}))
    assert run("calibrate", "--input", tmp_path / "d" / "mean.csv", "--config", cfg,
               "--out", tmp_path / "c") == 0
    cal = json.loads((tmp_path / "c" / "calibration.json").read_text())
    assert cal["sample_count"] == 120 and cal["percentile"] == 0.95


def test_presets_cover_case_studies():
    names = preset_names()
    assert {"patagonia-2016", "patagonia-2018a", "patagonia-2018b"} <= set(names)
    lags = {n: load_preset(n)["lag_hours"] for n in names if n.startswith("patagonia")}
    assert lags == {"patagonia-2016": 192, "patagonia-2018a": 72, "patagonia-2018b": 192}
    p = load_preset("patagonia-2016")
    start = p["clean"]["time_window"][0]
    assert resolve_windows(p["event_windows"], start) == [[14 * 24, 15 * 24]]
