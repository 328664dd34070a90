"""Command line front end: ``fleet-anomaly <command> [options]``.

Commands mirror the pipeline stages and exchange plain files::

    clean      raw pings CSV   -> cleaned.csv + clean_report.json
    panel      pings CSV       -> panel.json + panel.csv
    simulate   scenario/preset -> panel.json + panel.csv
    heatmap    panel           -> heatmap.csv
    density    panel           -> density.csv
    detect     panel           -> mean.csv, kurtosis.csv, heatmap.csv, manifest.json
    calibrate  series CSV      -> calibration.json + flagged series CSV

Failures exit with status 1 and print ``{"error": <code>, "message": ...}``
on stderr.  Log level comes from ``FLEET_ANOMALY_LOG``.
"""
import argparse
from dataclasses import fields
import hashlib
import json
import logging
import os
import platform
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .anomaly import (KINDS, AnomalySeries, calibrate_null, flag_anomalies,
                      ks_heatmap, series_from_heatmap)
from .density import DEFAULT_GRID_KM, SampleStore, density_matrix
from .errors import ConfigError, FleetAnomalyError, InputNotFoundError, WindowTooShortError
from .ingest import CleanConfig, build_panel, clean, parse_pings, write_pings
from .panel import ONE_HOUR, Panel, to_datetime64
from .synth import DarkEvent, FleetScenario, generate_fleet, inject_event

log = logging.getLogger("fleet_anomaly")


# -- helpers ---------------------------------------------------------------

def preset_names():
    return sorted(p.name[:-5] for p in resources.files("fleet_anomaly.presets").iterdir()
                  if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    path = resources.files("fleet_anomaly.presets") / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return json.loads(path.read_text(encoding="utf-8"))


def load_config(args) -> dict:
    config = {}
    if getattr(args, "preset", None):
        config.update(load_preset(args.preset))
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise InputNotFoundError(str(path))
        try:
            config.update(json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return config


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write(out: Path, name: str, text: str, written: dict):
    data = text.encode("utf-8")
    (out / name).write_bytes(data)
    written[name] = _sha256(data)


def _write_manifest(out: Path, command: str, config: dict, inputs: dict, written: dict):
    manifest = {
        "tool": "fleet-anomaly",
        "version": __version__,
        "command": command,
        "config": config,
        "config_sha256": _sha256(_canonical(config)),
        "inputs": inputs,
        "outputs": dict(sorted(written.items())),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")


def _input_digest(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise InputNotFoundError(str(path))
    return {path.name: _sha256(path.read_bytes())}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def resolve_windows(windows, panel_start=None):
    """Turn window specs into ``[start, end)`` hour indices.

    Each bound may be an hour index or an ISO-8601 instant; instants need
    ``panel_start`` and are floored to the containing hour.
    """
    out = []
    for w in windows or ():
        bounds = []
        for b in w:
            if isinstance(b, (int, np.integer)):
                bounds.append(int(b))
            elif panel_start is None:
                raise ConfigError("ISO window bounds need a panel start time")
            else:
                delta = (to_datetime64(b) - to_datetime64(panel_start)) / ONE_HOUR
                bounds.append(int(np.floor(delta)))
        out.append(bounds)
    return out


def _clean_config(config) -> CleanConfig:
    if "clean" in config:
        return CleanConfig.from_dict(config["clean"])
    names = {f.name for f in fields(CleanConfig) if not f.name.startswith("_")}
    return CleanConfig.from_dict({k: v for k, v in config.items() if k in names})


def heatmap_csv(heat: np.ndarray) -> str:
    lines = ["hour," + ",".join(str(k) for k in range(1, heat.shape[1] + 1))]
    for t, row in enumerate(heat):
        cells = ["" if np.isnan(v) else repr(float(v)) for v in row]
        lines.append(f"{t}," + ",".join(cells))
    return "\n".join(lines) + "\n"


def density_csv(grid, matrix) -> str:
    lines = ["km," + ",".join(str(t) for t in range(matrix.shape[1]))]
    for km, row in zip(grid, matrix):
        cells = ["" if np.isnan(v) else repr(float(v)) for v in row]
        lines.append(repr(float(km)) + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


def _kinds(value):
    return list(KINDS) if value in (None, "both") else [value]


# -- commands ------------------------------------------------------------------

def cmd_clean(args):
    config = load_config(args)
    clean_cfg = _clean_config(config)
    pings, errors = parse_pings(Path(args.input))
    survivors, report = clean(pings, clean_cfg)
    out = _out_dir(args)
    written = {}
    _write(out, "cleaned.csv", write_pings(survivors), written)
    doc = report.to_dict()
    doc["record_errors"] = [e._asdict() for e in errors]
    _write(out, "clean_report.json", json.dumps(doc, indent=2) + "\n", written)
    _write_manifest(out, "clean", clean_cfg.to_dict(), _input_digest(args.input), written)
    return report


def cmd_panel(args):
    config = load_config(args)
    clean_cfg = _clean_config(config)
    pings, _ = parse_pings(Path(args.input))
    panel = build_panel(pings, clean_cfg)
    out = _out_dir(args)
    written = {}
    _write(out, "panel.json", panel.to_json(), written)
    _write(out, "panel.csv", panel.to_csv(), written)
    _write_manifest(out, "panel", clean_cfg.to_dict(), _input_digest(args.input), written)
    return panel


def cmd_simulate(args):
    config = load_config(args)
    if "scenario" not in config:
        raise ConfigError("simulate needs a 'scenario' object (use --preset or --config)")
    scenario_dict = dict(config["scenario"])
    if args.seed is not None:
        scenario_dict["seed"] = args.seed
    scenario = FleetScenario.from_dict(scenario_dict)
    panel = generate_fleet(scenario)
    event_dict = config.get("event")
    if args.event:
        path = Path(args.event)
        if not path.exists():
            raise InputNotFoundError(str(path))
        event_dict = json.loads(path.read_text(encoding="utf-8"))
    if event_dict:
        panel = inject_event(panel, DarkEvent.from_dict(event_dict), scenario.seed)
    out = _out_dir(args)
    written = {}
    _write(out, "panel.json", panel.to_json(), written)
    _write(out, "panel.csv", panel.to_csv(), written)
    used = {"scenario": scenario.to_dict(), "event": event_dict}
    _write_manifest(out, "simulate", used, {}, written)
    return panel


def _lag(args, config):
    lag = args.lag_hours if args.lag_hours is not None else config.get("lag_hours")
    if lag is None:
        raise ConfigError("lag not given (--lag-hours or config 'lag_hours')")
    lag = int(lag)
    if lag < 1:
        raise ConfigError("lag must be >= 1")
    return lag


def _detect_config(config):
    return config.get("detect", config)


def cmd_heatmap(args):
    config = _detect_config(load_config(args))
    lag = _lag(args, config)
    panel = Panel.load(args.input)
    heat = ks_heatmap(SampleStore.from_panel(panel), lag, args.threads)
    out = _out_dir(args)
    _write(out, "heatmap.csv", heatmap_csv(heat), {})
    return heat


def cmd_density(args):
    panel = Panel.load(args.input)
    config = _detect_config(load_config(args))
    bw = config.get("bandwidth_km")
    grid, matrix = density_matrix(panel, DEFAULT_GRID_KM, bw)
    out = _out_dir(args)
    _write(out, "density.csv", density_csv(grid, matrix), {})
    return matrix


def cmd_detect(args):
    config = _detect_config(load_config(args))
    lag = _lag(args, config)
    kinds = _kinds(args.kind or config.get("kind"))
    percentile = float(config.get("percentile", 0.99))
    panel = Panel.load(args.input)
    if panel.n_hours <= lag:
        raise WindowTooShortError(f"panel has {panel.n_hours} hours, lag is {lag}")
    null_windows = resolve_windows(config.get("null_windows"), panel.start)
    event_windows = resolve_windows(config.get("event_windows"), panel.start)

    store = SampleStore.from_panel(panel)
    heat = ks_heatmap(store, lag, args.threads)
    out = _out_dir(args)
    written = {}
    calibrations = {}
    results = {}
    for kind in kinds:
        series = series_from_heatmap(heat, kind, lag, store.valid)
        if null_windows:
            cal = calibrate_null(series, null_windows, percentile, event_windows)
            series = flag_anomalies(series, cal)
            calibrations[kind] = cal.to_dict()
        results[kind] = series
        _write(out, f"{kind}.csv", series.to_csv(), written)
        _write(out, f"{kind}.json", series.to_json() + "\n", written)
    _write(out, "heatmap.csv", heatmap_csv(heat), written)
    if calibrations:
        _write(out, "calibration.json", json.dumps(calibrations, indent=2) + "\n", written)
    used = {"lag_hours": lag, "kinds": kinds, "percentile": percentile,
            "null_windows": null_windows, "event_windows": event_windows}
    _write_manifest(out, "detect", used, _input_digest(args.input), written)
    return results


def cmd_calibrate(args):
    config = _detect_config(load_config(args))
    path = Path(args.input)
    if not path.exists():
        raise InputNotFoundError(str(path))
    kind = args.kind if args.kind in KINDS else config.get("kind", "mean")
    series = AnomalySeries.from_csv(path.read_text(encoding="utf-8"), kind,
                                    int(config.get("lag_hours", 0)))
    null_windows = resolve_windows(config.get("null_windows"), config.get("panel_start"))
    event_windows = resolve_windows(config.get("event_windows"), config.get("panel_start"))
    cal = calibrate_null(series, null_windows, float(config.get("percentile", 0.99)),
                         event_windows)
    flagged = flag_anomalies(series, cal)
    out = _out_dir(args)
    written = {}
    _write(out, "calibration.json", json.dumps(cal.to_dict(), indent=2) + "\n", written)
    _write(out, f"{kind}_flagged.csv", flagged.to_csv(), written)
    return cal


HELP = {
    "clean": "apply the cleaning rules to a raw pings CSV",
    "panel": "interpolate pings onto a balanced hourly panel",
    "simulate": "generate a synthetic fleet panel, optionally with a dark-vessel event",
    "heatmap": "lagged KS statistics, hour x lag",
    "density": "KDE of between-vessel distances, km x hour",
    "detect": "anomaly indices, null calibration and flags",
    "calibrate": "null threshold for an exported anomaly series",
}

COMMANDS = {
    "clean": cmd_clean,
    "panel": cmd_panel,
    "simulate": cmd_simulate,
    "heatmap": cmd_heatmap,
    "density": cmd_density,
    "detect": cmd_detect,
    "calibrate": cmd_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fleet-anomaly",
        description="Fleet-scale anomaly indices from between-vessel distance distributions.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--input", required=name != "simulate")
        p.add_argument("--out", required=True)
        p.add_argument("--config")
        p.add_argument("--preset")
        p.add_argument("--lag-hours", type=int)
        p.add_argument("--kind", choices=["mean", "kurtosis", "both"])
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, default=1)
        if name == "simulate":
            p.add_argument("--event")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("FLEET_ANOMALY_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except FleetAnomalyError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "io-error", "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
