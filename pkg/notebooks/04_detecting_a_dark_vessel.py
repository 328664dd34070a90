"""
Detecting a dark vessel from the fleet's response
=================================================

An unseen vessel appears at the hotspot at hour 168 and half of the nearby
fleet steams away from it for a day. Nobody observes the intruder, but the
distribution of distances between the observed vessels shifts. Lagged KS
statistics pick the shift up; a threshold calibrated on quiet hours turns
it into flags.
"""
import numpy as np

from fleet_anomaly.anomaly import calibrate_null, flag_anomalies, ks_heatmap, series_from_heatmap
from fleet_anomaly.density import SampleStore
from fleet_anomaly.synth import DarkEvent, FleetScenario, generate_fleet, inject_event

LAG = 72
scenario = FleetScenario(50, [((-42.77, -62.0), 30.0)], 384, step_noise_km=3.0,
                         attraction_strength=0.02, seed=4)
event = DarkEvent((-42.77, -62.0), 168, 192, avoidance_radius_km=100.0,
                  repulsion_km_per_hour=10.0, response_fraction=0.5)
panel = inject_event(generate_fleet(scenario), event, seed=4)

store = SampleStore.from_panel(panel)
heat = ks_heatmap(store, LAG)              # rows: hours, columns: lags 1..72
print("heatmap:", heat.shape)
print("mean KS, quiet hour 140:", round(float(np.nanmean(heat[140])), 3))
print("mean KS, event hour 185:", round(float(np.nanmean(heat[185])), 3))

# Null hours start one lag after the event ends, so no lag set reaches back into it
null = [(event.end_hour + LAG, 384)]
for kind in ("mean", "kurtosis"):
    series = series_from_heatmap(heat, kind, LAG, store.valid)
    cal = calibrate_null(series, null, 0.99, [event.window])
    flagged = flag_anomalies(series, cal).flagged_hours
    near = flagged[(flagged >= event.start_hour - LAG) & (flagged <= event.end_hour + LAG)]
    print(f"{kind:>8}: threshold {cal.threshold:.3f}, {flagged.size} flagged hours, "
          f"{near.size} within a lag of the event, earliest {near[:1]}")

# Kurtosis reacts while only a few lags straddle the event onset,
# which is what makes it useful as an early signal.
