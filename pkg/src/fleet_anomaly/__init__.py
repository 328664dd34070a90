"""Fleet-scale anomaly detection from between-vessel distance distributions.

Vessel positions are reduced, hour by hour, to the multiset of pairwise
great-circle distances.  Each hour's distribution is compared with the
preceding hours by two-sample Kolmogorov-Smirnov statistics, and the mean
and kurtosis of those lagged statistics serve as anomaly indices whose
significance is judged against quiet reference windows.
"""
__version__ = "0.1.0"

from .anomaly import (AnomalySeries, KsLagSet, NullCalibration, anomaly_series,
                      calibrate_null, empirical_percentile, flag_anomalies,
                      ks_heatmap, ks_statistic, kurtosis_index, lagged_ks_set,
                      mean_index, series_from_heatmap)
from .density import DensityEstimate, SampleStore, distance_distribution, kde_pdf
from .geo import EARTH_RADIUS_KM, DistanceSample, GeoPoint, haversine_km, pairwise_distances
from .ingest import (CleanConfig, CleanReport, RecordError, VesselPing, build_panel, clean,
                     compute_speed_threshold, interpolate_hourly, parse_pings)
from .panel import Panel
from .synth import DarkEvent, FleetScenario, generate_fleet, inject_event

__all__ = [
    "AnomalySeries", "KsLagSet", "NullCalibration", "anomaly_series", "calibrate_null",
    "empirical_percentile", "flag_anomalies", "ks_heatmap", "ks_statistic",
    "kurtosis_index", "lagged_ks_set", "mean_index", "series_from_heatmap",
    "DensityEstimate", "SampleStore", "distance_distribution", "kde_pdf",
    "EARTH_RADIUS_KM", "DistanceSample", "GeoPoint", "haversine_km", "pairwise_distances",
    "CleanConfig", "CleanReport", "RecordError", "VesselPing", "build_panel", "clean",
    "compute_speed_threshold", "interpolate_hourly", "parse_pings",
    "Panel", "DarkEvent", "FleetScenario", "generate_fleet", "inject_event",
]
