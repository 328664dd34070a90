"""
Distances between vessels and the two-sample KS statistic
==========================================================

A walk through the geometric building blocks: great-circle distances,
the upper-triangle distance sample for one hour, and the exact KS
statistic between two such samples.
"""
import numpy as np

from fleet_anomaly import geo
from fleet_anomaly.anomaly import ks_statistic

# A quarter of a meridian, equator to pole
print("equator -> pole:", round(geo.haversine_km((0, 0), (90, 0)), 3), "km")

# Five vessels off Puerto Madryn; pairwise distances come back as the
# strict upper triangle in row-major order, so 5 vessels give 10 pairs
rng = np.random.default_rng(7)
fleet = np.column_stack([-42.8 + rng.normal(0, 0.2, 5), -62.0 + rng.normal(0, 0.2, 5)])
sample = geo.pairwise_distances(fleet, time_index=0)
print("pairs:", sample.distances.size)
print("distances (km):", np.round(sample.distances, 1))

# Spread the same vessels out and compare the two distance samples.
# KS is the largest vertical gap between the two empirical CDFs.
spread = fleet.copy()
spread[:, 0] += rng.normal(0, 0.6, 5)
later = geo.pairwise_distances(spread, time_index=1)
print("KS(clustered, spread) =", ks_statistic(sample.distances, later.distances))

# Identical samples give 0, disjoint ones give 1
print("KS(x, x) =", ks_statistic(sample.distances, sample.distances))
print("KS(x, x + 1e4) =", ks_statistic(sample.distances, sample.distances + 1e4))
