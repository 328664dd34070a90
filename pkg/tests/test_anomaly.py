import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import brute_force_ks, event_panel, stationary_panel, type7_percentile
from fleet_anomaly.anomaly import (AnomalySeries, anomaly_series, calibrate_null,
                                   empirical_percentile, flag_anomalies, ks_heatmap,
                                   ks_statistic, kurtosis_index, lagged_ks_set, mean_index,
                                   series_from_heatmap)
from fleet_anomaly.density import SampleStore
from fleet_anomaly.errors import (ConfigError, DegenerateSampleError, EmptySampleError,
                                  UndefinedIndexError, WindowTooShortError)

samples = st.lists(st.floats(0, 2000, allow_nan=False), min_size=1, max_size=200)
small_ints = st.lists(st.integers(0, 5).map(float), min_size=1, max_size=40)


# -- KS -------------------------------------------------------------------

def test_ks_identical_samples():
    assert ks_statistic([3.0, 1.0, 2.0], [1.0, 2.0, 3.0]) == 0.0


def test_ks_disjoint_supports():
    assert ks_statistic([1, 2, 3], [10, 20, 30]) == 1.0


def test_ks_interleaved_pair():
    assert brute_force_ks([1, 2], [1.5, 2.5]) == 0.5
    assert ks_statistic([1, 2], [1.5, 2.5]) == 0.5


def test_ks_empty_sample():
    with pytest.raises(EmptySampleError):
        ks_statistic([], [1.0])


@settings(max_examples=200, deadline=None)
@given(samples, samples)
def test_ks_matches_brute_force_exactly(a, b):
    assert ks_statistic(a, b) == brute_force_ks(a, b)


@given(small_ints, small_ints)
def test_ks_with_ties(a, b):
    value = ks_statistic(a, b)
    assert value == brute_force_ks(a, b)
    assert value == ks_statistic(b, a)
    assert 0.0 <= value <= 1.0
    if len(a) == len(b):
        assert (value == 0.0) == (sorted(a) == sorted(b))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
@given(samples, samples)
def test_ks_agrees_with_scipy(a, b):
    assert ks_statistic(a, b) == pytest.approx(stats.ks_2samp(a, b, method="asymp").statistic, abs=1e-12)


@given(samples)
def test_ks_zero_iff_same_multiset(a):
    assert ks_statistic(a, list(reversed(a))) == 0.0
    assert ks_statistic(a, a + [max(a) + 1.0]) > 0.0


# -- percentile -----------------------------------------------------------

def test_percentile_examples():
    assert empirical_percentile(range(1, 101), 0.50) == 50.5
    assert empirical_percentile(range(1, 101), 0.99) == pytest.approx(99.01, abs=1e-12)
    assert empirical_percentile([7.0], 0.99) == 7.0


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), st.floats(0, 1))
def test_percentile_matches_type7(values, p):
    assert empirical_percentile(values, p) == pytest.approx(type7_percentile(values, p),
                                                            rel=1e-9, abs=1e-6)


# -- lag sets ---------------------------------------------------------------

def test_stationary_lag_set_is_zero():
    store = SampleStore.from_panel(stationary_panel(hours=30))
    s = lagged_ks_set(store, 20, 8)
    assert s.ks_values.tolist() == [0.0] * 8
    assert s.valid_mask.all()


@pytest.mark.parametrize("days,expected", [(8, 192), (3, 72)])
def test_lag_lengths(days, expected):
    store = SampleStore.from_panel(stationary_panel(n=5, hours=10))
    s = lagged_ks_set(store, 5, days * 24)
    assert len(s.ks_values) == expected
    assert s.lags.tolist() == list(range(1, expected + 1))
    assert s.valid_mask.sum() == 5


def test_lag_entries_match_direct_ks():
    panel, _ = event_panel(n=12, hours=60, start=20, end=30)
    store = SampleStore.from_panel(panel)
    s = lagged_ks_set(store, 40, 24)
    for k in range(1, 25):
        assert s.ks_values[k - 1] == ks_statistic(store[40], store[40 - k])


def test_invalid_hours_are_masked():
    panel = stationary_panel(n=4, hours=12)
    panel.presence[1:, 5] = False
    store = SampleStore.from_panel(panel)
    s = lagged_ks_set(store, 8, 6)
    assert not s.valid_mask[2]
    assert s.valid_mask.sum() == 5
    assert not lagged_ks_set(store, 5, 3).valid_mask.any()


# -- indices ------------------------------------------------------------------

def test_mean_index_examples():
    assert mean_index([0.1, 0.2, 0.3]) == pytest.approx(0.2, abs=1e-15)
    assert mean_index([0.0, 0.0, 0.0]) == 0.0
    assert mean_index([0.4, np.nan, 0.8]) == pytest.approx(0.6, abs=1e-15)
    with pytest.raises(UndefinedIndexError):
        mean_index([np.nan, np.nan])


def test_kurtosis_two_point_set():
    assert kurtosis_index([0.1, 0.3, 0.1, 0.3]) == 1.0


def test_kurtosis_degenerate_signalled():
    with pytest.raises(DegenerateSampleError):
        kurtosis_index([0.2] * 10)
    with pytest.raises(UndefinedIndexError):
        kurtosis_index([0.1, 0.2, 0.3])


def test_kurtosis_normal_monte_carlo():
    x = np.random.default_rng(2024).standard_normal(10_000)
    assert kurtosis_index(x) == pytest.approx(3.0, abs=0.15)


@given(st.lists(st.floats(0, 1), min_size=4, max_size=60), st.randoms())
def test_indices_permutation_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert mean_index(shuffled) == pytest.approx(mean_index(values), rel=1e-12, abs=1e-15)
    if np.ptp(values) > 1e-6:
        assert kurtosis_index(shuffled) == pytest.approx(kurtosis_index(values), rel=1e-9)


# -- series -------------------------------------------------------------------

def test_stationary_series():
    store = SampleStore.from_panel(stationary_panel(hours=40))
    mean = anomaly_series(store, 10, "mean")
    assert np.isnan(mean.values[0])
    assert (mean.values[1:] == 0).all()
    kurt = anomaly_series(store, 10, "kurtosis")
    assert np.isnan(kurt.values).all()
    assert set(kurt.status[4:]) == {"degenerate"}
    assert kurt.status[:4] == ["insufficient-lags"] * 4


def test_window_too_short():
    store = SampleStore.from_panel(stationary_panel(n=3, hours=10))
    with pytest.raises(WindowTooShortError):
        anomaly_series(store, 10, "mean")


def test_unknown_kind():
    with pytest.raises(ConfigError):
        series_from_heatmap(np.zeros((3, 2)), "median")


@pytest.fixture(scope="module")
def event_run():
    panel, event = event_panel(seed=3)
    store = SampleStore.from_panel(panel)
    heat = ks_heatmap(store, 48)
    return panel, event, store, heat


def test_event_peak_near_injection(event_run):
    _, event, store, heat = event_run
    series = series_from_heatmap(heat, "mean", 48, store.valid)
    peak = int(np.nanargmax(series.values))
    assert abs(peak - event.start_hour) <= 48


def test_event_flagged(event_run):
    _, event, store, heat = event_run
    series = series_from_heatmap(heat, "mean", 48, store.valid)
    cal = calibrate_null(series, [(event.end_hour + 48, 300)], 0.99, [event.window])
    flagged = flag_anomalies(series, cal)
    hours = flagged.flagged_hours
    near = hours[(hours >= event.start_hour - 48) & (hours <= event.end_hour + 48)]
    assert near.size >= 1


def test_heatmap_event_rows_elevated(event_run):
    _, event, _, heat = event_run
    row_mean = np.nanmean(heat[1:], axis=1)
    event_rows = row_mean[event.start_hour - 1:event.end_hour]
    null_rows = row_mean[event.end_hour + 48 - 1:]
    assert event_rows.mean() > null_rows.mean()


def test_heatmap_consistent_with_lag_sets(event_run):
    _, _, store, heat = event_run
    for t in (0, 5, 100, 150, 299):
        s = lagged_ks_set(store, t, 48)
        np.testing.assert_array_equal(heat[t], s.ks_values)


def test_stationary_heatmap_zero():
    heat = ks_heatmap(SampleStore.from_panel(stationary_panel(hours=30)), 12)
    assert np.nan_to_num(heat).max() == 0.0
    assert np.isnan(heat[0]).all()


@pytest.mark.parametrize("threads", [1, 2, 4, 8])
def test_heatmap_independent_of_threads(event_run, threads):
    _, _, store, heat = event_run
    np.testing.assert_array_equal(ks_heatmap(store, 48, threads=threads), heat)


def test_vessel_relabeling_invariance():
    panel, _ = event_panel(seed=1, n=15, hours=120, start=60, end=80)
    order = np.random.default_rng(0).permutation(panel.n_vessels)
    shuffled = panel.copy()
    shuffled.vessel_ids = [panel.vessel_ids[i] for i in order]
    shuffled.lat = panel.lat[order]
    shuffled.lon = panel.lon[order]
    shuffled.presence = panel.presence[order]
    for kind in ("mean", "kurtosis"):
        a = anomaly_series(SampleStore.from_panel(panel), 24, kind)
        b = anomaly_series(SampleStore.from_panel(shuffled), 24, kind)
        assert a.values.tobytes() == b.values.tobytes()


# -- calibration ----------------------------------------------------------------

def _series(values):
    values = np.asarray(values, dtype=float)
    return AnomalySeries("mean", 1, values, ["ok"] * len(values))


def test_calibrate_linear_percentile():
    cal = calibrate_null(_series(np.arange(1, 101)), [(0, 100)], 0.99)
    assert cal.threshold == pytest.approx(99.01, abs=1e-12)
    assert cal.sample_count == 100


def test_calibrate_single_value_warns():
    with pytest.warns(UserWarning, match="only 1"):
        cal = calibrate_null(_series([np.nan, 0.42, 0.9]), [(0, 2)], 0.99)
    assert cal.threshold == 0.42


def test_calibrate_rejects_overlap_with_event():
    with pytest.raises(ConfigError, match="overlaps"):
        calibrate_null(_series(np.arange(200)), [(100, 200)], 0.99, [(150, 160)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        calibrate_null(_series(np.arange(200)), [(100, 150)], 0.99, [(150, 160)])


def test_calibrate_empty_null_sample():
    with pytest.raises(EmptySampleError):
        calibrate_null(_series([np.nan] * 10), [(0, 10)])


@pytest.mark.parametrize("p", [0.0, 1.0, 1.5])
def test_calibrate_percentile_domain(p):
    with pytest.raises(ConfigError):
        calibrate_null(_series(np.arange(10)), [(0, 10)], p)


def test_flags_strict_inequality():
    s = flag_anomalies(_series([0.1, 0.5, 0.7, np.nan]), 0.5)
    assert s.flags.tolist() == [False, False, True, False]
    assert s.threshold == 0.5
    assert not flag_anomalies(_series([0.1, 0.2]), 0.9).flags.any()


@settings(deadline=None)
@given(st.lists(st.floats(0, 1), min_size=5, max_size=80), st.floats(0.01, 0.98),
       st.floats(0.001, 0.5))
def test_raising_percentile_never_adds_flags(values, p, dp):
    s = _series(values)
    n = len(values)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lo = flag_anomalies(s, calibrate_null(s, [(0, n)], p))
        hi = flag_anomalies(s, calibrate_null(s, [(0, n)], min(p + dp, 0.99)))
    assert hi.flags.sum() <= lo.flags.sum()


def test_series_csv_round_trip():
    s = flag_anomalies(_series([np.nan, 0.25, 0.75]), 0.5)
    back = AnomalySeries.from_csv(s.to_csv())
    np.testing.assert_array_equal(back.values, s.values)
    np.testing.assert_array_equal(back.flags, s.flags)
    assert back.threshold == 0.5
    assert s.to_csv().splitlines()[0] == "hour,value,flag,threshold"
