import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from floodrank.core import Stage, ZoneDayKey
from floodrank.errors import DegenerateError
from floodrank.features import (
    FEATURE_NAMES,
    assemble_matrix,
    build_matrices,
    compute_baselines,
    fe_activity,
    fe_congestion,
    fe_transactions,
    fe_twitter,
    feature_row,
    FeatureRow,
    pct_deviation,
)
from floodrank.ingest import QUANTITIES, ZoneDaySeries


@pytest.mark.parametrize("base, day, expected", [
    (100, 80, 20.0), (100, 100, 0.0), (100, 150, -50.0),
])
def test_fe_activity(base, day, expected):
    assert fe_activity(base, day) == expected


def test_fe_congestion():
    assert fe_congestion(10, 5, 40, 5)[0] == -300.0
    assert fe_congestion(10, 5, 10, 5) == (0.0, 0.0)
    assert fe_congestion(10, 0, 10, 3)[1] is None


def test_fe_transactions():
    assert fe_transactions(50, 100, 1000, 50, 100, 400)[2] == 60.0
    assert fe_transactions(50, 100, 1000, 50, 100, 1000) == (0.0, 0.0, 0.0)
    assert fe_transactions(50, 100, 1000, 60, 100, 1000)[0] == -20.0


def test_fe_twitter():
    assert fe_twitter(0.2, 1, 10, 1, 0.1, 1, 10, 1)[0] == 50.0
    assert fe_twitter(0.2, 1, 10, 1, 0.2, 1, 10, 1)[2] == 0.0
    assert fe_twitter(0.0, 1, 1, 1, 0.1, 1, 1, 1)[0] is None


def test_absent_inputs_give_missing():
    assert pct_deviation(None, 3.0) is None
    assert pct_deviation(3.0, None) is None


def _series(values):
    """values: {(quantity, zone, date): v}"""
    s = ZoneDaySeries()
    for (q, z, d), v in values.items():
        s.values[q][ZoneDayKey(z, d)] = v
    return s


def test_compute_baselines_mean_and_absence(short_calendar):
    d = short_calendar.normal_start
    s = _series({("activity_index", "A", d + dt.timedelta(i)): v for i, v in enumerate([2, 4, 6])})
    s.values["activity_index"][ZoneDayKey("B", short_calendar.post_normal_start)] = 1.0
    b = compute_baselines(s, short_calendar)
    assert b.get("A", "activity_index") == 4.0
    assert b.get("B", "activity_index") is None


def test_posts_baseline_uses_posts_window(short_calendar):
    c = short_calendar
    vals = {("n_pos", "A", c.normal_start): 100.0,               # before posts window
            ("n_pos", "A", c.twitter_normal_start): 2.0,
            ("n_pos", "A", c.normal_end): 4.0}
    b = compute_baselines(_series(vals), c)
    assert b.get("A", "n_pos") == 3.0


def test_assemble_median_imputation():
    d = dt.date(2020, 1, 5)
    rows = []
    for z, v in zip("ABC", [10.0, None, 30.0]):
        fe = [1.0] * 10
        present = [True] * 10
        if v is None:
            fe[0], present[0] = math.nan, False
        else:
            fe[0] = v
        rows.append(FeatureRow(ZoneDayKey(z, d), tuple(fe), tuple(present)))
    m = assemble_matrix(rows)
    assert m.values[1, 0] == 20.0
    assert m.imputation_log == [("B", "FE1", 20.0)]
    assert m.imputed[1, 0] and m.imputed.sum() == 1


def test_assemble_complete_is_identity():
    d = dt.date(2020, 1, 5)
    rows = [FeatureRow(ZoneDayKey(z, d), tuple(float(i) for i in range(10)), (True,) * 10)
            for z in "AB"]
    m = assemble_matrix(rows)
    assert m.imputation_log == []
    assert np.array_equal(m.values, np.array([r.fe for r in rows]))


def test_assemble_all_missing_column_is_degenerate():
    d = dt.date(2020, 1, 5)
    fe = tuple([1.0] * 6 + [math.nan] + [1.0] * 3)
    present = tuple([True] * 6 + [False] + [True] * 3)
    rows = [FeatureRow(ZoneDayKey(z, d), fe, present) for z in "AB"]
    with pytest.raises(DegenerateError, match="FE7"):
        assemble_matrix(rows)


def test_assemble_zero_and_drop_policies():
    d = dt.date(2020, 1, 5)
    rows = [FeatureRow(ZoneDayKey("A", d), (math.nan,) + (1.0,) * 9, (False,) + (True,) * 9),
            FeatureRow(ZoneDayKey("B", d), (5.0,) * 10, (True,) * 10)]
    z = assemble_matrix(rows, "zero")
    assert z.values[0, 0] == 0.0
    dr = assemble_matrix(rows, "drop")
    assert dr.zones == ["B"] and dr.dropped == ["A"]


@given(st.lists(st.one_of(st.none(), st.floats(-1e3, 1e3)), min_size=1, max_size=12)
       .filter(lambda xs: any(x is not None for x in xs)))
def test_imputation_never_touches_present_cells(col):
    d = dt.date(2020, 1, 5)
    rows = []
    for i, v in enumerate(col):
        fe = (math.nan if v is None else v,) + (0.0,) * 9
        rows.append(FeatureRow(ZoneDayKey(f"z{i:02d}", d), fe, (v is not None,) + (True,) * 9))
    m = assemble_matrix(rows)
    for i, v in enumerate(col):
        if v is not None:
            assert m.values[i, 0] == v
    assert len(m.imputation_log) == sum(v is None for v in col)


def _zone_series(calendar, zone, scale, base, flood):
    vals = {}
    for d in calendar.all_dates():
        v = base if d <= calendar.normal_end else flood
        for q in QUANTITIES:
            vals[(q, zone, d)] = scale * v
    return vals


@given(st.floats(0.01, 100), st.floats(1, 100), st.floats(0, 200))
def test_scale_equivariance(c, base, flood):
    from floodrank.core import StudyCalendar
    cal = StudyCalendar.from_dict({
        "normal_start": "2020-01-01", "normal_end": "2020-01-04", "post_normal_start": "2020-01-05",
        "response_end": "2020-01-06", "study_end": "2020-01-09", "twitter_normal_start": "2020-01-03"})
    a = _series(_zone_series(cal, "A", 1.0, base, flood))
    b = _series(_zone_series(cal, "A", c, base, flood))
    d = cal.post_normal_start
    ra = feature_row(a, compute_baselines(a, cal), "A", d)
    rb = feature_row(b, compute_baselines(b, cal), "A", d)
    assert np.allclose(ra.fe, rb.fe, rtol=1e-12, atol=1e-9)


@given(st.floats(0.001, 1e6), st.floats(0, 2e6))
def test_sign_convention(base, day):
    fe = pct_deviation(base, day)
    assert (day < base) == (fe > 0)


def test_baseline_day_equal_to_mean_gives_zero(short_calendar):
    c = short_calendar
    vals = {}
    for d in c.stage_dates(Stage.NORMAL):
        for q in QUANTITIES:
            vals[(q, "A", d)] = 7.0
    s = _series(vals)
    row = feature_row(s, compute_baselines(s, c), "A", c.normal_end)
    assert row.fe == (0.0,) * 10


def test_build_matrices_shape(short_calendar):
    vals = {}
    for z, scale in (("A", 1.0), ("B", 2.0)):
        vals.update(_zone_series(short_calendar, z, scale, 10.0, 8.0))
    mats = build_matrices(_series(vals), short_calendar)
    assert sorted(mats) == short_calendar.flood_dates()
    m = mats[short_calendar.post_normal_start]
    assert m.values.shape == (2, 10)
    assert np.allclose(m.values, 20.0)
    assert m.to_csv().splitlines()[0] == "zone," + ",".join(n.lower() for n in FEATURE_NAMES) + ",imputed_mask"
