import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from energyloans.profiles import (
    PowerSeries, PredictionNoise, ProfileError, TimeGrid, generate_synthetic, load_profiles_csv,
    net_demand, pseudo_predict, write_series_csv,
)

from conftest import series


def write(path, text):
    path.write_text(text)
    return path


def test_csv_kw_to_kwh(tmp_path):
    p = write(tmp_path / "load.csv", "period,value_kw\n0,2.0\n1,1.0\n")
    s = load_profiles_csv(p, TimeGrid(0, 15, 2))
    assert s.values[0] == pytest.approx(0.5)
    assert s.values[1] == pytest.approx(0.25)


def test_csv_empty_file_on_empty_grid(tmp_path):
    p = write(tmp_path / "empty.csv", "")
    assert len(load_profiles_csv(p, TimeGrid(0, 15, 0))) == 0


def test_csv_row_count_mismatch(tmp_path):
    rows = "".join(f"{i},1.0\n" for i in range(95))
    p = write(tmp_path / "short.csv", "period,value_kw\n" + rows)
    with pytest.raises(ProfileError, match="95 data rows, grid expects 96"):
        load_profiles_csv(p, TimeGrid(0, 15, 96))


def test_csv_missing_file(tmp_path):
    with pytest.raises(ProfileError, match="not found"):
        load_profiles_csv(tmp_path / "nope.csv", TimeGrid(0, 15, 1))


def test_csv_non_numeric_cell_is_located(tmp_path):
    p = write(tmp_path / "bad.csv", "period,value_kw\n0,1.0\n1,abc\n")
    with pytest.raises(ProfileError, match=r"bad.csv:3: non-numeric"):
        load_profiles_csv(p, TimeGrid(0, 15, 2))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=40))
def test_csv_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "s.csv"
    s = series(values)
    write_series_csv(s, path)
    back = load_profiles_csv(path, s.grid, "net")
    np.testing.assert_allclose(back.values, s.values, atol=1e-9, rtol=0)


def test_net_demand_examples():
    assert net_demand(series([0.5], "load"), series([0.125], "pv")).values[0] == pytest.approx(0.375)
    load = series([0.3, 0.7, 0.1], "load")
    assert np.all(net_demand(load, load.with_kind("pv")).values == 0)
    np.testing.assert_array_equal(net_demand(load, series([0, 0, 0], "pv")).values, load.values)


def test_net_demand_grid_mismatch():
    with pytest.raises(ProfileError, match="grid mismatch"):
        net_demand(series([1.0, 2.0], "load"), series([1.0], "pv"))


@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=1, max_size=20), st.floats(0, 5))
def test_net_demand_linear(pairs, a):
    load = series([p[0] for p in pairs], "load")
    pv = series([p[1] for p in pairs], "pv")
    lhs = net_demand(load.scaled(a), pv.scaled(a)).values
    np.testing.assert_allclose(lhs, a * net_demand(load, pv).values, atol=1e-9)


def test_series_invariants():
    with pytest.raises(ProfileError):
        series([-1.0], "load")
    with pytest.raises(ProfileError):
        PowerSeries(TimeGrid(0, 15, 3), np.zeros(2), "net")
    with pytest.raises(ProfileError):
        TimeGrid(0, 0, 3)


def test_pseudo_predict_zero_noise_is_identity():
    s = series([0.1, -0.2, 0.3])
    np.testing.assert_array_equal(pseudo_predict(s, PredictionNoise(0.0, 5)).values, s.values)


def test_pseudo_predict_deterministic():
    s = series(np.linspace(-1, 1, 50))
    a = pseudo_predict(s, PredictionNoise(0.1, 7))
    b = pseudo_predict(s, PredictionNoise(0.1, 7))
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, s.values)


def test_pseudo_predict_noise_is_centered():
    s = series(np.zeros(10_000))
    out = pseudo_predict(s, PredictionNoise(0.1, 11))
    assert abs(np.mean(out.values - s.values)) < 3 * 0.1 / 100


def test_synthetic_flat():
    s = generate_synthetic(TimeGrid(0, 15, 4), "flat", 1.0)
    np.testing.assert_array_equal(s.values, [1.0, 1.0, 1.0, 1.0])


def test_synthetic_pv_zero_at_night():
    grid = TimeGrid(0, 15, 96 * 2)
    pv = generate_synthetic(grid, "pv_bell", 0.8, seed=3)
    hours = grid.hour_of_day()
    night = (hours < 4) | (hours >= 22)
    assert np.all(pv.values[night] == 0.0)
    assert pv.values.max() > 0


def test_synthetic_deterministic_and_unknown_preset():
    grid = TimeGrid(0, 15, 96)
    a = generate_synthetic(grid, "household_diurnal", 0.2, seed=4)
    b = generate_synthetic(grid, "household_diurnal", 0.2, seed=4)
    np.testing.assert_array_equal(a.values, b.values)
    assert np.all(a.values >= 0)
    with pytest.raises(ProfileError, match="unknown synthetic preset"):
        generate_synthetic(grid, "wind", 1.0)
