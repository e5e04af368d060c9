import numpy as np
import pytest

from magcav import physmodel as pm
from magcav import presets
from magcav import synthlab as sl
from magcav.errors import InputError, MapFitError
from magcav.fitcore import FitOptions, fit_map
from magcav.records import MapData

TRUTH = presets.REF_HYBRID


def _scenario(spurious=True, sigma=0.0, seed=0, n_currents=21, points=401, degeneracy=0.0):
    f_c = TRUTH.f_c
    return sl.MapScenario(
        hybrid=TRUTH, calib=pm.FieldCalib.from_degeneracy(1.42, degeneracy, f_c),
        currents=tuple(np.linspace(-5.0, 5.0, n_currents).tolist()),
        freq_grid=tuple(np.linspace(f_c - 235e6, f_c + 235e6, points).tolist()),
        spurious=presets.spurious_modes() if spurious else (),
        noise=sl.NoiseSpec(sigma, seed))


@pytest.fixture(scope="module")
def clean_fit():
    return fit_map(sl.gen_map(_scenario(spurious=False)))


def test_noiseless_map_without_extra_modes(clean_fit):
    res = clean_fit
    assert res.failed == []
    assert res.slope_mt_per_ma == pytest.approx(1.42, rel=1e-6)
    assert res.degeneracy_current == pytest.approx(0.0, abs=1e-6)
    for name in ("f_c", "g_m", "kappa_int", "gamma_m"):
        assert res.global_params[name][0] == pytest.approx(getattr(TRUTH, name), rel=1e-5)
    assert res.cooperativity() == pytest.approx(pm.cooperativity(47e6, 2.7e6, 1.1e6), rel=1e-5)


def test_calibration_reproduces_column_frequencies(clean_fit):
    res = clean_fit
    for col in res.fitted:
        predicted = pm.kittel_frequency(col.current, res.calib)
        assert col.result.params.f_fmr == pytest.approx(predicted, rel=1e-9)


def test_spurious_modes_leave_main_parameters_within_one_percent():
    res = fit_map(sl.gen_map(_scenario(spurious=True)))
    assert res.slope_mt_per_ma == pytest.approx(1.42, rel=1e-4)
    for name in ("f_c", "g_m", "kappa_int", "gamma_m"):
        assert res.global_params[name][0] == pytest.approx(getattr(TRUTH, name), rel=0.01)


def test_offset_degeneracy_current():
    res = fit_map(sl.gen_map(_scenario(spurious=False, degeneracy=0.8)))
    assert res.degeneracy_current == pytest.approx(0.8, abs=1e-5)


def test_noisy_map_slope_within_three_standard_errors():
    res = fit_map(sl.gen_map(_scenario(sigma=0.002, seed=1)))
    assert abs(res.slope_mt_per_ma - 1.42) < 3 * res.slope_mt_per_ma_se
    assert abs(res.degeneracy_current) < 3 * res.degeneracy_current_se + 0.25


def test_single_column_is_rejected():
    m = sl.gen_map(_scenario(n_currents=21))
    one = MapData(m.currents[:1], m.freqs, m.s21[:1])
    with pytest.raises(InputError, match="insufficient columns"):
        fit_map(one)


def test_map_fails_when_most_columns_do_not_converge():
    m = sl.gen_map(_scenario(spurious=False, n_currents=5, points=201))
    with pytest.raises(MapFitError) as info:
        fit_map(m, FitOptions(max_iterations=1))
    assert len(info.value.failed) > 2
