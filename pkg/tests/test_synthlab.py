import numpy as np
import pytest

from magcav import physmodel as pm
from magcav import presets
from magcav import rng as mrng
from magcav import synthlab as sl
from magcav.errors import SingularModelError
from magcav.fitcore.model import CalibrationNuisance

TRUTH = presets.REF_HYBRID
GRID = np.linspace(TRUTH.f_c - 120e6, TRUTH.f_c + 120e6, 1601)


def test_zero_sigma_equals_model():
    nuis = CalibrationNuisance(0.7, 1.2, 2e-9, 0.01 - 0.02j)
    s = sl.gen_sweep(TRUTH, nuis, GRID, sl.NoiseSpec(0.0, 42))
    assert np.max(np.abs(s.s21 - nuis.apply(GRID, pm.transmission(GRID, TRUTH)))) == 0


def test_metadata_records_generating_parameters():
    s = sl.gen_sweep(TRUTH, CalibrationNuisance(), GRID, sl.NoiseSpec(0.01, 42))
    assert s.seed == 42
    assert float(s.labels["g_m_hz"]) == TRUTH.g_m
    assert float(s.labels["noise_sigma"]) == 0.01


def test_fixed_seed_is_reproducible():
    a = sl.simulate(presets.fig2_sweep(sigma=0.01, seed=42))
    b = sl.simulate(presets.fig2_sweep(sigma=0.01, seed=42))
    c = sl.simulate(presets.fig2_sweep(sigma=0.01, seed=43))
    assert a.same_as(b)
    assert not a.same_as(c)


def test_noise_statistics():
    p = TRUTH.replace(kappa_1=0.0)  # S21 = 0, so the data are pure noise
    grid = np.linspace(1e9, 2e9, 100_000)
    s = sl.gen_sweep(p, CalibrationNuisance(), grid, sl.NoiseSpec(0.01, 7))
    for quad in (s.s21.real, s.s21.imag):
        z = quad / 0.01
        assert abs(z.mean()) < 0.02
        assert np.var(quad, ddof=1) == pytest.approx(1e-4, rel=0.05)


def test_rng_reference_values():
    # scalar reference mixer agrees with the vectorised stream
    key = mrng.stream_key(42, 3)
    w = mrng.words(key, 4)
    golden = 0x9E3779B97F4A7C15
    ref = [mrng.mix64_int(key + golden * (k + 1)) for k in range(4)]
    assert [int(v) for v in w] == ref
    u = mrng.uniforms(key, 1000)
    assert np.all((u >= 0) & (u < 1))


def test_rng_published_vectors():
    """The reference values listed in docs/rng.md."""
    key = mrng.stream_key(42, 0)
    assert key == 0x989B3F130A063869
    assert [int(w) for w in mrng.words(key, 3)] == [0x5599B3E06D073327, 0xD6171D07A31128DF,
                                                    0xED057BA08584C10B]
    assert mrng.uniforms(key, 2).tolist() == [0.33437656621120193, 0.8362901824612591]
    z = mrng.NormalStream(42).normal(4)
    assert z.tolist() == pytest.approx([0.4655650559583649, -0.77285933055856,
                                        -1.6658861105109763, -1.558382545598308], rel=1e-15)


def test_rng_order_independence():
    full = mrng.uniforms(mrng.stream_key(5), 100)
    tail = mrng.uniforms(mrng.stream_key(5), 60, start=40)
    assert np.array_equal(full[40:], tail)


def test_map_independent_of_workers():
    s = presets.fig2_map(sigma=0.01, seed=42, n_currents=9, points=201)
    assert sl.gen_map(s, workers=1).same_as(sl.gen_map(s, workers=4))


def test_map_without_extras_matches_single_mode_model():
    s = presets.fig2_map(sigma=0.0, n_currents=5, points=101)
    s = sl.MapScenario(s.hybrid, s.calib, s.currents, s.freq_grid)
    m = sl.gen_map(s)
    for k, current in enumerate(s.currents):
        p = TRUTH.replace(f_fmr=pm.kittel_frequency(current, s.calib))
        assert np.array_equal(m.s21[k], pm.transmission(np.asarray(s.freq_grid), p))


def _two_peak_separation(freqs, mag):
    """Distance between the two tallest local maxima of |S21| (parabolic refinement)."""
    inner = np.flatnonzero((mag[1:-1] > mag[:-2]) & (mag[1:-1] >= mag[2:])) + 1
    top = inner[np.argsort(mag[inner])[-2:]]
    step = freqs[1] - freqs[0]
    refined = []
    for i in sorted(top):
        a, b, c = mag[i - 1], mag[i], mag[i + 1]
        refined.append(freqs[i] + 0.5 * step * (a - c) / (a - 2 * b + c))
    return refined[1] - refined[0]


def test_minimum_splitting_at_degeneracy():
    s = presets.fig2_map(sigma=0.0, n_currents=41, points=1601)
    s = sl.MapScenario(s.hybrid, s.calib, s.currents, s.freq_grid)
    m = sl.gen_map(s)
    seps = [_two_peak_separation(m.freqs, np.abs(row)) for row in m.s21]
    k = int(np.argmin(seps))
    assert m.currents[k] == 0.0
    assert seps[k] == pytest.approx(94e6, abs=1e6)


def _dressed_photon_fraction(p):
    """Photon weight of the cavity-like branch of the two-mode hybrid."""
    d = p.f_fmr - p.f_c
    fb = p.f_c + d / 2 - np.copysign(np.sqrt(d * d / 4 + p.g_m**2), d)
    return (fb - p.f_fmr) ** 2 / ((fb - p.f_fmr) ** 2 + p.g_m**2)


@pytest.mark.parametrize("crossing", presets.SPURIOUS_CURRENTS_MA)
def test_spurious_anticrossing_gaps(crossing):
    """Each weak mode opens a gap of about 2 g_k in the cavity-like branch.

    The extra mode meets the bare cavity at its nominal current, but the branch
    it actually anticrosses is pulled by the main magnon, so the minimum gap sits
    at a shifted current and is 2 g_k times the branch's photon amplitude.
    """
    calib = presets.reference_calib()
    mode = pm.SpuriousMode(presets.spurious_modes()[0].g, 1.1e6, crossing_current=crossing)
    currents = np.linspace(crossing - 2.0, crossing + 2.0, 2001)
    best = None
    for current in currents:
        extra = mode.at_current(current, calib, TRUTH.f_c)
        p = TRUTH.replace(f_fmr=pm.kittel_frequency(current, calib))
        z = np.sort(np.array(pm.normal_modes_multimode(p, [extra])).real)
        k = int(np.argmin(np.diff(z)))
        if best is None or z[k + 1] - z[k] < best[0]:
            best = (z[k + 1] - z[k], p, extra, 0.5 * (z[k] + z[k + 1]))
    gap, p, extra, centre = best
    expected = 2 * mode.g * np.sqrt(_dressed_photon_fraction(p))
    assert gap == pytest.approx(expected, rel=0.03)
    assert gap == pytest.approx(2 * mode.g, rel=0.25)

    f = np.linspace(centre - 10e6, centre + 10e6, 4001)
    mag = np.abs(pm.transmission_multimode(f, p, [extra]))
    assert _two_peak_separation(f, mag) == pytest.approx(gap, rel=0.1)


def test_singular_grid_point_is_named():
    p = pm.HybridParams(10e9, 1e6, 1e6, 1e6, 10.05e9, 0.0, 5e6)
    grid = np.linspace(10e9, 10.1e9, 201)
    with pytest.raises(SingularModelError, match="grid point"):
        sl.gen_sweep(p, CalibrationNuisance(), grid, sl.NoiseSpec())
