"""Randomized property suites shared by the unit tests and the acceptance run.

Each ``check_*`` function draws ``n`` cases from a fixed seed and returns a
list of failure descriptions (empty when the property holds everywhere).
"""

from __future__ import annotations

import math
import tempfile
from pathlib import Path

import numpy as np

from magcav import physmodel as pm
from magcav import synthlab as sl
from magcav.dataio import documents, tables
from magcav.fitcore.lm import FitOptions, lm_minimize
from magcav.fitcore.model import CalibrationNuisance
from magcav.records import MapData, Sweep

CASES = 1000


def random_params(rng, degenerate=False) -> pm.HybridParams:
    f_c = rng.uniform(1e9, 2e10)
    k1, k2, ki = rng.uniform(0.0, 1e7, 3) * (rng.random(3) > 0.1)
    if k1 + k2 + ki == 0:
        ki = 1e5
    f_fmr = f_c if degenerate else f_c + rng.uniform(-3e8, 3e8)
    return pm.HybridParams(f_c, k1, k2, ki, f_fmr, rng.uniform(1e3, 1e7),
                           rng.uniform(0.0, 2e8) * (rng.random() > 0.05))


def random_extras(rng, p, count):
    return [pm.SpuriousMode(rng.uniform(0.0, 2e7), rng.uniform(1e3, 1e7),
                            f_mode=p.f_c + rng.uniform(-3e8, 3e8)) for _ in range(count)]


def check_passivity(n=CASES, seed=1):
    rng = np.random.default_rng(seed)
    bad = []
    for case in range(n):
        p = random_params(rng)
        extras = random_extras(rng, p, rng.integers(0, 4))
        f = p.f_c + rng.uniform(-5e8, 5e8, 64)
        s = np.abs(pm.transmission_multimode(f, p, extras))
        bound = 2.0 * math.sqrt(p.kappa_1 * p.kappa_2) / p.kappa_total()
        if bound > 1.0 + 1e-15 or np.any(s > bound * (1.0 + 1e-12)):
            bad.append(f"case {case}: max |S21| {s.max()!r} > bound {bound!r}")
    return bad


def check_scale_invariance(n=CASES, seed=2):
    """lambda = 2^k keeps every rescaled input exact, so values agree to <= 2 ulp
    (in practice bit-identically) after dividing out the common factor."""
    rng = np.random.default_rng(seed)
    bad = []
    for case in range(n):
        p = random_params(rng)
        lam = 2.0 ** int(rng.integers(-20, 21))
        f = p.f_c + rng.uniform(-5e8, 5e8, 32)
        a = np.asarray(pm.transmission(f, p))
        b = np.asarray(pm.transmission(f * lam, p.scaled(lam)))
        for x, y in ((a.real, b.real), (a.imag, b.imag)):
            ulps = np.abs(x - y) / np.spacing(np.maximum(np.abs(x), np.abs(y)))
            if np.any(ulps > 2):
                bad.append(f"case {case}: lambda={lam}, {ulps.max():.0f} ulp")
                break
    return bad


def check_mirror_symmetry(n=CASES, seed=3):
    """Integer-Hz frequencies make f_c +/- delta exact, so the equality is exact."""
    rng = np.random.default_rng(seed)
    bad = []
    for case in range(n):
        p = random_params(rng, degenerate=True)
        p = p.replace(f_c=float(round(p.f_c)), f_fmr=float(round(p.f_c)))
        delta = np.round(rng.uniform(1.0, 5e8, 32))
        up = np.abs(pm.transmission(p.f_c + delta, p))
        down = np.abs(pm.transmission(p.f_c - delta, p))
        if not np.array_equal(up, down):
            bad.append(f"case {case}: max asymmetry {np.max(np.abs(up - down))!r}")
    return bad


def check_root_residual(n=CASES, seed=4):
    """|D| < 1e-9 kappa at both roots for coupled modes (g >= |detuning|/10).

    For weaker coupling the magnon-like root is ill-conditioned in D
    (dD/df ~ (detuning/g)^2 amplifies the rounding of a ~10 GHz value) and
    at g = 0 it is not a zero of D at all, so there the cleared quadratic
    (f - z)(f - w) - g^2 is checked instead, relative to its natural scale.
    """
    rng = np.random.default_rng(seed)
    bad = []
    for case in range(n):
        p = random_params(rng)
        detuning = abs(p.f_fmr - p.f_c)
        coupled = p.replace(g_m=max(p.g_m, detuning / 10.0, 1e3))
        for root in pm.normal_modes(coupled):
            d = abs(complex(pm.denominator(root, coupled)))
            if not d < 1e-9 * coupled.kappa_total():
                bad.append(f"case {case}: |D| = {d!r} at {root!r}")
        z = complex(p.f_c, -p.kappa_total() / 2.0)
        w = complex(p.f_fmr, -p.gamma_m / 2.0)
        for root in pm.normal_modes(p):
            q = abs((root - z) * (root - w) - p.g_m**2)
            scale = abs(root - z) + abs(root - w) + p.g_m
            if not q < 1e-9 * p.kappa_total() * scale:
                bad.append(f"case {case}: quadratic residual {q!r} at {root!r}")
    return bad


def check_detailed_balance(n=CASES, seed=5):
    rng = np.random.default_rng(seed)
    c = pm.CONSTANTS
    bad = []
    for case in range(n):
        f = 10 ** rng.uniform(8, 12)
        T = 10 ** rng.uniform(-3, 3)
        nbar = float(pm.thermal_occupation(f, T))
        if not nbar > 1e-30:
            continue
        ratio = (nbar + 1.0) / nbar
        expected = math.exp(c.planck_h * f / (c.boltzmann_kB * T))
        if abs(ratio / expected - 1.0) > 1e-10:
            bad.append(f"case {case}: f={f!r}, T={T!r}, ratio off by {ratio / expected - 1:.2e}")
    return bad


def check_monotone_cost(n=CASES, seed=6):
    """Decaying-exponential fits from random starts; accepted costs never rise."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 4.0, 40)
    opts = FitOptions(max_iterations=60)
    bad = []
    for case in range(n):
        truth = rng.uniform([0.5, 0.2, -1.0], [3.0, 3.0, 1.0])
        y = truth[0] * np.exp(-truth[1] * t) + truth[2] + 0.01 * rng.standard_normal(t.size)
        start = truth * rng.uniform(0.3, 1.7, 3)

        def residual(x):
            return x[0] * np.exp(-x[1] * t) + x[2] - y

        res = lm_minimize(residual, start, opts)
        h = np.asarray(res.cost_history)
        if np.any(np.diff(h) > 0) or not res.cost <= h[0]:
            bad.append(f"case {case}: cost history rises")
    return bad


def check_synthesis_determinism(n=CASES, seed=7):
    rng = np.random.default_rng(seed)
    bad = []
    for case in range(n):
        p = random_params(rng)
        grid = np.linspace(p.f_c - 2e8, p.f_c + 2e8, 48)
        noise = sl.NoiseSpec(rng.uniform(0.0, 0.1), int(rng.integers(0, 2**63)))
        nuis = CalibrationNuisance(rng.uniform(0.1, 2.0), rng.uniform(-3, 3), rng.uniform(-1e-8, 1e-8))
        stream = int(rng.integers(0, 1000))
        a = sl.gen_sweep(p, nuis, grid, noise, stream=stream)
        b = sl.gen_sweep(p, nuis, grid, noise, stream=stream)
        if not a.same_as(b):
            bad.append(f"case {case}: sweep differs between runs")
        if case % 50 == 0:
            calib = pm.FieldCalib.from_degeneracy(rng.uniform(0.5, 2.0), 0.0, p.f_c)
            scen = sl.MapScenario(p, calib, tuple(np.linspace(-3, 3, 7).tolist()), tuple(grid),
                                  noise=noise)
            if not sl.gen_map(scen, workers=1).same_as(sl.gen_map(scen, workers=4)):
                bad.append(f"case {case}: map depends on worker count")
    return bad


def _random_labels(rng):
    keys = ["operator", "sample", "run", "note"]
    return {k: f"{k}-{int(rng.integers(0, 10**6))} x=y" for k in keys[: int(rng.integers(0, 5))]}


def _maybe(rng, value):
    return value if rng.random() < 0.7 else None


def check_io_round_trips(n=CASES, seed=8):
    """Sweep, map, series, scenario and report files, n cases of each."""
    rng = np.random.default_rng(seed)
    bad = []
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        for case in range(n):
            m = int(rng.integers(1, 40))
            freqs = np.cumsum(rng.uniform(1e-3, 1e7, m)) + rng.uniform(1e9, 2e10)
            s21 = rng.standard_normal(m) * 10.0 ** rng.uniform(-300, 300, m) + 1j * rng.standard_normal(m)
            sweep = Sweep(freqs, s21, current_ma=_maybe(rng, rng.normal()),
                          temperature_k=_maybe(rng, rng.uniform(0, 300)),
                          power_dbm=_maybe(rng, rng.uniform(-150, 0)),
                          seed=_maybe(rng, int(rng.integers(0, 2**63))), labels=_random_labels(rng))
            tables.write_sweep(tmp / "s.csv", sweep)
            if not tables.read_sweep(tmp / "s.csv").same_as(sweep):
                bad.append(f"case {case}: sweep")

            k = int(rng.integers(1, 6))
            currents = np.cumsum(rng.uniform(1e-6, 2.0, k)) - 5.0
            mp = MapData(currents, freqs, rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m)),
                         temperature_k=_maybe(rng, 0.01), seed=_maybe(rng, int(rng.integers(0, 99))),
                         labels=_random_labels(rng))
            tables.write_map(tmp / "m.csv", mp)
            if not tables.read_map(tmp / "m.csv").same_as(mp):
                bad.append(f"case {case}: map")

            pts = [tuple(v) for v in rng.standard_normal((int(rng.integers(1, 20)), 2)) * 1e6]
            meta = {"g0_hz": repr(float(rng.random()))}
            tables.write_series(tmp / "x.csv", tables.SCALING_COLUMNS, pts, meta)
            back, back_meta = tables.read_series(tmp / "x.csv", tables.SCALING_COLUMNS)
            if back != pts or back_meta != meta:
                bad.append(f"case {case}: series")

            p = random_params(rng)
            scen = sl.SweepScenario(p, tuple(freqs.tolist()),
                                    CalibrationNuisance(rng.uniform(0.1, 2), rng.uniform(-3, 3),
                                                        rng.uniform(-1e-8, 1e-8), complex(*rng.normal(size=2))),
                                    tuple(random_extras(rng, p, int(rng.integers(0, 3)))),
                                    sl.NoiseSpec(rng.uniform(0, 0.1), int(rng.integers(0, 2**63))),
                                    _maybe(rng, rng.uniform(1e-18, 1e-12)), _maybe(rng, 0.01),
                                    _maybe(rng, rng.normal()))
            documents.write_scenario(tmp / "c.json", scen)
            if documents.read_scenario(tmp / "c.json") != scen:
                bad.append(f"case {case}: scenario")

            report = {"schema_version": 1, "kind": "sweep_fit",
                      "parameters": {f"{k}_hz": {"value": v, "se": rng.random() * v}
                                     for k, v in p.as_dict().items()},
                      "derived": {"cooperativity": float(rng.uniform(0, 1e4))},
                      "notes": [f"note {case}"]}
            full = documents.validate_report(report)
            documents.write_report(tmp / "r.json", report)
            if documents.read_report(tmp / "r.json") != full:
                bad.append(f"case {case}: report")
    return bad


SUITES = {
    "passivity": check_passivity,
    "scale invariance": check_scale_invariance,
    "mirror symmetry": check_mirror_symmetry,
    "normal-mode root residual": check_root_residual,
    "detailed balance": check_detailed_balance,
    "monotone LM cost": check_monotone_cost,
    "synthesis determinism": check_synthesis_determinism,
    "I/O round trips": check_io_round_trips,
}
