"""Reference parameter sets for the three figure reproductions.

``fig2`` is the 0.5 mm sphere spectroscopy (sweep at degeneracy and the
current map), ``fig3`` the diameter scaling series and ``fig4`` the
low-temperature linewidth series.
"""

from __future__ import annotations

import numpy as np

from . import physmodel as pm
from .fitcore.model import CalibrationNuisance
from .synthlab import MapScenario, NoiseSpec, SweepScenario

# kappa_int is set so that the total cavity linewidth is 2.70 MHz
REF_HYBRID = pm.HybridParams(
    f_c=10.565e9, kappa_1=0.13e6, kappa_2=1.5e6, kappa_int=1.07e6,
    f_fmr=10.565e9, gamma_m=1.1e6, g_m=47e6,
)
REF_CAVITY = pm.CavityGeom(22e-3, 18e-3, 3e-3)
REF_SPHERE = pm.SphereSpec(0.5e-3)
REF_SLOPE_MT_PER_MA = 1.42
REF_PROBE_DBM = -123.0
REF_BASE_TEMPERATURE = 0.010
SPURIOUS_CURRENTS_MA = (-1.6, 2.3, 3.3)
FIG2_CROSS_SECTIONS_MA = (-3.5, -2.3, -1.1, 0.0)

REF_G0 = 39e-3
SCALING_DIAMETERS_M = (0.5e-3, 0.75e-3, 1.0e-3, 1.5e-3)

REF_TEMP_MODEL = pm.TempModel(gamma_tls0=0.63e6, gamma_mm=0.39e6, f_fmr=10.565e9)
# twelve points below the 1 K cutoff plus three above it
TEMPERATURES_K = tuple(np.geomspace(0.01, 1.0, 12).tolist()) + (2.0, 4.0, 8.0)

DEFAULT_SIGMA = 0.002
PRESETS = ("fig2", "fig3", "fig4")


def reference_calib() -> pm.FieldCalib:
    return pm.FieldCalib.from_degeneracy(REF_SLOPE_MT_PER_MA, 0.0, REF_HYBRID.f_c)


def spurious_modes(g_fraction: float = 1.0 / 20.0, gamma: float = 1.1e6) -> tuple:
    return tuple(pm.SpuriousMode(REF_HYBRID.g_m * g_fraction, gamma, crossing_current=c)
                 for c in SPURIOUS_CURRENTS_MA)


def sweep_grid(points: int = 1601, half_span: float = 120e6) -> tuple:
    f_c = REF_HYBRID.f_c
    return tuple(np.linspace(f_c - half_span, f_c + half_span, points).tolist())


def fig2_sweep(sigma: float = DEFAULT_SIGMA, seed: int = 0, current: float = 0.0,
               points: int = 1601, spurious: bool = False) -> SweepScenario:
    """Transmission at one bias current, degeneracy by default.

    The weak extra modes are left out unless ``spurious`` is set, so the
    sweep is described by the two-mode model exactly.
    """
    calib = reference_calib()
    hybrid = REF_HYBRID.replace(f_fmr=pm.kittel_frequency(current, calib))
    extras = tuple(m.at_current(current, calib, REF_HYBRID.f_c)
                   for m in (spurious_modes() if spurious else ()))
    return SweepScenario(hybrid=hybrid, freq_grid=sweep_grid(points), spurious=extras,
                         noise=NoiseSpec(sigma, seed), nuisance=CalibrationNuisance(),
                         probe_power=pm.dbm_to_watts(REF_PROBE_DBM),
                         temperature=REF_BASE_TEMPERATURE, current=current)


def fig2_map(sigma: float = DEFAULT_SIGMA, seed: int = 0, n_currents: int = 41,
             points: int = 801) -> MapScenario:
    """Current x frequency map over -5..5 mA with the three weak extra modes."""
    f_c = REF_HYBRID.f_c
    return MapScenario(hybrid=REF_HYBRID, calib=reference_calib(),
                       currents=tuple(np.linspace(-5.0, 5.0, n_currents).tolist()),
                       freq_grid=tuple(np.linspace(f_c - 235e6, f_c + 235e6, points).tolist()),
                       spurious=spurious_modes(), noise=NoiseSpec(sigma, seed),
                       probe_power=pm.dbm_to_watts(REF_PROBE_DBM),
                       temperature=REF_BASE_TEMPERATURE)
