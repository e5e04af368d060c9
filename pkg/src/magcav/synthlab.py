"""Seeded virtual experiments: sweeps, current maps, scaling and temperature series."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import physmodel as pm
from .errors import InputError, SingularModelError
from .fitcore.model import IDENTITY, CalibrationNuisance
from .records import MapData, Sweep
from .rng import NormalStream

__all__ = [
    "NoiseSpec",
    "SweepScenario",
    "MapScenario",
    "gen_sweep",
    "gen_map",
    "gen_scaling_series",
    "gen_temperature_series",
    "param_labels",
]


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise level and seed.

    For S21 data ``sigma`` is the standard deviation of each quadrature; for
    series it is in the series' own units (relative for couplings, Hz for
    linewidths).
    """

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise InputError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if not -(2**63) <= int(self.seed) < 2**64:
            raise InputError("seed must fit in 64 bits")


@dataclass(frozen=True)
class SweepScenario:
    hybrid: pm.HybridParams
    freq_grid: tuple
    nuisance: CalibrationNuisance = IDENTITY
    spurious: tuple = ()
    noise: NoiseSpec = NoiseSpec()
    probe_power: float | None = None
    temperature: float | None = None
    current: float | None = None


@dataclass(frozen=True)
class MapScenario:
    """A current x frequency experiment.

    ``hybrid.f_fmr`` is ignored: each column uses the Kittel frequency from
    ``calib``.  Spurious modes are given by crossing current.  ``probe_power``
    is in W at the cavity input.
    """

    hybrid: pm.HybridParams
    calib: pm.FieldCalib
    currents: tuple
    freq_grid: tuple
    spurious: tuple = ()
    nuisance: CalibrationNuisance = IDENTITY
    noise: NoiseSpec = NoiseSpec()
    probe_power: float | None = None
    temperature: float | None = None

    def __post_init__(self):
        for name in ("currents", "freq_grid"):
            values = np.asarray(getattr(self, name), dtype=float)
            if values.ndim != 1 or values.size == 0:
                raise InputError(f"{name} must be non-empty")
            if values.size > 1 and not np.all(np.diff(values) > 0):
                raise InputError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, tuple(values.tolist()))
        object.__setattr__(self, "spurious", tuple(self.spurious))

    def column_params(self, index: int, consts=pm.CONSTANTS):
        current = self.currents[index]
        hybrid = self.hybrid.replace(f_fmr=pm.kittel_frequency(current, self.calib, consts))
        extras = [m.at_current(current, self.calib, self.hybrid.f_c, consts) for m in self.spurious]
        return hybrid, extras


def _fmt(x) -> str:
    return format(float(x), ".17g")


def param_labels(p: pm.HybridParams, nuisance: CalibrationNuisance = IDENTITY, sigma=None) -> dict:
    """Generating parameters as string labels for file metadata."""
    labels = {f"{k}_hz": _fmt(v) for k, v in p.as_dict().items()}
    labels.update({
        "nuisance_amplitude": _fmt(nuisance.amplitude),
        "nuisance_phase_rad": _fmt(nuisance.phase),
        "nuisance_delay_s": _fmt(nuisance.electrical_delay),
        "nuisance_background_re": _fmt(nuisance.background.real),
        "nuisance_background_im": _fmt(nuisance.background.imag),
    })
    if sigma is not None:
        labels["noise_sigma"] = _fmt(sigma)
    return labels


def _model(grid, p, extras, nuisance):
    try:
        clean = pm.transmission_multimode(grid, p, extras)
    except SingularModelError as exc:
        raise SingularModelError(f"singular model on grid point {exc.frequency!r} Hz",
                                 frequency=exc.frequency) from exc
    return nuisance.apply(grid, np.asarray(clean))


def _add_noise(values, sigma, seed, stream):
    if sigma == 0:
        return values
    z = NormalStream(seed, stream).normal(2 * values.size)
    return values + sigma * (z[0::2] + 1j * z[1::2])


def gen_sweep(p: pm.HybridParams, nuisance: CalibrationNuisance, grid, noise: NoiseSpec,
              extras=(), *, stream: int = 0, current=None, power_dbm=None,
              temperature=None, labels=None) -> Sweep:
    """One synthetic S21 trace; sigma = 0 gives the model exactly."""
    grid = np.asarray(grid, dtype=float)
    data = _add_noise(_model(grid, p, extras, nuisance), noise.sigma, noise.seed, stream)
    meta = param_labels(p, nuisance, noise.sigma)
    meta.update(labels or {})
    return Sweep(grid, data, current_ma=current, temperature_k=temperature,
                 power_dbm=power_dbm, seed=noise.seed, labels=meta)


def simulate(s: SweepScenario) -> Sweep:
    power = None if s.probe_power is None else pm.watts_to_dbm(s.probe_power)
    return gen_sweep(s.hybrid, s.nuisance, s.freq_grid, s.noise, s.spurious,
                     current=s.current, power_dbm=power, temperature=s.temperature)


def gen_map(s: MapScenario, workers: int = 1) -> MapData:
    """Generate every column of ``s``; noise stream k belongs to column k, so
    the result does not depend on ``workers``."""
    grid = np.asarray(s.freq_grid)

    def column(index):
        hybrid, extras = s.column_params(index)
        clean = _model(grid, hybrid, extras, s.nuisance)
        return _add_noise(clean, s.noise.sigma, s.noise.seed, index)

    indices = range(len(s.currents))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(column, indices))
    else:
        rows = [column(i) for i in indices]

    labels = param_labels(s.hybrid, s.nuisance, s.noise.sigma)
    del labels["f_fmr_hz"]
    labels["calib_slope_mt_per_ma"] = _fmt(s.calib.slope)
    labels["calib_degeneracy_ma"] = _fmt(s.calib.current_at_degeneracy)
    power = None if s.probe_power is None else pm.watts_to_dbm(s.probe_power)
    return MapData(np.asarray(s.currents), grid, np.vstack(rows), temperature_k=s.temperature,
                   power_dbm=power, seed=s.noise.seed, labels=labels)


def gen_scaling_series(diameters, g0: float, noise: NoiseSpec = NoiseSpec(),
                       spin_density: float = pm.YIG_SPIN_DENSITY):
    """(diameter, coupling) pairs with multiplicative noise on the coupling."""
    diameters = [float(d) for d in diameters]
    z = NormalStream(noise.seed).normal(len(diameters))
    out = []
    for d, dz in zip(diameters, z):
        g = pm.coupling_from_sphere(None, None, pm.SphereSpec(d, spin_density), g0=g0)
        out.append((d, g * (1.0 + noise.sigma * dz) if noise.sigma else g))
    return out


def gen_temperature_series(temps, m: pm.TempModel, noise: NoiseSpec = NoiseSpec()):
    """(temperature, linewidth) pairs with additive noise (sigma in Hz)."""
    temps = [float(t) for t in temps]
    gamma = np.atleast_1d(pm.total_linewidth(np.asarray(temps), m))
    if noise.sigma:
        gamma = gamma + noise.sigma * NormalStream(noise.seed).normal(len(temps))
    return [(t, float(g)) for t, g in zip(temps, gamma)]
