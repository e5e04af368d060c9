"""Closed-form physics of a magnon mode coupled to a microwave cavity mode.

Every frequency, decay rate and coupling is an ordinary frequency in Hz
(angular quantities divided by 2*pi).  The transmission model is a ratio of
rates, so no factors of 2*pi appear in it; thermal quantities use h*f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.constants as sc

from .errors import DomainError, InputError, SingularModelError

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "HybridParams",
    "SpuriousMode",
    "CavityGeom",
    "SphereSpec",
    "FieldCalib",
    "TempModel",
    "G0_CONVENTION_NOTE",
    "YIG_SPIN_DENSITY",
    "transmission",
    "transmission_multimode",
    "reflection",
    "denominator",
    "normal_modes",
    "normal_modes_multimode",
    "kittel_frequency",
    "spin_count",
    "single_spin_coupling",
    "coupling_from_sphere",
    "cooperativity",
    "tls_linewidth",
    "total_linewidth",
    "thermal_occupation",
    "intracavity_photons",
    "dbm_to_watts",
    "watts_to_dbm",
]

# Bohr magnetons per m^3 (2.1e22 per cm^3)
YIG_SPIN_DENSITY = 2.1e28

G0_CONVENTION_NOTE = (
    "g0 convention: g0 = (gamma_e/2) * sqrt(mu0*h*f_c/V_c); the factor 1/2 "
    "reproduces the quoted 38 mHz for the 22x18x3 mm TE101 cavity, while the "
    "same expression without it evaluates to 76 mHz."
)


@dataclass(frozen=True)
class PhysicalConstants:
    planck_h: float = sc.h
    boltzmann_kB: float = sc.k
    vacuum_permeability_mu0: float = sc.mu_0
    # electron gyromagnetic ratio / 2pi, Hz/T
    gyromagnetic_gamma_e: float = 28.0e9

    def __post_init__(self):
        for name in ("planck_h", "boltzmann_kB", "vacuum_permeability_mu0", "gyromagnetic_gamma_e"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InputError(f"{name} must be finite and positive, got {value!r}")


CONSTANTS = PhysicalConstants()


def _check_rate(name, value, strict=False):
    if not math.isfinite(value) or value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise InputError(f"{name} must be finite and {bound}, got {value!r}")


@dataclass(frozen=True)
class HybridParams:
    """The seven parameters of the hybrid transmission model, all in Hz."""

    f_c: float
    kappa_1: float
    kappa_2: float
    kappa_int: float
    f_fmr: float
    gamma_m: float
    g_m: float

    def __post_init__(self):
        _check_rate("f_c", self.f_c, strict=True)
        _check_rate("f_fmr", self.f_fmr, strict=True)
        for name in ("kappa_1", "kappa_2", "kappa_int", "gamma_m", "g_m"):
            _check_rate(name, getattr(self, name))

    def kappa_total(self) -> float:
        return self.kappa_1 + self.kappa_2 + self.kappa_int

    def replace(self, **changes) -> "HybridParams":
        values = self.as_dict()
        values.update(changes)
        return HybridParams(**values)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    def scaled(self, factor: float) -> "HybridParams":
        return HybridParams(**{k: v * factor for k, v in self.as_dict().items()})


@dataclass(frozen=True)
class SpuriousMode:
    """An extra magnetostatic mode weakly coupled to the cavity.

    Either ``f_mode`` (Hz) is given directly or ``crossing_current`` (mA), the
    bias current at which the mode crosses the cavity; the latter is turned
    into a frequency with a :class:`FieldCalib` (see ``at_current``).
    """

    g: float
    gamma: float
    f_mode: float | None = None
    crossing_current: float | None = None

    def __post_init__(self):
        _check_rate("g", self.g)
        _check_rate("gamma", self.gamma, strict=True)
        if self.f_mode is None and self.crossing_current is None:
            raise InputError("spurious mode needs f_mode or crossing_current")
        if self.f_mode is not None:
            _check_rate("f_mode", self.f_mode, strict=True)

    def at_current(self, current: float, calib: "FieldCalib", f_c: float,
                   consts: PhysicalConstants = CONSTANTS) -> "SpuriousMode":
        """Resolve to a fixed frequency at bias ``current``.

        The mode tunes with the same field slope as the Kittel mode and
        coincides with the cavity frequency at its crossing current.
        """
        if self.crossing_current is None:
            return self
        df_di = consts.gyromagnetic_gamma_e * calib.slope * 1e-3
        f_mode = f_c + df_di * (current - self.crossing_current)
        return SpuriousMode(g=self.g, gamma=self.gamma, f_mode=f_mode,
                            crossing_current=self.crossing_current)


@dataclass(frozen=True)
class CavityGeom:
    """Rectangular cavity dimensions in metres."""

    lx: float
    ly: float
    lz: float

    def __post_init__(self):
        for name in ("lx", "ly", "lz"):
            _check_rate(name, getattr(self, name), strict=True)

    @property
    def volume(self) -> float:
        return self.lx * self.ly * self.lz


@dataclass(frozen=True)
class SphereSpec:
    diameter: float
    spin_density: float = YIG_SPIN_DENSITY

    def __post_init__(self):
        _check_rate("diameter", self.diameter)
        _check_rate("spin_density", self.spin_density, strict=True)

    @property
    def volume(self) -> float:
        return math.pi / 6.0 * self.diameter**3


@dataclass(frozen=True)
class FieldCalib:
    """Linear bias-current to static-field calibration.

    slope in mT/mA, current_at_degeneracy in mA, field_offset in mT (the
    effective field at zero current, anisotropy included).
    """

    slope: float
    current_at_degeneracy: float
    field_offset: float

    def __post_init__(self):
        if not math.isfinite(self.slope) or self.slope == 0:
            raise InputError(f"slope must be finite and non-zero, got {self.slope!r}")
        if not (math.isfinite(self.current_at_degeneracy) and math.isfinite(self.field_offset)):
            raise InputError("calibration values must be finite")

    @classmethod
    def from_degeneracy(cls, slope: float, current_at_degeneracy: float, f_c: float,
                        consts: PhysicalConstants = CONSTANTS) -> "FieldCalib":
        """Build the calibration whose Kittel frequency equals ``f_c`` at the
        degeneracy current."""
        field_at_degeneracy = f_c / consts.gyromagnetic_gamma_e * 1e3
        return cls(slope, current_at_degeneracy, field_at_degeneracy - slope * current_at_degeneracy)

    def field(self, current):
        """Effective static field in mT."""
        return self.field_offset + self.slope * np.asarray(current, dtype=float)


@dataclass(frozen=True)
class TempModel:
    gamma_tls0: float
    gamma_mm: float
    f_fmr: float

    def __post_init__(self):
        _check_rate("gamma_tls0", self.gamma_tls0)
        _check_rate("gamma_mm", self.gamma_mm)
        _check_rate("f_fmr", self.f_fmr, strict=True)


def _scalar_or_array(values):
    return values.item() if values.ndim == 0 else values


def _magnon_term(f, f_k, g_k, gamma_k):
    pole = 1j * (f - f_k) - gamma_k / 2.0
    if g_k != 0 and gamma_k == 0:
        hit = np.asarray(pole == 0)
        if hit.any():
            bad = np.asarray(f)[hit].ravel()[0]
            raise SingularModelError(
                f"undamped mode at {f_k!r} Hz has a pole at probe frequency {bad!r} Hz",
                frequency=bad)
    if g_k == 0:
        return np.zeros_like(pole)
    return (g_k * g_k) / pole


def denominator(f, p: HybridParams, extras=()):
    """Denominator of the transmission model, i(f-f_c) - kappa/2 + sum of
    magnon terms.  ``f`` may be complex (used for normal-mode checks)."""
    f = np.asarray(f)
    d = 1j * (f - p.f_c) - p.kappa_total() / 2.0
    d = d + _magnon_term(f, p.f_fmr, p.g_m, p.gamma_m)
    for mode in extras:
        if mode.f_mode is None:
            raise InputError("spurious mode frequency unresolved; call at_current() first")
        d = d + _magnon_term(f, mode.f_mode, mode.g, mode.gamma)
    return d


def _checked_denominator(f, p, extras):
    d = denominator(f, p, extras)
    zero = d == 0
    if np.any(zero):
        bad = np.asarray(f)[zero].ravel()[0] if np.ndim(f) else f
        raise SingularModelError(f"model denominator vanishes at {bad!r} Hz", frequency=bad)
    return d


def transmission_multimode(f, p: HybridParams, extras=()):
    """S21 with additional weakly coupled modes added to the denominator."""
    f = np.asarray(f, dtype=float)
    d = _checked_denominator(f, p, extras)
    return _scalar_or_array(np.sqrt(p.kappa_1 * p.kappa_2) / d)


def transmission(f, p: HybridParams):
    """Complex transmission S21 of the cavity loaded by the magnon mode.

    >>> p = HybridParams(10e9, 1e6, 1e6, 0.0, 11e9, 1e6, 0.0)
    >>> abs(transmission(10e9, p))
    1.0
    """
    return transmission_multimode(f, p, ())


def reflection(f, p: HybridParams, extras=()):
    """One-port reflection S11 = 1 + kappa_1/D, so that |S11| <= 1."""
    f = np.asarray(f, dtype=float)
    d = _checked_denominator(f, p, extras)
    return _scalar_or_array(1.0 + p.kappa_1 / d)


def normal_modes(p: HybridParams):
    """Complex normal-mode frequencies (lower, upper).

    The denominator vanishes where (f - z)(f - w) = g^2 with
    z = f_c - i kappa/2 and w = f_fmr - i gamma/2.  Real parts are the mode
    frequencies, -2*imag parts the mode linewidths.
    """
    z = complex(p.f_c, -p.kappa_total() / 2.0)
    w = complex(p.f_fmr, -p.gamma_m / 2.0)
    half = (z - w) / 2.0
    root = np.sqrt(half * half + p.g_m * p.g_m)
    if root.real < 0:
        root = -root
    mid = (z + w) / 2.0
    lower, upper = mid - root, mid + root
    if lower.real > upper.real:
        lower, upper = upper, lower
    return complex(lower), complex(upper)


def normal_modes_multimode(p: HybridParams, extras=()):
    """All complex normal modes including spurious ones, sorted by real part."""
    modes = [(p.f_fmr, p.gamma_m, p.g_m)] + [(m.f_mode, m.gamma, m.g) for m in extras]
    n = len(modes) + 1
    ref = p.f_c
    mat = np.zeros((n, n), dtype=complex)
    mat[0, 0] = -0.5j * p.kappa_total()
    for k, (f_k, gamma_k, g_k) in enumerate(modes, start=1):
        if f_k is None:
            raise InputError("spurious mode frequency unresolved; call at_current() first")
        mat[k, k] = (f_k - ref) - 0.5j * gamma_k
        mat[0, k] = mat[k, 0] = g_k
    eig = np.linalg.eigvals(mat) + ref
    return eig[np.argsort(eig.real)]


def kittel_frequency(current, calib: FieldCalib, consts: PhysicalConstants = CONSTANTS):
    """Kittel-mode frequency in Hz at bias current(s) in mA."""
    f = consts.gyromagnetic_gamma_e * calib.field(current) * 1e-3
    return _scalar_or_array(np.asarray(f))


def spin_count(s: SphereSpec) -> float:
    """Number of net Bohr-magneton spins in the sphere."""
    return s.spin_density * s.volume


def single_spin_coupling(cavity: CavityGeom, f_c: float,
                         consts: PhysicalConstants = CONSTANTS) -> float:
    """Coupling of one Bohr magneton to the cavity mode, in Hz.

    Uses the half-factor convention described in ``G0_CONVENTION_NOTE``.
    """
    _check_rate("f_c", f_c, strict=True)
    vacuum = consts.vacuum_permeability_mu0 * consts.planck_h * f_c / cavity.volume
    return 0.5 * consts.gyromagnetic_gamma_e * math.sqrt(vacuum)


def coupling_from_sphere(cavity: CavityGeom | None, f_c: float | None, sphere: SphereSpec,
                         consts: PhysicalConstants = CONSTANTS, g0: float | None = None) -> float:
    """Collective coupling g0*sqrt(N); pass ``g0`` to override the computed
    single-spin value (e.g. with a fitted one)."""
    if g0 is None:
        if cavity is None or f_c is None:
            raise InputError("need cavity and f_c, or an explicit g0")
        g0 = single_spin_coupling(cavity, f_c, consts)
    _check_rate("g0", g0)
    return g0 * math.sqrt(spin_count(sphere))


def cooperativity(g_m: float, kappa_total: float, gamma_m: float) -> float:
    if not (kappa_total > 0 and gamma_m > 0):
        raise DomainError(
            f"cooperativity needs positive linewidths, got kappa={kappa_total!r}, gamma={gamma_m!r}")
    return 4.0 * g_m * g_m / (kappa_total * gamma_m)


def _reduced_energy(f, T, consts):
    """h f / (k_B T) as an array; inf where T == 0."""
    f = np.asarray(f, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(T < 0):
        raise DomainError("temperature must be >= 0")
    with np.errstate(divide="ignore"):
        return consts.planck_h * f / (consts.boltzmann_kB * T)


def tls_linewidth(T, m: TempModel, consts: PhysicalConstants = CONSTANTS):
    """Two-level-system contribution gamma_TLS(0) * tanh(h f / 2 k_B T)."""
    x = _reduced_energy(m.f_fmr, T, consts)
    return _scalar_or_array(m.gamma_tls0 * np.tanh(x / 2.0))


def total_linewidth(T, m: TempModel, consts: PhysicalConstants = CONSTANTS):
    return _scalar_or_array(np.asarray(tls_linewidth(T, m, consts)) + m.gamma_mm)


def thermal_occupation(f, T, consts: PhysicalConstants = CONSTANTS):
    """Bose-Einstein occupation 1/(exp(hf/k_BT) - 1); zero at T = 0."""
    if np.any(np.asarray(f) <= 0):
        raise DomainError("frequency must be > 0")
    x = _reduced_energy(f, T, consts)
    with np.errstate(over="ignore", divide="ignore"):
        n = 1.0 / np.expm1(x)
    return _scalar_or_array(np.asarray(n))


def dbm_to_watts(dbm):
    return _scalar_or_array(1e-3 * 10.0 ** (np.asarray(dbm, dtype=float) / 10.0))


def watts_to_dbm(watts):
    return _scalar_or_array(10.0 * np.log10(np.asarray(watts, dtype=float) / 1e-3))


def intracavity_photons(p_in, f_probe, p: HybridParams,
                        consts: PhysicalConstants = CONSTANTS, extras=()):
    """Mean cavity photon number for a probe of power ``p_in`` (W) at port 1.

    Steady state of the driven cavity amplitude with angular rates; written
    with /2pi rates this is kappa_1 P / (2 pi h f |D|^2), which on bare-cavity
    resonance reduces to 4 kappa_1 P / (2 pi h f kappa^2).
    """
    p_in = np.asarray(p_in, dtype=float)
    if np.any(p_in < 0):
        raise DomainError("probe power must be >= 0")
    d = _checked_denominator(np.asarray(f_probe, dtype=float), p, extras)
    flux = p.kappa_1 * p_in / (consts.planck_h * np.asarray(f_probe, dtype=float))
    return _scalar_or_array(np.asarray(flux / (2.0 * math.pi * np.abs(d) ** 2)))
