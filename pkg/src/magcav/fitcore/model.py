"""Instrument transfer function wrapped around the physical S21."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .. import physmodel as pm
from ..errors import InputError


@dataclass(frozen=True)
class CalibrationNuisance:
    """Line transfer ``amplitude * exp(i(phase - 2 pi f delay)) * S21 + background``.

    ``phase`` is referenced to f = 0, ``electrical_delay`` is in seconds.
    """

    amplitude: float = 1.0
    phase: float = 0.0
    electrical_delay: float = 0.0
    background: complex = 0j

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise InputError(f"amplitude must be finite and > 0, got {self.amplitude!r}")
        if not (math.isfinite(self.phase) and math.isfinite(self.electrical_delay)):
            raise InputError("phase and delay must be finite")
        bg = complex(self.background)
        if not cmath.isfinite(bg):
            raise InputError("background must be finite")
        object.__setattr__(self, "background", bg)

    def factor(self, f):
        f = np.asarray(f, dtype=float)
        return self.amplitude * np.exp(1j * (self.phase - 2.0 * np.pi * f * self.electrical_delay))

    def apply(self, f, s21):
        return self.factor(f) * s21 + self.background


IDENTITY = CalibrationNuisance()


def wrap_phase(phi: float) -> float:
    """Map an angle onto (-pi, pi]."""
    wrapped = math.remainder(phi, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def transmission_derivatives(f, p: pm.HybridParams) -> dict:
    """Analytic partial derivatives of S21 with respect to each parameter.

    A cross-check for the finite-difference Jacobians used by the fitters;
    S21 = N/D with N = sqrt(kappa_1 kappa_2), D = i(f - f_c) - kappa/2 + g^2/M
    and M = i(f - f_fmr) - gamma/2.
    """
    f = np.asarray(f, dtype=float)
    n = math.sqrt(p.kappa_1 * p.kappa_2)
    m = 1j * (f - p.f_fmr) - p.gamma_m / 2.0
    d = np.asarray(pm.denominator(f, p))
    common = -n / d**2  # dS/dD
    g2 = p.g_m * p.g_m
    out = {
        "f_c": common * (-1j),
        "kappa_int": common * (-0.5),
        "f_fmr": common * (1j * g2 / m**2),
        "gamma_m": common * (g2 / (2.0 * m**2)),
        "g_m": common * (2.0 * p.g_m / m),
    }
    for own, other in (("kappa_1", p.kappa_2), ("kappa_2", p.kappa_1)):
        dn = other / (2.0 * n) if n > 0 else np.inf
        out[own] = dn / d + common * (-0.5)
    return out
