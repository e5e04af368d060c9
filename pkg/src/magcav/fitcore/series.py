"""Linear fits of the size-scaling and temperature series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import physmodel as pm
from ..errors import DomainError, InputError


@dataclass(frozen=True)
class ScalingFit:
    """Through-origin fit g = g0 * sqrt(N(d))."""

    g0: float
    standard_error: float
    residuals: tuple  # (diameter, g - g0 sqrt(N)) per point
    n_points: int

    def summary(self) -> str:
        return f"g0 = {self.g0:.6g} +/- {self.standard_error:.2g} Hz from {self.n_points} points"


@dataclass(frozen=True)
class TemperatureFit:
    """Tanh-law linewidth fit; points above ``cutoff`` only appear in ``residuals``."""

    model: pm.TempModel
    standard_errors: dict
    residuals: tuple  # (T, gamma - model(T), used) for every input point
    cutoff: float
    n_used: int
    active: tuple = field(default=("gamma_tls0", "gamma_mm"))

    @property
    def zero_temperature_linewidth(self) -> float:
        return self.model.gamma_tls0 + self.model.gamma_mm

    @property
    def excluded(self) -> tuple:
        return tuple((t, r) for t, r, used in self.residuals if not used)


def _pairs(points, what):
    arr = np.asarray([(float(a), float(b)) for a, b in points], dtype=float).reshape(-1, 2)
    if arr.shape[0] == 0:
        raise InputError(f"{what} needs at least one point")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{what} points must be finite")
    return arr[:, 0], arr[:, 1]


def _weights(weights, n):
    if weights is None:
        return np.ones(n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,) or not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InputError("weights must be finite, non-negative and one per point")
    return w


def fit_scaling(points, weights=None, spin_density: float = pm.YIG_SPIN_DENSITY,
                relative: bool = False) -> ScalingFit:
    """Weighted least squares of g against sqrt(N(d)) through the origin.

    ``points`` are (diameter in m, coupling in Hz); ``weights`` multiply the
    squared residuals.  ``relative=True`` further divides each weight by N(d),
    which is the right weighting when the scatter on g is a fixed fraction of
    g; with unit weights the largest sphere dominates and the standard error
    comes out too small for such data.  The standard error uses the residual
    scatter and is zero for a single point.
    """
    d, g = _pairs(points, "fit_scaling")
    w = _weights(weights, d.size)
    if np.any(d < 0):
        raise DomainError("diameters must be >= 0")
    x = np.sqrt([pm.spin_count(pm.SphereSpec(di, spin_density)) for di in d])
    if relative:
        w = np.where(x > 0, w / np.where(x > 0, x * x, 1.0), 0.0)
    sxx = float(np.sum(w * x * x))
    if sxx == 0:
        raise DomainError("all abscissae are zero; the slope is undetermined")
    g0 = float(np.sum(w * x * g)) / sxx
    r = g - g0 * x
    used = int(np.count_nonzero(w * x))
    dof = used - 1
    se = math.sqrt(float(np.sum(w * r * r)) / dof / sxx) if dof > 0 else 0.0
    return ScalingFit(g0, se, tuple(zip(d.tolist(), r.tolist())), d.size)


def _lstsq_with_se(design, y, w):
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    r = y - design @ coef
    dof = int(np.count_nonzero(w)) - design.shape[1]
    s2 = float(np.sum(w * r * r)) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.pinv((design * w[:, None]).T @ design)
    return coef, np.sqrt(np.clip(np.diag(cov), 0.0, None))


def fit_temperature(points, f_fmr: float, cutoff: float = 1.0, weights=None,
                    consts: pm.PhysicalConstants = pm.CONSTANTS) -> TemperatureFit:
    """Fit gamma(T) = gamma_tls0 tanh(h f / 2 k_B T) + gamma_mm to points with T <= cutoff.

    The model is linear in both rates, so this is a direct least-squares
    solve.  Should the unconstrained optimum make a rate negative, that rate
    is pinned to zero and the other refitted.
    """
    temps, gamma = _pairs(points, "fit_temperature")
    w_all = _weights(weights, temps.size)
    if np.any(temps < 0):
        raise DomainError("temperatures must be >= 0")
    use = temps <= cutoff
    t, y, w = temps[use], gamma[use], w_all[use]
    if np.unique(t[w > 0]).size < 2:
        raise DomainError(f"need at least two distinct temperatures at or below {cutoff} K")
    probe = pm.TempModel(1.0, 0.0, f_fmr)
    shape = np.atleast_1d(pm.tls_linewidth(t, probe, consts)).astype(float)
    if np.ptp(shape[w > 0]) == 0:
        raise DomainError("tanh factor is identical at every temperature; design is degenerate")

    design = np.column_stack([shape, np.ones_like(shape)])
    coef, se = _lstsq_with_se(design, y, w)
    active = ("gamma_tls0", "gamma_mm")
    if coef[0] < 0 or coef[1] < 0:
        # one of the two rates sits on its zero bound
        candidates = []
        for keep in (0, 1):
            c, s = _lstsq_with_se(design[:, [keep]], y, w)
            c0 = max(float(c[0]), 0.0)
            full = np.zeros(2)
            full[keep] = c0
            err = np.zeros(2)
            err[keep] = s[0]
            candidates.append((float(np.sum(w * (y - design @ full) ** 2)), keep, full, err))
        _, keep, coef, se = min(candidates, key=lambda c: c[0])
        active = (active[keep],)

    model = pm.TempModel(float(coef[0]), float(coef[1]), f_fmr)
    fitted = np.atleast_1d(pm.total_linewidth(temps, model, consts))
    residuals = tuple((float(a), float(b - c), bool(u)) for a, b, c, u in zip(temps, gamma, fitted, use))
    return TemperatureFit(model, {"gamma_tls0": float(se[0]), "gamma_mm": float(se[1])},
                          residuals, float(cutoff), int(use.sum()), active)
