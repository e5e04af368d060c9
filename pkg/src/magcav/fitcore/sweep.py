"""Fits of the hybrid transmission model to single sweeps and current maps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .. import physmodel as pm
from ..errors import FitError, InputError, MagcavError, MapFitError
from ..records import MapData, Sweep
from .guess import initial_guess, linear_scale, prominent_peaks
from .lm import FitOptions, FitResult, covariance_from_jacobian, jacobian_fd, lm_minimize
from .model import CalibrationNuisance, wrap_phase

PHYSICAL = ("f_c", "kappa_1", "kappa_2", "kappa_int", "f_fmr", "gamma_m", "g_m")
NUISANCE = ("amplitude", "phase", "electrical_delay", "background_re", "background_im")

# internal coordinate of each parameter
_KIND = {
    "f_c": "freq", "f_fmr": "freq",
    "kappa_1": "log", "kappa_2": "log", "kappa_int": "log", "gamma_m": "log",
    "g_m": "coupling",
    "amplitude": "logamp", "phase": "phase", "electrical_delay": "delay",
    "background_re": "lin", "background_im": "lin",
}
_LOG_FLOOR = 1e-12  # relative to the frequency scale
_EXP_MAX = 700.0
_LOG_MIN = math.log(_LOG_FLOOR)
_RATIO_MAX = 60.0
OUTLIER_PULL = 8.0  # map columns further than this from the line are refitted


class _Packing:
    """Map between physical values and well-scaled internal coordinates.

    Frequencies become offsets from the grid centre in units of the grid
    span, rates their logarithms, the delay a phase slope across the span,
    and the phase is referenced to the grid centre.
    """

    def __init__(self, freqs, free, fixed_values):
        self.f0 = 0.5 * (freqs[0] + freqs[-1])
        self.w = float(freqs[-1] - freqs[0]) or 1.0
        self.free = list(free)
        self.fixed = dict(fixed_values)
        # With both free, kappa_int and gamma_m are carried as ln(sum) and
        # ln(gamma_m / kappa_int).  Near degeneracy only their sum is well
        # determined; the valley of constant sum is then a coordinate line.
        self.paired = "kappa_int" in self.free and "gamma_m" in self.free

    def to_internal(self, values):
        return np.array([self._fwd(name, values) for name in self.free])

    def _fwd(self, name, v):
        kind = _KIND[name]
        x = v[name]
        if self.paired and name in ("kappa_int", "gamma_m"):
            k = max(v["kappa_int"], _LOG_FLOOR * self.w)
            g = max(v["gamma_m"], _LOG_FLOOR * self.w)
            return math.log((k + g) / self.w) if name == "kappa_int" else math.log(g / k)
        if kind == "freq":
            return (x - self.f0) / self.w
        if kind == "log":
            return math.log(max(x, _LOG_FLOOR * self.w) / self.w)
        if kind == "coupling":
            return x / self.w
        if kind == "logamp":
            return math.log(x)
        if kind == "phase":
            return v["phase"] - 2.0 * math.pi * self.f0 * v["electrical_delay"]
        if kind == "delay":
            return 2.0 * math.pi * x * self.w
        return x

    def to_values(self, u):
        v = dict(self.fixed)
        for name, x in zip(self.free, u):
            kind = _KIND[name]
            if kind == "freq":
                v[name] = self.f0 + self.w * x
            elif kind == "log" and self.paired and name == "gamma_m":
                v[name] = x  # log ratio, resolved below
            elif kind == "log":
                v[name] = self.w * math.exp(min(max(x, _LOG_MIN), _EXP_MAX))
            elif kind == "coupling":
                v[name] = self.w * x
            elif kind == "logamp":
                v[name] = math.exp(min(x, _EXP_MAX))
            elif kind == "delay":
                v[name] = x / (2.0 * math.pi * self.w)
            else:
                v[name] = x
        if self.paired:
            total = v["kappa_int"]
            ratio = min(max(v["gamma_m"], -_RATIO_MAX), _RATIO_MAX)
            v["kappa_int"] = total / (1.0 + math.exp(ratio))
            v["gamma_m"] = total / (1.0 + math.exp(-ratio))
        if "phase" in self.free:
            # stored internally at f0; report referenced to f = 0
            v["phase"] = v["phase"] + 2.0 * math.pi * self.f0 * v["electrical_delay"]
        return v

    def to_linear(self, u):
        """Coordinates y that are linear in the reported values (see
        ``linear_coordinates``)."""
        v = self.to_values(u)
        y = np.array(u, dtype=float)
        for j, name in enumerate(self.free):
            kind = _KIND[name]
            if kind == "log":
                y[j] = v[name] / self.w
            elif kind == "logamp":
                y[j] = v[name]
        return y

    def from_linear(self, y):
        u = np.array(y, dtype=float)
        tiny = _LOG_FLOOR
        for j, name in enumerate(self.free):
            kind = _KIND[name]
            if kind in ("log", "logamp"):
                u[j] = math.log(max(y[j], tiny))
        if self.paired:
            jk, jg = self.free.index("kappa_int"), self.free.index("gamma_m")
            k, g = max(y[jk], tiny), max(y[jg], tiny)
            u[jk], u[jg] = math.log(k + g), math.log(g / k)
        return u

    def linear_coordinates(self, u):
        """Linear coordinates y (u for every parameter except log-scaled ones,
        where y = exp(u)): a mask of the log-scaled entries and the matrix M
        with reported values = M y + const.

        Covariances are formed in y so that a rate sitting at its positivity
        floor keeps an honest (linear-scale) standard error.
        """
        names = list(PHYSICAL + NUISANCE) + ["kappa_total"]
        is_log = np.zeros(len(self.free), dtype=bool)
        mat = np.zeros((len(names), len(self.free)))
        for j, name in enumerate(self.free):
            kind = _KIND[name]
            row = names.index(name)
            is_log[j] = kind in ("log", "logamp")
            if kind in ("freq", "log"):
                mat[row, j] = self.w
            elif kind == "coupling":
                mat[row, j] = self.w * (1.0 if u[j] >= 0 else -1.0)
            elif kind == "delay":
                mat[row, j] = 1.0 / (2.0 * math.pi * self.w)
                if "phase" in self.free:
                    mat[names.index("phase"), j] = self.f0 / self.w
            else:
                mat[row, j] = 1.0
            if name in ("kappa_1", "kappa_2", "kappa_int"):
                mat[names.index("kappa_total"), j] = mat[row, j]
        return names, is_log, mat


def _values_from(params: pm.HybridParams, nuisance: CalibrationNuisance):
    v = params.as_dict()
    v.update(amplitude=nuisance.amplitude, phase=nuisance.phase,
             electrical_delay=nuisance.electrical_delay,
             background_re=nuisance.background.real, background_im=nuisance.background.imag)
    return v


def _split(values):
    try:
        params = pm.HybridParams(**{k: abs(values[k]) if k == "g_m" else values[k] for k in PHYSICAL})
    except InputError as exc:
        raise FitError(f"fit left the physical domain: {exc}") from None
    nuisance = CalibrationNuisance(
        amplitude=values["amplitude"], phase=wrap_phase(values["phase"]),
        electrical_delay=values["electrical_delay"],
        background=complex(values["background_re"], values["background_im"]))
    return params, nuisance


def _model_from_internal(freqs, pack: _Packing, u):
    """Complex model on the grid; the phase ramp is evaluated about f0."""
    v = pack.to_values(u)
    kappa = v["kappa_1"] + v["kappa_2"] + v["kappa_int"]
    den = (1j * (freqs - v["f_c"]) - kappa / 2.0
           + v["g_m"] ** 2 / (1j * (freqs - v["f_fmr"]) - v["gamma_m"] / 2.0))
    s21 = math.sqrt(v["kappa_1"] * v["kappa_2"]) / den
    phase_at_f0 = v["phase"] - 2.0 * math.pi * pack.f0 * v["electrical_delay"]
    factor = v["amplitude"] * np.exp(1j * (phase_at_f0 - 2.0 * math.pi * (freqs - pack.f0) * v["electrical_delay"]))
    return factor * s21 + complex(v["background_re"], v["background_im"])


@dataclass
class SweepFitResult:
    params: pm.HybridParams
    nuisance: CalibrationNuisance
    standard_errors: dict
    residual_norm: float
    iterations: int
    converged: bool
    stop_reason: str
    free: list
    covariance: np.ndarray
    options: FitOptions
    n_points: int
    low_confidence: bool = False
    lm: FitResult | None = field(default=None, repr=False)

    @property
    def kappa_total(self) -> float:
        return self.params.kappa_total()

    def cooperativity(self) -> float:
        return pm.cooperativity(self.params.g_m, self.kappa_total, self.params.gamma_m)

    def splitting(self) -> float:
        """Normal-mode splitting 2g in Hz."""
        return 2.0 * self.params.g_m

    def summary(self) -> dict:
        out = {"params": self.params.as_dict(),
               "nuisance": {"amplitude": self.nuisance.amplitude, "phase": self.nuisance.phase,
                            "electrical_delay": self.nuisance.electrical_delay,
                            "background_re": self.nuisance.background.real,
                            "background_im": self.nuisance.background.imag},
               "standard_errors": dict(self.standard_errors),
               "residual_norm": self.residual_norm, "iterations": self.iterations,
               "converged": self.converged, "stop_reason": self.stop_reason,
               "free": list(self.free), "n_points": self.n_points,
               "low_confidence": self.low_confidence}
        return out


def _port_couplings(sweep, init, port_couplings):
    if port_couplings is not None:
        return tuple(float(k) for k in port_couplings)
    if init is not None:
        return init.kappa_1, init.kappa_2
    k1, k2 = sweep.label_float("kappa_1_hz"), sweep.label_float("kappa_2_hz")
    if k1 is None or k2 is None:
        raise InputError("port couplings kappa_1, kappa_2 are not identifiable from S21 alone; "
                         "pass port_couplings (e.g. from a reflection measurement)")
    return k1, k2


def fit_sweep(sweep: Sweep, init: pm.HybridParams | None = None, opts: FitOptions | None = None,
              *, nuisance: CalibrationNuisance | None = None, port_couplings=None,
              fit_delay: bool = True, fit_background: bool = False,
              magnitude_only: bool = False, fixed=()) -> SweepFitResult:
    """Fit the hybrid transmission model to one complex sweep.

    The port couplings enter S21 only through sqrt(kappa_1 kappa_2), which
    is degenerate with the line amplitude, so they are held at known values
    (``port_couplings``, else ``init``, else the sweep's ``kappa_*_hz``
    labels).  All other physical parameters are free unless named in
    ``fixed``.  Residuals are stacked real and imaginary parts, or magnitude
    differences when ``magnitude_only``.

    The additive background is off by default: together with a free delay
    it makes the kappa_int / gamma_m split unidentifiable to first order
    when the data carry no delay.
    """
    opts = opts or FitOptions()
    freqs, data = sweep.freqs, sweep.s21
    k1, k2 = _port_couplings(sweep, init, port_couplings)
    low = False
    if init is None:
        guess = initial_guess(sweep, k1, k2)
        start, low = guess.params, guess.low_confidence
        start_nuisance = nuisance or guess.nuisance
    else:
        start = init.replace(kappa_1=k1, kappa_2=k2)
        start_nuisance = nuisance
    if start.g_m == 0:
        # g = 0 is a stationary point of a g^2 model; nudge it off
        start = start.replace(g_m=0.1 * start.kappa_total() + 1e-6 * (freqs[-1] - freqs[0]))
    if start_nuisance is None:
        model = np.asarray(pm.transmission(freqs, start))
        c = linear_scale(freqs, data, model)
        start_nuisance = CalibrationNuisance(amplitude=abs(c) or 1.0, phase=float(np.angle(c)))

    free = [n for n in PHYSICAL if n not in ("kappa_1", "kappa_2") and n not in fixed]
    free.append("amplitude")
    if not magnitude_only:
        free.append("phase")
        if fit_delay:
            free.append("electrical_delay")
        if fit_background:
            free += ["background_re", "background_im"]
    free = [n for n in free if n not in fixed]
    if nuisance is None:
        # nuisances that are not fitted keep their identity values rather
        # than the rough guesses
        held = {}
        if "electrical_delay" not in free:
            held["electrical_delay"] = 0.0
        if "background_re" not in free:
            held["background"] = complex(0.0, start_nuisance.background.imag)
        if "background_im" not in free:
            held["background"] = complex(held.get("background", start_nuisance.background).real, 0.0)
        start_nuisance = replace(start_nuisance, **held)

    values = _values_from(start.replace(kappa_1=k1, kappa_2=k2), start_nuisance)
    pack = _Packing(freqs, free, values)
    u0 = pack.to_internal(values)

    if magnitude_only:
        target = np.abs(data)

        def residual(u):
            return np.abs(_model_from_internal(freqs, pack, u)) - target
    else:
        def residual(u):
            diff = _model_from_internal(freqs, pack, u) - data
            return np.concatenate([diff.real, diff.imag])

    if pack.paired:
        # The kappa_int / gamma_m split is weakly determined and, from a
        # start away from the optimum, drifts to an extreme.  Settle
        # everything else at the starting split first.
        j = pack.free.index("gamma_m")
        keep = np.arange(u0.size) != j

        def residual_split_fixed(v):
            u = u0.copy()
            u[keep] = v
            return residual(u)

        stage = lm_minimize(residual_split_fixed, u0[keep], opts)
        u0 = u0.copy()
        u0[keep] = stage.x
    res = lm_minimize(residual, u0, opts)
    final = pack.to_values(res.x)
    params, fitted_nuisance = _split(final)

    names, is_log, mat = pack.linear_coordinates(res.x)
    if res.x.size:
        y = pack.to_linear(res.x)

        def residual_linear(yv):
            return residual(pack.from_linear(yv))

        lower = np.where(is_log, 0.0, -np.inf)
        jac_y = jacobian_fd(residual_linear, y, opts.finite_difference_step, lower)
        cov_y = covariance_from_jacobian(jac_y, res.residual_norm**2, res.n_residuals - res.x.size)
    else:
        cov_y = np.zeros((0, 0))
    cov_values = mat @ cov_y @ mat.T
    se_all = np.sqrt(np.clip(np.diag(cov_values), 0.0, None))
    standard_errors = {name: float(se) for name, se in zip(names, se_all)}

    return SweepFitResult(params=params, nuisance=fitted_nuisance, standard_errors=standard_errors,
                          residual_norm=res.residual_norm, iterations=res.iterations,
                          converged=res.converged, stop_reason=res.stop_reason, free=free,
                          covariance=cov_values, options=opts, n_points=freqs.size,
                          low_confidence=low, lm=res)


@dataclass
class ColumnFit:
    current: float
    result: SweepFitResult | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.result is not None and self.result.converged and self.error is None


@dataclass
class MapFitResult:
    columns: list
    calib: pm.FieldCalib
    slope_hz_per_ma: float
    slope_hz_per_ma_se: float
    slope_mt_per_ma: float
    slope_mt_per_ma_se: float
    degeneracy_current: float
    degeneracy_current_se: float
    field_offset_se: float
    global_params: dict  # name -> (value, standard error)

    @property
    def failed(self) -> list:
        return [c.current for c in self.columns if not c.ok]

    @property
    def fitted(self) -> list:
        return [c for c in self.columns if c.ok]

    def cooperativity(self) -> float:
        g = self.global_params
        return pm.cooperativity(g["g_m"][0], g["kappa_total"][0], g["gamma_m"][0])


def _precision_mean(values, errors, scale):
    values = np.asarray(values, dtype=float)
    errors = np.maximum(np.asarray(errors, dtype=float), 1e-12 * scale)
    w = 1.0 / errors**2
    return float(np.sum(w * values) / np.sum(w)), float(1.0 / np.sqrt(np.sum(w)))


def weighted_line(x, y, sigma):
    """Weighted straight-line fit y = a + b x; returns (a, b, cov[2x2]).

    The covariance is scaled by the reduced chi-square when there are spare
    degrees of freedom.
    """
    x, y, sigma = (np.asarray(v, dtype=float) for v in (x, y, sigma))
    w = 1.0 / sigma**2
    design = np.column_stack([np.ones_like(x), x])
    normal = design.T @ (design * w[:, None])
    coef = np.linalg.solve(normal, design.T @ (w * y))
    cov = np.linalg.inv(normal)
    dof = x.size - 2
    if dof > 0:
        chi2 = float(np.sum(w * (y - design @ coef) ** 2))
        cov = cov * (chi2 / dof)
    else:
        cov = np.zeros((2, 2))
    return float(coef[0]), float(coef[1]), cov


def plausible(res: SweepFitResult, freqs) -> bool:
    """Fitted resonances within one span of the grid and rates below a span."""
    span = float(freqs[-1] - freqs[0])
    lo, hi = freqs[0] - span, freqs[-1] + span
    p = res.params
    return (lo <= p.f_c <= hi and lo <= p.f_fmr <= hi
            and max(p.kappa_int, p.gamma_m, p.g_m) <= span)


def fit_map(data: MapData, opts: FitOptions | None = None, consts=pm.CONSTANTS,
            **fit_kwargs) -> MapFitResult:
    """Fit every current column, then regress the Kittel frequency on current.

    The first column fitted is the one whose two |S21| maxima are closest
    (nearest the degeneracy); the walk then proceeds outwards, warm-starting
    each column from its neighbour with the Kittel frequency extrapolated
    from the last two fits (or, for the first step, from the sum rule
    f_upper + f_lower = f_c + f_fmr).  Columns that fail are excluded.
    """
    n = data.currents.size
    if n < 3:
        raise InputError(f"insufficient columns: need at least 3, got {n}")
    opts = opts or FitOptions()
    span = float(data.freqs[-1] - data.freqs[0])

    peaks = [prominent_peaks(data.freqs, np.abs(data.s21[k]), 2) for k in range(n)]
    # at degeneracy both polaritons are equally tall; the weaker of the two
    # leading maxima is largest there
    weaker = []
    for k, p in enumerate(peaks):
        if len(p) < 2:
            weaker.append(-np.inf)
            continue
        heights = np.interp([p[0][0], p[1][0]], data.freqs, np.abs(data.s21[k]))
        weaker.append(float(min(heights)))
    start = int(np.argmax(weaker)) if np.isfinite(max(weaker)) else n // 2

    fits: dict[int, ColumnFit] = {}

    def one(k, init, nuisance):
        try:
            res = fit_sweep(data.column(k), init=init, opts=opts, nuisance=nuisance, **fit_kwargs)
        except MagcavError as exc:
            return None, str(exc)
        error = None if res.converged else res.stop_reason
        if error is None and not plausible(res, data.freqs):
            error = "implausible parameters"
            res.converged = False
        return res, error

    def attempt(k, init=None, nuisance=None):
        """Fit column k; a warm start is raced against a cold one and the
        lower cost wins, so one poor neighbour does not propagate."""
        tries = [one(k, init, nuisance)]
        if init is not None:
            tries.append(one(k, None, None))
        ok = [t for t in tries if t[1] is None]
        res, error = min(ok, key=lambda t: t[0].lm.cost) if ok else tries[0]
        fits[k] = ColumnFit(float(data.currents[k]), res, error)
        return res if error is None else None

    first = attempt(start)
    for direction in (1, -1):
        chain = [start] if first is not None else []
        for k in range(start + direction, n if direction > 0 else -1, direction):
            if not chain:
                attempt(k)
                if fits[k].ok:
                    chain.append(k)
                continue
            last = fits[chain[-1]].result
            if len(chain) >= 2:
                k1, k2 = chain[-2], chain[-1]
                f1, f2 = fits[k1].result.params.f_fmr, fits[k2].result.params.f_fmr
                i1, i2 = data.currents[k1], data.currents[k2]
                f_pred = f2 + (f2 - f1) / (i2 - i1) * (data.currents[k] - i2)
            elif len(peaks[k]) == 2:
                f_pred = peaks[k][0][0] + peaks[k][1][0] - last.params.f_c
            else:
                f_pred = last.params.f_fmr
            f_pred = min(max(f_pred, data.freqs[0] - span), data.freqs[-1] + span)
            if attempt(k, last.params.replace(f_fmr=f_pred), last.nuisance) is not None:
                chain.append(k)

    scale = float(np.mean(data.freqs))

    def summarize():
        good = [fits[k] for k in range(n) if fits[k].ok]
        failed = [fits[k].current for k in range(n) if not fits[k].ok]
        if len(good) < 2 or len(failed) > n / 2:
            raise MapFitError(f"{len(failed)} of {n} columns failed to fit: {failed}", failed)
        global_params = {}
        for name in ("f_c", "kappa_int", "gamma_m", "g_m", "kappa_total"):
            vals = [c.result.kappa_total if name == "kappa_total" else getattr(c.result.params, name)
                    for c in good]
            errs = [c.result.standard_errors[name] for c in good]
            global_params[name] = _precision_mean(vals, errs, scale)
        for name in ("kappa_1", "kappa_2"):
            global_params[name] = (getattr(good[0].result.params, name), 0.0)
        currents = np.array([c.current for c in good])
        f_fmr = np.array([c.result.params.f_fmr for c in good])
        se = np.maximum([c.result.standard_errors["f_fmr"] for c in good], 1e-12 * np.abs(f_fmr))
        return global_params, weighted_line(currents, f_fmr, se), good

    def reject_outliers():
        """Drop, one at a time, columns far off the Kittel line (measured
        against the robust spread of all pulls); they are retried below."""
        while True:
            idx = [k for k in range(n) if fits[k].ok]
            if len(idx) <= 3:
                return
            x = data.currents[idx]
            y = np.array([fits[k].result.params.f_fmr for k in idx])
            se = np.maximum([fits[k].result.standard_errors["f_fmr"] for k in idx], 1e-12 * np.abs(y))
            # leave-one-out, since a bad column with a tiny error bar drags
            # the full line onto itself
            pull = np.empty(len(idx))
            for j in range(len(idx)):
                rest = np.arange(len(idx)) != j
                a, b, _ = weighted_line(x[rest], y[rest], se[rest])
                pull[j] = abs(y[j] - a - b * x[j]) / se[j]
            spread = max(1.0, 1.4826 * float(np.median(pull)))
            worst = int(np.argmax(pull))
            if pull[worst] <= OUTLIER_PULL * spread:
                return
            k = idx[worst]
            fits[k] = ColumnFit(fits[k].current, fits[k].result,
                                f"off the Kittel line by {pull[worst]:.0f} standard errors")

    reject_outliers()
    global_params, (intercept, slope, cov), good = summarize()
    retry = [k for k in range(n) if not fits[k].ok]
    if retry:
        # second pass from the consensus parameters and the regression line
        consensus = good[0].result.params.replace(
            f_c=global_params["f_c"][0], kappa_int=global_params["kappa_int"][0],
            gamma_m=global_params["gamma_m"][0], g_m=global_params["g_m"][0])
        nearest = lambda k: min(good, key=lambda c: abs(c.current - data.currents[k]))
        for k in retry:
            f_pred = intercept + slope * data.currents[k]
            f_pred = min(max(f_pred, data.freqs[0] - span), data.freqs[-1] + span)
            attempt(k, consensus.replace(f_fmr=f_pred), nearest(k).result.nuisance)
        reject_outliers()
        global_params, (intercept, slope, cov), good = summarize()
    columns = [fits[k] for k in range(n)]
    f_c, f_c_se = global_params["f_c"]
    i0 = (f_c - intercept) / slope
    i0_var = (f_c_se**2 + cov[0, 0] + i0**2 * cov[1, 1] + 2 * i0 * cov[0, 1]) / slope**2

    gamma_e = consts.gyromagnetic_gamma_e
    slope_mt = slope / gamma_e * 1e3
    calib = pm.FieldCalib(slope_mt, i0, intercept / gamma_e * 1e3)
    return MapFitResult(
        columns=columns, calib=calib,
        slope_hz_per_ma=slope, slope_hz_per_ma_se=math.sqrt(max(cov[1, 1], 0.0)),
        slope_mt_per_ma=slope_mt, slope_mt_per_ma_se=math.sqrt(max(cov[1, 1], 0.0)) / gamma_e * 1e3,
        degeneracy_current=i0, degeneracy_current_se=math.sqrt(max(i0_var, 0.0)),
        field_offset_se=math.sqrt(max(cov[0, 0], 0.0)) / gamma_e * 1e3,
        global_params=global_params)
