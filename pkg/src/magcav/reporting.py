"""Fit reports: structured documents and their plain-text rendering."""

from __future__ import annotations

import math

from . import physmodel as pm
from .dataio.documents import SCHEMA_VERSION, validate_report
from .fitcore.series import ScalingFit, TemperatureFit
from .fitcore.sweep import MapFitResult, SweepFitResult

_NUISANCE_FIELDS = ("amplitude", "phase", "electrical_delay", "background_re", "background_im")
_UNITS = {"amplitude": "", "phase": "rad", "electrical_delay": "s", "background_re": "",
          "background_im": "", "slope_mt_per_ma": "mT/mA", "slope_hz_per_ma": "Hz/mA",
          "degeneracy_current_ma": "mA", "g0": "Hz"}


def sci(x: float, digits: int = 1) -> str:
    """Compact scientific notation without a padded exponent, e.g. 3.0e3."""
    if x == 0 or not math.isfinite(x):
        return repr(float(x))
    exponent = int(math.floor(math.log10(abs(x))))
    mantissa = x / 10.0**exponent
    if round(abs(mantissa), digits) >= 10.0:
        mantissa /= 10.0
        exponent += 1
    return f"{mantissa:.{digits}f}e{exponent}"


def _est(value, se=None) -> dict:
    return {"value": value, "se": se}


def _safe(fn):
    try:
        return fn()
    except (ValueError, ArithmeticError):
        # domain and singular-model errors leave the quantity undefined
        return None


def _occupations(params: pm.HybridParams, power_dbm, temperature_k) -> dict:
    """Photon number for an on-resonance probe with the magnon detuned, and
    thermal occupations of both modes."""
    out = {}
    if power_dbm is not None:
        bare = params.replace(g_m=0.0)
        out["intracavity_photons_bare_resonance"] = _safe(
            lambda: pm.intracavity_photons(pm.dbm_to_watts(power_dbm), params.f_c, bare))
    if temperature_k is not None:
        out["thermal_occupation_cavity"] = _safe(
            lambda: pm.thermal_occupation(params.f_c, temperature_k))
        out["thermal_occupation_magnon"] = _safe(
            lambda: pm.thermal_occupation(params.f_fmr, temperature_k))
    return out


def _hybrid_derived(p: pm.HybridParams) -> dict:
    lower, upper = pm.normal_modes(p)
    return {"cooperativity": _safe(lambda: pm.cooperativity(p.g_m, p.kappa_total(), p.gamma_m)),
            "splitting_hz": 2.0 * p.g_m,
            "kappa_total_hz": p.kappa_total(),
            "normal_mode_lower_hz": lower.real, "normal_mode_upper_hz": upper.real}


def _diagnostics(res) -> dict:
    return {"converged": bool(res.converged), "stop_reason": res.stop_reason,
            "iterations": int(res.iterations), "residual_norm": res.residual_norm,
            "n_points": int(res.n_points), "options": res.options.as_dict()}


def sweep_report(res: SweepFitResult, power_dbm=None, temperature_k=None, manifest=None) -> dict:
    se = res.standard_errors
    params = {f"{k}_hz": _est(v, se.get(k)) for k, v in res.params.as_dict().items()}
    nuisance = res.summary()["nuisance"]
    params.update({k: _est(nuisance[k], se.get(k)) for k in _NUISANCE_FIELDS})
    derived = _hybrid_derived(res.params)
    derived.update(_occupations(res.params, power_dbm, temperature_k))
    notes = [pm.G0_CONVENTION_NOTE]
    if res.low_confidence:
        notes.append("initial guess was low-confidence (no clear resonance in |S21|)")
    if "kappa_1" not in res.free:
        notes.append("port couplings kappa_1, kappa_2 were held fixed at the supplied values")
    doc = {"schema_version": SCHEMA_VERSION, "kind": "sweep_fit", "parameters": params,
           "derived": derived, "conditions": {"power_dbm": power_dbm, "temperature_k": temperature_k},
           "diagnostics": _diagnostics(res), "notes": notes,
           "manifest": None if manifest is None else manifest.stable()}
    return validate_report(doc)


def map_report(res: MapFitResult, power_dbm=None, temperature_k=None, manifest=None) -> dict:
    params = {f"{k}_hz": _est(v, s) for k, (v, s) in res.global_params.items()}
    params["slope_mt_per_ma"] = _est(res.slope_mt_per_ma, res.slope_mt_per_ma_se)
    params["slope_hz_per_ma"] = _est(res.slope_hz_per_ma, res.slope_hz_per_ma_se)
    params["degeneracy_current_ma"] = _est(res.degeneracy_current, res.degeneracy_current_se)
    g = {k: v for k, (v, _) in res.global_params.items()}
    hybrid = pm.HybridParams(g["f_c"], g["kappa_1"], g["kappa_2"], g["kappa_int"], g["f_c"],
                             g["gamma_m"], g["g_m"])
    derived = _hybrid_derived(hybrid)
    derived.update(_occupations(hybrid, power_dbm, temperature_k))
    derived["columns_fitted"] = float(len(res.fitted))
    derived["columns_failed"] = float(len(res.failed))
    columns = []
    for c in res.columns:
        col = {"current_ma": c.current, "converged": c.ok, "error": c.error}
        if c.result is not None:
            col["f_fmr_hz"] = c.result.params.f_fmr
            col["f_fmr_se_hz"] = c.result.standard_errors.get("f_fmr")
        columns.append(col)
    notes = [pm.G0_CONVENTION_NOTE,
             "global parameters are precision-weighted means over converged columns"]
    if res.failed:
        notes.append("excluded columns (mA): " + ", ".join(f"{c:g}" for c in res.failed))
    doc = {"schema_version": SCHEMA_VERSION, "kind": "map_fit", "parameters": params,
           "derived": derived, "conditions": {"power_dbm": power_dbm, "temperature_k": temperature_k},
           "columns": columns, "notes": notes,
           "manifest": None if manifest is None else manifest.stable()}
    return validate_report(doc)


def scaling_report(fit: ScalingFit, manifest=None, cavity: pm.CavityGeom | None = None,
                   f_c: float | None = None) -> dict:
    derived = {"points": float(fit.n_points)}
    if cavity is not None and f_c is not None:
        derived["g0_theory_hz"] = pm.single_spin_coupling(cavity, f_c)
    for d, r in fit.residuals:
        derived[f"residual_hz_at_{d * 1e3:g}mm"] = r
    doc = {"schema_version": SCHEMA_VERSION, "kind": "scaling_fit",
           "parameters": {"g0_hz": _est(fit.g0, fit.standard_error)}, "derived": derived,
           "notes": [pm.G0_CONVENTION_NOTE],
           "manifest": None if manifest is None else manifest.stable()}
    return validate_report(doc)


def temperature_report(fit: TemperatureFit, manifest=None) -> dict:
    m = fit.model
    params = {"gamma_tls0_hz": _est(m.gamma_tls0, fit.standard_errors["gamma_tls0"]),
              "gamma_mm_hz": _est(m.gamma_mm, fit.standard_errors["gamma_mm"])}
    derived = {"zero_temperature_linewidth_hz": fit.zero_temperature_linewidth,
               "f_fmr_hz": m.f_fmr, "cutoff_k": fit.cutoff, "points_used": float(fit.n_used)}
    for t, r in fit.excluded:
        derived[f"deviation_hz_at_{t:g}K"] = r
    notes = ["points above the cutoff are excluded from the fit and listed as deviations"]
    if len(fit.active) < 2:
        notes.append(f"non-negativity bound active; only {fit.active[0]} was free")
    doc = {"schema_version": SCHEMA_VERSION, "kind": "temperature_fit", "parameters": params,
           "derived": derived, "notes": notes,
           "manifest": None if manifest is None else manifest.stable()}
    return validate_report(doc)


def _value(v, se, unit):
    if v is None:
        return "n/a"
    text = f"{v:.9g}"
    if se is not None:
        text += f" +/- {se:.2g}"
    return f"{text} {unit}".rstrip()


def render_text(report: dict) -> str:
    """Human-readable summary of a validated report; byte-stable for equal input."""
    report = validate_report(report)
    lines = [f"magcav {report['kind'].replace('_', ' ')} report"]
    lines.append("")
    lines.append("parameters:")
    width = max((len(k) for k in report["parameters"]), default=0)
    for name, est in sorted(report["parameters"].items()):
        unit = "Hz" if name.endswith("_hz") else _UNITS.get(name, "")
        lines.append(f"  {name:<{width}}  {_value(est['value'], est['se'], unit)}")

    derived = report["derived"]
    if derived:
        lines.append("")
        lines.append("derived:")
        c = derived.get("cooperativity")
        if c is not None:
            lines.append(f"  C = {sci(c)} ({c:.0f})")
        if derived.get("splitting_hz") is not None:
            lines.append(f"  splitting 2g = {derived['splitting_hz'] / 1e6:.6g} MHz")
        for name in sorted(derived):
            if name in ("cooperativity", "splitting_hz"):
                continue
            value = derived[name]
            lines.append(f"  {name} = {'n/a' if value is None else format(value, '.6g')}")

    conditions = {k: v for k, v in report["conditions"].items() if v is not None}
    if conditions:
        lines.append("")
        lines.append("conditions:")
        lines += [f"  {k} = {v:.6g}" for k, v in sorted(conditions.items())]

    diag = report["diagnostics"]
    if diag is not None:
        lines.append("")
        lines.append(f"fit: converged={diag['converged']} stop={diag['stop_reason']} "
                     f"iterations={diag['iterations']} points={diag['n_points']} "
                     f"residual_norm={diag['residual_norm']:.6g}")
    if report["columns"]:
        bad = [c for c in report["columns"] if not c["converged"]]
        lines.append("")
        lines.append(f"columns: {len(report['columns']) - len(bad)} fitted, {len(bad)} excluded")
        lines += [f"  excluded {c['current_ma']:g} mA: {c['error']}" for c in bad]
    if report["notes"]:
        lines.append("")
        lines.append("notes:")
        lines += [f"  - {n}" for n in report["notes"]]
    return "\n".join(lines) + "\n"
