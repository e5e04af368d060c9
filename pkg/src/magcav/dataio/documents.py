"""Scenario and fit-report documents.

Both are JSON objects carrying ``schema_version``.  Keys are fixed: an
unknown key, a missing required key or another version is a
:class:`SchemaError` naming the key or version.  Floats are written with
Python's shortest round-trip repr, so documents reload to identical values.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .. import physmodel as pm
from ..errors import InputError, ParseError, SchemaError
from ..fitcore.model import CalibrationNuisance
from ..synthlab import MapScenario, NoiseSpec, SweepScenario

SCHEMA_VERSION = 1


class _Doc(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)


class HybridDoc(_Doc):
    f_c_hz: float
    kappa_1_hz: float
    kappa_2_hz: float
    kappa_int_hz: float
    f_fmr_hz: float
    gamma_m_hz: float
    g_m_hz: float


class LinspaceDoc(_Doc):
    start: float
    stop: float
    points: int = Field(ge=1)


class NuisanceDoc(_Doc):
    amplitude: float = 1.0
    phase_rad: float = 0.0
    delay_s: float = 0.0
    background_re: float = 0.0
    background_im: float = 0.0


class SpuriousDoc(_Doc):
    g_hz: float
    gamma_hz: float
    f_mode_hz: float | None = None
    crossing_current_ma: float | None = None


class NoiseDoc(_Doc):
    sigma: float = 0.0
    seed: int = 0


class CalibDoc(_Doc):
    slope_mt_per_ma: float
    degeneracy_current_ma: float


Axis = Union[LinspaceDoc, list[float]]


class SweepScenarioDoc(_Doc):
    schema_version: Literal[1]
    kind: Literal["sweep"]
    hybrid: HybridDoc
    freq_grid_hz: Axis
    nuisance: NuisanceDoc = NuisanceDoc()
    spurious: list[SpuriousDoc] = []
    noise: NoiseDoc = NoiseDoc()
    probe_power_w: float | None = None
    temperature_k: float | None = None
    current_ma: float | None = None


class MapScenarioDoc(_Doc):
    schema_version: Literal[1]
    kind: Literal["map"]
    hybrid: HybridDoc
    calib: CalibDoc
    currents_ma: Axis
    freq_grid_hz: Axis
    nuisance: NuisanceDoc = NuisanceDoc()
    spurious: list[SpuriousDoc] = []
    noise: NoiseDoc = NoiseDoc()
    probe_power_w: float | None = None
    temperature_k: float | None = None


class Estimate(_Doc):
    value: float | None
    se: float | None = None


class Diagnostics(_Doc):
    converged: bool
    stop_reason: str
    iterations: int
    residual_norm: float | None
    n_points: int
    options: dict[str, Union[bool, int, float]] = {}


class ColumnDoc(_Doc):
    current_ma: float
    converged: bool
    error: str | None = None
    f_fmr_hz: float | None = None
    f_fmr_se_hz: float | None = None


class ManifestDoc(_Doc):
    toolkit_version: str
    argv: list[str]
    inputs: dict[str, str] = {}
    seeds: list[int] = []


class ReportDoc(_Doc):
    schema_version: Literal[1]
    kind: Literal["sweep_fit", "map_fit", "scaling_fit", "temperature_fit"]
    parameters: dict[str, Estimate]
    derived: dict[str, float | None] = {}
    conditions: dict[str, float | None] = {}
    diagnostics: Diagnostics | None = None
    columns: list[ColumnDoc] = []
    notes: list[str] = []
    manifest: ManifestDoc | None = None


_SCENARIO_KINDS = {"sweep": SweepScenarioDoc, "map": MapScenarioDoc}


def _where(loc) -> str:
    return ".".join(str(p) for p in loc)


def _validate(model, data, path):
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must be an object")
    if "schema_version" not in data:
        raise SchemaError(f"{path}: missing required key 'schema_version'", key="schema_version")
    version = data["schema_version"]
    if version != SCHEMA_VERSION or isinstance(version, bool):
        raise SchemaError(f"{path}: unsupported schema_version {version!r} "
                          f"(this reader understands {SCHEMA_VERSION})", version=version)
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        errors = exc.errors()
        # report the most specific problem; unknown and missing keys first
        rank = {"extra_forbidden": 0, "missing": 1}
        err = min(errors, key=lambda e: rank.get(e["type"], 2))
        key = _where(err["loc"])
        if err["type"] == "extra_forbidden":
            raise SchemaError(f"{path}: unknown key {key!r}", key=key) from None
        if err["type"] == "missing":
            raise SchemaError(f"{path}: missing required key {key!r}", key=key) from None
        raise SchemaError(f"{path}: invalid value for {key!r}: {err['msg']}", key=key) from None


def _load_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8 ({exc.reason})", path=str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, str(path)) from None


def _clean(value):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _dump(path, doc: dict):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(doc))


# scenarios

def _axis_values(axis) -> tuple:
    if isinstance(axis, LinspaceDoc):
        return tuple(np.linspace(axis.start, axis.stop, axis.points).tolist())
    return tuple(float(v) for v in axis)


def _axis_doc(values):
    values = [float(v) for v in values]
    if len(values) > 2:
        spaced = np.linspace(values[0], values[-1], len(values)).tolist()
        if spaced == values:
            return {"start": values[0], "stop": values[-1], "points": len(values)}
    return values


def _hybrid(doc: HybridDoc) -> pm.HybridParams:
    return pm.HybridParams(doc.f_c_hz, doc.kappa_1_hz, doc.kappa_2_hz, doc.kappa_int_hz,
                           doc.f_fmr_hz, doc.gamma_m_hz, doc.g_m_hz)


def _hybrid_doc(p: pm.HybridParams) -> dict:
    return {f"{k}_hz": v for k, v in p.as_dict().items()}


def _nuisance(doc: NuisanceDoc) -> CalibrationNuisance:
    return CalibrationNuisance(doc.amplitude, doc.phase_rad, doc.delay_s,
                               complex(doc.background_re, doc.background_im))


def _nuisance_doc(n: CalibrationNuisance) -> dict:
    return {"amplitude": n.amplitude, "phase_rad": n.phase, "delay_s": n.electrical_delay,
            "background_re": n.background.real, "background_im": n.background.imag}


def _spurious_doc(m: pm.SpuriousMode) -> dict:
    doc = {"g_hz": m.g, "gamma_hz": m.gamma}
    if m.f_mode is not None:
        doc["f_mode_hz"] = m.f_mode
    if m.crossing_current is not None:
        doc["crossing_current_ma"] = m.crossing_current
    return doc


def scenario_from_dict(data: dict, path="<scenario>"):
    """Validate a decoded scenario document and build the scenario object."""
    kind = data.get("kind") if isinstance(data, dict) else None
    if isinstance(data, dict) and "schema_version" in data and kind is None:
        raise SchemaError(f"{path}: missing required key 'kind'", key="kind")
    model = _SCENARIO_KINDS.get(kind)
    if model is None and isinstance(data, dict) and kind is not None:
        raise SchemaError(f"{path}: unknown scenario kind {kind!r}", key="kind")
    doc = _validate(model or SweepScenarioDoc, data, path)
    try:
        return _build_scenario(doc, path)
    except InputError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def _build_scenario(doc, path):
    spurious = tuple(pm.SpuriousMode(s.g_hz, s.gamma_hz, s.f_mode_hz, s.crossing_current_ma)
                     for s in doc.spurious)
    common = dict(hybrid=_hybrid(doc.hybrid), freq_grid=_axis_values(doc.freq_grid_hz),
                  nuisance=_nuisance(doc.nuisance), spurious=spurious,
                  noise=NoiseSpec(doc.noise.sigma, doc.noise.seed),
                  probe_power=doc.probe_power_w, temperature=doc.temperature_k)
    if isinstance(doc, MapScenarioDoc):
        calib = pm.FieldCalib.from_degeneracy(doc.calib.slope_mt_per_ma,
                                              doc.calib.degeneracy_current_ma, doc.hybrid.f_c_hz)
        return MapScenario(calib=calib, currents=_axis_values(doc.currents_ma), **common)
    if any(s.f_mode is None for s in spurious):
        raise SchemaError(f"{path}: sweep scenarios need f_mode_hz for every spurious mode",
                          key="spurious")
    return SweepScenario(current=doc.current_ma, **common)


def scenario_to_dict(s) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "hybrid": _hybrid_doc(s.hybrid),
           "freq_grid_hz": _axis_doc(s.freq_grid), "nuisance": _nuisance_doc(s.nuisance),
           "spurious": [_spurious_doc(m) for m in s.spurious],
           "noise": {"sigma": s.noise.sigma, "seed": int(s.noise.seed)},
           "probe_power_w": s.probe_power, "temperature_k": s.temperature}
    if isinstance(s, MapScenario):
        doc["kind"] = "map"
        doc["calib"] = {"slope_mt_per_ma": s.calib.slope,
                        "degeneracy_current_ma": s.calib.current_at_degeneracy}
        doc["currents_ma"] = _axis_doc(s.currents)
    else:
        doc["kind"] = "sweep"
        doc["current_ma"] = s.current
    return doc


def read_scenario(path):
    """SweepScenario or MapScenario from a scenario document."""
    return scenario_from_dict(_load_json(path), str(path))


def write_scenario(path, scenario) -> None:
    _dump(path, scenario_to_dict(scenario))


# reports

def validate_report(data: dict, path="<report>") -> dict:
    """Check a report dictionary against the schema; returns it with defaults filled."""
    doc = _validate(ReportDoc, _clean(data), path)
    return doc.model_dump()


def read_report(path) -> dict:
    return validate_report(_load_json(path), str(path))


def write_report(path, report: dict) -> None:
    _dump(path, validate_report(report, str(path)))
