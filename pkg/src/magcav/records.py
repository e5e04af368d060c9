"""Measurement containers: a single frequency sweep and a current x frequency map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


def _check_axis(name, values):
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise InputError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(values)):
        raise InputError(f"{name} contains non-finite values")
    if values.size > 1 and not np.all(np.diff(values) > 0):
        raise InputError(f"{name} must be strictly increasing")
    return values


def _check_label(key, value):
    key, value = str(key), str(value)
    if not key or any(c in key for c in "=\n\r#,") or key != key.strip():
        raise InputError(f"invalid label key {key!r}")
    if "\n" in value or "\r" in value:
        raise InputError(f"label {key!r} value contains a line break")
    return key, value


def _optional_float(name, value):
    if value is None:
        return None
    value = float(value)
    if not math.isfinite(value):
        raise InputError(f"{name} must be finite")
    return value


@dataclass(eq=False)
class Sweep:
    """Complex S21 trace versus probe frequency (Hz)."""

    freqs: np.ndarray
    s21: np.ndarray
    current_ma: float | None = None
    temperature_k: float | None = None
    power_dbm: float | None = None
    seed: int | None = None
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.freqs = _check_axis("freqs", self.freqs)
        self.s21 = np.asarray(self.s21, dtype=complex)
        if self.s21.shape != self.freqs.shape:
            raise InputError(
                f"s21 has {self.s21.size} points but freqs has {self.freqs.size}")
        if not np.all(np.isfinite(self.s21)):
            raise InputError("s21 contains non-finite values")
        self.current_ma = _optional_float("current_ma", self.current_ma)
        self.temperature_k = _optional_float("temperature_k", self.temperature_k)
        self.power_dbm = _optional_float("power_dbm", self.power_dbm)
        self.seed = None if self.seed is None else int(self.seed)
        self.labels = dict(_check_label(k, v) for k, v in self.labels.items())

    def __len__(self):
        return self.freqs.size

    def label_float(self, key, default=None):
        try:
            return float(self.labels[key])
        except (KeyError, ValueError):
            return default

    def same_as(self, other: "Sweep") -> bool:
        return (
            isinstance(other, Sweep)
            and np.array_equal(self.freqs, other.freqs)
            and np.array_equal(self.s21, other.s21)
            and (self.current_ma, self.temperature_k, self.power_dbm, self.seed)
            == (other.current_ma, other.temperature_k, other.power_dbm, other.seed)
            and self.labels == other.labels
        )


@dataclass(eq=False)
class MapData:
    """S21 on a (current in mA) x (frequency in Hz) grid."""

    currents: np.ndarray
    freqs: np.ndarray
    s21: np.ndarray
    temperature_k: float | None = None
    power_dbm: float | None = None
    seed: int | None = None
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.currents = _check_axis("currents", self.currents)
        self.freqs = _check_axis("freqs", self.freqs)
        self.s21 = np.asarray(self.s21, dtype=complex)
        expected = (self.currents.size, self.freqs.size)
        if self.s21.shape != expected:
            raise InputError(f"s21 matrix has shape {self.s21.shape}, expected {expected}")
        if not np.all(np.isfinite(self.s21)):
            raise InputError("s21 contains non-finite values")
        self.temperature_k = _optional_float("temperature_k", self.temperature_k)
        self.power_dbm = _optional_float("power_dbm", self.power_dbm)
        self.seed = None if self.seed is None else int(self.seed)
        self.labels = dict(_check_label(k, v) for k, v in self.labels.items())

    def column(self, index: int) -> Sweep:
        """The sweep measured at ``currents[index]``."""
        return Sweep(self.freqs, self.s21[index], current_ma=float(self.currents[index]),
                     temperature_k=self.temperature_k, power_dbm=self.power_dbm,
                     seed=self.seed, labels=self.labels)

    def same_as(self, other: "MapData") -> bool:
        return (
            isinstance(other, MapData)
            and np.array_equal(self.currents, other.currents)
            and np.array_equal(self.freqs, other.freqs)
            and np.array_equal(self.s21, other.s21)
            and (self.temperature_k, self.power_dbm, self.seed)
            == (other.temperature_k, other.power_dbm, other.seed)
            and self.labels == other.labels
        )
