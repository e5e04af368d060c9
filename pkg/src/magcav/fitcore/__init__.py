"""Least-squares engine and model fitters."""

from .guess import Guess, initial_guess
from .lm import FitOptions, FitResult, jacobian_fd, lm_minimize
from .model import CalibrationNuisance, transmission_derivatives
from .series import ScalingFit, TemperatureFit, fit_scaling, fit_temperature
from .sweep import ColumnFit, MapFitResult, SweepFitResult, fit_map, fit_sweep

__all__ = [
    "CalibrationNuisance",
    "ColumnFit",
    "FitOptions",
    "FitResult",
    "Guess",
    "MapFitResult",
    "ScalingFit",
    "SweepFitResult",
    "TemperatureFit",
    "fit_map",
    "fit_scaling",
    "fit_sweep",
    "fit_temperature",
    "initial_guess",
    "jacobian_fd",
    "lm_minimize",
    "transmission_derivatives",
]
