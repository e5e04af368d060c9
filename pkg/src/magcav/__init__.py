"""Cavity-magnon hybrid spectroscopy: model, fitting, synthetic data and file formats."""

__version__ = "0.1.0"
