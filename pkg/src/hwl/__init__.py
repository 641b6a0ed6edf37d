"""Increment variances of Hermite-type limit processes indexed by homothetic windows."""
from __future__ import annotations

__version__ = "0.1.0"

from .analysis import (CovarianceModel, HermiteExpansion, KernelParams, c1, c2, hermite_coeffs,
                       shifted_lattice_zeta)
from .crofton import crofton_residual, limit_references, origin_limit_check
from .errors import DomainError, NumericalError
from .fieldsim import FieldSpec, empirical_variance_curve, simulate_field
from .geometry import ShellRegion, Window, parse_window, shell
from .riesz import (Estimate, bound_check, mean_riesz, riesz_energy, scaling_exponent,
                    variance_increment, window_energy)
from .spectral import SpectralGrid, VarianceCurve, spectral_sum, spectral_variance, variance_curve

__all__ = [
    "CovarianceModel", "DomainError", "Estimate", "FieldSpec", "HermiteExpansion", "KernelParams",
    "NumericalError", "ShellRegion", "SpectralGrid", "VarianceCurve", "Window", "bound_check", "c1",
    "c2", "crofton_residual", "empirical_variance_curve", "hermite_coeffs", "limit_references",
    "mean_riesz", "origin_limit_check", "parse_window", "riesz_energy", "scaling_exponent", "shell",
    "shifted_lattice_zeta", "simulate_field", "spectral_sum", "spectral_variance", "variance_curve",
    "variance_increment", "window_energy",
]
