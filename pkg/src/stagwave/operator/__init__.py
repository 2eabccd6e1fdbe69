"""Discretised flattened water-wave system: residual, Jacobian, L and T."""
from .grid import Grid
from .system import (Residual, WaveState, apply_L, apply_T, inner_product_Y,
                     jacobian, kernel_mode, parameter_derivative, residual,
                     residual_vector)

__all__ = ["Grid", "WaveState", "Residual", "residual", "residual_vector", "jacobian",
           "parameter_derivative", "apply_L", "apply_T", "kernel_mode",
           "inner_product_Y"]
