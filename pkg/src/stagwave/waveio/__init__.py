"""Physical reconstruction, stagnation analysis, file formats and the CLI."""
from .fields import (FunctionInterpolant, PhysicalField, StateInterpolant, pressure,
                     unflatten, velocity)
from .formats import load_config, parse_config, read_snapshot, write_snapshot
from .stagnation import critical_layer_levels, stagnation_points, streamlines

__all__ = ["PhysicalField", "StateInterpolant", "FunctionInterpolant", "unflatten",
           "velocity", "pressure", "stagnation_points", "streamlines",
           "critical_layer_levels", "load_config", "parse_config", "read_snapshot",
           "write_snapshot"]
