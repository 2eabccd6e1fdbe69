"""Steady periodic water waves with analytic vorticity and interior stagnation."""
from .vorticity import VorticityModel
from .trivial_flow import FlowParameters, TrivialFlow, solve_trivial, surface_head

__all__ = ["VorticityModel", "FlowParameters", "TrivialFlow", "solve_trivial",
           "surface_head"]
__version__ = "0.1.0"
