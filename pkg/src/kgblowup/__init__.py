"""Numerical laboratory for finite-time blow-up of u_tt - Lap u + u = f(u)."""

from .field import Grid, State
from .nonlinearity import NonlinearityModel, verify_pc1
from .solver import SolverConfig, run
from .initial_data import DataRecipe, check_theorem22, realize, synthesize_certified
from .certifier import certify_run, blowup_time_bound
from .ground_state import solve_ground_state

__all__ = [
    "Grid", "State", "NonlinearityModel", "verify_pc1", "SolverConfig", "run",
    "DataRecipe", "check_theorem22", "realize", "synthesize_certified",
    "certify_run", "blowup_time_bound", "solve_ground_state",
]
__version__ = "0.1.0"
