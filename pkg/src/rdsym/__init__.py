"""Level-set geometry of reaction-diffusion fronts started from compactly supported data."""
from .fields import Bump, DatumSpec, GridSpec, ScalarField, make_field
from .reactions import (Bistable, Coefficient, Combustion, FisherKPP, Linear, TimePeriodicKPP,
                        check_kpp, check_lower_bound, check_superposition)
from .solver import SolverConfig, run, step_2d
from .geometry import enclosing_ball, inscribed_ball, summarize

__version__ = "0.1.0"

__all__ = [
    "Bump", "DatumSpec", "GridSpec", "ScalarField", "make_field",
    "Bistable", "Coefficient", "Combustion", "FisherKPP", "Linear", "TimePeriodicKPP",
    "check_kpp", "check_lower_bound", "check_superposition",
    "SolverConfig", "run", "step_2d",
    "enclosing_ball", "inscribed_ball", "summarize",
]
