"""Fiber IFS of a partially hyperbolic horseshoe: conditions, exponents, pressure."""
from .conditions import ValidationReport, derive_constants, search_feasible, validate
from .config import PRESETS, load_params
from .estimators import PressureEstimator, SpectrumScanner, TransitionLocator
from .fiber import FiberMap, ProfileShape, SystemParams
from .ifs import compose_eval, expanding_itinerary, fiber_interval, fixed_points
from .measures import BernoulliSpec, horseshoe_pair, maxent_approximant
from .symbolic import Word
from .thermo import lateral_pressure, locate_transition, pressure_bracket, pressure_curve, spectrum_scan

__version__ = "0.1.0"

__all__ = [
    "BernoulliSpec",
    "FiberMap",
    "PRESETS",
    "PressureEstimator",
    "ProfileShape",
    "SpectrumScanner",
    "SystemParams",
    "TransitionLocator",
    "ValidationReport",
    "Word",
    "compose_eval",
    "derive_constants",
    "expanding_itinerary",
    "fiber_interval",
    "fixed_points",
    "horseshoe_pair",
    "lateral_pressure",
    "load_params",
    "locate_transition",
    "maxent_approximant",
    "pressure_bracket",
    "pressure_curve",
    "search_feasible",
    "spectrum_scan",
    "validate",
]
