"""Numerical toolkit for the genus-one spin Calogero reduction of Hitchin systems."""

from .errors import HitchinLabError
from .special_functions import ModularParameter, SeriesConfig
from .phase_space import PhasePoint, OrbitData, Observable
from .lax_reduction import LaxSample, LoopField, MarkedCurve
from .dynamics import FlowConfig, Trajectory

__all__ = [
    "HitchinLabError",
    "ModularParameter",
    "SeriesConfig",
    "PhasePoint",
    "OrbitData",
    "Observable",
    "LaxSample",
    "LoopField",
    "MarkedCurve",
    "FlowConfig",
    "Trajectory",
]

__version__ = "0.1.0"
