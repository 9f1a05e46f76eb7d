"""Schrodinger operator with two symmetric point interactions.

Bound states, resolvent, explicit time propagator, dispersive probes and a
cubic NLS integrator for  H = -d^2/dx^2 + alpha (delta(x - a) + delta(x + a)).
"""

from .grid import Grid, GridError, WaveFunction, gaussian
from .spectrum import WellParams, ThresholdError, bound_states, eigenvalues
from .propagator import (
    NonConvergenceError,
    apply_propagator,
    continuous_kernel,
    free_kernel,
    full_kernel,
    kernel_matrix,
)
from .resolvent import PoleError, resolvent_kernel
from .specfun import AccuracyError

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "GridError",
    "WaveFunction",
    "gaussian",
    "WellParams",
    "ThresholdError",
    "bound_states",
    "eigenvalues",
    "NonConvergenceError",
    "apply_propagator",
    "continuous_kernel",
    "free_kernel",
    "full_kernel",
    "kernel_matrix",
    "PoleError",
    "resolvent_kernel",
    "AccuracyError",
]
