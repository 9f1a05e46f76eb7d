"""Numerical probes of the dispersive and Strichartz estimates.

Neither probe proves anything: a sup over a finite grid is a lower bound
on the true sup, and the Strichartz probe samples a fixed input family.
"""

from dataclasses import dataclass
import math

import numpy as np

from .grid import Grid, WaveFunction, gaussian
from .propagator import continuous_kernel_batch, kernel_matrix
from .spectrum import bound_states

__all__ = [
    "DecayReport",
    "decay_grid",
    "decay_scan",
    "seed_family",
    "continuous_projection",
    "strichartz_exponent",
    "strichartz_probe",
]


@dataclass(frozen=True)
class DecayReport:
    t_values: tuple
    sup_values: tuple
    constant: float

    def __post_init__(self):
        if len(self.t_values) != len(self.sup_values):
            raise ValueError("t_values and sup_values differ in length")


def decay_grid(params, points=201, margin=5.0):
    """Square sampling grid [-margin-a, margin+a] with `points` nodes per axis."""
    half = margin + params.a
    return Grid(-half, 2 * half / (points - 1), points)


def decay_scan(params, t_values, grid=None, tol=1e-8):
    """sup over grid x grid of sqrt(t) |U(t; x, y)| for each t."""
    t_values = [float(t) for t in t_values]
    if any(t <= 0 for t in t_values):
        raise ValueError("t_values must be positive")
    if t_values != sorted(t_values):
        raise ValueError("t_values must be sorted")
    if grid is None:
        grid = decay_grid(params)
    x = grid.x
    sups = []
    for t in t_values:
        evals = continuous_kernel_batch(params, t, x[:, None], x[None, :], tol=tol)
        sup = max(abs(e.value) for e in evals)
        sups.append(math.sqrt(t) * sup)
    return DecayReport(tuple(t_values), tuple(sups), max(sups))


def seed_family(grid, params, widths=(0.25, 0.5, 1.0, 2.0)):
    """Eight unit-norm Gaussians: four widths, centred at 0 and at a."""
    bp = (-params.a, params.a)
    out = []
    for w in widths:
        for c in (0.0, params.a):
            g = gaussian(grid, c, w)
            out.append(g * (1.0 / g.norm(bp)))
    return out


def continuous_projection(params, u):
    """P_c u: remove the bound-state components."""
    bp = (-params.a, params.a)
    out = u
    for state in bound_states(params, u.grid):
        phi = state.eigenfunction
        out = out - phi * (phi.inner(u, bp) / phi.inner(phi, bp))
    return out


def strichartz_exponent(r):
    """Time exponent q = 4r/(r-2) paired with the space exponent r (inf at r=2)."""
    if r < 2:
        raise ValueError("r must be >= 2")
    return math.inf if r == 2 else 4 * r / (r - 2)


def _space_norm(values, weights, r):
    if math.isinf(r):
        return float(np.max(np.abs(values)))
    return float(np.sum(weights * np.abs(values) ** r) ** (1.0 / r))


def strichartz_probe(params, r, T, inputs, n_times=20, tol=1e-8):
    """max over inputs of || exp(-itH) P_c u ||_{L^q((0,T), L^r)}.

    Time is sampled at t_k = k T / n_times, k = 0..n_times (the k = 0
    sample is P_c u itself) and integrated by the composite trapezoid rule;
    for r = 2 (q = inf) the sup over the samples is returned instead.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    q = strichartz_exponent(r)
    inputs = list(inputs)
    if not inputs:
        raise ValueError("need at least one input")
    grid = inputs[0].grid
    bp = (-params.a, params.a)
    w = grid.weights(bp)
    times = np.linspace(0.0, T, n_times + 1)
    norms = np.zeros((len(inputs), times.size))
    for i, u in enumerate(inputs):
        norms[i, 0] = _space_norm(continuous_projection(params, u).values, w, r)
    for k, t in enumerate(times[1:], start=1):
        mat = kernel_matrix(params, t, grid, tol, "continuous")
        for i, u in enumerate(inputs):
            norms[i, k] = _space_norm(mat @ (w * u.values), w, r)
    if math.isinf(q):
        return float(norms.max())
    integral = np.trapezoid(norms**q, times, axis=1)
    return float(np.max(integral ** (1.0 / q)))
