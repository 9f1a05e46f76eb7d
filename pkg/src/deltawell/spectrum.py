"""Bound states of -d^2/dx^2 + alpha (delta(x-a) + delta(x+a)).

Energies come from the Lambert W closed forms; an independent bracketing
root finder on the secular equation is provided as a cross-check.
"""

from dataclasses import dataclass
import math

import numpy as np

from .grid import WaveFunction
from .specfun import lambert_w

__all__ = [
    "WellParams",
    "BoundState",
    "ThresholdError",
    "MissingEigenvalueError",
    "THRESHOLD_TOL",
    "eigenvalue_count",
    "is_threshold",
    "eigenvalues",
    "implicit_residual",
    "implicit_roots",
    "eigenfunction_values",
    "eigenfunction",
    "bound_states",
    "summary",
]

THRESHOLD_TOL = 1e-8


class ThresholdError(ValueError):
    """Parameters sit on the threshold a*alpha = -1."""


class MissingEigenvalueError(ValueError):
    """Requested bound state does not exist for these parameters."""


@dataclass(frozen=True)
class WellParams:
    """Half-separation ``a`` > 0 and strength ``alpha`` != 0."""

    a: float
    alpha: float

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"a must be positive, got {self.a}")
        if self.alpha == 0 or not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite and nonzero")

    @property
    def a_alpha(self):
        return self.a * self.alpha


@dataclass(frozen=True)
class BoundState:
    index: str  # "E1" or "E2"
    energy: float
    kappa: float
    eigenfunction: WaveFunction
    parity: str  # "even" or "odd"


def is_threshold(params):
    return abs(params.a_alpha + 1.0) < THRESHOLD_TOL


def eigenvalue_count(params):
    """Number of negative eigenvalues (0, 1 or 2); threshold counts as 1."""
    if params.alpha > 0:
        return 0
    if is_threshold(params) or params.a <= -1.0 / params.alpha:
        return 1
    return 2


def _energy(params, sign):
    aa = params.a_alpha
    w = lambert_w("principal", sign * aa * math.exp(aa))
    return -((w - aa) ** 2) / (4.0 * params.a**2)


def eigenvalues(params):
    """Sorted list [E1] or [E1, E2]; empty for alpha > 0."""
    n = eigenvalue_count(params)
    if n == 0:
        return []
    energies = [_energy(params, -1.0)]
    if n == 2:
        energies.append(_energy(params, +1.0))
    assert all(e < 0 for e in energies)
    return energies


def implicit_residual(params, k):
    """(-2ik + alpha)^2 - alpha^2 exp(4ika); vanishes at k = i*sqrt(-E).

    Note k = 0 is always a root and is not an eigenvalue.
    """
    k = np.asarray(k, dtype=complex)
    al = params.alpha
    return (-2j * k + al) ** 2 - al**2 * np.exp(4j * k * params.a)


def implicit_roots(params, tol=1e-13):
    """Positive roots kappa of (2 kappa + alpha)^2 - alpha^2 exp(-4 kappa a).

    The left side factors as (2k + alpha + alpha e^{-2ka}) (2k + alpha -
    alpha e^{-2ka}); each factor is bracketed analytically, bisected and
    Newton-polished.  Independent of Lambert W.  E1 first.
    """
    al, a = params.alpha, params.a
    if al > 0:
        return []

    def solve(f, df, lo, hi):
        flo = f(lo)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm == 0:
                return mid
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi = mid
            if hi - lo < tol * max(1.0, hi):
                break
        k = 0.5 * (lo + hi)
        for _ in range(3):
            d = df(k)
            if d == 0:
                break
            k -= f(k) / d
        return float(k)

    def even(k):
        return 2 * k + al + al * math.exp(-2 * k * a)

    def d_even(k):
        return 2 - 2 * a * al * math.exp(-2 * k * a)

    def odd(k):
        return 2 * k + al - al * math.exp(-2 * k * a)

    def d_odd(k):
        return 2 + 2 * a * al * math.exp(-2 * k * a)

    roots = [solve(even, d_even, 0.0, abs(al))]
    if params.a_alpha < -1 and not is_threshold(params):
        # odd factor vanishes at 0, dips below zero, crosses at the root
        k_min = math.log(-params.a_alpha) / (2 * a)
        roots.append(solve(odd, d_odd, k_min, abs(al) / 2))
    return roots


def _kappa(params, index):
    energies = eigenvalues(params)
    j = {"E1": 0, "E2": 1}[index]
    if j >= len(energies):
        raise MissingEigenvalueError(f"{index} does not exist for {params}")
    return math.sqrt(-energies[j])


def eigenfunction_values(params, index, x):
    """Analytically normalised eigenfunction N (e^{-k|x-a|} + s e^{-k|x+a|})."""
    k = _kappa(params, index)
    s = 1.0 if index == "E1" else -1.0
    a = params.a
    norm2 = 2.0 / k + 2.0 * s * math.exp(-2 * k * a) * (2 * a + 1.0 / k)
    x = np.asarray(x, dtype=float)
    return (np.exp(-k * np.abs(x - a)) + s * np.exp(-k * np.abs(x + a))) / math.sqrt(norm2)


def eigenfunction(params, index, grid):
    """Eigenfunction sampled on ``grid``, normalised by the trapezoid rule."""
    vals = eigenfunction_values(params, index, grid.x)
    psi = WaveFunction.on(grid, vals.astype(complex))
    return psi * (1.0 / psi.norm())


def bound_states(params, grid):
    out = []
    for idx, energy in zip(("E1", "E2"), eigenvalues(params)):
        out.append(
            BoundState(
                index=idx,
                energy=energy,
                kappa=math.sqrt(-energy),
                eigenfunction=eigenfunction(params, idx, grid),
                parity="even" if idx == "E1" else "odd",
            )
        )
    return out


def summary(params):
    energies = eigenvalues(params)
    return {
        "count": eigenvalue_count(params),
        "energies": energies,
        "kappas": [math.sqrt(-e) for e in energies],
        "threshold_flag": is_threshold(params),
    }
