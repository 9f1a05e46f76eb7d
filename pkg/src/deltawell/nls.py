"""Nonlinear evolution  i psi_t = H_alpha psi + nu |psi|^{2 mu} psi.

Two independent integrators:

* ``strang_split``: half nonlinear phase, linear step, half nonlinear phase.
  The nonlinear substep is exact because |psi| is invariant under
  i psi' = nu |psi|^{2mu} psi.
* ``duhamel_picard``: fixed-point iteration of the integral equation
  psi_t = e^{-itH} psi_0 - i nu int_0^t e^{-i(t-s)H} |psi_s|^{2mu} psi_s ds.

The default linear step is the exact exponential of the finite-difference
Hamiltonian H_h (second differences on the interior nodes, Dirichlet values
psi = 0 at the two grid ends, plus alpha/h on the diagonal at the +-a
nodes).  H_h is tridiagonal, so it is diagonalised once per (params, grid).
For time steps with sqrt(dt) below the grid spacing the continuum kernel
oscillates faster than the grid can resolve, so the kernel step (``linear_step="kernel"``, dense matrix of
:func:`deltawell.propagator.kernel_matrix`) is only usable on fine grids or
with large steps.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math
import warnings

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .grid import Grid, WaveFunction
from .propagator import apply_propagator
from .spectrum import WellParams

__all__ = [
    "BlowUpError",
    "NonContractionError",
    "SimulationConfig",
    "ConservationLedger",
    "charge",
    "energy",
    "evolve",
    "duhamel_picard",
    "linear_evolution",
    "dirichlet",
    "standard_grid",
]

BLOW_UP_FACTOR = 1e6
CONTRACTION_FACTOR = 0.9


class BlowUpError(ArithmeticError):
    """sup|psi| grew beyond BLOW_UP_FACTOR times its initial value."""


class NonContractionError(ArithmeticError):
    """Successive Picard iterates failed to contract."""


@dataclass(frozen=True)
class SimulationConfig:
    params: WellParams
    mu: float
    nu: float
    dt: float
    T: float
    initial: WaveFunction = field(repr=False)
    scheme: str = "strang_split"
    save_every: int = 1
    linear_step: str = "discrete"
    energy_shift: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not math.isfinite(self.nu):
            raise ValueError("nu must be finite")
        if not 0 < self.dt < self.T:
            raise ValueError("need 0 < dt < T")
        if abs(self.T / self.dt - round(self.T / self.dt)) > 1e-8 * (self.T / self.dt):
            raise ValueError("T must be an integer multiple of dt")
        if self.scheme not in ("strang_split", "duhamel_picard"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.linear_step not in ("discrete", "kernel"):
            raise ValueError(f"unknown linear step {self.linear_step!r}")
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")
        self.initial.grid.require_nodes(-self.params.a, self.params.a)

    @property
    def steps(self):
        return int(round(self.T / self.dt))

    @property
    def focusing(self):
        """nu < 0 lies outside the positive-coupling hypothesis."""
        return self.nu < 0


@dataclass
class ConservationLedger:
    times: list = field(default_factory=list)
    charges: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    outer_mass: list = field(default_factory=list)

    def record(self, t, psi, config):
        self.times.append(float(t))
        self.charges.append(charge(psi))
        self.energies.append(energy(psi, config.params, config.mu, config.nu))
        self.outer_mass.append(_outer_mass(psi))

    def charge_drift(self):
        c = np.asarray(self.charges)
        return float(np.max(np.abs(c - c[0])) / c[0])

    def energy_drift(self):
        e = np.asarray(self.energies)
        return float(np.max(np.abs(e - e[0])) / abs(e[0]))


def charge(psi):
    """L2 norm (not squared), trapezoid rule."""
    return psi.norm()


def energy(psi, params, mu, nu):
    """||psi'||^2 + alpha (|psi(a)|^2 + |psi(-a)|^2) + nu/(mu+1) ||psi||_{2mu+2}^{2mu+2}.

    The gradient term uses forward differences between neighbouring nodes;
    since +-a are nodes, no difference straddles a kink.  For nu = 0 and
    psi vanishing at the grid ends this is exactly the quadratic form of the
    discrete Hamiltonian used by the linear step.
    """
    grid = psi.grid
    h = grid.spacing
    jm, jp = grid.require_nodes(-params.a, params.a)
    v = psi.values
    grad = np.sum(np.abs(np.diff(v)) ** 2) / h
    point = params.alpha * (abs(v[jm]) ** 2 + abs(v[jp]) ** 2)
    nonlin = 0.0
    if nu != 0:
        nonlin = nu / (mu + 1) * float(np.sum(grid.weights() * np.abs(v) ** (2 * mu + 2)))
    return float(grad + point + nonlin)


def _outer_mass(psi):
    """Fraction of the squared norm in the outer 10% of the grid (5% each side)."""
    n = psi.values.size
    edge = max(1, n // 20)
    w = psi.grid.weights()
    dens = w * np.abs(psi.values) ** 2
    total = dens.sum()
    if total == 0:
        return 0.0
    return float((dens[:edge].sum() + dens[-edge:].sum()) / total)


@lru_cache(maxsize=8)
def _discrete_spectrum(params, grid, shift):
    """Eigenpairs of H_h - shift on the interior nodes 1..size-2."""
    h = grid.spacing
    jm, jp = grid.require_nodes(-params.a, params.a)
    if not (0 < jm and jp < grid.size - 1):
        raise ValueError("+-a must be interior nodes")
    n = grid.size - 2
    diag = np.full(n, 2.0 / h**2) - shift
    diag[jm - 1] += params.alpha / h
    diag[jp - 1] += params.alpha / h
    off = np.full(n - 1, -1.0 / h**2)
    return eigh_tridiagonal(diag, off)


@lru_cache(maxsize=8)
def _discrete_step(params, grid, shift, t):
    lam, vec = _discrete_spectrum(params, grid, shift)
    return (vec * np.exp(-1j * t * lam)) @ vec.T


def _apply_interior(mat, v):
    out = np.zeros_like(v, dtype=complex)
    out[1:-1] = mat @ v[1:-1]
    return out


def dirichlet(psi):
    """Copy of psi with its two end values set to zero."""
    v = psi.values.copy()
    v[0] = v[-1] = 0
    return psi.with_values(v)


def linear_evolution(params, t, psi, energy_shift=0.0, linear_step="discrete"):
    """exp(-it (H - energy_shift)) psi with the chosen linear step.

    The discrete step discards the two end values (Dirichlet condition).
    """
    if linear_step == "discrete":
        mat = _discrete_step(params, psi.grid, float(energy_shift), float(t))
        return psi.with_values(_apply_interior(mat, psi.values))
    out = apply_propagator(params, t, psi, part="full")
    if energy_shift:
        out = out * np.exp(1j * t * energy_shift)
    return out


def _phase(values, mu, nu, tau):
    return values * np.exp(-1j * nu * tau * np.abs(values) ** (2 * mu))


def _strang(config):
    psi0 = dirichlet(config.initial) if config.linear_step == "discrete" else config.initial
    v = psi0.values.copy()
    sup0 = np.max(np.abs(v))
    ledger = ConservationLedger()
    traj = [psi0]
    ledger.record(0.0, psi0, config)
    dt, mu, nu = config.dt, config.mu, config.nu
    if config.linear_step == "discrete":
        mat = _discrete_step(config.params, psi0.grid, float(config.energy_shift), float(dt))
        lin = lambda w: _apply_interior(mat, w)  # noqa: E731
    else:
        lin = lambda w: linear_evolution(  # noqa: E731
            config.params, dt, psi0.with_values(w), config.energy_shift, "kernel"
        ).values
    for n in range(1, config.steps + 1):
        v = _phase(v, mu, nu, dt / 2)
        v = lin(v)
        v = _phase(v, mu, nu, dt / 2)
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > BLOW_UP_FACTOR * sup0:
            raise BlowUpError(f"sup|psi| exceeded {BLOW_UP_FACTOR:g} x initial at t={n * dt:g}")
        if n % config.save_every == 0 or n == config.steps:
            psi = psi0.with_values(v)
            traj.append(psi)
            ledger.record(n * dt, psi, config)
    return traj, ledger


def _picard_trajectory(config, n_iter, tol, rule):
    """Converged Picard trajectory at all step times (rows) and iterate distances."""
    if config.linear_step != "discrete":
        raise ValueError("duhamel_picard supports the discrete linear step only")
    psi0 = dirichlet(config.initial)
    grid = psi0.grid
    lam, vec = _discrete_spectrum(config.params, grid, float(config.energy_shift))
    times = config.dt * np.arange(config.steps + 1)
    w = grid.weights()
    c0 = vec.T @ psi0.values[1:-1]
    phase = np.exp(-1j * np.outer(times, lam))  # e^{-i t_k lam}
    free = phase * c0  # eigen-coefficients of e^{-itH} psi0
    traj = np.tile(psi0.values, (times.size, 1))
    dt = config.dt
    if rule == "product":
        # exact integral of e^{i lam s} against the linear interpolant of c(s)
        z = 1j * lam * dt
        small = np.abs(z) < 1e-4
        zs = np.where(small, 1.0, z)
        ez = np.exp(z)
        w_left = np.where(small, dt * (0.5 + z / 6), dt * (ez - 1 - z) / zs**2)
        w_right = np.where(small, dt * (0.5 + z / 3), dt * (z * ez - ez + 1) / zs**2)
    elif rule != "trapezoid":
        raise ValueError(f"unknown time rule {rule!r}")
    diffs = []
    for _ in range(n_iter):
        f = np.abs(traj) ** (2 * config.mu) * traj
        c = f[:, 1:-1] @ vec  # eigen-coefficients of the nonlinearity, rows = times
        if rule == "trapezoid":
            g = np.conj(phase) * c  # e^{i s lam} c(s)
            pieces = 0.5 * dt * (g[1:] + g[:-1])
        else:
            # e^{i s_l lam} factored out of each interval
            pieces = np.conj(phase[:-1]) * (w_left * c[:-1] + w_right * c[1:])
        integ = np.vstack([np.zeros_like(pieces[:1]), np.cumsum(pieces, axis=0)])
        coeffs = free - 1j * config.nu * phase * integ
        new = np.zeros_like(traj)
        new[:, 1:-1] = coeffs @ vec.T
        d = np.sqrt(np.max(np.sum(w * np.abs(new - traj) ** 2, axis=1)))
        traj = new
        diffs.append(float(d))
        if d <= tol:
            break
        if len(diffs) >= 2 and d > 10 * tol and d >= CONTRACTION_FACTOR * diffs[-2]:
            raise NonContractionError(
                f"Picard iterate distance {diffs[-2]:.3e} -> {diffs[-1]:.3e}; reduce T"
            )
    return times, traj, diffs


def duhamel_picard(config, n_iter=50, tol=1e-13, rule="product", return_history=False):
    """Solution at T from the Picard iteration of the integral equation.

    The time integral is discretised on the step grid, either by the
    composite trapezoid rule (``rule="trapezoid"``) or, by default, by the
    product-trapezoid rule that integrates the oscillatory factor
    e^{i s lambda} exactly against a piecewise-linear nonlinearity (the
    plain rule is inaccurate for the stiff high modes of H_h).  Iteration
    stops when successive trajectories differ by at most ``tol`` in L2
    (sup over time) or after ``n_iter`` iterations.  Starting from the
    constant trajectory psi_0, nu = 0 is exact after one iteration.
    """
    _, traj, diffs = _picard_trajectory(config, n_iter, tol, rule)
    psi = config.initial.with_values(traj[-1])
    return (psi, diffs) if return_history else psi


def evolve(config, picard_iterations=50):
    """Integrate to T; returns (trajectory at save times, ConservationLedger).

    Save times are t = 0 and every ``save_every`` steps, plus T.  With the
    discrete linear step the initial datum's two end values are set to zero
    first (Dirichlet box), and the trajectory starts from that datum.
    """
    if config.focusing:
        warnings.warn(
            "nu < 0 (focusing) is outside the positive-coupling hypothesis", stacklevel=2
        )
    if config.scheme == "strang_split":
        return _strang(config)
    times, traj, _ = _picard_trajectory(config, picard_iterations, 1e-13, "product")
    psi0 = dirichlet(config.initial)
    ledger = ConservationLedger()
    out = []
    for n in range(times.size):
        if n == 0 or n % config.save_every == 0 or n == times.size - 1:
            psi = psi0.with_values(traj[n])
            out.append(psi)
            ledger.record(times[n], psi, config)
    return out, ledger


def standard_grid(params, L=20.0, N=512):
    """Symmetric grid on [-L, L] with N intervals and +-a on nodes."""
    return Grid.symmetric(L, N, params.a)
