"""Resolvent kernel of H_alpha and its action on sampled functions."""

import math

import numpy as np

from .grid import WaveFunction
from .spectrum import eigenvalues

__all__ = [
    "PoleError",
    "free_resolvent",
    "resolvent_kernel",
    "resolvent_bvp",
    "apply_resolvent",
    "lp_bound_probe",
    "probe_family",
]


class PoleError(ArithmeticError):
    """Spectral parameter too close to a pole of the resolvent."""


def free_resolvent(x, y, k):
    """K_0(x, y; k) = i/(2k) exp(ik|x-y|)."""
    return 1j / (2 * k) * np.exp(1j * k * np.abs(np.subtract(x, y)))


def _l1(params, x, y, k):
    a, al = params.a, params.alpha
    return -al * (2 * k + 1j * al) * np.exp(1j * k * np.abs(x + a)) * np.exp(1j * k * np.abs(y + a))


def _l2(params, x, y, k):
    a, al = params.a, params.alpha
    return (
        1j
        * al**2
        * np.exp(2j * k * a)
        * np.exp(1j * k * np.abs(x + a))
        * np.exp(1j * k * np.abs(y - a))
    )


def interaction_numerator(params, x, y, k):
    """f_alpha = L^1 + L^2 + L^3 + L^4 with L^4(x,y) = L^1(-x,-y), L^3(x,y) = L^2(-x,-y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return _l1(params, x, y, k) + _l1(params, -x, -y, k) + _l2(params, x, y, k) + _l2(
        params, -x, -y, k
    )


def denominator(params, k):
    al = params.alpha
    return (2 * k + 1j * al) ** 2 + al**2 * np.exp(4j * k * params.a)


def resolvent_kernel(params, x, y, k):
    """K_alpha(x, y; k) for Im k >= 0, vectorised over x and y."""
    k = complex(k)
    if k.imag < 0 or k == 0:
        raise ValueError("resolvent_kernel needs Im k >= 0 and k != 0")
    al = params.alpha
    den = denominator(params, k)
    if abs(den) < 1e-12 * (abs(2 * k + 1j * al) ** 2 + al**2):
        raise PoleError(f"k={k} is (numerically) a pole of the resolvent")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return free_resolvent(x, y, k) - interaction_numerator(params, x, y, k) / (2 * k * den)


def resolvent_bvp(params, x, y, k):
    """Independent resolvent: solve the matching problem for the scattered part.

    K = K_0 + u where u is a combination of e^{+-ikx} on (-inf,-a), (-a,a),
    (a,inf) that decays at infinity, is continuous at +-a, and has derivative
    jumps u'(+-a+0) - u'(+-a-0) = alpha (u(+-a) + K_0(+-a, y)).
    """
    a, al = params.a, params.alpha
    k = complex(k)
    # unknowns: d0 (left, e^{-ikx}), c1, d1 (middle), c2 (right, e^{ikx})
    ep = lambda s: np.exp(1j * k * s)  # noqa: E731
    em = lambda s: np.exp(-1j * k * s)  # noqa: E731
    mat = np.zeros((4, 4), dtype=complex)
    rhs = np.zeros(4, dtype=complex)
    k0 = lambda s: free_resolvent(s, y, k)  # noqa: E731
    # continuity at -a: d0 e^{ika} = c1 e^{-ika} + d1 e^{ika}
    mat[0] = [em(-a), -ep(-a), -em(-a), 0]
    # jump at -a: u'(-a+) - u'(-a-) - al u(-a) = al K0(-a)
    mat[1] = [
        -(-1j * k) * em(-a) - al * em(-a),
        1j * k * ep(-a),
        -1j * k * em(-a),
        0,
    ]
    rhs[1] = al * k0(-a)
    # continuity at a
    mat[2] = [0, ep(a), em(a), -ep(a)]
    # jump at a
    mat[3] = [
        0,
        -1j * k * ep(a),
        1j * k * em(a),
        1j * k * ep(a) - al * ep(a),
    ]
    rhs[3] = al * k0(a)
    d0, c1, d1, c2 = np.linalg.solve(mat, rhs)
    if x < -a:
        u = d0 * em(x)
    elif x <= a:
        u = c1 * ep(x) + d1 * em(x)
    else:
        u = c2 * ep(x)
    return complex(k0(x) + u)


def _kernel_matrix(params, grid, k):
    x = grid.x
    return resolvent_kernel(params, x[:, None], x[None, :], k)


def apply_resolvent(params, u, k):
    """(H_alpha - k^2)^{-1} u by trapezoid quadrature on u's grid."""
    k = complex(k)
    if k.imag <= 0:
        raise ValueError("apply_resolvent needs Im k > 0")
    grid = u.grid
    grid.require_nodes(-params.a, params.a)
    mat = _kernel_matrix(params, grid, k)
    return WaveFunction.on(grid, mat @ (grid.weights() * u.values))


def probe_family(grid):
    """Fixed test functions: Gaussians, indicators and peaked bumps."""
    x = grid.x
    half = 0.5 * grid.length
    fam = []
    for c in (0.0, 0.3 * half):
        for w in (0.25, 1.0, 3.0):
            fam.append(np.exp(-((x - c) ** 2) / (2 * w**2)))
    for lo, hi in ((-1.0, 1.0), (0.0, 0.5), (-3.0, 2.0)):
        fam.append(((x >= lo) & (x <= hi)).astype(float))
    for c in (-1.0, 1.0):
        fam.append(np.exp(-np.abs(x - c) * 4.0))
    return fam


def _lp_norm(vals, weights, p):
    if math.isinf(p):
        return float(np.max(np.abs(vals)))
    return float(np.sum(weights * np.abs(vals) ** p) ** (1.0 / p))


def lp_bound_probe(params, lam, p, grid):
    """max over the probe family of ||(eps T - 1)^{-1} u||_p / ||u||_p.

    T = H_alpha (alpha > 0) or H_alpha - E1 (alpha < 0); its kernel is
    eps^{-1} K_alpha(x, y; i lam) with eps^{-1} = -lam^2 - E1 * [alpha < 0].
    A finite test family gives a lower estimate of the operator norm.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    e1 = 0.0
    if params.alpha < 0:
        e1 = eigenvalues(params)[0]
        if lam <= math.sqrt(-e1):
            raise ValueError("for alpha < 0 need lam > sqrt(|E1|)")
    inv_eps = -(lam**2) - e1
    w = grid.weights()
    mat = inv_eps * _kernel_matrix(params, grid, 1j * lam) * w[None, :]
    best = 0.0
    for u in probe_family(grid):
        out = mat @ u
        best = max(best, _lp_norm(out, w, p) / _lp_norm(u, w, p))
    return best
