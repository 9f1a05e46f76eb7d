"""The oscillatory integrals A_{2n+1}(gamma, delta) = int e^{-ir^2} (r + gamma + i delta)^{-2n-1} dr.

Two closed-form routes (split by the sign of delta, and the sign-unified
form in the (chi, eta) variables) plus an independent quadrature oracle
along the rotated contour r = e^{-i pi/4} s.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import quad_vec

from .specfun import AccuracyError, hermite, pcf_scaled_product

__all__ = [
    "AIntegralArgs",
    "a_closed",
    "a_unified",
    "a_quadrature",
    "residue_term",
    "pole_residue",
]

_I_POW = (1.0 + 0j, 1j, -1.0 + 0j, -1j)
_ROT = complex(math.cos(math.pi / 4), -math.sin(math.pi / 4))  # e^{-i pi/4}


@dataclass(frozen=True)
class AIntegralArgs:
    n: int
    gamma: float
    delta: float

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and 0 <= self.n <= 32):
            raise ValueError("n must be an integer in [0, 32]")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.delta == 0 or not math.isfinite(self.delta):
            raise ValueError("delta must be finite and nonzero")

    @property
    def c(self):
        return complex(self.gamma, self.delta)


def _i_pow(n):
    return _I_POW[n % 4]


def _minus_2i_pow(n):
    """(-2i)^n via exact quadrant arithmetic."""
    return 2.0**n * _I_POW[(3 * n) % 4]


def _principal(args, sign):
    """-sign i (-2i)^n sqrt(2 pi) e^{-i c^2/2} D_{-2n-1}(sign (1-i) c)."""
    c = args.c
    front = -sign * 1j * _minus_2i_pow(args.n) * math.sqrt(2 * math.pi)
    return front * pcf_scaled_product(2 * args.n, sign * (1 - 1j) * c, -1j * c * c / 2)


def residue_term(args):
    """i^n 2 pi i/(2n)! e^{-i c^2} H_{2n}(-sqrt(i) c), sqrt(i) = e^{i pi/4}.

    H_{2n} is even, so the branch of sqrt(i) does not matter.
    """
    c = args.c
    n = args.n
    sqrt_i = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    h = hermite(2 * n, -sqrt_i * c)
    return _i_pow(n) * 2j * math.pi / math.factorial(2 * n) * np.exp(-1j * c * c) * h


def a_closed(args):
    """Closed form: principal term, plus the Hermite residue term when delta < 0."""
    val = _principal(args, 1.0)
    if args.delta < 0:
        val += residue_term(args)
    return complex(val)


def a_unified(args):
    """Sign-unified form with chi = (gamma - delta)/2, eta = (gamma + delta)/2."""
    s = 1.0 if args.delta > 0 else -1.0
    chi = 0.5 * (args.gamma - args.delta)
    eta = 0.5 * (args.gamma + args.delta)
    w = complex(chi, eta)
    front = -s * 1j * _minus_2i_pow(args.n) * math.sqrt(2 * math.pi)
    return complex(front * pcf_scaled_product(2 * args.n, -s * 2j * w, -(w * w)))


def pole_residue(n, p):
    """Res_{r=p} e^{-ir^2} (r - p)^{-2n-1}: Taylor coefficient of h^{2n} in e^{-i(p+h)^2}.

    Uses e^{-i(p+h)^2} = e^{-ip^2} e^{-2iph} e^{-ih^2}; no Hermite polynomials.
    """
    total = 0j
    for l in range(n + 1):
        j = 2 * n - 2 * l
        total += (-2j * p) ** j / math.factorial(j) * (-1j) ** l / math.factorial(l)
    return np.exp(-1j * p * p) * total


def a_quadrature(args, epsabs=1e-10, max_error=1e-8, clearance=1.0):
    """Brute-force A_{2n+1} on a line parallel to e^{-i pi/4} R.

    The contour is r = e^{-i pi/4}(s + i sigma), on which
    e^{-ir^2} = e^{-(s + i sigma)^2} is Gaussian-damped.  sigma = 0 is the
    plain rotation; sigma is shifted (|sigma| <= clearance) only when the
    pole r = -gamma - i delta would otherwise come closer than ``clearance``
    to the line, which would make the integrand huge and cancel badly.
    Poles in the region swept between R and the line contribute
    +-2 pi i times the residue.
    """
    n, c = args.n, args.c
    pole = -c
    g_pole = (pole.real + pole.imag) / math.sqrt(2)  # signed offset along i e^{-i pi/4}
    sigma = 0.0
    if abs(g_pole) < clearance:
        sigma = g_pole - clearance if g_pole >= 0 else g_pole + clearance
    big_s = max(8.0, args.gamma + abs(args.delta) + 6.0 * math.sqrt(2 * n + 1))

    def f(s):
        w = s + 1j * sigma
        return np.exp(-w * w) * _ROT * (_ROT * w + c) ** (-2 * n - 1)

    # point of the line nearest the pole, used as a breakpoint
    s_star = float(np.real(pole / _ROT))
    pts = sorted({-big_s, min(max(s_star, -big_s + 1), big_s - 1), 0.0, big_s})
    val, err = 0j, 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        v, e = quad_vec(f, lo, hi, epsabs=epsabs * 0.1, epsrel=1e-13, limit=400)
        val += v
        err += e
    # Gaussian tail beyond |s| = S; the pole is at least min(clearance, |g|) away
    dist = min(clearance, max(abs(g_pole - sigma), 1e-300))
    err += math.exp(sigma**2 - big_s**2) / big_s * dist ** (-2 * n - 1)
    if err > max_error:
        raise AccuracyError(f"a_quadrature: estimated error {err:.2e}")
    line_offset = math.sqrt(2) * sigma  # line is x + y = sqrt(2) sigma
    px, py = pole.real, pole.imag
    if py > 0 and px + py < line_offset:
        val += 2j * math.pi * pole_residue(n, pole)
    elif py < 0 and px + py > line_offset:
        val -= 2j * math.pi * pole_residue(n, pole)
    return complex(val)
