"""Special functions used by the propagator series.

Lambert W (real branches), the Faddeeva function, Hermite polynomials and
parabolic cylinder functions D_{-m-1}(z) of negative integer order at
complex argument.  The parabolic cylinder values are returned in scaled
form so that products with large exponential prefactors never overflow.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

__all__ = [
    "ScaledComplex",
    "AccuracyError",
    "lambert_w",
    "faddeeva",
    "hermite",
    "hermite_he",
    "pcf_neg",
    "pcf_scaled_product",
    "M_MAX",
    "M_LIMIT",
]

M_MAX = 64  # default series cut-off used by the kernel
M_LIMIT = 1000  # largest order index accepted (accuracy checked to m = 800)
_PCF_RTOL = 1e-10
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_LOG_SQRT_HALF_PI = 0.5 * math.log(0.5 * math.pi)


class AccuracyError(ArithmeticError):
    """A numerical routine could not certify its requested accuracy."""


@dataclass(frozen=True)
class ScaledComplex:
    """Complex number ``mantissa * exp(log_scale)``.

    ``mantissa`` and ``log_scale`` may be numpy arrays of equal shape.
    """

    mantissa: np.ndarray
    log_scale: np.ndarray

    @classmethod
    def from_log(cls, logval):
        """Build from a complex logarithm (``-inf`` real part means zero)."""
        logval = np.asarray(logval, dtype=complex)
        re = logval.real
        zero = ~np.isfinite(re)
        # pick log_scale so that |mantissa| lands in [0.5, 2)
        k = np.where(zero, 0.0, np.floor(re / math.log(2.0) + 1.0))
        scale = k * math.log(2.0)
        mant = np.where(zero, 0.0, np.exp(np.where(zero, 0.0, logval - scale)))
        return cls(np.asarray(mant, dtype=complex), np.asarray(scale, dtype=float))

    @classmethod
    def from_complex(cls, value):
        value = np.asarray(value, dtype=complex)
        with np.errstate(divide="ignore"):
            return cls.from_log(np.where(value == 0, -np.inf + 0j, np.log(value)))

    def log(self):
        with np.errstate(divide="ignore"):
            return np.log(self.mantissa) + self.log_scale

    def value(self):
        """Plain complex value (may overflow to inf)."""
        with np.errstate(over="ignore"):
            return self.mantissa * np.exp(self.log_scale)

    def __mul__(self, other):
        if isinstance(other, ScaledComplex):
            return ScaledComplex.from_log(self.log() + other.log())
        return ScaledComplex.from_log(self.log() + np.log(complex(other)))

    def __add__(self, other):
        top = np.maximum(self.log_scale, other.log_scale)
        s = self.mantissa * np.exp(self.log_scale - top) + other.mantissa * np.exp(
            other.log_scale - top
        )
        with np.errstate(divide="ignore"):
            logs = np.where(s == 0, -np.inf + 0j, np.log(np.where(s == 0, 1.0, s)) + top)
        return ScaledComplex.from_log(logs)


# ---------------------------------------------------------------------------
# Lambert W
# ---------------------------------------------------------------------------


def lambert_w(branch, x):
    """Real Lambert W on the ``"principal"`` or ``"minus_one"`` branch.

    Halley iteration on ``w*exp(w) - x`` started from a branch-appropriate
    guess.  Raises ``ValueError`` outside the branch domain.
    """
    x = float(x)
    branch_point = -math.exp(-1.0)
    if branch == "principal":
        if x < branch_point - 1e-16:
            raise ValueError(f"principal branch needs x >= -1/e, got {x}")
    elif branch == "minus_one":
        if not (branch_point - 1e-16 <= x < 0.0):
            raise ValueError(f"minus_one branch needs -1/e <= x < 0, got {x}")
    else:
        raise ValueError(f"unknown branch {branch!r}")

    if x == 0.0:
        return 0.0
    if x <= branch_point:
        return -1.0

    p2 = 2.0 * (math.e * x + 1.0)  # p^2, p -> 0 at the branch point
    if branch == "principal":
        if p2 < 0.5:
            p = math.sqrt(p2)
            w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
        elif x < 3.0:
            w = math.log1p(x)
            w = w * (1.0 - math.log1p(w) / (2.0 + w))
        else:
            lx = math.log(x)
            w = lx - math.log(lx) if lx > 1.0 else lx
    else:
        if p2 < 0.5:
            p = -math.sqrt(p2)
            w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
        else:
            l1 = math.log(-x)
            l2 = math.log(-l1)
            w = l1 - l2 + l2 / l1

    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            break
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_new = w - step
        if branch == "principal":
            w_new = max(w_new, -1.0)
        else:
            w_new = min(w_new, -1.0)
        if abs(w_new - w) <= 1e-15 * max(1.0, abs(w_new)):
            w = w_new
            break
        w = w_new
    return w


# ---------------------------------------------------------------------------
# Faddeeva / Hermite
# ---------------------------------------------------------------------------


def faddeeva(z):
    """w(z) = exp(-z**2) * erfc(-i z)."""
    return special.wofz(z)


def hermite(m, z):
    """Physicists' Hermite polynomial H_m(z) by three-term recurrence."""
    if m < 0 or m > 200:
        raise ValueError("hermite: degree must be in [0, 200]")
    z = np.asarray(z, dtype=complex)
    h_prev = np.ones_like(z)
    if m == 0:
        return h_prev if h_prev.ndim else complex(h_prev)
    h = 2.0 * z
    for k in range(1, m):
        with np.errstate(over="ignore", invalid="ignore"):
            h_prev, h = h, 2.0 * z * h - 2.0 * k * h_prev
        if not np.all(np.isfinite(h)):
            raise OverflowError(f"hermite: H_{k + 1} overflows at |z|={np.max(np.abs(z)):.3g}")
    return h if h.ndim else complex(h)


def hermite_he(m, x):
    """Log of the probabilists' Hermite polynomial He_m(x), overflow-safe.

    Returns a complex log (``-inf`` real part where He_m vanishes).
    """
    x = np.asarray(x, dtype=complex)
    h_prev = np.zeros_like(x)
    h = np.ones_like(x)
    logscale = np.zeros(x.shape)
    for k in range(m):
        h_prev, h = h, x * h - k * h_prev
        big = np.maximum(np.abs(h), np.abs(h_prev))
        resc = big > 1e100
        if np.any(resc):
            f = np.where(resc, big, 1.0)
            h = h / f
            h_prev = h_prev / f
            logscale = logscale + np.log(f)
    with np.errstate(divide="ignore"):
        return np.where(h == 0, -np.inf + 0j, np.log(np.where(h == 0, 1.0, h)) + logscale)


# ---------------------------------------------------------------------------
# Parabolic cylinder functions of negative integer order
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_THETA_MAX = math.pi / 4 - 0.08
_DROP = 46.0


def _expo(m, w, t):
    return m * np.log(t) - 0.5 * t * t - w * t


def _descent(m, tc):
    """Steepest-descent direction (Re >= 0) and leg length at a saddle tc."""
    g2 = -m / (tc * tc) - 1.0
    g3 = 2.0 * m / (tc * tc * tc)
    # where the two saddles merge g2 -> 0 and the cubic term sets the width
    g2 = np.where(np.abs(g2) < 1e-10, -1e-10, g2)
    d = np.exp(0.5j * (math.pi - np.angle(g2)))
    d = np.where(d.real < 0, -d, d)
    # exactly vertical: head down, away from the origin
    d = np.where(np.abs(d.real) < 1e-14, -1j, d)
    leg = np.minimum(6.0 / np.sqrt(np.abs(g2)), (108.0 / np.abs(g3)) ** (1.0 / 3.0))
    return d, leg


def _saddle_path(m, w, via_second=False):
    """Vertices of a polyline from 0 through the saddle(s), plus the final ray.

    The integrand t^m exp(-t^2/2 - w t) has saddles
    t_+ = 2m / (w + sqrt(w^2 + 4m)) and t_- = -m / t_+.  The default path
    runs 0 -> t_+ -> along the steepest-descent direction -> ray inside
    |arg t| < pi/4.  Near the imaginary axis (|Im w| > 2 sqrt(m)) the
    descent path from t_+ runs into t_-; ``via_second`` then routes
    0 -> t_+ -> t_- -> descent leg -> ray.
    """
    ts = 2.0 * m / (w + np.sqrt(w * w + 4.0 * m))
    verts = [np.zeros_like(ts), ts]
    last = ts
    if via_second:
        last = -m / ts
        verts.append(last)
    d, leg = _descent(m, last)
    v2 = last + leg * d
    verts.append(v2)
    theta = np.clip(np.angle(v2), -_THETA_MAX, _THETA_MAX)
    return ts, verts, np.exp(1j * theta)


def _ray_length(m, w, v2, rot, peak):
    """Length along the final ray until Re(exponent) < peak - _DROP."""
    s = np.linspace(0.0, 1.0, 401)[1:]
    lengths = 68.0 + 4.0 * np.abs(v2)
    t = v2[..., None] + rot[..., None] * lengths[..., None] * s
    re = _expo(m, w[..., None], t).real - peak[..., None]
    above = re > -_DROP
    # index of the last sample still above the threshold
    idx = np.where(above.any(axis=-1), above.shape[-1] - 1 - np.argmax(above[..., ::-1], axis=-1), 0)
    frac = s[np.minimum(idx + 1, s.size - 1)]
    return lengths * frac + 1e-3


def _segment(m, w, a, b, panels, peak):
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    u = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    t = a[..., None] + (b - a)[..., None] * u
    vals = np.exp(_expo(m, w[..., None], t) - peak[..., None]) * wts
    jac = b - a
    return vals.sum(axis=-1) * jac, np.abs(vals).sum(axis=-1) * np.abs(jac)


def _log_laplace_integral(m, w, panels, via_second=False):
    """log of int_0^inf t^m exp(-t^2/2 - w t) dt for Re w >= 0 and m >= 1.

    Returns the complex log and the cancellation ratio sum|f| / |sum f|.
    """
    ts, verts, rot = _saddle_path(m, w, via_second)
    peak = _expo(m, w, ts).real
    if via_second:
        peak = np.maximum(peak, _expo(m, w, verts[2]).real)
    v_end = verts[-1]
    length = _ray_length(m, w, v_end, rot, peak)
    total = np.zeros_like(w)
    mass = np.zeros(np.shape(w))
    for lo, hi in zip(verts[:-1], verts[1:]):
        i, a = _segment(m, w, lo, hi, panels, peak)
        total = total + i
        mass = mass + a
    i, a = _segment(m, w, v_end, v_end + rot * length, 2 * panels, peak)
    total = total + i
    mass = mass + a
    with np.errstate(divide="ignore"):
        logval = np.log(total) + peak
    return logval, mass / np.maximum(np.abs(total), 1e-300)


def _laplace_with_error(m, w, via_second=False):
    coarse, _ = _log_laplace_integral(m, w, 4, via_second)
    fine, cond = _log_laplace_integral(m, w, 8, via_second)
    with np.errstate(invalid="ignore"):
        err = np.abs(np.expm1(coarse - fine))
    # rounding in the large exponents sets a floor on the attainable accuracy
    err = np.maximum(err, np.maximum(cond, 8.0 + np.abs(w) ** 2) * 2.2e-16)
    return fine, np.where(np.isfinite(err), err, np.inf)


def _log_pcf_right(m, w):
    """log D_{-m-1}(w) for Re w >= 0, with a relative error estimate."""
    if m == 0:
        val = faddeeva(1j * w / math.sqrt(2.0))
        err = (8.0 + np.abs(w) ** 2) * 2.2e-16
        return _LOG_SQRT_HALF_PI - 0.25 * w * w + np.log(val), err
    w = np.asarray(w, dtype=complex)
    fine, err = _laplace_with_error(m, w)
    retry = err > 1e-12
    if np.any(retry):
        w2 = np.atleast_1d(w)[np.atleast_1d(retry)]
        f2, e2 = _laplace_with_error(m, w2, via_second=True)
        better = e2 < np.atleast_1d(err)[np.atleast_1d(retry)]
        fine = np.atleast_1d(fine).copy()
        err = np.atleast_1d(err).copy()
        idx = np.flatnonzero(np.atleast_1d(retry))[better]
        fine[idx] = f2[better]
        err[idx] = e2[better]
        fine = fine.reshape(w.shape)
        err = err.reshape(w.shape)
    return fine - 0.25 * w * w - math.lgamma(m + 1), err


def _reflection_log_term(m, z):
    """log of sqrt(2 pi)/m! * i^m * exp(z^2/4) * He_m(i z)."""
    return (
        math.log(_SQRT_2PI)
        - math.lgamma(m + 1)
        + 0.5j * math.pi * m
        + 0.25 * z * z
        + hermite_he(m, 1j * z)
    )


def _log_pcf(m, z, log_prefactor=0.0):
    z = np.asarray(z, dtype=complex)
    lp = np.broadcast_to(np.asarray(log_prefactor, dtype=complex), z.shape)
    left = z.real < 0
    w = np.where(left, -z, z)
    logd, err = _log_pcf_right(m, w)
    out = ScaledComplex.from_log(logd + lp)
    if np.any(left):
        # D_{-m-1}(z) = (-1)^{m+1} D_{-m-1}(-z) + sqrt(2pi)/m! i^m e^{z^2/4} He_m(iz)
        refl = ScaledComplex.from_log(_reflection_log_term(m, z) + lp)
        flipped = ScaledComplex(out.mantissa * (-1.0) ** (m + 1), out.log_scale)
        combined = flipped + refl
        # error relative to the combined value, inflated by the cancellation
        denom = np.maximum(np.abs(combined.mantissa), 1e-300)
        ratio = np.exp(flipped.log_scale - combined.log_scale) * np.abs(flipped.mantissa) / denom
        ratio_refl = np.exp(refl.log_scale - combined.log_scale) * np.abs(refl.mantissa) / denom
        floor = (8.0 + np.abs(z) ** 2) * 2.2e-16 * np.maximum(1.0, ratio + ratio_refl)
        err = np.where(left, np.maximum(err * ratio, floor), err)
        out = ScaledComplex(
            np.where(left, combined.mantissa, out.mantissa),
            np.where(left, combined.log_scale, out.log_scale),
        )
    return out, err


def pcf_neg(m, z, rtol=_PCF_RTOL):
    """D_{-m-1}(z) as a :class:`ScaledComplex` (array-valued for array z).

    m = 0 goes through the Faddeeva function; m >= 1 through quadrature of
    ``exp(-z^2/4)/m! * int_0^inf t^m exp(-t^2/2 - z t) dt``.  Arguments with
    negative real part use the reflection
    ``D(z) = (-1)^{m+1} D(-z) + sqrt(2 pi)/m! i^m exp(z^2/4) He_m(i z)``.
    """
    if m < 0 or m > M_LIMIT:
        raise ValueError(f"pcf_neg: order index m must be in [0, {M_LIMIT}]")
    out, err = _log_pcf(m, z)
    if np.any(err > rtol):
        raise AccuracyError(f"pcf_neg(m={m}): estimated relative error {np.max(err):.2e}")
    if out.mantissa.ndim == 0:
        return ScaledComplex(complex(out.mantissa), float(out.log_scale))
    return out


def pcf_scaled_product(m, z, log_prefactor, rtol=_PCF_RTOL, with_error=False):
    """exp(log_prefactor) * D_{-m-1}(z) without intermediate overflow.

    With ``with_error=True`` nothing is raised; returns (value, abs_error)
    where abs_error is the estimated absolute error of the product.
    """
    if m < 0 or m > M_LIMIT:
        raise ValueError(f"pcf_scaled_product: m must be in [0, {M_LIMIT}]")
    out, err = _log_pcf(m, z, log_prefactor)
    if with_error:
        val = out.value()
        return val, np.abs(val) * err
    if np.any(err > rtol):
        raise AccuracyError(
            f"pcf_scaled_product(m={m}): estimated relative error {np.max(err):.2e}"
        )
    val = out.value()
    return complex(val) if np.ndim(val) == 0 else val
