"""
Hopf Module for the KdV small-dispersion study.

Provides the initial-data profiles and the dispersionless (Hopf) solution
u = u0(x - 6 t u), including:
- The reference datum u0 = -sech^2 x with closed-form inverse branches
- A pure cubic profile used by the connection formulas
- Spline profiles for tabulated single-hump data
- Characteristic root finding, the fold interval and the catastrophe point
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import brentq, minimize_scalar

from utils.errors import DomainError, ConvergenceError
from utils.logger import log_error, log_info


_SCAN_POINTS = 10_000
_FIELD_POINTS = 20_001
_INVERSE_TOL = 1e-10


@dataclass(frozen=True)
class CatastrophePoint:
    """
    Point of gradient catastrophe of the Hopf solution.

    Attributes:
        xc (float): Breaking position
        tc (float): Breaking time, 1 / max(-6 u0')
        uc (float): Value of u at the breaking point
        k (float): -f_L'''(uc) / 6
        xi_c (float): Characteristic foot, u0(xi_c) = uc
    """
    xc: float
    tc: float
    uc: float
    k: float
    xi_c: float = float('nan')


class InitialDataProfile:
    """
    Single negative hump u0 with its inverse branches.

    Subclasses provide u0 and its x-derivatives and the inverse f_L of the
    decreasing branch (x < x_hump) with its u-derivatives; f_R inverts the
    increasing branch.

    Attributes:
        name (str): Short identifier used in reports
        umin (float): Hump minimum
        x_hump (float): Position of the minimum
        half_width (float): Extent of the region searched for characteristics
    """

    name = "profile"
    umin = -1.0
    umax = 0.0
    x_hump = 0.0
    half_width = 5.0 * math.pi

    def u0(self, x, order=0):
        raise NotImplementedError

    def f_L(self, u, order=0):
        raise NotImplementedError

    def f_R(self, u, order=0):
        raise NotImplementedError

    def characteristic(self, xi, t):
        """x reached at time t by the characteristic starting at xi."""
        return xi + 6.0 * t * self.u0(xi)

    def exact_catastrophe(self):
        return None

    def _check_inverse_arg(self, u, order):
        u_arr = np.asarray(u, dtype=float)
        low_ok = u_arr >= self.umin if order == 0 else u_arr > self.umin
        if np.any(~np.isfinite(u_arr)) or np.any(~low_ok) or np.any(u_arr >= self.umax):
            raise DomainError(
                f"Inverse branch of order {order} undefined outside ({self.umin}, {self.umax}), got {u}"
            )
        return u_arr


def _scalar_or_array(value, like):
    if np.ndim(like) == 0:
        return float(value)
    return value


class Sech2Profile(InitialDataProfile):
    """u0(x) = -sech^2 x, f_L(u) = -artanh sqrt(1 + u), f_R = -f_L."""

    name = "sech2"

    def u0(self, x, order=0):
        x = np.asarray(x, dtype=float)
        sech2 = 1.0 / np.cosh(x) ** 2
        th = np.tanh(x)
        if order == 0:
            value = -sech2
        elif order == 1:
            value = 2.0 * sech2 * th
        elif order == 2:
            value = 2.0 * sech2 * (1.0 - 3.0 * th * th)
        elif order == 3:
            value = -8.0 * sech2 * th * (2.0 - 3.0 * th * th)
        else:
            raise DomainError(f"u0 derivative of order {order} not available")
        return _scalar_or_array(value, x)

    def f_L(self, u, order=0):
        u = self._check_inverse_arg(u, order)
        if order == 0:
            return _scalar_or_array(-np.arctanh(np.sqrt(1.0 + u)), u)
        # f_L' = 1 / (2 u sqrt(1 + u)); Leibniz rule on u^-1 (1 + u)^-1/2
        n = order - 1
        total = np.zeros_like(u)
        for j in range(n + 1):
            total = total + (special.comb(n, j, exact=True) * math.factorial(j)
                             * special.poch(0.5, n - j)
                             * u ** (-1.0 - j) * (1.0 + u) ** (-0.5 - (n - j)))
        return _scalar_or_array(0.5 * (-1.0) ** n * total, u)

    def f_R(self, u, order=0):
        return -self.f_L(u, order)


class CubicProfile(InitialDataProfile):
    """
    Pure cubic germ f_L(u) = -k (u - uc)^3, breaking at x = t = 0.

    Used with shifted variables x - xc - 6 uc (t - tc) and t - tc.
    """

    name = "cubic"

    def __init__(self, k=1.0, uc=0.0):
        if not k > 0:
            raise DomainError(f"Cubic coefficient must be positive, got {k}")
        self.k = float(k)
        self.uc = float(uc)
        self.umin = -math.inf
        self.umax = math.inf

    def u0(self, x, order=0):
        x = np.asarray(x, dtype=float)
        w = np.cbrt(-x / self.k)
        if order == 0:
            value = self.uc + w
        elif order == 1:
            with np.errstate(divide='ignore'):
                value = -1.0 / (3.0 * self.k * w * w)
        else:
            raise DomainError(f"u0 derivative of order {order} not available for the cubic profile")
        return _scalar_or_array(value, x)

    def f_L(self, u, order=0):
        u = np.asarray(u, dtype=float)
        d = u - self.uc
        coeff = (-self.k, -3.0 * self.k, -6.0 * self.k, -6.0 * self.k)
        if order > 3:
            return _scalar_or_array(np.zeros_like(d), u)
        return _scalar_or_array(coeff[order] * d ** (3 - order), u)

    def f_R(self, u, order=0):
        return self.f_L(u, order)

    def _check_inverse_arg(self, u, order):
        return np.asarray(u, dtype=float)

    def exact_catastrophe(self):
        return CatastrophePoint(xc=0.0, tc=0.0, uc=self.uc, k=self.k, xi_c=0.0)


class SplineProfile(InitialDataProfile):
    """
    Tabulated single-hump profile.

    u0 is a cubic spline through the samples; the inverse branches start
    from a monotone PCHIP inversion and are polished by Newton on the
    spline to 1e-10.
    """

    name = "spline"

    def __init__(self, x, u0_values):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u0_values, dtype=float)
        if x.ndim != 1 or x.shape != u.shape or x.size < 8:
            raise DomainError("Spline profile needs matching 1-D samples (at least 8)")
        if np.any(np.diff(x) <= 0):
            raise DomainError("Spline profile abscissae must be strictly increasing")
        i_min = int(np.argmin(u))
        if i_min in (0, x.size - 1):
            raise DomainError("Spline profile must have an interior minimum")
        if np.any(np.diff(u[:i_min + 1]) >= 0) or np.any(np.diff(u[i_min:]) <= 0):
            raise DomainError("Spline profile must be a single hump (monotone on each side)")

        self._spline = CubicSpline(x, u)
        self._derivs = [self._spline.derivative(n) for n in range(1, 4)]
        self.x_hump = float(x[i_min])
        self.umin = float(u[i_min])
        self.umax = float(min(u[0], u[-1]))
        self.half_width = float(max(-x[0], x[-1]))
        self._x_range = (float(x[0]), float(x[-1]))
        # PCHIP needs increasing abscissae: the left branch is reversed
        self._left = PchipInterpolator(u[:i_min + 1][::-1], x[:i_min + 1][::-1])
        self._right = PchipInterpolator(u[i_min:], x[i_min:])

    def u0(self, x, order=0):
        x = np.asarray(x, dtype=float)
        if order == 0:
            value = self._spline(x)
        elif 1 <= order <= 3:
            value = self._derivs[order - 1](x)
        else:
            raise DomainError(f"u0 derivative of order {order} not available")
        return _scalar_or_array(value, x)

    def _invert(self, u, guess_interp):
        x = np.asarray(guess_interp(u), dtype=float)
        for _ in range(50):
            resid = self._spline(x) - u
            if np.all(np.abs(resid) < _INVERSE_TOL):
                return x
            slope = self._derivs[0](x)
            step = np.where(slope != 0.0, resid / np.where(slope != 0.0, slope, 1.0), 0.0)
            x = np.clip(x - step, *self._x_range)
        log_error("Spline Profile", "Inverse branch did not reach 1e-10")
        raise ConvergenceError("Spline profile inversion did not converge", 50,
                               float(np.max(np.abs(resid))))

    def _inverse(self, u, order, guess_interp):
        u = self._check_inverse_arg(u, order)
        x = self._invert(u, guess_interp)
        if order == 0:
            return _scalar_or_array(x, u)
        d1, d2, d3 = (d(x) for d in self._derivs)
        if order == 1:
            value = 1.0 / d1
        elif order == 2:
            value = -d2 / d1 ** 3
        elif order == 3:
            value = (3.0 * d2 ** 2 - d1 * d3) / d1 ** 5
        elif order == 4:
            # spline fourth derivative vanishes
            value = -(-10.0 * d1 * d2 * d3 + 15.0 * d2 ** 3) / d1 ** 7
        else:
            raise DomainError(f"Inverse derivative of order {order} not available")
        return _scalar_or_array(value, u)

    def f_L(self, u, order=0):
        return self._inverse(u, order, self._left)

    def f_R(self, u, order=0):
        return self._inverse(u, order, self._right)


def sech2_profile():
    """The reference datum u0(x) = -sech^2 x."""
    return Sech2Profile()


def cubic_profile(k=1.0, uc=0.0):
    """Cubic germ f_L(u) = -k (u - uc)^3."""
    return CubicProfile(k, uc)


def spline_profile(x, u0_values):
    """Profile built from samples of a single negative hump."""
    return SplineProfile(x, u0_values)


def profile_inverse_derivs(u, profile, order=0):
    """
    Derivative of the decreasing-branch inverse f_L.

    Args:
        u (float or ndarray): umin <= u < 0 for order 0, umin < u < 0 otherwise
        profile (InitialDataProfile): Initial data
        order (int): 0 to 4

    Returns:
        float or ndarray: f_L^(order)(u)

    Raises:
        DomainError: Outside the branch range

    Example:
        profile_inverse_derivs(-0.5, sech2_profile())  # -0.88137...
    """
    if order < 0 or order > 4:
        raise DomainError(f"Inverse derivative order must be 0..4, got {order}")
    return profile.f_L(u, order)


def _char_bracket(x, t, profile):
    if not (math.isfinite(profile.umin) and math.isfinite(profile.umax)):
        # cubic germ: no root with |xi| > 2|x - 6 t uc| + (12 t)^(3/2) / sqrt(k)
        shift = x - 6.0 * t * profile.uc
        radius = 2.0 * abs(shift) + 2.0 * (12.0 * t) ** 1.5 / math.sqrt(profile.k) + 1.0
        return -radius, radius
    lo = x - 6.0 * t * profile.umax
    hi = x - 6.0 * t * profile.umin
    pad = 1e-9 * (1.0 + abs(lo) + abs(hi))
    return lo - pad, hi + pad


def hopf_solve(x, t, profile):
    """
    All branches of the Hopf solution at a point.

    Finds every root xi of x = xi + 6 t u0(xi) by a sign-change scan over
    10^4 points followed by Brent refinement.

    Args:
        x (float): Position
        t (float): Time, >= 0
        profile (InitialDataProfile): Initial data

    Returns:
        float or tuple: u if the solution is single valued there, otherwise
            the sorted tuple (u(1) < u(2) < u(3))

    Raises:
        DomainError: If t < 0
        ConvergenceError: If no characteristic reaches x
    """
    if t < 0:
        raise DomainError(f"Hopf solution needs t >= 0, got {t}")
    if t == 0:
        return float(profile.u0(x))

    def F(xi):
        return xi + 6.0 * t * profile.u0(xi) - x

    lo, hi = _char_bracket(x, t, profile)
    xi = np.linspace(lo, hi, _SCAN_POINTS)
    vals = F(xi)
    roots = list(xi[vals == 0.0])
    change = np.nonzero(vals[:-1] * vals[1:] < 0.0)[0]
    for i in change:
        roots.append(brentq(F, xi[i], xi[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))

    if not roots:
        msg = f"No characteristic reaches x={x} at t={t} (scanned [{lo:.6g}, {hi:.6g}], F in [{vals.min():.3g}, {vals.max():.3g}])"
        log_error("Hopf Solve", msg)
        raise ConvergenceError(msg)

    us = sorted(float(profile.u0(r)) for r in roots)
    if len(us) == 1:
        return us[0]
    return tuple(us)


def _bracketed_newton(F, dF, lo, hi, guess, tol=1e-14, max_iter=100):
    # vectorised Newton kept inside [lo, hi] by bisection
    xi = guess.copy()
    f_lo = F(lo)
    for _ in range(max_iter):
        f = F(xi)
        if np.all(np.abs(f) <= tol * (1.0 + np.abs(xi))):
            return xi
        left = np.sign(f) == np.sign(f_lo)
        lo = np.where(left, xi, lo)
        hi = np.where(left, hi, xi)
        f_lo = np.where(left, f, f_lo)
        d = dF(xi)
        with np.errstate(divide='ignore', invalid='ignore'):
            trial = xi - f / d
        inside = np.isfinite(trial) & (trial > lo) & (trial < hi)
        xi = np.where(inside, trial, 0.5 * (lo + hi))
    return xi


def hopf_field(x, t, profile, branch="left"):
    """
    Single-valued Hopf branch on an array of positions.

    Args:
        x (ndarray): Positions
        t (float): Time, >= 0
        profile (InitialDataProfile): Initial data
        branch (str): 'left' takes the smallest characteristic foot,
            'right' the largest; identical for t < tc

    Returns:
        ndarray: u(x, t)
    """
    if branch not in ("left", "right"):
        raise DomainError(f"Unknown Hopf branch '{branch}'")
    if t < 0:
        raise DomainError(f"Hopf solution needs t >= 0, got {t}")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if t == 0:
        result = np.asarray(profile.u0(x_arr), dtype=float)
        return float(result[0]) if np.ndim(x) == 0 else result

    lo, _ = _char_bracket(x_arr.min(), t, profile)
    _, hi = _char_bracket(x_arr.max(), t, profile)
    xi = np.linspace(lo, hi, _FIELD_POINTS)
    X = profile.characteristic(xi, t)

    if branch == "left":
        # first crossing of X = x
        envelope = np.maximum.accumulate(X)
        idx = np.clip(np.searchsorted(envelope, x_arr, side="left"), 1, xi.size - 1)
    else:
        # last crossing of X = x
        envelope = np.minimum.accumulate(X[::-1])[::-1]
        idx = np.clip(np.searchsorted(envelope, x_arr, side="right"), 1, xi.size - 1)

    a, b = xi[idx - 1], xi[idx]
    Xa, Xb = X[idx - 1], X[idx]
    with np.errstate(divide='ignore', invalid='ignore'):
        w = np.where(Xb != Xa, (x_arr - Xa) / (Xb - Xa), 0.5)
    guess = a + np.clip(w, 0.0, 1.0) * (b - a)

    def F(z):
        return profile.characteristic(z, t) - x_arr

    def dF(z):
        return 1.0 + 6.0 * t * profile.u0(z, 1)

    roots = _bracketed_newton(F, dF, a.copy(), b.copy(), guess)
    result = np.asarray(profile.u0(roots), dtype=float)
    return float(result[0]) if np.ndim(x) == 0 else result


def _steepest_point(profile):
    lo = profile.x_hump - profile.half_width
    res = minimize_scalar(lambda xi: profile.u0(xi, 1), bounds=(lo, profile.x_hump),
                          method="bounded", options={"xatol": 1e-10})
    if not res.success:
        log_error("Critical Point", f"Maximisation of -6 u0' failed: {res.message}")
        raise ConvergenceError(f"Maximisation of -6 u0' failed: {res.message}")
    xi = float(res.x)

    # polish on u0'' = 0 when the second derivative is available
    width = 1e-3 * (1.0 + abs(xi))
    for _ in range(20):
        a, b = xi - width, min(xi + width, profile.x_hump)
        if profile.u0(a, 2) * profile.u0(b, 2) < 0:
            return brentq(lambda z: profile.u0(z, 2), a, b, xtol=1e-15)
        width *= 2.0
    return xi


def critical_point(profile):
    """
    Point of gradient catastrophe.

    Args:
        profile (InitialDataProfile): Initial data

    Returns:
        CatastrophePoint: (xc, tc, uc, k)

    Raises:
        ConvergenceError: If the maximisation of -6 u0' fails

    Example:
        cp = critical_point(sech2_profile())   # tc = sqrt(3)/8, uc = -2/3
    """
    exact = profile.exact_catastrophe()
    if exact is not None:
        return exact

    xi_c = _steepest_point(profile)
    slope = float(profile.u0(xi_c, 1))
    if not slope < 0:
        raise ConvergenceError(f"Profile has no decreasing branch near xi={xi_c}")
    tc = -1.0 / (6.0 * slope)
    uc = float(profile.u0(xi_c))
    xc = xi_c + 6.0 * tc * uc
    k = -float(profile.f_L(uc, 3)) / 6.0
    log_info("Critical Point", f"{profile.name}: xc={xc:.12f} tc={tc:.12f} uc={uc:.12f} k={k:.12f}")
    return CatastrophePoint(xc=xc, tc=tc, uc=uc, k=k, xi_c=xi_c)


def hopf_fold(t, profile):
    """
    Interval of x on which the Hopf solution is triple valued.

    Args:
        t (float): Time
        profile (InitialDataProfile): Initial data

    Returns:
        tuple or None: (x_a, x_b) with x_a < x_b, None for t <= tc
    """
    cp = critical_point(profile)
    if t <= cp.tc:
        return None

    def G(xi):
        return 1.0 + 6.0 * t * profile.u0(xi, 1)

    lo = profile.x_hump - profile.half_width
    hi = profile.x_hump
    try:
        xi1 = brentq(G, lo, cp.xi_c, xtol=1e-15)
        xi2 = brentq(G, cp.xi_c, hi, xtol=1e-15)
    except ValueError as e:
        log_error("Hopf Fold", f"Fold points not bracketed at t={t}: {e}")
        raise ConvergenceError(f"Fold points not bracketed at t={t}")
    return (float(profile.characteristic(xi2, t)), float(profile.characteristic(xi1, t)))
