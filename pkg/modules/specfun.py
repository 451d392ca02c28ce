"""
Special Functions Module for the KdV small-dispersion study.

Provides the special functions every asymptotic formula needs, including:
- Complete elliptic integrals K(s), E(s) and the complementary K'(s)
- Jacobi elliptic functions sn, cn, dn with the sech limit at s -> 1
- The theta function with its logarithmic z-derivatives
- Airy function Ai and the Hermite normalization constants h_j

All functions take the elliptic modulus s (not the parameter m = s^2) and
raise typed errors outside their domains instead of returning NaN.
"""

import numpy as np
from scipy import special

from utils.errors import DomainError, ConvergenceError


# 1 - s below this switches dn, cn, sn to the hyperbolic limit
_SECH_LIMIT = 1e-12

# Im(tau) below this uses the Gaussian (modular) form of the theta series
_MODULAR_SWITCH = 1.0

_HERMITE_MAX = 170


def _as_modulus(s, allow_one=False):
    s_arr = np.asarray(s, dtype=float)
    upper_ok = (s_arr <= 1.0) if allow_one else (s_arr < 1.0)
    if np.any(~np.isfinite(s_arr)) or np.any(s_arr < 0.0) or np.any(~upper_ok):
        bound = "[0, 1]" if allow_one else "[0, 1)"
        raise DomainError(f"Elliptic modulus must lie in {bound}, got {s}")
    return s_arr


def _scalar_or_array(value, like):
    if np.ndim(like) == 0:
        return float(value)
    return value


def elliptic_K(s):
    """
    Complete elliptic integral of the first kind K(s).

    Evaluated from the complementary parameter (1 - s)(1 + s), which keeps
    full relative accuracy up to the logarithmic singularity at s = 1.

    Args:
        s (float or ndarray): Modulus, 0 <= s < 1

    Returns:
        float or ndarray: K(s)

    Raises:
        DomainError: If s < 0 or s >= 1
    """
    s_arr = _as_modulus(s)
    return _scalar_or_array(special.ellipkm1((1.0 - s_arr) * (1.0 + s_arr)), s)


def elliptic_K_complement(s):
    """
    Complementary integral K'(s) = K(sqrt(1 - s^2)).

    Args:
        s (float or ndarray): Modulus, 0 < s <= 1

    Returns:
        float or ndarray: K'(s)

    Raises:
        DomainError: If s <= 0 or s > 1
    """
    s_arr = _as_modulus(s, allow_one=True)
    if np.any(s_arr <= 0.0):
        raise DomainError("K'(s) diverges at s = 0")
    return _scalar_or_array(special.ellipkm1(s_arr * s_arr), s)


def elliptic_E(s):
    """
    Complete elliptic integral of the second kind E(s).

    Args:
        s (float or ndarray): Modulus, 0 <= s <= 1

    Returns:
        float or ndarray: E(s)

    Raises:
        DomainError: If s is outside [0, 1]
    """
    s_arr = _as_modulus(s, allow_one=True)
    return _scalar_or_array(special.ellipe(s_arr * s_arr), s)


def jacobi_sn_cn_dn(z, s):
    """
    Jacobi elliptic functions sn, cn and dn of modulus s.

    For 1 - s < 1e-12 the hyperbolic limits (tanh, sech, sech) are
    returned directly.

    Args:
        z (float or ndarray): Argument
        s (float): Modulus, 0 <= s <= 1

    Returns:
        tuple: (sn, cn, dn)

    Raises:
        DomainError: If s is outside [0, 1]
    """
    s_val = float(_as_modulus(s, allow_one=True))
    z_arr = np.asarray(z, dtype=float)

    if 1.0 - s_val < _SECH_LIMIT:
        sech = 1.0 / np.cosh(z_arr)
        sn, cn, dn = np.tanh(z_arr), sech, sech
    else:
        sn, cn, dn, _ = special.ellipj(z_arr, s_val * s_val)

    if np.ndim(z) == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


def jacobi_dn(z, s):
    """
    Jacobi elliptic function dn(z|s), with dn -> sech(z) as s -> 1.

    Args:
        z (float or ndarray): Argument
        s (float): Modulus, 0 <= s <= 1

    Returns:
        float or ndarray: dn(z|s), in [sqrt(1 - s^2), 1]
    """
    return jacobi_sn_cn_dn(z, s)[2]


def _imag_period(tau):
    tau = complex(tau)
    if abs(tau.real) > 1e-14 * max(1.0, abs(tau)):
        raise DomainError(f"Theta period ratio must be purely imaginary, got {tau}")
    if tau.imag <= 0.0:
        raise ConvergenceError(f"Theta series diverges for Im(tau) = {tau.imag} <= 0")
    return tau.imag


def _theta_direct(z, t):
    # theta = 1 + 2 sum q^(n^2) cos(2 pi n z), q = exp(-pi t)
    nmax = int(np.ceil(np.sqrt(40.0 / (np.pi * t)))) + 1
    n = np.arange(1, nmax + 1, dtype=float)
    weights = np.exp(-np.pi * t * n * n)
    phase = 2.0 * np.pi * np.multiply.outer(z, n)
    cos_p, sin_p = np.cos(phase), np.sin(phase)

    value = 1.0 + 2.0 * (cos_p @ weights)
    d1 = -4.0 * np.pi * (sin_p @ (n * weights))
    d2 = -8.0 * np.pi ** 2 * (cos_p @ (n * n * weights))
    return value, d1 / value, d2 / value


def _theta_gaussian(z, t):
    # theta(z; i t) = t^(-1/2) sum_n exp(-pi (z - n)^2 / t)
    z0 = z - np.floor(z)
    half_width = int(np.ceil(np.sqrt(40.0 * t / np.pi))) + 2
    n = np.arange(-half_width, half_width + 2, dtype=float)
    d = np.subtract.outer(z0, n)
    expo = -np.pi * d * d / t
    shift = expo.max(axis=-1, keepdims=True)
    w = np.exp(expo - shift)

    total = w.sum(axis=-1)
    slope = (-2.0 * np.pi / t) * d
    r1 = (slope * w).sum(axis=-1) / total
    r2 = ((slope * slope - 2.0 * np.pi / t) * w).sum(axis=-1) / total
    value = total * np.exp(shift[..., 0]) / np.sqrt(t)
    return value, r1, r2


def _theta_complex(z, t):
    y = float(np.max(np.abs(np.imag(z)))) if np.size(z) else 0.0
    nmax = int(np.ceil((y + np.sqrt(y * y + 40.0 * t / np.pi)) / t)) + 1
    n = np.arange(-nmax, nmax + 1, dtype=float)
    terms = np.exp(-np.pi * t * n * n) * np.exp(2j * np.pi * np.multiply.outer(z, n))
    return terms.sum(axis=-1)


def _theta_real(z, t):
    if t >= _MODULAR_SWITCH:
        return _theta_direct(z, t)
    return _theta_gaussian(z, t)


def theta3(z, tau):
    """
    Theta function sum_n exp(i pi n^2 tau + 2 pi i n z).

    Real z uses the q-series for Im(tau) >= 1 and the Gaussian sum given by
    the modular transformation below that; complex z (only needed for the
    half-period zero) is summed directly.

    Args:
        z (float, complex or ndarray): Argument, period 1
        tau (complex): Purely imaginary period ratio with Im(tau) > 0

    Returns:
        float, complex or ndarray: theta(z; tau), real for real z

    Raises:
        ConvergenceError: If Im(tau) <= 0
        DomainError: If tau has a real part
    """
    t = _imag_period(tau)
    z_arr = np.asarray(z)
    if np.iscomplexobj(z_arr):
        value = _theta_complex(z_arr, t)
        return complex(value) if np.ndim(z) == 0 else value
    value, _, _ = _theta_real(z_arr.astype(float), t)
    return _scalar_or_array(value, z)


def log_theta3_derivs(z, tau):
    """
    Theta function with the first two z-derivatives of log theta.

    Args:
        z (float or ndarray): Real argument
        tau (complex): Purely imaginary period ratio

    Returns:
        tuple: (theta, d/dz log theta, d^2/dz^2 log theta)
    """
    t = _imag_period(tau)
    z_arr = np.asarray(z, dtype=float)
    value, r1, r2 = _theta_real(z_arr, t)
    second = r2 - r1 * r1
    if np.ndim(z) == 0:
        return float(value), float(r1), float(second)
    return value, r1, second


def airy_Ai(s):
    """
    Airy function Ai(s).

    Args:
        s (float or ndarray): Real argument

    Returns:
        float or ndarray: Ai(s)
    """
    return _scalar_or_array(special.airy(np.asarray(s, dtype=float))[0], s)


def airy_Ai_prime(s):
    """Derivative Ai'(s)."""
    return _scalar_or_array(special.airy(np.asarray(s, dtype=float))[1], s)


def hermite_norm(j):
    """
    Hermite normalization constant h_j = 2^(j/2) / (pi^(1/4) sqrt(j!)).

    Evaluated in log space.

    Args:
        j (int): Index, 0 <= j <= 170

    Returns:
        float: h_j

    Raises:
        DomainError: If j is negative, not an integer, or beyond the overflow guard
    """
    if int(j) != j or j < 0:
        raise DomainError(f"Hermite index must be a nonnegative integer, got {j}")
    if j > _HERMITE_MAX:
        raise DomainError(f"Hermite index {j} beyond overflow guard {_HERMITE_MAX}")
    log_h = 0.5 * j * np.log(2.0) - 0.25 * np.log(np.pi) - 0.5 * special.gammaln(j + 1.0)
    return float(np.exp(log_h))
