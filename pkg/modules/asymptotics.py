"""
Asymptotics Module for the KdV small-dispersion study.

Provides evaluators for the asymptotic descriptions of the KdV solution,
including:
- The Hopf solution outside the oscillation zone
- The modulated one-phase (elliptic) solution inside the zone
- The Hastings-McLeod expansion at the leading edge
- The soliton train at the trailing edge
- The P_I^2 expansion at the point of gradient catastrophe
- Connection formulas near the catastrophe (algebraic, elliptic,
  Painleve II and soliton regimes) with the self-similar Whitham solution

All evaluators are pure functions of precomputed edge, branch, Painleve
and catastrophe data; no solver is called inside an evaluation loop.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre

from modules import specfun
from modules.chebcore import newton_solve
from modules.hopf import hopf_field, cubic_profile
from modules.whitham import q_phase, weak_limit, theta_phase_integral
from utils.errors import DomainError, ConvergenceError
from utils.logger import log_error, log_info


# P_II connection constants
PII_C0 = 2.0 ** (7.0 / 6.0) * 3.0 ** (1.0 / 12.0) / 5.0 ** (1.0 / 6.0)
PII_C1 = math.sqrt(5.0 * math.sqrt(3.0) / 2.0)
# soliton connection constant
SOLITON_C0 = math.sqrt(7.0 / 6.0) * 15.0 ** 0.25

S_LEADING = -12.0 * math.sqrt(3.0)
S_TRAILING = 4.0 * math.sqrt(15.0) / 9.0

DEFAULT_TRAIN_BOUND = 10.0
MAX_PI2_T = 10.0

_SELFSIMILAR_STEP = 0.2
_SELFSIMILAR_NODES = 64


@dataclass
class OnePhaseParams:
    """
    Parameters of the one-phase solution at a point.

    Attributes:
        beta (tuple): beta1 > beta2 > beta3
        s (float): Elliptic modulus
        K (float): K(s)
        tau (complex): Period ratio i K'(s) / K(s)
        alpha (float): -beta1 + (beta1 - beta3) E / K
        qshift (float): Phase shift q
        Omega (float): Theta argument
    """
    beta: tuple
    s: float
    K: float
    tau: complex
    alpha: float
    qshift: float
    Omega: float


@dataclass
class LeadingEdgeFrame:
    """
    Scaled variables of the leading-edge expansion.

    Attributes:
        edge (EdgeState): Leading-edge state
        Theta (ndarray): Phase 2 sqrt(u - v)(x - x-) + phase integral
        Theta1 (ndarray): Phase correction
        c (float): -sqrt(u - v) d^2 theta / dv^2
        s (ndarray): Hastings-McLeod argument
        q, qp (ndarray): Hastings-McLeod solution and derivative at s
    """
    edge: object
    Theta: np.ndarray
    Theta1: np.ndarray
    c: float
    s: np.ndarray
    q: np.ndarray
    qp: np.ndarray


@dataclass
class SolitonTrain:
    """
    Soliton train data at the trailing edge.

    Attributes:
        edge (EdgeState): Trailing-edge state
        y (ndarray): 2 sqrt(v - u)(x - x+) / (eps ln eps)
        M (float): Bound on |y|
        X (ndarray): Pulse arguments, shape (ceil(M) + 1, len(y))
        gamma (float): Trailing-edge constant
        h (ndarray): Hermite normalisations h_0..h_ceil(M)
    """
    edge: object
    y: np.ndarray
    M: float
    X: np.ndarray
    gamma: float
    h: np.ndarray


@dataclass
class CatastropheFrame:
    """
    P_I^2 data at the rescaled point (X, T).

    Attributes:
        cp (CatastrophePoint): Catastrophe point
        X (ndarray), T (float): Rescaled coordinates
        U, UX, UXX, UXXX, Q (ndarray): P_I^2 solution data at (X, T)
    """
    cp: object
    X: np.ndarray
    T: float
    U: np.ndarray
    UX: np.ndarray
    UXX: np.ndarray
    UXXX: np.ndarray
    Q: np.ndarray


@dataclass
class ConnectionVars:
    """
    Variables of the connection formulas at one (x, t).

    Attributes:
        S (float): X / T^(3/2) = sqrt(k)(x - xc - 6 uc (t - tc)) / (t - tc)^(3/2)
        b (tuple): Self-similar branches (None outside the elliptic window)
        z (float): Real root of S = 6 z - z^3 (None inside the window)
        xi (float): Painleve II or soliton variable (None when unused)
        omega (float): Painleve II phase coefficient (None when unused)
    """
    S: float
    b: tuple = None
    z: float = None
    xi: float = None
    omega: float = None


def _result(values, x):
    values = np.asarray(values, dtype=float)
    return float(values.reshape(-1)[0]) if np.ndim(x) == 0 else values


def _sech2(X):
    # 4 e^{-2|X|} / (1 + e^{-2|X|})^2, overflow free
    e = np.exp(-2.0 * np.abs(X))
    return 4.0 * e / (1.0 + e) ** 2


def _shifted(x, t, cp):
    tau = t - cp.tc
    return np.asarray(x, dtype=float) - cp.xc - 6.0 * cp.uc * tau, tau


# --- Hopf and one-phase ------------------------------------------------------

def hopf_approx(x, t, profile, edges=None):
    """
    Hopf solution used as the approximation outside the oscillation zone.

    For t after breaking the left branch is taken left of the zone
    midpoint and the right branch right of it.

    Args:
        x (float or ndarray): Positions
        t (float): Time
        profile (InitialDataProfile): Initial data
        edges (tuple, optional): (leading EdgeState, trailing EdgeState);
            required when the Hopf solution is multivalued somewhere in x

    Returns:
        float or ndarray: u(x, t)
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if edges is None:
        left = hopf_field(x_arr, t, profile, branch="left")
        right = hopf_field(x_arr, t, profile, branch="right")
        if not np.allclose(left, right, rtol=0.0, atol=1e-10):
            raise DomainError(f"Hopf solution is multivalued at t={t}; zone edges are required")
        return _result(left, x)
    leading, trailing = edges
    midpoint = 0.5 * (leading.x_edge + trailing.x_edge)
    out = np.empty_like(x_arr)
    mask = x_arr < midpoint
    if np.any(mask):
        out[mask] = hopf_field(x_arr[mask], t, profile, branch="left")
    if np.any(~mask):
        out[~mask] = hopf_field(x_arr[~mask], t, profile, branch="right")
    return _result(out, x)


def one_phase_params(beta, x, t, epsilon, qshift):
    """
    Modulus, period ratio, alpha and theta argument of the one-phase solution.

    Omega = sqrt(beta1 - beta3) / (2 eps K(s)) [x - 2 t (beta1 + beta2 + beta3) - q]

    Raises:
        DomainError: Unless beta1 > beta2 > beta3
    """
    b1, b2, b3 = (float(b) for b in beta)
    if not b1 > b2 > b3:
        raise DomainError(f"One-phase solution needs beta1 > beta2 > beta3, got {beta}")
    s = math.sqrt((b2 - b3) / (b1 - b3))
    K = specfun.elliptic_K(s)
    E = specfun.elliptic_E(s)
    tau = 1j * specfun.elliptic_K_complement(s) / K
    alpha = -b1 + (b1 - b3) * E / K
    Omega = math.sqrt(b1 - b3) / (2.0 * epsilon * K) * (x - 2.0 * t * (b1 + b2 + b3) - qshift)
    return OnePhaseParams(beta=(b1, b2, b3), s=s, K=K, tau=tau, alpha=alpha, qshift=qshift, Omega=Omega)


def one_phase_value(x, t, epsilon, beta, qshift, form="dn"):
    """
    One-phase KdV solution at a point for given branch values.

    dn form:    beta2 + beta3 - beta1 + 2 (beta1 - beta3) dn^2(2 K Omega + K)
    theta form: sum(beta) + 2 alpha + (beta1 - beta3) / (2 K^2) (log theta)''(Omega)

    With a degenerate modulus the weak limit is returned.

    Args:
        x, t (float): Point
        epsilon (float): Dispersion parameter
        beta (tuple): Branch values
        qshift (float): Phase shift
        form (str): 'dn' or 'theta'

    Returns:
        float: u
    """
    if form not in ("dn", "theta"):
        raise DomainError(f"Unknown one-phase form '{form}'")
    b1, b2, b3 = (float(b) for b in beta)
    if not (b1 >= b2 >= b3):
        raise DomainError(f"Branch values out of order: {beta}")
    if b1 == b2 or b2 == b3:
        return weak_limit((b1, b2, b3))
    p = one_phase_params((b1, b2, b3), x, t, epsilon, qshift)
    if form == "dn":
        dn = specfun.jacobi_dn(2.0 * p.K * p.Omega + p.K, p.s)
        return b2 + b3 - b1 + 2.0 * (b1 - b3) * dn * dn
    _, _, d2 = specfun.log_theta3_derivs(p.Omega, p.tau)
    return b1 + b2 + b3 + 2.0 * p.alpha + (b1 - b3) / (2.0 * p.K ** 2) * d2


def one_phase_approx(x, t, epsilon, branches, profile, form="dn"):
    """
    Modulated one-phase approximation inside the Whitham zone.

    Args:
        x (float or ndarray): Points in (x-, x+)
        t (float): Time of the branch solve
        epsilon (float): Dispersion parameter
        branches (WhithamBranches): Zone solution at t
        profile (InitialDataProfile): Initial data (for the phase shift)
        form (str): 'dn' (primary) or 'theta'

    Returns:
        float or ndarray: Approximate u

    Raises:
        DomainError: Outside the zone or for a modulus out of range
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    beta = np.atleast_2d(branches.evaluate(x_arr).T)
    out = np.empty_like(x_arr)
    for n, xv in enumerate(x_arr):
        b = tuple(beta[n])
        q = q_phase(*b, profile) if b[0] > b[1] > b[2] else 0.0
        out[n] = one_phase_value(xv, t, epsilon, b, q, form)
    return _result(out, x)


# --- Leading edge ------------------------------------------------------------

def leading_edge_frame(x, epsilon, edge, hm, profile):
    """
    Phases, Hastings-McLeod argument and q, q' at the leading edge.

    Args:
        x (float or ndarray): Positions
        epsilon (float): Dispersion parameter
        edge (EdgeState): Leading-edge state
        hm (PainleveSolution): Hastings-McLeod solution (tails outside its domain)
        profile (InitialDataProfile): Initial data

    Returns:
        LeadingEdgeFrame
    """
    if edge.kind != "leading":
        raise DomainError(f"Leading-edge frame needs a leading EdgeState, got '{edge.kind}'")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    u, v, t = edge.u, edge.v, edge.t
    c = edge.c
    if not c > 0:
        raise DomainError(f"Leading-edge constant c={c} is not positive")
    root = math.sqrt(u - v)
    dx = x_arr - edge.x_edge
    s = -dx / (c ** (1.0 / 3.0) * root * epsilon ** (2.0 / 3.0))
    q = np.asarray(hm.evaluate(s), dtype=float).reshape(x_arr.shape)
    qp = np.asarray(hm.evaluate(s, 1), dtype=float).reshape(x_arr.shape)
    p = -q ** 4 - s * q * q + qp * qp

    Theta = 2.0 * root * dx + theta_phase_integral(edge, profile)
    ratio3 = edge.theta_vvv / edge.theta_vv
    slope = 6.0 * t + float(profile.f_L(u, 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_deriv = np.where(q != 0.0, qp / q, 0.0)
    Theta1 = ((log_deriv + p) * ratio3 / 6.0
              - (5.0 * p + log_deriv) / (4.0 * (u - v))
              + s * s / 4.0 * (ratio3 / 3.0 - 1.5 / (u - v) + 2.0 * c * root / slope))
    Theta1 = np.where(q != 0.0, Theta1 / c ** (1.0 / 3.0), 0.0)
    return LeadingEdgeFrame(edge=edge, Theta=Theta, Theta1=Theta1, c=c, s=s, q=q, qp=qp)


def leading_edge_approx(x, t, epsilon, edge, hm, profile, include_order23=True):
    """
    Hastings-McLeod expansion of u near the leading edge.

    u - 4 eps^(1/3) c^(-1/3) q(s) cos(Theta / eps + eps^(1/3) Theta1)
      + (x - x-) / (6t + f_L'(u)) - 4 eps^(2/3) / (c^(2/3)(u - v)) q^2 sin^2(Theta / eps)

    With include_order23=False the eps^(2/3) terms (the Taylor term, the
    q^2 term and the phase correction) are dropped.

    Args:
        x (float or ndarray): Positions
        t (float): Time, must equal edge.t
        epsilon (float): Dispersion parameter
        edge (EdgeState): Leading-edge state
        hm (PainleveSolution): Hastings-McLeod solution
        profile (InitialDataProfile): Initial data
        include_order23 (bool): Keep the eps^(2/3) terms

    Returns:
        float or ndarray
    """
    if abs(t - edge.t) > 1e-12 * (1.0 + abs(t)):
        raise DomainError(f"Edge state is for t={edge.t}, requested t={t}")
    frame = leading_edge_frame(x, epsilon, edge, hm, profile)
    u, v = edge.u, edge.v
    c3 = frame.c ** (1.0 / 3.0)
    phase = frame.Theta / epsilon
    if include_order23:
        phase = phase + epsilon ** (1.0 / 3.0) * frame.Theta1
    value = u - 4.0 * epsilon ** (1.0 / 3.0) / c3 * frame.q * np.cos(phase)
    if include_order23:
        dx = np.atleast_1d(np.asarray(x, dtype=float)) - edge.x_edge
        value = value + dx / (6.0 * edge.t + float(profile.f_L(u, 1)))
        value = value - (4.0 * epsilon ** (2.0 / 3.0) / (c3 * c3 * (u - v))
                         * frame.q ** 2 * np.sin(frame.Theta / epsilon) ** 2)
    return _result(value, x)


def leading_edge_modulated(x, t, epsilon, edge, hm, profile):
    """
    Multiscale form of the leading-edge expansion.

    The one-phase formula with beta2,3 = v +- 2 eps^(1/3) q(s) / c^(1/3)
    and beta1 = u + (x - x-) / (6t + f_L'(u)).
    """
    frame = leading_edge_frame(x, epsilon, edge, hm, profile)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    u, v = edge.u, edge.v
    spread = 2.0 * epsilon ** (1.0 / 3.0) * frame.q / frame.c ** (1.0 / 3.0)
    b1 = u + (x_arr - edge.x_edge) / (6.0 * t + float(profile.f_L(u, 1)))
    out = np.empty_like(x_arr)
    for n, xv in enumerate(x_arr):
        beta = (b1[n], v + spread[n], v - spread[n])
        if not beta[0] > beta[1] > beta[2]:
            out[n] = weak_limit(sorted(beta, reverse=True))
            continue
        out[n] = one_phase_value(xv, t, epsilon, beta, q_phase(*beta, profile))
    return _result(out, x)


# --- Trailing edge -----------------------------------------------------------

def soliton_train(x, epsilon, edge, M=DEFAULT_TRAIN_BOUND):
    """
    Pulse arguments X_j of the trailing-edge soliton train.

    X_j = (1/2)(1/2 - y + j) ln eps - ln(sqrt(2 pi) h_j) - (j + 1/2) ln gamma

    Returns:
        SolitonTrain
    """
    if edge.kind != "trailing":
        raise DomainError(f"Soliton train needs a trailing EdgeState, got '{edge.kind}'")
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"Soliton train needs 0 < epsilon < 1, got {epsilon}")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    log_eps = math.log(epsilon)
    y = 2.0 * math.sqrt(edge.v - edge.u) * (x_arr - edge.x_edge) / (epsilon * log_eps)
    gamma = edge.gamma
    j = np.arange(int(math.ceil(M)) + 1)
    h = np.array([specfun.hermite_norm(int(n)) for n in j])
    X = (0.5 * (0.5 - y[None, :] + j[:, None]) * log_eps
         - np.log(math.sqrt(2.0 * math.pi) * h)[:, None]
         - (j[:, None] + 0.5) * math.log(gamma))
    return SolitonTrain(edge=edge, y=y, M=M, X=X, gamma=gamma, h=h)


def trailing_edge_approx(x, t, epsilon, edge, M=DEFAULT_TRAIN_BOUND):
    """
    Soliton-train expansion near the trailing edge.

    u + 2 (v - u) sum_{j=0}^{ceil(M)} sech^2(X_j)

    Args:
        x (float or ndarray): Positions
        t (float): Time, must equal edge.t
        epsilon (float): Dispersion parameter in (0, 1)
        edge (EdgeState): Trailing-edge state
        M (float): Bound on |y| fixing the number of pulses

    Returns:
        float or ndarray
    """
    if abs(t - edge.t) > 1e-12 * (1.0 + abs(t)):
        raise DomainError(f"Edge state is for t={edge.t}, requested t={t}")
    train = soliton_train(x, epsilon, edge, M)
    value = edge.u + 2.0 * (edge.v - edge.u) * _sech2(train.X).sum(axis=0)
    return _result(value, x)


# --- Catastrophe -------------------------------------------------------------

def catastrophe_coordinates(x, t, epsilon, cp):
    """
    X = (x - xc - 6 uc (t - tc)) / (k^(1/7) eps^(6/7)), T = (t - tc) / (k^(3/7) eps^(4/7)).
    """
    shifted, tau = _shifted(x, t, cp)
    X = shifted / (cp.k ** (1.0 / 7.0) * epsilon ** (6.0 / 7.0))
    T = tau / (cp.k ** (3.0 / 7.0) * epsilon ** (4.0 / 7.0))
    return X, T


def catastrophe_frame(x, t, epsilon, cp, pi2solver):
    """
    P_I^2 data at the rescaled coordinates of (x, t).

    Args:
        pi2solver (callable): T -> PainleveSolution

    Raises:
        DomainError: If |T| > 10 or X leaves the P_I^2 domain
    """
    X, T = catastrophe_coordinates(x, t, epsilon, cp)
    if abs(T) > MAX_PI2_T:
        raise DomainError(f"T={T:.4g} outside the supported range [-{MAX_PI2_T}, {MAX_PI2_T}]")
    sol = pi2solver(T)
    X_arr = np.atleast_1d(X)
    a, b = sol.domain
    if np.any(X_arr < a) or np.any(X_arr > b):
        raise DomainError(f"X range [{X_arr.min():.4g}, {X_arr.max():.4g}] exceeds P_I^2 domain [{a}, {b}]")
    U, UX, UXX, UXXX = (np.atleast_1d(sol.evaluate(X_arr, m)) for m in range(4))
    Q = (0.1 * UX * UXXX - 0.05 * UXX ** 2 + X_arr * U - 3.0 * T * U ** 2
         + 0.25 * U ** 4 + 0.5 * U * UX ** 2)
    return CatastropheFrame(cp=cp, X=X_arr, T=T, U=U, UX=UX, UXX=UXX, UXXX=UXXX, Q=Q)


def catastrophe_correction(frame):
    """Bracket QU_X + 2U_XX + 4U^2 + 15T - 90T^2 U_X - 3XUU_X - XU_XXX / 2."""
    X, T = frame.X, frame.T
    U, UX = frame.U, frame.UX
    return (frame.Q * UX + 2.0 * frame.UXX + 4.0 * U ** 2 + 15.0 * T
            - 90.0 * T ** 2 * UX - 3.0 * X * U * UX - 0.5 * X * frame.UXXX)


def catastrophe_approx(x, t, epsilon, cp, pi2solver, order=2, profile=None):
    """
    P_I^2 expansion near the point of gradient catastrophe.

    uc + (eps/k)^(2/7) U(X, T), plus for order=4 the correction
    -(eps/k)^(4/7) f_L''''(uc) / (63 f_L'''(uc)) [bracket].

    Args:
        x (float or ndarray): Positions
        t (float): Time
        epsilon (float): Dispersion parameter
        cp (CatastrophePoint): Catastrophe point
        pi2solver (callable): T -> PainleveSolution
        order (int): 2 (eps^(2/7)) or 4 (eps^(4/7))
        profile (InitialDataProfile): Needed for order=4

    Returns:
        float or ndarray
    """
    if order not in (2, 4):
        raise DomainError(f"Catastrophe expansion order must be 2 or 4, got {order}")
    if order == 4 and profile is None:
        raise DomainError("The eps^(4/7) correction needs the initial data profile")
    frame = catastrophe_frame(x, t, epsilon, cp, pi2solver)
    value = cp.uc + (epsilon / cp.k) ** (2.0 / 7.0) * frame.U
    if order == 4:
        ratio = float(profile.f_L(cp.uc, 4)) / float(profile.f_L(cp.uc, 3))
        value = value - (epsilon / cp.k) ** (4.0 / 7.0) * ratio / 63.0 * catastrophe_correction(frame)
    return _result(value, x)


# --- Connection formulas -----------------------------------------------------

def similarity_variable(x, t, cp):
    """S = sqrt(k)(x - xc - 6 uc (t - tc)) / |t - tc|^(3/2)."""
    shifted, tau = _shifted(x, t, cp)
    if tau == 0.0:
        raise DomainError("Similarity variable undefined at t = tc")
    return math.sqrt(cp.k) * shifted / abs(tau) ** 1.5


def _cubic_root(S, after_break):
    if after_break:
        if S_LEADING <= S <= S_TRAILING:
            raise DomainError(f"S={S:.6g} lies in the elliptic window [{S_LEADING:.6g}, {S_TRAILING:.6g}]")
        roots = np.roots([1.0, 0.0, -6.0, S])
    else:
        roots = np.roots([1.0, 0.0, 6.0, S])
    real = np.sort(roots[np.abs(roots.imag) <= 1e-9 * (1.0 + np.abs(roots.real))].real)
    # smallest root continues the decreasing Hopf branch for S > 4 sqrt(15) / 9
    z = real[0]
    for _ in range(3):
        if after_break:
            z -= (z ** 3 - 6.0 * z + S) / (3.0 * z * z - 6.0)
        else:
            z -= (z ** 3 + 6.0 * z + S) / (3.0 * z * z + 6.0)
    return float(z)


def connection_algebraic(x, t, cp):
    """
    Algebraic regime: uc + z(S) sqrt(|t - tc| / k).

    After breaking z solves S = 6 z - z^3, before breaking -S = 6 z + z^3.
    At t = tc the Hopf cubic uc - (x'/k)^(1/3) is returned.

    Raises:
        DomainError: For S inside the elliptic window after breaking
    """
    shifted, tau = _shifted(x, t, cp)
    x_arr = np.atleast_1d(shifted)
    if tau == 0.0:
        return _result(cp.uc - np.cbrt(x_arr / cp.k), x)
    scale = math.sqrt(abs(tau) / cp.k)
    out = np.array([cp.uc + scale * _cubic_root(math.sqrt(cp.k) * xs / abs(tau) ** 1.5, tau > 0)
                    for xs in x_arr])
    return _result(out, x)


def _selfsimilar_residual(y, S, phi, w):
    b1, m, D = y
    d = math.sqrt(max(D, 0.0))
    b2, b3 = m + d, m - d
    total = b1 + b2 + b3
    squares = b1 * b1 + b2 * b2 + b3 * b3
    cubes = b1 ** 3 + b2 ** 3 + b3 ** 3
    xi = b3 + (b2 - b3) * np.sin(phi) ** 2
    integrand = np.sqrt(np.maximum(b1 - xi, 0.0)) * (xi + 0.5 * total) * (np.sin(phi) * np.cos(phi)) ** 2
    return np.array([
        (total ** 2 + 2.0 * squares) / 5.0 - 6.0,
        2.0 / 15.0 * (total ** 3 - 4.0 * cubes) - S,
        float(integrand @ w),
    ])


def _selfsimilar_seed(S):
    # linearisation about the leading collapse b = (2 sqrt 3, -sqrt 3 / 2, -sqrt 3 / 2)
    D = (S - S_LEADING) / (4.0 * math.sqrt(3.0))
    d1 = -2.0 * D / (5.0 * math.sqrt(3.0))
    A = 5.0 * math.sqrt(3.0) / 2.0
    dm = D / (16.0 * A) - d1 / 4.0
    return np.array([2.0 * math.sqrt(3.0) + d1, -math.sqrt(3.0) / 2.0 + dm, D])


def connection_selfsimilar(S):
    """
    Self-similar solution of the Whitham equations with cubic data.

    Solves
        6 = [(b1 + b2 + b3)^2 + 2 (b1^2 + b2^2 + b3^2)] / 5
        S = 2 [(b1 + b2 + b3)^3 - 4 (b1^3 + b2^3 + b3^3)] / 15
        int_{b3}^{b2} sqrt((xi - b1)(xi - b2)(xi - b3)) (xi + (b1 + b2 + b3)/2) d xi = 0
    by Newton continuation in S from the leading collapse S = -12 sqrt 3,
    in the unknowns (b1, m, d^2) with b2,3 = m +- d.

    Args:
        S (float or ndarray): Values in (-12 sqrt 3, 4 sqrt 15 / 9)

    Returns:
        tuple or ndarray: (b1, b2, b3), or shape (3, n) for array input

    Raises:
        DomainError: Outside the window
        ConvergenceError: If the continuation fails
    """
    S_arr = np.atleast_1d(np.asarray(S, dtype=float))
    if np.any(S_arr <= S_LEADING) or np.any(S_arr >= S_TRAILING):
        raise DomainError(f"S outside the elliptic window ({S_LEADING:.6g}, {S_TRAILING:.6g})")
    nodes, weights = legendre.leggauss(_SELFSIMILAR_NODES)
    phi = 0.25 * math.pi * (nodes + 1.0)
    w = 0.25 * math.pi * weights

    order = np.argsort(S_arr)
    out = np.empty((3, S_arr.size))
    s_prev, y_prev, slope = S_LEADING, None, None
    for idx in order:
        target = S_arr[idx]
        n_steps = max(1, int(math.ceil((target - s_prev) / _SELFSIMILAR_STEP)))
        for s_next in np.linspace(s_prev, target, n_steps + 1)[1:]:
            if y_prev is None:
                guess = _selfsimilar_seed(s_next)
            elif slope is None:
                guess = y_prev
            else:
                guess = y_prev + slope * (s_next - s_prev)
            try:
                y = newton_solve(lambda v: _selfsimilar_residual(v, s_next, phi, w), guess,
                                 tol=1e-12, max_iter=60, operation="Self-Similar")
            except ConvergenceError:
                log_error("Self-Similar", f"Continuation failed at S={s_next:.8g}")
                raise
            if y_prev is not None and s_next > s_prev:
                slope = (y - y_prev) / (s_next - s_prev)
            s_prev, y_prev = s_next, y
        d = math.sqrt(max(y_prev[2], 0.0))
        out[:, idx] = (y_prev[0], y_prev[1] + d, y_prev[1] - d)
    log_info("Self-Similar", f"Solved {S_arr.size} values in [{S_arr.min():.6g}, {S_arr.max():.6g}]")
    if np.ndim(S) == 0:
        return tuple(float(b) for b in out[:, 0])
    return out


def connection_elliptic(x, t, epsilon, cp, form="dn"):
    """
    Elliptic regime: the one-phase solution with branches
    uc + sqrt((t - tc)/k) b(S) and the phase shift of the cubic data
    f_L(u) = -k (u - uc)^3.

    Args:
        x (float or ndarray): Positions with S in the elliptic window
        t (float): Time after breaking
        epsilon (float): Dispersion parameter
        cp (CatastrophePoint): Catastrophe point
        form (str): 'dn' or 'theta'

    Returns:
        float or ndarray
    """
    shifted, tau = _shifted(x, t, cp)
    if tau <= 0.0:
        raise DomainError("Elliptic connection needs t > tc")
    x_arr = np.atleast_1d(shifted)
    S = math.sqrt(cp.k) * x_arr / tau ** 1.5
    b = np.atleast_2d(np.asarray(connection_selfsimilar(S)).reshape(3, -1))
    scale = math.sqrt(tau / cp.k)
    unit = cubic_profile(1.0, 0.0)
    out = np.empty_like(x_arr)
    for n, xv in enumerate(x_arr):
        bn = tuple(b[:, n])
        qshift = tau ** 1.5 / math.sqrt(cp.k) * q_phase(*bn, unit)
        beta = tuple(scale * bi for bi in bn)
        out[n] = cp.uc + one_phase_value(xv, tau, epsilon, beta, qshift, form)
    return _result(out, x)


def connection_pii_vars(x, t, epsilon, cp):
    """
    Painleve II variable and phase at (x, t).

    xi = -(X + 12 sqrt 3 T^(3/2)) / (c0 c1 T^(1/3)),
    phase = -[(64/7) c1^3 + 2 c1^2 c0 xi T^(-7/6)] (t - tc)^(7/4) / (eps k^(3/4)).

    Returns:
        tuple: (xi, phase) arrays
    """
    X, T = catastrophe_coordinates(x, t, epsilon, cp)
    if T <= 0.0:
        raise DomainError("Painleve II connection needs t > tc")
    tau = t - cp.tc
    xi = -(np.asarray(X) + 12.0 * math.sqrt(3.0) * T ** 1.5) / (PII_C0 * PII_C1 * T ** (1.0 / 3.0))
    omega = (64.0 / 7.0) * PII_C1 ** 3 + 2.0 * PII_C1 ** 2 * PII_C0 * xi * T ** (-7.0 / 6.0)
    phase = -omega * tau ** 1.75 / (epsilon * cp.k ** 0.75)
    return xi, phase


def connection_pii(x, t, epsilon, cp, hm):
    """
    Painleve II regime near S = -12 sqrt 3:

    uc + 2 sqrt 3 sqrt((t - tc)/k)
       - 4 q(xi) (eps/k)^(1/3) / (c0 ((t - tc)/k)^(1/12)) cos(phase)

    Args:
        hm (PainleveSolution): Hastings-McLeod solution

    Returns:
        float or ndarray
    """
    xi, phase = connection_pii_vars(x, t, epsilon, cp)
    tau = t - cp.tc
    q = np.asarray(hm.evaluate(np.atleast_1d(xi)), dtype=float)
    amplitude = 4.0 * (epsilon / cp.k) ** (1.0 / 3.0) / (PII_C0 * (tau / cp.k) ** (1.0 / 12.0))
    value = cp.uc + 2.0 * math.sqrt(3.0) * math.sqrt(tau / cp.k) - amplitude * q * np.cos(np.atleast_1d(phase))
    return _result(value, x)


def connection_soliton_vars(x, t, epsilon, cp, M=DEFAULT_TRAIN_BOUND):
    """
    Soliton variable xi and pulse arguments X_j.

    xi  = -(8/7) c0 (X - (4/9) sqrt 15 T^(3/2)) / (T^(-1/4) ln T)
    X_j = -(7/8)(1/2 - xi + j) ln T - ln(sqrt(2 pi) h_j) - (j + 1/2) ln(16 c0^(5/2) / 15^(1/4))

    Raises:
        DomainError: For T <= 1
    """
    X, T = catastrophe_coordinates(x, t, epsilon, cp)
    if T <= 1.0:
        raise DomainError(f"Soliton connection needs T > 1, got T={T:.4g}")
    log_T = math.log(T)
    X_arr = np.atleast_1d(X)
    xi = -(8.0 / 7.0) * SOLITON_C0 * (X_arr - S_TRAILING * T ** 1.5) / (T ** -0.25 * log_T)
    j = np.arange(int(math.ceil(M)) + 1)
    h = np.array([specfun.hermite_norm(int(n)) for n in j])
    log_gamma = math.log(16.0 * SOLITON_C0 ** 2.5 / 15.0 ** 0.25)
    Xj = (-(7.0 / 8.0) * (0.5 - xi[None, :] + j[:, None]) * log_T
          - np.log(math.sqrt(2.0 * math.pi) * h)[:, None]
          - (j[:, None] + 0.5) * log_gamma)
    return xi, Xj


def connection_soliton(x, t, epsilon, cp, M=DEFAULT_TRAIN_BOUND):
    """
    Soliton regime near S = 4 sqrt 15 / 9:

    uc - 2 sqrt(5/3) sqrt((t - tc)/k) + 2 c0^2 sqrt((t - tc)/k) sum_j sech^2 X_j

    Returns:
        float or ndarray
    """
    _, Xj = connection_soliton_vars(x, t, epsilon, cp, M)
    scale = math.sqrt((t - cp.tc) / cp.k)
    value = cp.uc - 2.0 * math.sqrt(5.0 / 3.0) * scale + 2.0 * SOLITON_C0 ** 2 * scale * _sech2(Xj).sum(axis=0)
    return _result(value, x)


def connection_vars(x, t, epsilon, cp):
    """
    ConnectionVars at a single point, filled according to the regime of S.
    """
    S = similarity_variable(x, t, cp)
    tau = t - cp.tc
    if tau < 0.0 or not (S_LEADING < S < S_TRAILING):
        return ConnectionVars(S=S, z=_cubic_root(S, tau > 0))
    b = connection_selfsimilar(S)
    xi, phase = connection_pii_vars(x, t, epsilon, cp)
    omega = -float(np.atleast_1d(phase)[0]) * epsilon * cp.k ** 0.75 / tau ** 1.75
    return ConnectionVars(S=S, b=b, xi=float(np.atleast_1d(xi)[0]), omega=omega)
