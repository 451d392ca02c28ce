"""
Whitham Module for the KdV small-dispersion study.

Provides the one-phase modulation machinery, including:
- The theta(v; u) integral and its partial derivatives
- The phase shift q(beta1, beta2, beta3) and its gradient
- Whitham characteristic velocities and the weak limit
- Hodograph residuals and their inversion on a stretched Chebyshev grid
- The confluent leading- and trailing-edge systems

All integrals are mapped to [0, 1] by the square substitutions
1 - m = 2 sigma^2 and evaluated by Gauss-Legendre rules of 64 nodes.
With check=True a rule is accepted only when doubling the nodes changes
the value by less than 1e-10; hot loops pass check=False.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre

from modules import specfun
from modules.chebcore import ChebGrid, ChebFunction, newton_solve, nelder_mead_min
from modules.hopf import critical_point
from utils.errors import (
    DomainError, ConvergenceError, QuadratureError,
)
from utils.logger import log_error, log_info


QUAD_NODES = 64
_QUAD_MAX = 1024
_QUAD_TOL = 1e-10
_DEGENERATE = 1e-13
_EDGE_STEPS = 24


@dataclass
class EdgeState:
    """
    Solution of a confluent edge system at time t.

    Attributes:
        kind (str): 'leading' (beta2 = beta3 = v, beta1 = u, u > v) or
            'trailing' (beta1 = beta2 = v, beta3 = u, v > u)
        t (float): Time
        x_edge (float): x-(t) or x+(t)
        u (float): Hopf value at the edge
        v (float): Confluent value
        theta_v, theta_vv, theta_vvv (float): v-derivatives of theta at (v; u)
        residual (float): Max residual of the edge equations
    """
    kind: str
    t: float
    x_edge: float
    u: float
    v: float
    theta_v: float
    theta_vv: float
    theta_vvv: float
    residual: float = 0.0

    @property
    def c(self):
        """Leading-edge constant -sqrt(u - v) d^2 theta / dv^2."""
        return -math.sqrt(self.u - self.v) * self.theta_vv

    @property
    def gamma(self):
        """Trailing-edge constant 4 (v - u)^(5/4) sqrt(-d theta / dv)."""
        return 4.0 * (self.v - self.u) ** 1.25 * math.sqrt(-self.theta_v)

    @property
    def beta(self):
        if self.kind == "leading":
            return (self.u, self.v, self.v)
        return (self.v, self.v, self.u)


@dataclass
class WhithamBranches:
    """
    Whitham branches beta1 > beta2 > beta3 sampled on the stretched grid.

    The zone [x-, x+] is split at its midpoint; each half carries its own
    Chebyshev grid in the stretching variable l. Node arrays are stored in
    Chebyshev order (j = 0 at l = 1).

    Attributes:
        t (float): Time
        xminus, xplus (float): Zone edges
        Nc (int): Chebyshev order per half
        x_left, x_right (ndarray): Physical nodes of each half
        beta_left, beta_right (ndarray): 3 x (Nc+1) branch values
        res_left, res_right (ndarray): Max hodograph residual per node
        leading, trailing (EdgeState): Edge solutions
    """
    t: float
    xminus: float
    xplus: float
    Nc: int
    x_left: np.ndarray
    x_right: np.ndarray
    beta_left: np.ndarray
    beta_right: np.ndarray
    res_left: np.ndarray
    res_right: np.ndarray
    leading: EdgeState
    trailing: EdgeState
    _interp: dict = field(default_factory=dict, repr=False)

    @property
    def width(self):
        return self.xplus - self.xminus

    @property
    def midpoint(self):
        return 0.5 * (self.xminus + self.xplus)

    @property
    def x(self):
        """All nodes in increasing order."""
        return np.concatenate([self.x_left[::-1], self.x_right[::-1][1:]])

    @property
    def beta(self):
        """3 x (2 Nc + 1) branch values matching x."""
        return np.concatenate([self.beta_left[:, ::-1], self.beta_right[:, ::-1][:, 1:]], axis=1)

    @property
    def residuals(self):
        return np.concatenate([self.res_left[::-1], self.res_right[::-1][1:]])

    def tail(self):
        """Largest relative top Chebyshev coefficient over branches and halves."""
        grid = ChebGrid(self.Nc)
        worst = 0.0
        for values in (self.beta_left, self.beta_right):
            for row in values:
                coeffs = ChebFunction(grid, row).coeffs
                worst = max(worst, abs(coeffs[-1]) / max(np.max(np.abs(coeffs)), 1e-300))
        return worst

    def _functions(self, half):
        if half not in self._interp:
            grid = ChebGrid(self.Nc)
            values = self.beta_left if half == "left" else self.beta_right
            self._interp[half] = [ChebFunction(grid, row) for row in values]
        return self._interp[half]

    def to_l(self, x):
        """Stretching variable of x and the half it belongs to."""
        d = self.width
        if x <= self.midpoint:
            l = -1.0 + 2.0 * math.sqrt(max(2.0 * (x - self.xminus) / d, 0.0))
            return min(l, 1.0), "left"
        l = 1.0 - 2.0 * math.sqrt(max(2.0 * (self.xplus - x) / d, 0.0))
        return max(l, -1.0), "right"

    def evaluate(self, x):
        """
        Branch values at x by barycentric interpolation in l.

        Args:
            x (float or ndarray): Points in [x-, x+]

        Returns:
            ndarray: shape (3,) for scalar x, (3, n) otherwise

        Raises:
            DomainError: If x lies outside the zone
        """
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        slack = 1e-12 * (1.0 + abs(self.xplus))
        if np.any(x_arr < self.xminus - slack) or np.any(x_arr > self.xplus + slack):
            raise DomainError(f"Point outside Whitham zone [{self.xminus}, {self.xplus}]")
        out = np.empty((3, x_arr.size))
        for n, xv in enumerate(x_arr):
            l, half = self.to_l(xv)
            for i, f in enumerate(self._functions(half)):
                out[i, n] = f(l)
        return out[:, 0] if np.ndim(x) == 0 else out


@functools.lru_cache(maxsize=None)
def _gauss01(n):
    nodes, weights = legendre.leggauss(n)
    return 0.5 * (nodes + 1.0), 0.5 * weights


@functools.lru_cache(maxsize=None)
def _chebyshev_gauss(n):
    return np.cos((2.0 * np.arange(1, n + 1) - 1.0) * math.pi / (2.0 * n))


def _checked(rule, n, check, operation):
    # rule(n) -> value (scalar or array); doubling check on demand
    value = np.asarray(rule(n))
    if not check:
        return value
    while True:
        if 2 * n > _QUAD_MAX:
            msg = f"Quadrature not converged with {n} nodes"
            log_error(operation, msg)
            raise QuadratureError(msg)
        finer = np.asarray(rule(2 * n))
        if np.all(np.abs(finer - value) <= _QUAD_TOL * np.maximum(1.0, np.abs(finer))):
            return finer
        n, value = 2 * n, finer


def _scalar_or_array(value, *likes):
    if all(np.ndim(v) == 0 for v in likes):
        return float(value)
    return value


def theta_vu(v, u, profile, dv=0, du=0, n=QUAD_NODES, check=True):
    """
    theta(v; u) = int_0^1 f_L'((1 - sigma^2) v + sigma^2 u) d sigma and its
    partial derivatives.

    d^a/dv^a d^b/du^b theta = int_0^1 (1 - sigma^2)^a sigma^(2b)
    f_L^(1+a+b)((1 - sigma^2) v + sigma^2 u) d sigma.

    Args:
        v, u (float or ndarray): Arguments inside the range of u0
        profile (InitialDataProfile): Initial data
        dv, du (int): Derivative orders, dv + du <= 3
        n (int): Gauss nodes
        check (bool): Run the doubling check

    Returns:
        float or ndarray: The requested derivative of theta

    Raises:
        QuadratureError: If the doubling check fails up to 1024 nodes
    """
    order = 1 + dv + du
    if order > 4:
        raise DomainError(f"theta derivative of total order {dv + du} not available")
    v_arr = np.asarray(v, dtype=float)[..., None]
    u_arr = np.asarray(u, dtype=float)[..., None]

    def rule(m):
        s, w = _gauss01(m)
        s2 = s * s
        vals = (1.0 - s2) ** dv * s2 ** du * profile.f_L((1.0 - s2) * v_arr + s2 * u_arr, order)
        return vals @ w

    return _scalar_or_array(_checked(rule, n, check, "Theta Integral"), v, u)


def _q0_rule(beta, profile, m, grad):
    b1, b2, b3 = beta
    s, w = _gauss01(m)
    nu = _chebyshev_gauss(m)
    s2 = s[None, :] * s[None, :]
    top = 0.5 * ((1.0 + nu) * b1 + (1.0 - nu) * b2)
    arg = (1.0 - s2) * top[:, None] + s2 * b3
    q = np.mean(profile.f_L(arg, 0) @ w)
    if not grad:
        return q
    fp = profile.f_L(arg, 1)
    d1 = np.mean(((1.0 - s2) * 0.5 * (1.0 + nu)[:, None] * fp) @ w)
    d2 = np.mean(((1.0 - s2) * 0.5 * (1.0 - nu)[:, None] * fp) @ w)
    d3 = np.mean((s2 * fp) @ w)
    return np.array([q, d1, d2, d3])


def _qnm_rule(beta, profile, m):
    b1, b2, b3 = beta
    umin = profile.umin
    s, w = _gauss01(m)
    phi = 0.5 * math.pi * s
    wphi = 0.5 * math.pi * w
    psi = (2.0 * np.arange(1, m + 1) - 1.0) * math.pi / (2.0 * m)
    lam = 0.5 * (b1 + b2) + 0.5 * (b1 - b2) * np.cos(psi)

    # int_umin^lam f_L(xi) / sqrt(lam - xi), xi = lam - (lam - umin) sigma^2
    s2 = s * s
    left = 2.0 * np.sqrt(lam - umin) * (profile.f_L((1.0 - s2)[None, :] * lam[:, None] + s2 * umin, 0) @ w)
    # int_umin^b3 f_R(xi) / sqrt(lam - xi), xi = umin + (b3 - umin) sin^2 phi
    xi = umin + (b3 - umin) * np.sin(phi) ** 2
    jac = 2.0 * (b3 - umin) * np.sin(phi) * np.cos(phi)
    right = (profile.f_R(xi, 0) * jac / np.sqrt(lam[:, None] - xi[None, :])) @ wphi
    return 0.5 * np.mean((left - right) / np.sqrt(lam - b3))


def _check_beta(beta, strict=False):
    b1, b2, b3 = (float(b) for b in beta)
    ok = (b1 > b2 > b3) if strict else (b1 >= b2 >= b3)
    if not ok:
        raise DomainError(f"Branch values must satisfy b1 {'>' if strict else '>='} b2 {'>' if strict else '>='} b3, got {beta}")
    return b1, b2, b3


def q_phase(b1, b2, b3, profile, wrapped=False, n=QUAD_NODES, check=True):
    """
    Phase shift q(beta1, beta2, beta3).

    The default form integrates f_L over the square-substituted double
    integral with Chebyshev-Gauss nodes in nu and Gauss-Legendre nodes in
    sigma. With wrapped=True beta3 lies on the increasing branch and the
    continuation formula with f_R is used; both agree at beta3 = umin.

    Args:
        b1, b2, b3 (float): Ordered branch values
        profile (InitialDataProfile): Initial data
        wrapped (bool): beta3 has passed the hump minimum
        n (int): Nodes per dimension
        check (bool): Run the doubling check

    Returns:
        float: q

    Raises:
        DomainError: If the values are unordered or outside the profile range
        QuadratureError: If the doubling check fails
    """
    beta = _check_beta((b1, b2, b3))
    if beta[2] < profile.umin:
        raise DomainError(f"beta3={beta[2]} below the hump minimum {profile.umin}")
    if wrapped:
        if beta[1] == beta[0]:
            raise DomainError("Wrapped phase needs beta1 > beta2")
        return float(_checked(lambda m: _qnm_rule(beta, profile, m), n, check, "Phase Integral"))
    return float(_checked(lambda m: _q0_rule(beta, profile, m, False), n, check, "Phase Integral"))


def q_phase_grad(beta, profile, wrapped=False, n=QUAD_NODES, check=True):
    """
    q and its gradient (dq/dbeta1, dq/dbeta2, dq/dbeta3).

    Differentiates under the integral for the default form; the wrapped
    form uses central differences.

    Returns:
        tuple: (q, ndarray of 3 partial derivatives)
    """
    beta = _check_beta(beta)
    if not wrapped:
        out = _checked(lambda m: _q0_rule(beta, profile, m, True), n, check, "Phase Integral")
        return float(out[0]), np.asarray(out[1:], dtype=float)
    q = q_phase(*beta, profile, wrapped=True, n=n, check=check)
    grad = np.empty(3)
    for i in range(3):
        h = 1e-6 * (1.0 + abs(beta[i]))
        plus, minus = list(beta), list(beta)
        plus[i] += h
        minus[i] -= h
        grad[i] = (q_phase(*plus, profile, wrapped=True, n=n, check=False)
                   - q_phase(*minus, profile, wrapped=True, n=n, check=False)) / (2.0 * h)
    return q, grad


def elliptic_data(beta):
    """
    Modulus s, K(s), E(s) and alpha for ordered branch values.

    Returns:
        tuple: (s, K, E, alpha)
    """
    b1, b2, b3 = _check_beta(beta, strict=True)
    s = math.sqrt((b2 - b3) / (b1 - b3))
    K = specfun.elliptic_K(s)
    E = specfun.elliptic_E(s)
    alpha = -b1 + (b1 - b3) * E / K
    return s, K, E, alpha


def weak_limit(beta):
    """Weak limit beta1 + beta2 + beta3 + 2 alpha."""
    b1, b2, b3 = (float(b) for b in beta)
    if b1 - b3 <= 0.0:
        return b1
    if b1 == b2:
        # s = 1: E/K -> 0
        return b1 + b2 + b3 - 2.0 * b1
    if b2 == b3:
        # s = 0: alpha = -beta3
        return b1 + b2 - b3
    _, _, _, alpha = elliptic_data(beta)
    return b1 + b2 + b3 + 2.0 * alpha


def whitham_velocities(b1, b2, b3):
    """
    Characteristic speeds of the one-phase Whitham system.

    v_i = 4 prod_{k != i}(beta_i - beta_k) / (beta_i + alpha) + 2 sum(beta)

    Args:
        b1, b2, b3 (float): Strictly ordered branch values

    Returns:
        tuple: (v1, v2, v3)

    Raises:
        DomainError: If the values are not strictly ordered or some
            beta_i + alpha vanishes to 1e-13
    """
    s, K, E, _ = elliptic_data((b1, b2, b3))
    ratio = E / K
    # beta_i + alpha without cancellation
    shifted = (
        (b1 - b3) * ratio,
        (b2 - b1) + (b1 - b3) * ratio,
        (b1 - b3) * (ratio - 1.0),
    )
    beta = (b1, b2, b3)
    total = 2.0 * (b1 + b2 + b3)
    speeds = []
    for i in range(3):
        if abs(shifted[i]) < _DEGENERATE:
            log_error("Whitham Velocities", f"Degenerate branch {i + 1} at beta={beta}")
            raise DomainError(f"beta_{i + 1} + alpha vanishes at beta={beta}")
        prod = 1.0
        for k in range(3):
            if k != i:
                prod *= beta[i] - beta[k]
        speeds.append(4.0 * prod / shifted[i] + total)
    return tuple(speeds)


def hodograph_residual(beta, x, t, profile, wrapped=False, check=True):
    """
    Residuals x - v_i t - w_i of the hodograph equations.

    w_i = (v_i - 2 sum(beta)) / 2 * dq/dbeta_i + q. A fully collapsed
    triple reduces to the Hopf relation x - 6 t u - f_L(u).

    Args:
        beta (sequence): (beta1, beta2, beta3)
        x, t (float): Point in the (x, t) plane
        profile (InitialDataProfile): Initial data
        wrapped (bool): Use the continuation phase formula
        check (bool): Run quadrature checks

    Returns:
        ndarray: Three residuals
    """
    b1, b2, b3 = _check_beta(beta)
    if b1 - b3 <= 1e-14 * (1.0 + abs(b1)):
        u = (b1 + b2 + b3) / 3.0
        r = x - 6.0 * t * u - float(profile.f_L(u))
        return np.array([r, r, r])
    q, grad = q_phase_grad((b1, b2, b3), profile, wrapped=wrapped, check=check)
    speeds = np.asarray(whitham_velocities(b1, b2, b3))
    total = 2.0 * (b1 + b2 + b3)
    w = 0.5 * (speeds - total) * grad + q
    return x - speeds * t - w


def _edge_state(kind, t, x_edge, u, v, residual, profile):
    derivs = [theta_vu(v, u, profile, dv=d) for d in (1, 2, 3)]
    return EdgeState(kind=kind, t=t, x_edge=x_edge, u=u, v=v,
                     theta_v=derivs[0], theta_vv=derivs[1], theta_vvv=derivs[2],
                     residual=residual)


def _leading_residual(y, t, profile, check=False):
    u, v = y
    return np.array([6.0 * t + theta_vu(v, u, profile, check=check),
                     theta_vu(v, u, profile, dv=1, check=check)])


def _leading_jacobian(y, t, profile):
    u, v = y
    return np.array([
        [theta_vu(v, u, profile, du=1, check=False), theta_vu(v, u, profile, dv=1, check=False)],
        [theta_vu(v, u, profile, dv=1, du=1, check=False), theta_vu(v, u, profile, dv=2, check=False)],
    ])


def _trailing_residual(y, t, profile, check=False):
    u, v = y
    s, w = _gauss01(QUAD_NODES)
    lam = u + (v - u) * s * s
    inner = 6.0 * t + theta_vu(lam, np.full_like(lam, u), profile, check=check)
    return np.array([6.0 * t + theta_vu(v, u, profile, check=check),
                     float((inner * s * s) @ w)])


# cubic-germ edge values in units of sqrt((t - tc)/k): (u - uc, v - uc)
_EDGE_SEEDS = {
    "leading": (2.0 * math.sqrt(3.0), -0.5 * math.sqrt(3.0)),
    "trailing": (-2.0 * math.sqrt(15.0) / 3.0, 0.5 * math.sqrt(15.0)),
}


def _march_edge(kind, t, profile, steps):
    cp = critical_point(profile)
    if not t > cp.tc:
        raise DomainError(f"Edge systems need t > tc = {cp.tc}, got {t}")
    residual = _leading_residual if kind == "leading" else _trailing_residual
    jacobian = (lambda y, tt: _leading_jacobian(y, tt, profile)) if kind == "leading" else None
    cu, cv = _EDGE_SEEDS[kind]
    operation = "Leading Edge" if kind == "leading" else "Trailing Edge"

    history = []
    for j in range(1, steps + 1):
        tj = cp.tc + (t - cp.tc) * (j / steps) ** 2
        a = math.sqrt((tj - cp.tc) / cp.k)
        if len(history) < 2:
            seed = np.array([cp.uc + cu * a, cp.uc + cv * a])
        else:
            # linear extrapolation in sqrt(t - tc)
            (a0, y0), (a1, y1) = history[-2], history[-1]
            seed = y1 + (y1 - y0) * (a - a1) / (a1 - a0)
        jac = (lambda y, tt=tj: jacobian(y, tt)) if jacobian else None
        try:
            y = newton_solve(lambda y, tt=tj: residual(y, tt, profile), seed,
                             jacobian=jac, tol=1e-13 * max(1.0, 6.0 * tj), max_iter=50,
                             operation=operation)
        except ConvergenceError as e:
            log_error(operation, f"Continuation failed at t={tj:.8f} (target t={t})")
            raise ConvergenceError(f"{operation} continuation failed at t={tj:.8f}: {e}",
                                   e.iterations, e.residual)
        history.append((a, y))
    return history[-1][1]


def solve_leading_edge(t, profile, steps=_EDGE_STEPS):
    """
    Leading edge x-(t) with beta2 = beta3 = v < beta1 = u.

    Solves 6t + theta(v; u) = 0, d theta / dv = 0 by Newton with an
    analytic Jacobian, continued in t from the cubic asymptotics at tc,
    then x- = 6 t u + f_L(u).

    Args:
        t (float): Time, t > tc
        profile (InitialDataProfile): Initial data
        steps (int): Continuation steps from tc

    Returns:
        EdgeState: With c > 0

    Raises:
        DomainError: If t <= tc
        ConvergenceError: If the continuation breaks down
    """
    u, v = _march_edge("leading", t, profile, steps)
    if not u > v:
        log_error("Leading Edge", f"Ordering violated at t={t}: u={u}, v={v}")
        raise ConvergenceError(f"Leading edge ordering violated: u={u} <= v={v}")
    res = float(np.max(np.abs(_leading_residual((u, v), t, profile, check=True))))
    x_edge = 6.0 * t * u + float(profile.f_L(u))
    state = _edge_state("leading", t, x_edge, float(u), float(v), res, profile)
    log_info("Leading Edge", f"t={t}: x-={x_edge:.12f} u={u:.12f} v={v:.12f} c={state.c:.6g}")
    return state


def solve_trailing_edge(t, profile, steps=_EDGE_STEPS):
    """
    Trailing edge x+(t) with beta1 = beta2 = v > beta3 = u.

    The integral condition is evaluated after lambda = u + (v - u) sigma^2,
    which removes the square-root weight.

    Args:
        t (float): Time, t > tc
        profile (InitialDataProfile): Initial data
        steps (int): Continuation steps from tc

    Returns:
        EdgeState: With gamma > 0
    """
    u, v = _march_edge("trailing", t, profile, steps)
    if not v > u:
        log_error("Trailing Edge", f"Ordering violated at t={t}: u={u}, v={v}")
        raise ConvergenceError(f"Trailing edge ordering violated: v={v} <= u={u}")
    res = float(np.max(np.abs(_trailing_residual((u, v), t, profile, check=True))))
    x_edge = 6.0 * t * u + float(profile.f_L(u))
    state = _edge_state("trailing", t, x_edge, float(u), float(v), res, profile)
    log_info("Trailing Edge", f"t={t}: x+={x_edge:.12f} u={u:.12f} v={v:.12f} gamma={state.gamma:.6g}")
    return state


def theta_phase_integral(edge, profile):
    """
    2 int_v^u (f_L'(xi) + 6t) sqrt(xi - v) d xi at the leading edge.

    The substitution xi = v + (u - v) sigma^2 gives
    4 (u - v)^(3/2) int_0^1 (f_L' + 6t) sigma^2 d sigma.
    """
    u, v, t = edge.u, edge.v, edge.t

    def rule(m):
        s, w = _gauss01(m)
        s2 = s * s
        return ((profile.f_L(v + (u - v) * s2, 1) + 6.0 * t) * s2) @ w

    return 4.0 * (u - v) ** 1.5 * float(_checked(rule, QUAD_NODES, True, "Phase Integral"))


def _stretched_nodes(Nc, xminus, xplus):
    l = ChebGrid(Nc).nodes
    half = 0.5 * (xplus - xminus)
    left = xminus + half * (1.0 + l) ** 2 / 4.0
    right = xplus - half * (1.0 - l) ** 2 / 4.0
    return l, left, right


def _objective(x, t, profile, umin):
    def S(beta):
        b1, b2, b3 = beta
        if not (b1 > b2 > b3) or b3 < umin:
            return 1e6 * (1.0 + max(b2 - b1, 0.0) + max(b3 - b2, 0.0) + max(umin - b3, 0.0))
        try:
            r = hodograph_residual(beta, x, t, profile, check=False)
        except DomainError:
            return 1e6
        return float(r @ r)
    return S


def _solve_node(x, t, profile, seed, index):
    gap = max(min(seed[0] - seed[1], seed[1] - seed[2]), 1e-12)
    try:
        beta = nelder_mead_min(_objective(x, t, profile, profile.umin), seed,
                               tol=1e-9 * (1.0 + gap), fatol=1e-16,
                               max_evals=4000, initial_step=0.1 * gap,
                               operation="Whitham Zone")
    except ConvergenceError:
        beta = np.asarray(seed, dtype=float)
    try:
        beta = newton_solve(lambda b: hodograph_residual(b, x, t, profile, check=False),
                            beta, tol=1e-11, max_iter=30, operation="Whitham Zone")
    except (ConvergenceError, DomainError) as e:
        log_error("Whitham Zone", f"Newton polish failed at node {index} (x={x:.12f}): {e}")
    res = float(np.max(np.abs(hodograph_residual(beta, x, t, profile, check=False))))
    if not (beta[0] > beta[1] > beta[2]) or res > 1e-8:
        msg = f"Hodograph inversion failed at node {index} (x={x:.12f}), residual {res:.3e}"
        log_error("Whitham Zone", msg)
        raise ConvergenceError(msg, index, res)
    return np.asarray(beta, dtype=float), res


def _scan_first_node(x, t, profile, base):
    # base is the confluent edge triple; split the double value by delta
    best, best_val = None, math.inf
    S = _objective(x, t, profile, profile.umin)
    for delta in np.logspace(-8, -1, 29):
        if base[1] == base[2]:
            trial = np.array([base[0], base[1] + delta, base[2] - delta])
        else:
            trial = np.array([base[0] + delta, base[1] - delta, base[2]])
        val = S(trial)
        if val < best_val:
            best, best_val = trial, val
    return best


def _solve_half(l, xs, t, profile, edge, index_offset):
    # xs[0] is the edge node; march away from it
    m = xs.size
    beta = np.empty((3, m))
    res = np.zeros(m)
    beta[:, 0] = edge.beta
    res[0] = edge.residual
    for j in range(1, m):
        if j == 1:
            seed = _scan_first_node(xs[1], t, profile, edge.beta)
        elif j == 2:
            seed = beta[:, 1] + (beta[:, 1] - beta[:, 0]) * (l[2] - l[1]) / (l[1] - l[0])
        else:
            # quadratic extrapolation in l
            seed = (beta[:, j - 1] * (l[j] - l[j - 2]) * (l[j] - l[j - 3])
                    / ((l[j - 1] - l[j - 2]) * (l[j - 1] - l[j - 3]))
                    + beta[:, j - 2] * (l[j] - l[j - 1]) * (l[j] - l[j - 3])
                    / ((l[j - 2] - l[j - 1]) * (l[j - 2] - l[j - 3]))
                    + beta[:, j - 3] * (l[j] - l[j - 1]) * (l[j] - l[j - 2])
                    / ((l[j - 3] - l[j - 1]) * (l[j - 3] - l[j - 2])))
        if not seed[0] > seed[1] > seed[2]:
            seed = beta[:, j - 1].copy()
        beta[:, j], res[j] = _solve_node(xs[j], t, profile, seed, index_offset + j)
    return beta, res


def solve_whitham_zone(t, profile, Nc=64, leading=None, trailing=None):
    """
    Whitham branches on the two-sided square-stretched Chebyshev grid.

    Each half is marched from its edge: the first interior node is seeded
    by splitting the confluent edge value, later nodes by extrapolation in
    l. Every node minimises S = sum S_i^2 by Nelder-Mead and is polished by
    Newton on the residual vector.

    Args:
        t (float): Time, t > tc
        profile (InitialDataProfile): Initial data
        Nc (int): Chebyshev order per half, >= 16
        leading, trailing (EdgeState, optional): Precomputed edges

    Returns:
        WhithamBranches: Branch values and per-node residuals

    Raises:
        DomainError: If Nc < 16 or t <= tc
        ConvergenceError: If a node cannot be solved (node index reported)

    Example:
        zone = solve_whitham_zone(0.4, sech2_profile(), Nc=64)
        beta = zone.evaluate(-1.0)
    """
    if Nc < 16:
        raise DomainError(f"Whitham zone needs Nc >= 16, got {Nc}")
    leading = leading or solve_leading_edge(t, profile)
    trailing = trailing or solve_trailing_edge(t, profile)
    xminus, xplus = leading.x_edge, trailing.x_edge
    if not xplus > xminus:
        raise ConvergenceError(f"Empty Whitham zone at t={t}: x-={xminus}, x+={xplus}")

    l, x_left, x_right = _stretched_nodes(Nc, xminus, xplus)
    # left half marches from x- (j = Nc) towards the midpoint (j = 0)
    beta_l, res_l = _solve_half(l[::-1], x_left[::-1], t, profile, leading, 0)
    beta_r, res_r = _solve_half(l, x_right, t, profile, trailing, Nc + 1)

    zone = WhithamBranches(
        t=t, xminus=xminus, xplus=xplus, Nc=Nc,
        x_left=x_left, x_right=x_right,
        beta_left=beta_l[:, ::-1], beta_right=beta_r,
        res_left=res_l[::-1], res_right=res_r,
        leading=leading, trailing=trailing,
    )
    mismatch = float(np.max(np.abs(zone.beta_left[:, 0] - zone.beta_right[:, -1])))
    log_info("Whitham Zone", f"t={t} Nc={Nc}: max residual {zone.residuals.max():.2e}, "
                             f"midpoint mismatch {mismatch:.2e}, tail {zone.tail():.2e}")
    return zone
