"""
Painleve Module for the KdV small-dispersion study.

Provides boundary-value solves for the two special transcendents the
asymptotic formulas need, including:
- The Hastings-McLeod solution of q'' = s q + 2 q^3
- The pole-free solution of the P_I^2 equation
      X = 6 T U - [U^3 + U_X^2 / 2 + U U_XX + U_XXXX / 10]
- Asymptotic tail series used as boundary data and outside the domain

Both problems are discretised by Chebyshev collocation; boundary rows of
the collocation system are replaced by tail data (tau method) and the
system is solved by damped Newton with an analytic Jacobian.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from modules import specfun
from modules.chebcore import (
    ChebGrid, ChebFunction, diff_matrix, cheb_derivative_eval, newton_solve,
)
from utils.errors import DomainError, ConvergenceError
from utils.logger import log_error, log_info


HM_DOMAIN = (-10.0, 10.0)
HM_NC = 128
PI2_DOMAIN = (-60.0, 60.0)
PI2_NC = 384

_TAIL_ORDER = 60
_CHECK_POINTS = 301


@dataclass
class AsymptoticTail:
    """
    Truncated asymptotic series at one end of the real line.

    Attributes:
        equation (str): 'PII' or 'PI2'
        side (str): 'left' or 'right'
        coeffs (ndarray): Series coefficients (empty for the Airy tail)
        T (float): Parameter of P_I^2
        truncation (int): Number of terms kept at the reference point
    """
    equation: str
    side: str
    coeffs: np.ndarray
    T: float = 0.0
    truncation: int = 0

    def _terms(self, x):
        x = float(x)
        if self.equation == "PII":
            z = -x
            n = np.arange(self.coeffs.size)
            return self.coeffs * z ** (-3.0 * n)
        r = abs(x) ** (-1.0 / 3.0)
        m = np.arange(self.coeffs.size)
        return self.coeffs * r ** (m - 1.0)

    def cutoff(self, x):
        """Optimal truncation: stop before terms start growing or drop below 1e-16."""
        terms = np.abs(self._terms(x))
        scale = max(terms[0], 1e-300)
        last = 0
        for m in range(1, terms.size):
            if terms[m] == 0.0:
                last = m
                continue
            if terms[m] < 1e-16 * scale:
                return m
            previous = max((terms[j] for j in range(last, m) if terms[j] != 0.0), default=scale)
            if terms[m] > previous and m > 2:
                return m
            last = m
        return terms.size

    def evaluate(self, x, derivative=0):
        """
        Tail value or first derivative at x.

        Raises:
            DomainError: For derivative > 1 or x on the wrong side of 0
        """
        if derivative not in (0, 1):
            raise DomainError("Tail series provide the value and first derivative only")
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        wrong = x_arr > 0 if self.side == "left" else x_arr < 0
        if np.any(wrong) or np.any(x_arr == 0):
            raise DomainError(f"{self.side} tail evaluated on the wrong side: {x}")
        out = np.array([self._scalar(xv, derivative) for xv in x_arr])
        return float(out[0]) if np.ndim(x) == 0 else out

    def _scalar(self, x, derivative):
        if self.equation == "PII" and self.side == "right":
            return specfun.airy_Ai(x) if derivative == 0 else specfun.airy_Ai_prime(x)
        m = self.cutoff(x)
        c = self.coeffs[:m]
        n = np.arange(m)
        if self.equation == "PII":
            z = -x
            if derivative == 0:
                return math.sqrt(z / 2.0) * float(np.sum(c * z ** (-3.0 * n)))
            # dq/ds = -dq/dz
            return -float(np.sum(c * (0.5 - 3.0 * n) * z ** (-0.5 - 3.0 * n))) / math.sqrt(2.0)
        r = abs(x) ** (-1.0 / 3.0)
        if derivative == 0:
            return float(np.sum(c * r ** (n - 1.0)))
        p = (1.0 - n) / 3.0
        return math.copysign(1.0, x) * float(np.sum(c * p * r ** (n + 2.0)))


def _hm_left_coeffs(order):
    # q = sqrt(z/2) sum a_n z^(-3n), z = -s
    a = np.zeros(order)
    a[0] = 1.0
    for m in range(1, order):
        cube = np.convolve(np.convolve(a[:m], a[:m]), a[:m])
        rest = cube[m] if cube.size > m else 0.0
        a[m] = ((9.0 * (m - 1) ** 2 - 0.25) * a[m - 1] - rest) / 2.0
    return a


def _pi2_coeffs(T, side, order):
    # U = sum b_m |X|^{p_m}, p_m = (1 - m) / 3
    sigma = 1.0 if side == "right" else -1.0
    b = np.zeros(order)
    b[0] = -sigma
    p = (1.0 - np.arange(order)) / 3.0
    for n in range(1, order):
        head = b[:n]
        cube = np.convolve(np.convolve(head, head), head)
        rest = cube[n] if cube.size > n else 0.0
        total = 6.0 * T * b[n - 2] if n >= 2 else 0.0
        total -= rest
        if n >= 7:
            k = n - 7
            bp = b[:k + 1] * p[:k + 1]
            A = np.convolve(bp, bp)[k]
            B = np.convolve(b[:k + 1], b[:k + 1] * p[:k + 1] * (p[:k + 1] - 1.0))[k]
            total -= 0.5 * A + B
        if n >= 14:
            j = n - 14
            total -= 0.1 * b[j] * p[j] * (p[j] - 1.0) * (p[j] - 2.0) * (p[j] - 3.0)
        b[n] = total / 3.0
    return b


def tail_series(equation, side, T=0.0, at=None, order=_TAIL_ORDER):
    """
    Asymptotic tail of the Hastings-McLeod or P_I^2 solution.

    PII left:  q = sqrt(-s/2) sum a_n (-s)^(-3n), a_0 = 1, a_1 = -1/8
    PII right: q = Ai(s)
    PI2:       U = sum b_m |X|^((1 - m)/3), b_0 = -sign X, b_2 = -2 T sign X

    Args:
        equation (str): 'PII' or 'PI2'
        side (str): 'left' or 'right'
        T (float): P_I^2 parameter
        at (float, optional): Reference point for the reported truncation
        order (int): Number of coefficients generated

    Returns:
        AsymptoticTail: Coefficients and truncation index

    Example:
        tail = tail_series('PII', 'left', at=-10.0)
        tail.evaluate(-10.0)
    """
    if side not in ("left", "right"):
        raise DomainError(f"Tail side must be 'left' or 'right', got '{side}'")
    if equation == "PII":
        coeffs = np.array([1.0]) if side == "right" else _hm_left_coeffs(order)
    elif equation == "PI2":
        coeffs = _pi2_coeffs(float(T), side, order)
    else:
        raise DomainError(f"Unknown equation '{equation}'")
    tail = AsymptoticTail(equation=equation, side=side, coeffs=coeffs, T=float(T))
    if at is not None and not (equation == "PII" and side == "right"):
        tail.truncation = tail.cutoff(at)
    return tail


@dataclass
class PainleveSolution:
    """
    Collocation solution of PII (Hastings-McLeod) or P_I^2.

    Attributes:
        equation (str): 'PII' or 'PI2'
        T (float): P_I^2 parameter (0 for PII)
        grid (ChebGrid): Collocation grid on [x_l, x_r]
        cheb (ChebFunction): Nodal solution with coefficients
        left_tail, right_tail (AsymptoticTail): Boundary series
        derivs (dict): Nodal derived arrays ('qp', 'p' or 'UX'..'UXXXX', 'Q')
        residual (float): Relative ODE residual on the off-node check grid
        iterations (int): Newton iterations
    """
    equation: str
    T: float
    grid: ChebGrid
    cheb: ChebFunction
    left_tail: AsymptoticTail
    right_tail: AsymptoticTail
    derivs: dict = field(default_factory=dict)
    residual: float = 0.0
    iterations: int = 0

    @property
    def domain(self):
        return (self.grid.a, self.grid.b)

    @property
    def x(self):
        return self.grid.x

    @property
    def values(self):
        return self.cheb.values

    def evaluate(self, x, derivative=0):
        """
        Solution or derivative at x; tails outside the domain.

        Args:
            x (float or ndarray): Points
            derivative (int): 0..4 inside the domain, 0..1 outside

        Returns:
            float or ndarray
        """
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x_arr)
        inside = (x_arr >= self.grid.a) & (x_arr <= self.grid.b)
        if np.any(inside):
            if derivative == 0:
                out[inside] = self.cheb(x_arr[inside])
            else:
                out[inside] = cheb_derivative_eval(self.cheb.coeffs, self.grid, x_arr[inside], derivative)
        left = x_arr < self.grid.a
        right = x_arr > self.grid.b
        if np.any(left):
            out[left] = self.left_tail.evaluate(x_arr[left], derivative)
        if np.any(right):
            out[right] = self.right_tail.evaluate(x_arr[right], derivative)
        return float(out[0]) if np.ndim(x) == 0 else out


def _check_grid_points(grid):
    # off-node points on the central 90% of the domain
    mid = 0.5 * (grid.a + grid.b)
    half = 0.45 * (grid.b - grid.a)
    return mid + half * np.cos(math.pi * (np.arange(_CHECK_POINTS) + 0.5) / _CHECK_POINTS)


def _hm_guess(s):
    left = np.sqrt((np.sqrt(s * s + 1.0) - s) / 4.0)
    w = 0.5 * (1.0 + np.tanh(s))
    return (1.0 - w) * left + w * specfun.airy_Ai(np.maximum(s, -5.0))


def solve_hastings_mcleod(x_l=HM_DOMAIN[0], x_r=HM_DOMAIN[1], Nc=HM_NC):
    """
    Hastings-McLeod solution of q'' = s q + 2 q^3 on [x_l, x_r].

    Boundary rows impose the left series and Ai(s) at the ends; the
    interior rows are the collocated equation.

    Args:
        x_l (float): Left end, < -6
        x_r (float): Right end, > 6
        Nc (int): Chebyshev order, >= 128

    Returns:
        PainleveSolution: With derivs 'qp' and 'p'

    Raises:
        DomainError: On a domain too short for the tails or Nc < 128
        ConvergenceError: If Newton fails or the solution is not positive
    """
    if not (x_l < -6.0 and x_r > 6.0):
        raise DomainError(f"Hastings-McLeod domain must contain [-6, 6], got [{x_l}, {x_r}]")
    if Nc < 128:
        raise DomainError(f"Hastings-McLeod solve needs Nc >= 128, got {Nc}")

    grid = ChebGrid(Nc, x_l, x_r)
    s = grid.x
    D1 = diff_matrix(grid, 1)
    D2 = diff_matrix(grid, 2)
    left = tail_series("PII", "left", at=x_l)
    right = tail_series("PII", "right")
    q_r = right.evaluate(x_r)
    q_l = left.evaluate(x_l)

    def F(q):
        r = D2 @ q - s * q - 2.0 * q ** 3
        r[0] = q[0] - q_r
        r[-1] = q[-1] - q_l
        return r

    def J(q):
        jac = D2 - np.diag(s + 6.0 * q * q)
        jac[0, :] = 0.0
        jac[0, 0] = 1.0
        jac[-1, :] = 0.0
        jac[-1, -1] = 1.0
        return jac

    try:
        q, iterations, _ = newton_solve(F, _hm_guess(s), jacobian=J, tol=1e-13, max_iter=60,
                                        xtol=1e-14, full_output=True, operation="Hastings-McLeod")
    except ConvergenceError as e:
        log_error("Hastings-McLeod", f"Newton failed on [{x_l}, {x_r}] with Nc={Nc}: {e}")
        raise
    if np.any(q <= 0.0):
        log_error("Hastings-McLeod", "Non-positive solution: wrong branch captured")
        raise ConvergenceError("Hastings-McLeod solve captured a non-positive branch", iterations)

    cheb = ChebFunction(grid, q)
    qp = D1 @ q
    sol = PainleveSolution(
        equation="PII", T=0.0, grid=grid, cheb=cheb, left_tail=left, right_tail=right,
        derivs={"qp": qp, "p": -q ** 4 - s * q * q + qp * qp}, iterations=iterations,
    )
    xc = _check_grid_points(grid)
    qc = sol.evaluate(xc)
    qcc = sol.evaluate(xc, 2)
    scale = np.abs(qcc) + np.abs(xc * qc) + 2.0 * np.abs(qc) ** 3
    sol.residual = float(np.max(np.abs(qcc - xc * qc - 2.0 * qc ** 3) / scale))
    log_info("Hastings-McLeod", f"[{x_l}, {x_r}] Nc={Nc}: {iterations} iterations, residual {sol.residual:.2e}")
    return sol


def hm_auxiliary(sol, s):
    """
    q, q' and p = -q^4 - s q^2 + q'^2 of the Hastings-McLeod solution.

    Args:
        sol (PainleveSolution): PII solution
        s (float or ndarray): Points inside the domain

    Returns:
        tuple: (q, q', p)

    Raises:
        DomainError: If s lies outside the domain
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < sol.grid.a) or np.any(s_arr > sol.grid.b):
        raise DomainError(f"s outside [{sol.grid.a}, {sol.grid.b}]")
    q = sol.evaluate(s_arr)
    qp = sol.evaluate(s_arr, 1)
    p = -q ** 4 - s_arr * q * q + qp * qp
    return q, qp, p


def _pi2_guess(X, T):
    return -X / (X * X + 1.0) ** (1.0 / 3.0) - 2.0 * T * X / (X * X + 1.0) ** (2.0 / 3.0)


def solve_pi2(T, x_l=PI2_DOMAIN[0], x_r=PI2_DOMAIN[1], Nc=PI2_NC, guess=None):
    """
    Pole-free solution of P_I^2 at parameter T.

    Rows 0, 1, Nc-1, Nc of the collocation system are replaced by tail
    values and first derivatives at x_r and x_l.

    Args:
        T (float): Parameter
        x_l, x_r (float): Domain ends
        Nc (int): Chebyshev order, >= 256
        guess (ndarray, optional): Nodal starting values (continuation)

    Returns:
        PainleveSolution: With derivs 'UX', 'UXX', 'UXXX', 'UXXXX' and 'Q'

    Raises:
        DomainError: If Nc < 256 or the domain does not straddle 0
        ConvergenceError: On Newton failure or a detected pole
    """
    if Nc < 256:
        raise DomainError(f"P_I^2 solve needs Nc >= 256, got {Nc}")
    if not (x_l < 0.0 < x_r):
        raise DomainError(f"P_I^2 domain must straddle 0, got [{x_l}, {x_r}]")

    grid = ChebGrid(Nc, x_l, x_r)
    X = grid.x
    D1, D2, D3, D4 = (diff_matrix(grid, m) for m in (1, 2, 3, 4))
    left = tail_series("PI2", "left", T=T, at=x_l)
    right = tail_series("PI2", "right", T=T, at=x_r)
    bc = (right.evaluate(x_r), right.evaluate(x_r, 1), left.evaluate(x_l, 1), left.evaluate(x_l))

    def F(U):
        UX = D1 @ U
        r = 6.0 * T * U - U ** 3 - 0.5 * UX ** 2 - U * (D2 @ U) - 0.1 * (D4 @ U) - X
        r[0] = U[0] - bc[0]
        r[1] = UX[0] - bc[1]
        r[-2] = UX[-1] - bc[2]
        r[-1] = U[-1] - bc[3]
        return r

    def J(U):
        UX = D1 @ U
        jac = (np.diag(6.0 * T - 3.0 * U * U - D2 @ U)
               - UX[:, None] * D1 - U[:, None] * D2 - 0.1 * D4)
        jac[0, :] = 0.0
        jac[0, 0] = 1.0
        jac[1, :] = D1[0, :]
        jac[-2, :] = D1[-1, :]
        jac[-1, :] = 0.0
        jac[-1, -1] = 1.0
        return jac

    start = _pi2_guess(X, T) if guess is None else np.asarray(guess, dtype=float)
    try:
        U, iterations, _ = newton_solve(F, start, jacobian=J, tol=1e-12, max_iter=80,
                                        xtol=1e-13, full_output=True, operation="P_I^2")
    except ConvergenceError as e:
        log_error("P_I^2", f"Newton failed at T={T} on [{x_l}, {x_r}] with Nc={Nc}: {e}")
        raise

    bound = 10.0 * np.abs(X) ** (1.0 / 3.0) + 10.0
    if not np.all(np.isfinite(U)) or np.any(np.abs(U) > bound):
        log_error("P_I^2", f"Pole detected at T={T}")
        raise ConvergenceError(f"P_I^2 solution at T={T} is not pole free", iterations)

    UX, UXX, UXXX, UXXXX = (D @ U for D in (D1, D2, D3, D4))
    Q = 0.1 * UX * UXXX - 0.05 * UXX ** 2 + X * U - 3.0 * T * U ** 2 + 0.25 * U ** 4 + 0.5 * U * UX ** 2
    sol = PainleveSolution(
        equation="PI2", T=float(T), grid=grid, cheb=ChebFunction(grid, U),
        left_tail=left, right_tail=right, iterations=iterations,
        derivs={"UX": UX, "UXX": UXX, "UXXX": UXXX, "UXXXX": UXXXX, "Q": Q},
    )
    xc = _check_grid_points(grid)
    u0, u1, u2, u4 = (sol.evaluate(xc, m) for m in (0, 1, 2, 4))
    terms = np.array([6.0 * T * u0, u0 ** 3, 0.5 * u1 ** 2, u0 * u2, 0.1 * u4, xc])
    resid = terms[0] - terms[1] - terms[2] - terms[3] - terms[4] - terms[5]
    sol.residual = float(np.max(np.abs(resid) / np.abs(terms).sum(axis=0)))
    log_info("P_I^2", f"T={T} Nc={Nc}: {iterations} iterations, residual {sol.residual:.2e}")
    return sol


def solve_pi2_family(Ts, x_l=PI2_DOMAIN[0], x_r=PI2_DOMAIN[1], Nc=PI2_NC, start=-1.0):
    """
    P_I^2 solutions for several T by continuation.

    Parameters are processed in order of distance from `start`; each
    solve is seeded with the nodal values of the nearest solved T.

    Args:
        Ts (iterable): Parameters
        start (float): Where the continuation starts

    Returns:
        dict: T -> PainleveSolution
    """
    solved = {}
    for T in sorted(set(float(t) for t in Ts), key=lambda t: abs(t - start)):
        guess = None
        if solved:
            nearest = min(solved, key=lambda t: abs(t - T))
            guess = solved[nearest].values
        solved[T] = solve_pi2(T, x_l, x_r, Nc, guess=guess)
    return solved


def pi2_Q(sol, X):
    """
    Q = U_X U_XXX / 10 - U_XX^2 / 20 + X U - 3 T U^2 + U^4 / 4 + U U_X^2 / 2,
    the antiderivative of U.

    Args:
        sol (PainleveSolution): P_I^2 solution
        X (float or ndarray): Points inside the domain

    Returns:
        float or ndarray: Q(X, T)

    Raises:
        DomainError: If X lies outside the domain
    """
    X_arr = np.asarray(X, dtype=float)
    if np.any(X_arr < sol.grid.a) or np.any(X_arr > sol.grid.b):
        raise DomainError(f"X outside [{sol.grid.a}, {sol.grid.b}]")
    U, UX, UXX, UXXX = (sol.evaluate(X_arr, m) for m in range(4))
    T = sol.T
    return (0.1 * UX * UXXX - 0.05 * UXX ** 2 + X_arr * U - 3.0 * T * U ** 2
            + 0.25 * U ** 4 + 0.5 * U * UX ** 2)
