"""
Chebyshev Collocation Module for the KdV small-dispersion study.

Provides the collocation infrastructure shared by the Whitham and
Painleve modules, including:
- Chebyshev grids l_j = cos(j pi / Nc) mapped to [a, b]
- Differentiation matrices of order 1 to 4
- Values <-> coefficients transforms and off-node series evaluation
- Barycentric interpolation
- Dense Newton solves and Nelder-Mead minimization

Grids and matrices are immutable once built and safe to share.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy import fft as sfft
from scipy.linalg import lu_factor, lu_solve, toeplitz
from scipy.optimize import minimize

from utils.errors import DomainError, ConvergenceError, SingularJacobianError
from utils.logger import log_error, log_info


@dataclass(frozen=True)
class ChebGrid:
    """
    Chebyshev extreme points on [a, b].

    Attributes:
        Nc (int): Polynomial order (Nc + 1 nodes)
        a (float): Left end of the domain
        b (float): Right end of the domain
    """
    Nc: int
    a: float = -1.0
    b: float = 1.0

    def __post_init__(self):
        if self.Nc < 1:
            raise DomainError(f"Chebyshev order must be >= 1, got {self.Nc}")
        if not self.b > self.a:
            raise DomainError(f"Empty domain [{self.a}, {self.b}]")

    @property
    def nodes(self):
        """Reference nodes l_j = cos(j pi / Nc), strictly decreasing."""
        return _reference_nodes(self.Nc)

    @property
    def x(self):
        """Nodes mapped to [a, b]; x_0 = b, x_Nc = a."""
        return 0.5 * (self.b + self.a) + 0.5 * (self.b - self.a) * self.nodes

    @property
    def scale(self):
        """d l / d x."""
        return 2.0 / (self.b - self.a)

    def to_reference(self, x):
        return (2.0 * np.asarray(x, dtype=float) - (self.b + self.a)) / (self.b - self.a)


@dataclass
class ChebFunction:
    """
    Nodal values on a ChebGrid together with their Chebyshev coefficients.

    Attributes:
        grid (ChebGrid): Collocation grid
        values (ndarray): Values at grid.x
    """
    grid: ChebGrid
    values: np.ndarray
    coeffs: np.ndarray = field(init=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.Nc + 1,):
            raise DomainError(
                f"Expected {self.grid.Nc + 1} nodal values, got shape {self.values.shape}"
            )
        self.coeffs = cheb_coeffs(self.values)

    @property
    def resolution(self):
        """Modulus of the highest coefficient."""
        return float(abs(self.coeffs[-1]))

    def __call__(self, x):
        return barycentric_eval(self, x)


@functools.lru_cache(maxsize=None)
def _reference_nodes(Nc):
    # sin form keeps the nodes exactly symmetric
    nodes = np.sin(math.pi * np.arange(Nc, -Nc - 1, -2) / (2.0 * Nc))
    nodes.setflags(write=False)
    return nodes


@functools.lru_cache(maxsize=None)
def _reference_matrices(Nc, order):
    # Weideman-Reddy recursion: trig-identity differences, flipping trick,
    # negative-sum diagonal
    N = Nc + 1
    n1 = N // 2
    n2 = (N + 1) // 2
    k = np.arange(N).reshape(N, 1)
    th = k * math.pi / Nc

    T = np.tile(th / 2.0, N)
    DX = 2.0 * np.sin(T.T + T) * np.sin(T.T - T)
    DX[n1:, :] = -np.flipud(np.fliplr(DX[:n2, :]))
    np.fill_diagonal(DX, 1.0)
    Z = 1.0 / DX
    np.fill_diagonal(Z, 0.0)

    C = toeplitz((-1.0) ** k)
    C[0, :] *= 2.0
    C[-1, :] *= 2.0
    C[:, 0] /= 2.0
    C[:, -1] /= 2.0

    matrices = []
    D = np.eye(N)
    for ell in range(order):
        diag_d = np.diag(D).reshape(N, 1)
        D = (ell + 1) * Z * (C * np.tile(diag_d, N) - D)
        np.fill_diagonal(D, -np.sum(D, axis=1) + np.diag(D))
        matrices.append(D)

    for mat in matrices:
        mat.setflags(write=False)
    return tuple(matrices)


def diff_matrix(grid, order):
    """
    Chebyshev differentiation matrix of the given order on grid.

    Higher orders come from the explicit recursion, not from powers of D1.

    Args:
        grid (ChebGrid): Collocation grid
        order (int): 1, 2, 3 or 4

    Returns:
        ndarray: (Nc+1) x (Nc+1) matrix mapping nodal values to nodal
            derivative values on [a, b]

    Raises:
        DomainError: If order is not in 1..4 or Nc < order + 1
    """
    if order not in (1, 2, 3, 4):
        raise DomainError(f"Differentiation order must be 1..4, got {order}")
    if grid.Nc < order + 1:
        raise DomainError(f"Nc = {grid.Nc} too small for derivative order {order}")
    return _reference_matrices(grid.Nc, 4)[order - 1] * grid.scale ** order


def cheb_coeffs(values):
    """
    Chebyshev coefficients of the interpolant through values at l_j.

    Args:
        values (ndarray): Nodal values, node 0 at l = 1

    Returns:
        ndarray: Coefficients c_0..c_Nc
    """
    values = np.asarray(values, dtype=float)
    Nc = values.size - 1
    coeffs = sfft.dct(values, type=1) / Nc
    coeffs[0] *= 0.5
    coeffs[-1] *= 0.5
    return coeffs


def cheb_values(coeffs):
    """Nodal values at l_j from Chebyshev coefficients (inverse of cheb_coeffs)."""
    g = np.array(coeffs, dtype=float)
    g[1:-1] *= 0.5
    return sfft.dct(g, type=1)


def cheb_derivative_eval(coeffs, grid, x, order=0):
    """
    Evaluate a derivative of the Chebyshev series at arbitrary points.

    Args:
        coeffs (ndarray): Chebyshev coefficients on grid
        grid (ChebGrid): Grid defining the affine map
        x (float or ndarray): Points in [a, b]
        order (int): Derivative order

    Returns:
        float or ndarray: d^order/dx^order of the series at x
    """
    c = npcheb.chebder(coeffs, m=order) * grid.scale ** order if order else coeffs
    return npcheb.chebval(grid.to_reference(x), c)


def barycentric_eval(f, x):
    """
    Barycentric interpolation of a ChebFunction.

    Args:
        f (ChebFunction): Nodal data
        x (float or ndarray): Evaluation points in [a, b]

    Returns:
        float or ndarray: Interpolated values; nodal values returned exactly at nodes

    Raises:
        DomainError: If any x lies outside [a, b]
    """
    grid = f.grid
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    slack = 1e-13 * (grid.b - grid.a)
    if np.any(x_arr < grid.a - slack) or np.any(x_arr > grid.b + slack):
        raise DomainError(f"Extrapolation outside [{grid.a}, {grid.b}] requested")

    nodes = grid.x
    weights = (-1.0) ** np.arange(grid.Nc + 1)
    weights[0] *= 0.5
    weights[-1] *= 0.5

    diff = np.subtract.outer(x_arr, nodes)
    exact = diff == 0.0
    diff[exact] = 1.0
    ratio = weights / diff
    result = (ratio @ f.values) / ratio.sum(axis=1)

    hit_rows, hit_cols = np.nonzero(exact)
    result[hit_rows] = f.values[hit_cols]

    if np.ndim(x) == 0:
        return float(result[0])
    return result


def _fd_jacobian(residual, x, f0):
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        h = 1e-7 * (1.0 + abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (np.asarray(residual(xp), dtype=float) - np.asarray(residual(xm), dtype=float)) / (2.0 * h)
    return J


def newton_solve(residual, x0, jacobian=None, tol=1e-12, max_iter=50,
                 damping=True, full_output=False, xtol=None, operation="Newton"):
    """
    Solve residual(x) = 0 with a dense Newton iteration.

    Steps come from a partial-pivot LU factorization of the analytic
    Jacobian when supplied, otherwise of a central finite-difference
    Jacobian with step 1e-7 (1 + |x|). With damping the step is halved up
    to 10 times until the residual norm decreases, and the solve fails if
    none of them does.

    Args:
        residual (callable): x -> residual vector, same size as x
        x0 (array-like): Starting point
        jacobian (callable, optional): x -> Jacobian matrix
        tol (float): Stop when max |residual| < tol
        max_iter (int): Iteration limit
        damping (bool): Enable step halving
        full_output (bool): Also return iteration count and final norm
        xtol (float, optional): Also stop once a full Newton step satisfies
            max |step| <= xtol (1 + max |x|); for collocation systems whose
            nodal residual has a rounding floor
        operation (str): Name used in log messages

    Returns:
        ndarray or tuple: x, or (x, iterations, residual_norm) if full_output

    Raises:
        ConvergenceError: If tol is not met within max_iter or damping is
            exhausted
        SingularJacobianError: If the Jacobian is singular or non-finite
    """
    if tol <= 0:
        raise DomainError("Newton tolerance must be positive")
    x = np.array(np.atleast_1d(x0), dtype=float)
    f = np.atleast_1d(np.asarray(residual(x), dtype=float))
    if f.size != x.size:
        raise DomainError(f"Residual size {f.size} differs from unknown size {x.size}")
    norm = float(np.max(np.abs(f)))

    for iteration in range(max_iter + 1):
        if not np.isfinite(norm):
            log_error(operation, f"Non-finite residual at iteration {iteration}")
            raise ConvergenceError("Non-finite residual", iteration, norm)
        if norm < tol:
            log_info(operation, f"Converged in {iteration} iterations, residual {norm:.3e}")
            if full_output:
                return x, iteration, norm
            return x
        if iteration == max_iter:
            break

        J = jacobian(x) if jacobian is not None else _fd_jacobian(residual, x, f)
        J = np.atleast_2d(np.asarray(J, dtype=float))
        if not np.all(np.isfinite(J)):
            log_error(operation, "Non-finite Jacobian")
            raise SingularJacobianError("Non-finite Jacobian", iteration, norm)
        lu, piv = lu_factor(J, check_finite=False)
        if np.any(np.diag(lu) == 0.0):
            log_error(operation, f"Singular Jacobian at iteration {iteration}")
            raise SingularJacobianError("Singular Jacobian", iteration, norm)
        step = lu_solve((lu, piv), -f, check_finite=False)
        if xtol is not None and np.max(np.abs(step)) <= xtol * (1.0 + np.max(np.abs(x))):
            x = x + step
            norm = float(np.max(np.abs(np.asarray(residual(x), dtype=float))))
            log_info(operation, f"Step below {xtol:.0e} after {iteration + 1} iterations, residual {norm:.3e}")
            if full_output:
                return x, iteration + 1, norm
            return x

        lam = 1.0
        for _ in range(11 if damping else 1):
            x_new = x + lam * step
            f_new = np.atleast_1d(np.asarray(residual(x_new), dtype=float))
            norm_new = float(np.max(np.abs(f_new)))
            if not damping or norm_new < norm:
                break
            lam *= 0.5
        else:
            log_error(operation, f"Damping exhausted at iteration {iteration}, residual {norm:.3e}")
            raise ConvergenceError(
                f"Newton step does not reduce the residual after 10 halvings (residual {norm:.3e})",
                iteration, norm,
            )
        x, f, norm = x_new, f_new, norm_new

    log_error(operation, f"No convergence after {max_iter} iterations, residual {norm:.3e}")
    raise ConvergenceError(
        f"Newton did not converge after {max_iter} iterations (residual {norm:.3e})",
        max_iter, norm,
    )


def _initial_simplex(x0, initial_step):
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    for j in range(n):
        if initial_step is None:
            simplex[j + 1, j] = x0[j] * 1.05 if x0[j] != 0.0 else 0.00025
        else:
            step = np.broadcast_to(np.asarray(initial_step, dtype=float), (n,))
            simplex[j + 1, j] = x0[j] + step[j]
    return simplex


def nelder_mead_min(f, x0, tol=1e-8, fatol=1e-14, max_evals=None,
                    initial_step=None, operation="Nelder-Mead"):
    """
    Minimize a scalar function with the Nelder-Mead simplex method.

    Args:
        f (callable): Scalar objective of a vector
        x0 (array-like): Starting point
        tol (float): Simplex diameter tolerance
        fatol (float): Tolerance on objective spread in the final simplex
        max_evals (int, optional): Evaluation budget (scipy default if None)
        initial_step (float or array-like, optional): Edge lengths of the
            starting simplex; scipy's 5% rule if None
        operation (str): Name used in log messages

    Returns:
        ndarray: Minimizer

    Raises:
        DomainError: If f is not finite at x0
        ConvergenceError: If the evaluation budget is exhausted
    """
    x0 = np.array(np.atleast_1d(x0), dtype=float)
    f0 = float(f(x0))
    if not np.isfinite(f0):
        raise DomainError(f"Objective not finite at starting point {x0}")

    simplex = _initial_simplex(x0, initial_step)
    if all(float(f(vertex)) == f0 for vertex in simplex[1:]):
        return x0

    options = {'xatol': tol, 'fatol': fatol, 'initial_simplex': simplex}
    if max_evals is not None:
        options['maxfev'] = max_evals
    res = minimize(f, x0, method='Nelder-Mead', options=options)

    if res.status == 1:
        log_error(operation, f"Evaluation budget exhausted after {res.nfev} evaluations")
        raise ConvergenceError(
            f"Nelder-Mead budget exhausted ({res.nfev} evaluations)", res.nfev, float(res.fun)
        )
    return np.asarray(res.x, dtype=float)
