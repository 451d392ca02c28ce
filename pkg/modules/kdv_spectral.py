"""
KdV Spectral Solver Module for the small-dispersion study.

Provides the Fourier pseudospectral solver for

    u_t + 6 u u_x + eps^2 u_xxx = 0,    x in [-L, L) periodic,

including:
- ETD-RK4 (Cox-Matthews) time stepping with contour-stabilised coefficients
- Energy, mass and Fourier-tail diagnostics
- Exact cnoidal travelling waves for validation
- Trigonometric interpolation of a field at arbitrary points

The stiff linear part i eps^2 k^3 is integrated exactly; only the
nonlinear term -3 i k FFT(u^2) is treated by the Runge-Kutta stages.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from modules import specfun
from utils.errors import DomainError, ResolutionError, BlowUpError
from utils.logger import log_error, log_info


# Admissibility bar for the relative size of the top Fourier band
TAIL_TOLERANCE = 1e-5

DEFAULT_HALF_WIDTH = 5.0 * math.pi

_CONTOUR_POINTS = 32
_CONTOUR_SWITCH = 0.5


@dataclass
class GridField:
    """
    Real periodic field on the uniform grid x_j = -L + 2 L j / N.

    Attributes:
        L (float): Half-width of the periodic domain [-L, L)
        N (int): Number of grid points (power of two)
        u (ndarray): Nodal values
        t (float): Time the field belongs to
    """
    L: float
    N: int
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        _check_grid(self.L, self.N)
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (self.N,):
            raise DomainError(f"Field has shape {self.u.shape}, expected ({self.N},)")

    @property
    def x(self):
        return grid_points(self.L, self.N)

    @property
    def dx(self):
        return 2.0 * self.L / self.N

    @property
    def k(self):
        """Angular wavenumbers in FFT order."""
        return wavenumbers(self.L, self.N)

    @property
    def uhat(self):
        """Full (Hermitian) discrete Fourier transform of u."""
        return np.fft.fft(self.u)

    def derivative(self, order=1):
        """Spectral derivative; the Nyquist mode is dropped for odd orders."""
        k = np.fft.rfftfreq(self.N, d=self.dx) * 2.0 * math.pi
        if order % 2 == 1:
            k[-1] = 0.0
        return np.fft.irfft((1j * k) ** order * np.fft.rfft(self.u), n=self.N)


@dataclass(frozen=True)
class KdvRunConfig:
    """
    Parameters of one KdV run.

    Attributes:
        epsilon (float): Dispersion parameter, > 0
        tmax (float): Final time
        Nt (int): Number of time steps, h = tmax / Nt
        N (int): Number of Fourier modes (power of two)
        L (float): Domain half-width
        snapshot_times (tuple): Times at which fields are stored
        dealias (bool): Apply the 2/3 rule to the nonlinear term
        tail_tol (float): Admissibility bar for fourier_tail of the final state
        energy_every (int, optional): Steps between energy samples
    """
    epsilon: float
    tmax: float
    Nt: int
    N: int = 4096
    L: float = DEFAULT_HALF_WIDTH
    snapshot_times: tuple = ()
    dealias: bool = False
    tail_tol: float = TAIL_TOLERANCE
    energy_every: int = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if not self.tmax > 0:
            raise DomainError(f"tmax must be positive, got {self.tmax}")
        if int(self.Nt) != self.Nt or self.Nt < 1:
            raise DomainError(f"Nt must be a positive integer, got {self.Nt}")
        _check_grid(self.L, self.N)
        for t in self.snapshot_times:
            if t < 0 or t > self.tmax * (1.0 + 1e-12):
                raise DomainError(f"Snapshot time {t} outside [0, {self.tmax}]")

    @property
    def h(self):
        return self.tmax / self.Nt


@dataclass
class EnergyDiag:
    """Energy history of a run and its maximal relative drift."""
    E0: float
    times: np.ndarray
    values: np.ndarray

    @property
    def deltaE(self):
        if self.E0 == 0.0:
            return float(np.max(np.abs(self.values - self.E0)))
        return float(np.max(np.abs((self.values - self.E0) / self.E0)))


@dataclass
class KdvRun:
    """
    Output of solve_kdv.

    Attributes:
        config (KdvRunConfig): Run parameters
        snapshots (list): GridField per requested snapshot time
        final (GridField): State at tmax
        energy (EnergyDiag): Energy history
        tail (float): fourier_tail of the final state
        mass_drift (float): Relative change of the mass
    """
    config: KdvRunConfig
    snapshots: list
    final: GridField
    energy: EnergyDiag
    tail: float
    mass_drift: float = 0.0
    extra: dict = field(default_factory=dict)

    def snapshot_at(self, t):
        """Stored snapshot closest to time t."""
        if not self.snapshots:
            return self.final
        return min(self.snapshots, key=lambda f: abs(f.t - t))


def _check_grid(L, N):
    if not L > 0:
        raise DomainError(f"Domain half-width must be positive, got {L}")
    if int(N) != N or N < 8 or (int(N) & (int(N) - 1)) != 0:
        raise DomainError(f"Number of modes must be a power of two >= 8, got {N}")


def grid_points(L, N):
    return -L + 2.0 * L * np.arange(N) / N


def wavenumbers(L, N):
    return np.fft.fftfreq(N, d=2.0 * L / N) * 2.0 * math.pi


def make_field(fn, L=DEFAULT_HALF_WIDTH, N=1024, t=0.0):
    """
    Sample a function on the periodic grid.

    Args:
        fn (callable): Vectorised function of x
        L (float): Domain half-width
        N (int): Number of grid points
        t (float): Time stamp of the field

    Returns:
        GridField: Sampled field

    Example:
        u0 = make_field(lambda x: -1.0 / np.cosh(x) ** 2, L=5 * np.pi, N=4096)
    """
    x = grid_points(L, N)
    return GridField(L=L, N=N, u=np.broadcast_to(fn(x), x.shape).astype(float), t=t)


def _phi_direct(z):
    ez = np.exp(z)
    z3 = z ** 3
    q = (np.exp(z / 2.0) - 1.0) / z
    f1 = (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3
    f2 = (2.0 + z + ez * (z - 2.0)) / z3
    f3 = (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3
    return q, f1, f2, f3


def etdrk4_phi(z):
    """
    Cox-Matthews stage coefficients for h * lambda = z.

    Returns the coefficients without the factor h:

        q  = (e^{z/2} - 1) / z
        f1 = (-4 - z + e^z (4 - 3z + z^2)) / z^3
        f2 = (2 + z + e^z (z - 2)) / z^3
        f3 = (-4 - 3z - z^2 + e^z (4 - z)) / z^3

    For |z| < 1/2 each coefficient is the mean over 32 points on the
    circle of radius 1 around z; the limits at z = 0 are 1/2, 1/6, 1/6, 1/6.

    Args:
        z (complex or ndarray): Values h * lambda

    Returns:
        tuple: (q, f1, f2, f3), complex, same shape as z
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    out = [np.empty_like(z_arr) for _ in range(4)]

    small = np.abs(z_arr) < _CONTOUR_SWITCH
    if np.any(~small):
        for dst, val in zip(out, _phi_direct(z_arr[~small])):
            dst[~small] = val
    if np.any(small):
        roots = np.exp(2j * math.pi * (np.arange(_CONTOUR_POINTS) + 0.5) / _CONTOUR_POINTS)
        contour = z_arr[small][:, None] + roots[None, :]
        for dst, val in zip(out, _phi_direct(contour)):
            dst[small] = val.mean(axis=1)

    if np.ndim(z) == 0:
        return tuple(complex(c[0]) for c in out)
    return tuple(c.reshape(np.shape(z)) for c in out)


def energy(u, epsilon):
    """
    Conserved energy E[u] = int (2 u^3 - eps^2 u_x^2) dx.

    Periodic trapezoid rule with a spectral derivative.

    Args:
        u (GridField): Field
        epsilon (float): Dispersion parameter

    Returns:
        float: E[u]
    """
    ux = u.derivative(1)
    return float(np.sum(2.0 * u.u ** 3 - epsilon ** 2 * ux ** 2) * u.dx)


def mass(u):
    """int u dx over the periodic domain."""
    return float(np.sum(u.u) * u.dx)


def fourier_tail(u):
    """
    Relative size of the highest Fourier band.

    Args:
        u (GridField): Field

    Returns:
        float: max |uhat_k| over the top 10% of wavenumbers divided by
            max |uhat_k| overall; 0 for the zero field
    """
    coeffs = np.abs(np.fft.rfft(u.u))
    peak = coeffs.max()
    if peak == 0.0:
        return 0.0
    band = int(math.floor(0.9 * (coeffs.size - 1)))
    return float(coeffs[band:].max() / peak)


def trig_interpolate(u, x):
    """
    Evaluate the trigonometric interpolant of a field at arbitrary points.

    Args:
        u (GridField): Field
        x (float or ndarray): Points (taken modulo the period)

    Returns:
        float or ndarray: Interpolated values
    """
    coeffs = np.fft.rfft(u.u) / u.N
    kk = np.arange(coeffs.size) * math.pi / u.L
    weights = np.full(coeffs.size, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    phase = np.multiply.outer(np.asarray(x, dtype=float) + u.L, kk)
    values = np.real(np.exp(1j * phase) @ (weights * coeffs))
    if np.ndim(x) == 0:
        return float(values)
    return values


def cnoidal_parameters(beta, epsilon):
    """
    Modulus, speed and wavelength of the cnoidal wave with parameters beta.

    Args:
        beta (sequence): (beta1, beta2, beta3) with beta1 > beta2 > beta3
        epsilon (float): Dispersion parameter

    Returns:
        tuple: (s, speed, wavelength)

    Raises:
        DomainError: If beta is not strictly ordered
    """
    b1, b2, b3 = (float(b) for b in beta)
    if not b1 > b2 > b3:
        raise DomainError(f"Cnoidal parameters must satisfy b1 > b2 > b3, got {beta}")
    s = math.sqrt((b2 - b3) / (b1 - b3))
    speed = 2.0 * (b1 + b2 + b3)
    wavelength = 2.0 * specfun.elliptic_K(s) * epsilon / math.sqrt(b1 - b3)
    return s, speed, wavelength


def cnoidal_profile(x, t, beta, epsilon, x0=0.0):
    """
    Exact travelling-wave solution

        u = b2 + b3 - b1 + 2 (b1 - b3) dn^2(sqrt(b1 - b3) (x - V t - x0) / eps + K; s)

    with V = 2 (b1 + b2 + b3); the maximum sits at x = x0 + V t + wavelength / 2.
    """
    b1, b2, b3 = (float(b) for b in beta)
    s, speed, _ = cnoidal_parameters(beta, epsilon)
    arg = math.sqrt(b1 - b3) * (np.asarray(x, dtype=float) - speed * t - x0) / epsilon
    dn = specfun.jacobi_dn(arg + specfun.elliptic_K(s), s)
    return b2 + b3 - b1 + 2.0 * (b1 - b3) * dn ** 2


def cnoidal_wave(beta, epsilon, L=None, N=256, x0=0.0, periods=1):
    """
    Sample the exact cnoidal wave on a periodic grid.

    Args:
        beta (sequence): (beta1, beta2, beta3)
        epsilon (float): Dispersion parameter
        L (float, optional): Domain half-width; by default the domain holds
            exactly `periods` wavelengths
        N (int): Number of grid points
        x0 (float): Phase shift
        periods (int): Wavelengths per domain when L is None

    Returns:
        tuple: (GridField, speed)
    """
    _, speed, wavelength = cnoidal_parameters(beta, epsilon)
    if L is None:
        L = 0.5 * periods * wavelength
    return make_field(lambda x: cnoidal_profile(x, 0.0, beta, epsilon, x0), L, N), speed


def _nonlinear(v, ik3, mask):
    # -3 i k FFT(u^2), i.e. the transform of -6 u u_x
    u = np.fft.irfft(v)
    w = np.fft.rfft(u * u)
    if mask is not None:
        w *= mask
    return ik3 * w


def solve_kdv(u0, cfg):
    """
    Integrate KdV from u0 with ETD-RK4.

    Snapshots are stored at the time-grid point nearest to each requested
    time. The energy is sampled every cfg.energy_every steps (default Nt/200)
    and at every snapshot.

    Args:
        u0 (GridField): Initial field on the grid of cfg
        cfg (KdvRunConfig): Run parameters

    Returns:
        KdvRun: Snapshots, final state and diagnostics

    Raises:
        DomainError: If u0 does not live on the grid of cfg
        BlowUpError: If the solution becomes non-finite
        ResolutionError: If the final Fourier tail exceeds cfg.tail_tol
    """
    if u0.N != cfg.N or not math.isclose(u0.L, cfg.L, rel_tol=1e-14):
        raise DomainError(f"Initial field grid (L={u0.L}, N={u0.N}) differs from run (L={cfg.L}, N={cfg.N})")

    N, h, eps = cfg.N, cfg.h, cfg.epsilon
    k = np.fft.rfftfreq(N, d=2.0 * cfg.L / N) * 2.0 * math.pi
    k[-1] = 0.0
    lam = 1j * eps ** 2 * k ** 3

    E = np.exp(h * lam)
    E2 = np.exp(0.5 * h * lam)
    q, f1, f2, f3 = (h * c for c in etdrk4_phi(h * lam))
    ik3 = -3j * k
    mask = None
    if cfg.dealias:
        mask = (np.abs(np.arange(k.size)) < (N // 2) * 2.0 / 3.0).astype(float)

    snapshot_steps = {}
    for t in cfg.snapshot_times:
        snapshot_steps.setdefault(int(round(t / h)), []).append(t)
    every = cfg.energy_every or max(1, cfg.Nt // 200)

    E0 = energy(u0, eps)
    M0 = mass(u0)
    e_times, e_values = [0.0], [E0]
    snapshots = []
    if 0 in snapshot_steps:
        snapshots.append(GridField(cfg.L, N, u0.u.copy(), t=0.0))

    v = np.fft.rfft(u0.u)
    for step in range(1, cfg.Nt + 1):
        Nv = _nonlinear(v, ik3, mask)
        a = E2 * v + q * Nv
        Na = _nonlinear(a, ik3, mask)
        b = E2 * v + q * Na
        Nb = _nonlinear(b, ik3, mask)
        c = E2 * a + q * (2.0 * Nb - Nv)
        Nc = _nonlinear(c, ik3, mask)
        v = E * v + f1 * Nv + 2.0 * f2 * (Na + Nb) + f3 * Nc

        stored = step in snapshot_steps
        if stored or step % every == 0 or step == cfg.Nt:
            if not np.all(np.isfinite(v)):
                msg = f"Non-finite solution at t={step * h:.6g} (eps={eps}, N={N}, Nt={cfg.Nt})"
                log_error("Solve KdV", msg)
                raise BlowUpError(msg)
            current = GridField(cfg.L, N, np.fft.irfft(v, n=N), t=step * h)
            e_times.append(current.t)
            e_values.append(energy(current, eps))
            if stored:
                snapshots.append(current)

    final = GridField(cfg.L, N, np.fft.irfft(v, n=N), t=cfg.tmax)
    diag = EnergyDiag(E0=E0, times=np.array(e_times), values=np.array(e_values))
    tail = fourier_tail(final)
    mass_drift = abs(mass(final) - M0) / max(abs(M0), 1e-300)

    if tail > cfg.tail_tol:
        msg = f"Fourier tail {tail:.2e} above {cfg.tail_tol:.0e} at t={cfg.tmax} (eps={eps}, N={N})"
        log_error("Solve KdV", msg)
        raise ResolutionError(msg, tail=tail)

    log_info("Solve KdV", f"eps={eps} N={N} Nt={cfg.Nt}: deltaE={diag.deltaE:.2e}, tail={tail:.2e}")
    return KdvRun(config=cfg, snapshots=snapshots, final=final, energy=diag,
                  tail=tail, mass_drift=mass_drift)
