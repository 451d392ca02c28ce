"""
Numerical stack verification module.

Checks that numpy and scipy are importable, recent enough, and that the
LAPACK and FFT backends they wrap give sane answers before the study is
allowed to run.
"""

import re
import importlib


MIN_VERSIONS = {
    'numpy': (1, 22),
    'scipy': (1, 8),
}

# Cache for detected versions
_versions = None


def _parse_version(text):
    match = re.match(r'(\d+)\.(\d+)', text or '')
    if not match:
        return None
    return (int(match.group(1)), int(match.group(2)))


def find_versions():
    """
    Detect installed versions of the numerical packages.

    Returns:
        dict: package name -> version string, or None if not importable
    """
    global _versions

    if _versions is not None:
        return _versions

    found = {}
    for name in MIN_VERSIONS:
        try:
            module = importlib.import_module(name)
            found[name] = getattr(module, '__version__', None)
        except ImportError:
            found[name] = None
    _versions = found
    return _versions


def check_versions():
    """
    Check that numpy and scipy meet the minimum versions.

    Returns:
        tuple: (success: bool, error_message: str or None)
    """
    versions = find_versions()
    for name, minimum in MIN_VERSIONS.items():
        text = versions.get(name)
        if text is None:
            return (False,
                    f"{name} is not installed.\n\n"
                    f"Install the requirements with: pip install -r requirements.txt")
        parsed = _parse_version(text)
        if parsed is None:
            return (False, f"Could not parse {name} version '{text}'")
        if parsed < minimum:
            return (False, f"{name} {text} is too old; version {minimum[0]}.{minimum[1]} or newer is required")
    return (True, None)


def check_backends():
    """
    Run a tiny LU solve and FFT round trip.

    Returns:
        tuple: (success: bool, error_message: str or None)
    """
    try:
        import numpy as np
        from scipy.linalg import lu_factor, lu_solve

        A = np.array([[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]])
        b = np.array([1.0, 2.0, 3.0])
        x = lu_solve(lu_factor(A), b)
        if not np.allclose(A @ x, b, atol=1e-12):
            return (False, "LAPACK LU solve returned an inaccurate result")

        u = np.sin(np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False))
        if not np.allclose(np.fft.irfft(np.fft.rfft(u), 64), u, atol=1e-13):
            return (False, "FFT round trip failed")
        return (True, None)
    except Exception as e:
        return (False, f"Error checking numerical backends: {str(e)}")


def verify_environment():
    """
    Convenience function running the version and backend checks.

    Returns:
        tuple: (success: bool, error_message: str or None)
            Returns the first error encountered, or (True, None) if all checks pass.
    """
    ok, error = check_versions()
    if not ok:
        return (False, error)

    ok, error = check_backends()
    if not ok:
        return (False, error)

    return (True, None)
