"""
Study configuration module.

Reads plain-text `key = value` configuration files for the pipeline.
Keys mirror the CLI flags; `#` starts a comment and blank lines are
ignored.
"""

import math
import os

from .logger import log_error


DESK_EPSILONS = tuple(10.0 ** (-1.0 - 0.25 * n) for n in range(6))
EXTENDED_EPSILONS = tuple(10.0 ** (-1.0 - 0.25 * n) for n in range(11))

DEFAULTS = {
    'study': 'prebreakup',
    'epsilons': list(DESK_EPSILONS),
    't': None,
    'nmodes': None,
    'nsteps': None,
    'L': 5.0 * math.pi,
    'nc': 64,
    'formulas': [],
    'regions': [],
    'out': 'reports',
    'extended': False,
    'dealias': False,
    'workers': 1,
    'log_file': None,
}


def _floats(text):
    return [float(item) for item in text.replace(',', ' ').split()]


def _strings(text):
    return [item for item in text.replace(',', ' ').split() if item]


def _boolean(text):
    value = text.strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: '{text}'")


def _optional_float(text):
    return None if text.strip().lower() == 'none' else float(text)


KEY_TYPES = {
    'study': str,
    'epsilon': _floats,
    'epsilons': _floats,
    't': _optional_float,
    'nmodes': int,
    'nsteps': int,
    'L': float,
    'nc': int,
    'formula': _strings,
    'formulas': _strings,
    'region': _strings,
    'regions': _strings,
    'out': str,
    'extended': _boolean,
    'dealias': _boolean,
    'workers': int,
    'log_file': str,
}

# singular spellings fold into the list keys
_ALIASES = {'epsilon': 'epsilons', 'formula': 'formulas', 'region': 'regions'}


def parse_config_text(text, source="<config>"):
    """
    Parse configuration text.

    Args:
        text (str): File contents
        source (str): Name used in error messages

    Returns:
        tuple: (success: bool, data: dict or error_message: str)
            - (True, settings) with DEFAULTS filled in
            - (False, error_message) naming the offending line
    """
    settings = dict(DEFAULTS)
    settings['epsilons'] = list(DEFAULTS['epsilons'])

    for line_num, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            return (False, f"{source}, line {line_num}: expected 'key = value', got '{raw.strip()}'")
        key, value = (part.strip() for part in line.split('=', 1))
        if key not in KEY_TYPES:
            return (False, f"{source}, line {line_num}: unknown key '{key}'")
        try:
            parsed = KEY_TYPES[key](value)
        except ValueError as e:
            return (False, f"{source}, line {line_num}: bad value for '{key}': {str(e)}")
        settings[_ALIASES.get(key, key)] = parsed

    if settings['extended'] and settings['epsilons'] == list(DESK_EPSILONS):
        settings['epsilons'] = list(EXTENDED_EPSILONS)
    if not settings['epsilons'] or any(not 0.0 < e < 1.0 for e in settings['epsilons']):
        return (False, f"{source}: epsilons must lie in (0, 1)")
    return (True, settings)


def parse_config(file_path):
    """
    Read and parse a configuration file.

    Args:
        file_path (str): Path to the file

    Returns:
        tuple: (success: bool, data: dict or error_message: str)
    """
    if not os.path.exists(file_path):
        error_msg = f"Config file not found: {file_path}"
        log_error("Read Config", error_msg)
        return (False, error_msg)

    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            text = f.read()
    except UnicodeDecodeError:
        error_msg = "File encoding error. Please ensure file is UTF-8 encoded."
        log_error("Read Config", error_msg)
        return (False, error_msg)
    except Exception as e:
        error_msg = f"Error reading config: {str(e)}"
        log_error("Read Config", error_msg)
        return (False, error_msg)

    success, result = parse_config_text(text, source=file_path)
    if not success:
        log_error("Read Config", result)
    return (success, result)


def resolution_for(epsilon, extended=False):
    """
    Fourier modes and time steps for a given epsilon.

    N grows from 2^12 at eps = 0.1 to 2^15 at the smallest desk-scale
    epsilon; the time step count is about 2e4 with a floor chosen so that
    h eps^2 k_max^3 stays moderate.

    Args:
        epsilon (float): Dispersion parameter
        extended (bool): Allow N up to 2^19 and Nt up to 4e5

    Returns:
        tuple: (N, Nt)
    """
    cap = 19 if extended else 15
    power = 12 + max(0, int(math.ceil(math.log2(0.1 / epsilon) * 1.3 - 1e-9)))
    N = 2 ** min(power, cap)
    Nt = 20_000 if N <= 2 ** 15 else 400_000
    return N, Nt
