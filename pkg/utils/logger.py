"""
Logging module for the KdV small-dispersion study.

One 'KdVStudy' logger with two handlers:
- file (kdv_study.log, rewritten each run): INFO and above, so every solver
  convergence summary is kept next to the failures
- console: ERROR by default, INFO with --verbose

Records carry the operation name ("Solve KdV", "Leading Edge", ...) through
a LoggerAdapter. The logger itself never changes level after setup, which
keeps concurrent epsilon runs from racing on it.
"""

import logging
import os
import time
from contextlib import contextmanager


_logger = None
_log_file = 'kdv_study.log'
_console = None
_file_handler = None

_FILE_FORMAT = '[%(asctime)s] [%(operation)s] %(levelname)s: %(message)s'
_CONSOLE_FORMAT = '[%(operation)s] %(levelname)s: %(message)s'


def _level(name):
    return getattr(logging, str(name).upper(), logging.ERROR)


def _attach_file_handler(path):
    global _log_file, _file_handler
    if _file_handler is not None:
        _logger.removeHandler(_file_handler)
        _file_handler.close()
        _file_handler = None
    _log_file = path
    try:
        _file_handler = logging.FileHandler(_log_file, mode='w', encoding='utf-8')
        _file_handler.setLevel(logging.INFO)
        _file_handler.setFormatter(logging.Formatter(_FILE_FORMAT, datefmt='%Y-%m-%d %H:%M:%S'))
        _logger.addHandler(_file_handler)
    except OSError as e:
        print(f"Warning: Could not create log file '{_log_file}': {e}")


def setup_logger(log_file=None, level=None):
    """
    Create the study logger, or retune an existing one.

    A later call with a different log_file moves the file handler there;
    a later call with a level retunes the console only.

    Args:
        log_file (str, optional): Log path; defaults to 'kdv_study.log' in
            the working directory
        level (str, optional): Console threshold ('ERROR', 'WARNING',
            'INFO', 'DEBUG'); ERROR on first setup when omitted

    Returns:
        logging.Logger
    """
    global _logger, _console

    if _logger is not None and _logger.handlers:
        if level is not None:
            _console.setLevel(_level(level))
        if log_file and os.path.abspath(log_file) != os.path.abspath(_log_file):
            _attach_file_handler(log_file)
        return _logger

    _logger = logging.getLogger('KdVStudy')
    _logger.setLevel(logging.DEBUG)
    _logger.propagate = False
    _attach_file_handler(log_file or _log_file)

    _console = logging.StreamHandler()
    _console.setLevel(_level(level or 'ERROR'))
    _console.setFormatter(logging.Formatter(_CONSOLE_FORMAT))
    _logger.addHandler(_console)
    return _logger


def get_logger():
    if _logger is None:
        setup_logger()
    return _logger


def _adapter(operation):
    return logging.LoggerAdapter(get_logger(), {'operation': operation})


def log_error(operation, message):
    """
    Log a failure under an operation name.

    Called by every solver just before it raises its typed error.

    Example:
        log_error("Solve KdV", "Fourier tail 3.2e-04 above 1e-05 at t=0.4")
    """
    _adapter(operation).error(message)


def log_warning(operation, message):
    """Log a recoverable problem (a skipped row, a fallback)."""
    _adapter(operation).warning(message)


def log_info(operation, message):
    """Log a convergence or progress summary; always reaches the log file."""
    _adapter(operation).info(message)


@contextmanager
def operation_timer(operation, label):
    """
    Log the wall time of a block as INFO.

    Example:
        with operation_timer("Solve KdV", "eps=0.01 N=16384"):
            run = solve_kdv(u0, cfg)
    """
    start = time.perf_counter()
    try:
        yield
    finally:
        log_info(operation, f"{label}: {time.perf_counter() - start:.2f} s")


def get_log_file_path():
    return os.path.abspath(_log_file)


def log_file_exists():
    return os.path.exists(_log_file)


def read_log_file(max_lines=None):
    """
    Contents of the log file.

    Args:
        max_lines (int, optional): Return only the last max_lines lines

    Returns:
        str: Log text, or "" when no log has been written
    """
    if not log_file_exists():
        return ""

    for handler in get_logger().handlers:
        handler.flush()

    try:
        with open(_log_file, 'r', encoding='utf-8') as f:
            lines = f.readlines()
    except OSError as e:
        return f"Error reading log file: {e}"
    return ''.join(lines if max_lines is None else lines[-max_lines:])
