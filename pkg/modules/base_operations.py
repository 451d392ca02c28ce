"""
Base Operations Module for the KdV small-dispersion study.

Provides common backend functionality for the study operations including:
- Bulk epsilon sweeps with progress yielding
- Input validation for epsilon, time and grid sizes
- Mapping of typed errors to user-facing hints
- Progress and run-time formatting

All sweep-style operations should use these functions for consistency.
"""

import math
from concurrent.futures import ThreadPoolExecutor, as_completed

from utils.logger import log_error
from utils.errors import (
    DomainError, ConvergenceError, SingularJacobianError, QuadratureError,
    ResolutionError, BlowUpError, ConfigError, PipelineError, KdVStudyError,
)


def execute_bulk_operation(operation_name, items, operation_func, *args, dry_run=False, **kwargs):
    """
    Execute an operation for several parameter values with progress tracking.

    This is a generic wrapper for sweeps that provides:
    - Progress yielding for CLI updates
    - Success/failure tracking without raising per item
    - Error logging
    - Dry-run support

    Args:
        operation_name (str): Name of operation for logging/display
        items (list): Parameter values to process (typically epsilons)
        operation_func (callable): Called as operation_func(item, *args, **kwargs);
                                  returns (success, result_or_message)
        *args: Additional arguments to pass to operation_func
        dry_run (bool): If True, preview without executing
        **kwargs: Additional keyword arguments for operation_func

    Yields:
        dict: Progress updates with keys:
            - status: 'processing', 'success', 'error', or 'dry-run'
            - item: Current parameter value
            - current: Current iteration number
            - total: Total number of items
            - message: Status message

    Returns:
        dict: Summary with keys:
            - success_count: Number of successful operations
            - failure_count: Number of failed operations
            - errors: List of (item, error_message) tuples
            - results: dict item -> result for the successful items
    """
    total = len(items)
    success_count = 0
    failure_count = 0
    errors = []
    results = {}

    for i, item in enumerate(items, start=1):
        yield {
            'status': 'processing',
            'item': item,
            'current': i,
            'total': total,
            'message': format_progress_message(operation_name, item, i, total),
        }

        if dry_run:
            success_count += 1
            yield {
                'status': 'dry-run',
                'item': item,
                'current': i,
                'total': total,
                'message': f"[DRY RUN] Would run {operation_name} for {item}",
            }
            continue

        success, outcome = _guarded(operation_name, operation_func, item, *args, **kwargs)

        if success:
            success_count += 1
            results[item] = outcome
            yield {
                'status': 'success',
                'item': item,
                'current': i,
                'total': total,
                'message': format_progress_message(operation_name, item, i, total, 'success'),
            }
        else:
            failure_count += 1
            errors.append((item, outcome))
            yield {
                'status': 'error',
                'item': item,
                'current': i,
                'total': total,
                'message': f"✗ {operation_name} failed for {item}: {str(outcome)[:100]}",
            }

    return {
        'success_count': success_count,
        'failure_count': failure_count,
        'errors': errors,
        'results': results,
    }


def _guarded(operation_name, operation_func, item, *args, **kwargs):
    try:
        return operation_func(item, *args, **kwargs)
    except PipelineError:
        # stage failures abort the whole sweep
        raise
    except KdVStudyError as e:
        outcome = f"{type(e).__name__}: {str(e)}"
        log_error(operation_name, f"Failed for {item}: {outcome}")
        return (False, outcome)


def _run_concurrent(operation_name, items, operation_func, *args, workers, progress, **kwargs):
    total = len(items)
    summary = {'success_count': 0, 'failure_count': 0, 'errors': [], 'results': {}}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(_guarded, operation_name, operation_func, item, *args, **kwargs): item
                   for item in items}
        for i, future in enumerate(as_completed(futures), start=1):
            item = futures[future]
            success, outcome = future.result()
            if success:
                summary['success_count'] += 1
                summary['results'][item] = outcome
                status = 'success'
            else:
                summary['failure_count'] += 1
                summary['errors'].append((item, outcome))
                status = 'error'
            if progress is not None:
                progress({'status': status, 'item': item, 'current': i, 'total': total,
                          'message': format_progress_message(operation_name, item, i, total, status)})
    # keep the input order so reports do not depend on scheduling
    order = {item: n for n, item in enumerate(items)}
    summary['errors'].sort(key=lambda pair: order[pair[0]])
    return summary


def run_bulk(operation_name, items, operation_func, *args, progress=None, workers=1, dry_run=False, **kwargs):
    """
    Drain execute_bulk_operation and return its summary.

    With workers > 1 the items run on a thread pool; progress dicts then
    arrive in completion order. Dry runs are always sequential.

    Args:
        progress (callable, optional): Called with every progress dict
        workers (int): Number of threads
        dry_run (bool): Preview the items without calling operation_func

    Returns:
        dict: The summary returned by the generator
    """
    if workers > 1 and len(items) > 1 and not dry_run:
        return _run_concurrent(operation_name, items, operation_func, *args,
                               workers=workers, progress=progress, **kwargs)
    gen = execute_bulk_operation(operation_name, items, operation_func, *args, dry_run=dry_run, **kwargs)
    while True:
        try:
            update = next(gen)
        except StopIteration as stop:
            return stop.value
        if progress is not None:
            progress(update)


def validate_epsilon(epsilon):
    """
    Validate a dispersion parameter.

    Args:
        epsilon: Value to validate

    Returns:
        float: epsilon

    Raises:
        DomainError: Unless 0 < epsilon < 1
    """
    try:
        value = float(epsilon)
    except (TypeError, ValueError):
        raise DomainError(f"epsilon must be a number, got {epsilon!r}")
    if not (0.0 < value < 1.0) or math.isnan(value):
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    return value


def validate_time(t, allow_zero=False):
    """
    Validate a time value.

    Raises:
        DomainError: For negative or non-finite t (or zero unless allowed)
    """
    try:
        value = float(t)
    except (TypeError, ValueError):
        raise DomainError(f"t must be a number, got {t!r}")
    if not math.isfinite(value) or value < 0.0 or (value == 0.0 and not allow_zero):
        raise DomainError(f"t must be {'non-negative' if allow_zero else 'positive'} and finite, got {t}")
    return value


def validate_real(value, name):
    """
    Validate a finite real parameter of either sign.

    Raises:
        DomainError: For a non-numeric or non-finite value
    """
    try:
        result = float(value)
    except (TypeError, ValueError):
        raise DomainError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(result):
        raise DomainError(f"{name} must be finite, got {value}")
    return result


def validate_modes(N):
    """
    Validate a Fourier grid size.

    Raises:
        DomainError: Unless N is a power of two >= 16
    """
    if int(N) != N or N < 16 or (int(N) & (int(N) - 1)) != 0:
        raise DomainError(f"Number of modes must be a power of two >= 16, got {N}")
    return int(N)


def get_user_friendly_error(error):
    """
    Convert a study error to a user-friendly message.

    Args:
        error (Exception): Raised error

    Returns:
        tuple: (user_message, hint or None)
    """
    text = str(error)

    if isinstance(error, ResolutionError):
        return (f"Numerical solution under-resolved: {text[:200]}",
                'Increase --nmodes (Fourier modes) for this epsilon.')

    if isinstance(error, BlowUpError):
        return (f"Time stepping blew up: {text[:200]}",
                'Increase --nsteps or enable dealiasing.')

    if isinstance(error, SingularJacobianError):
        return (f"Singular Jacobian: {text[:200]}",
                'The branch values may have collided; move away from the zone edges.')

    if isinstance(error, ConvergenceError):
        return (f"Iteration did not converge: {text[:200]}",
                'Try a point closer to the breaking time or a finer Chebyshev grid (--nc).')

    if isinstance(error, QuadratureError):
        return (f"Quadrature did not converge: {text[:200]}", None)

    if isinstance(error, DomainError):
        return (f"Invalid input: {text[:200]}", 'Check the argument ranges with --help.')

    if isinstance(error, ConfigError):
        return (f"Configuration error: {text[:200]}", None)

    if isinstance(error, PipelineError):
        stage = getattr(error, 'stage', None)
        return (f"Pipeline failed{f' in stage {stage}' if stage else ''}: {text[:200]}",
                'Partial artifacts were kept with a .partial suffix.')

    # Fallback - show truncated error
    return (f"Operation failed: {text[:200]}", None)


def format_progress_message(operation, item, current, total, status='processing'):
    """
    Format a standardized progress message.

    Args:
        operation (str): Operation name (e.g., "Solve KdV")
        item: Current parameter value
        current (int): Current iteration
        total (int): Total iterations
        status (str): Status ('processing', 'success', 'error')

    Returns:
        str: Formatted message
    """
    percentage = (current / total * 100) if total > 0 else 0
    label = f"{item:.6g}" if isinstance(item, float) else str(item)

    if status == 'processing':
        return f"{operation} for {label}... ({current}/{total}, {percentage:.1f}%)"
    elif status == 'success':
        return f"✓ {operation} completed for {label} ({current}/{total})"
    elif status == 'error':
        return f"✗ {operation} failed for {label} ({current}/{total})"
    else:
        return f"{operation} - {label} ({current}/{total})"


def estimate_operation_time(N, Nt, seconds_per_unit=2.5e-8):
    """
    Estimate the run time of a KdV solve.

    The cost model is Nt N log2 N FFT work times a per-unit constant.

    Args:
        N (int): Fourier modes
        Nt (int): Time steps
        seconds_per_unit (float): Seconds per N log2 N unit and step

    Returns:
        str: Human-readable time estimate (e.g., "5 minutes", "2 hours")
    """
    total_seconds = Nt * N * math.log2(N) * seconds_per_unit * 10.0

    if total_seconds < 60:
        return f"{int(total_seconds)} seconds"
    elif total_seconds < 3600:
        minutes = int(total_seconds / 60)
        return f"{minutes} minute{'s' if minutes != 1 else ''}"
    else:
        hours = int(total_seconds / 3600)
        minutes = int((total_seconds % 3600) / 60)
        if minutes > 0:
            return f"{hours} hour{'s' if hours != 1 else ''}, {minutes} minute{'s' if minutes != 1 else ''}"
        else:
            return f"{hours} hour{'s' if hours != 1 else ''}"
