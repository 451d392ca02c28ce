"""
CSV file handling module.

Writes and reads the study's tabular artifacts: KdV snapshots and
spectral checkpoints, Whitham branch files, Painleve tabulations and
approximation dumps. Every file starts with one metadata comment line

    # kdv-<kind> key=value key=value ...

followed by a column header row and the data rows. Floats are printed
with 17 significant digits.
"""

import csv
import os

import numpy as np

from .logger import log_error, log_warning


FLOAT_FORMAT = '{:.17g}'

COLUMNS = {
    'snapshot': ['x', 'u'],
    'spectrum': ['k', 're_uhat', 'im_uhat'],
    'branches': ['x', 'beta1', 'beta2', 'beta3', 'residual'],
    'hastings-mcleod': ['s', 'q', 'qprime', 'p'],
    'pi2': ['X', 'U', 'UX', 'UXX', 'UXXX', 'Q'],
    'approximation': ['x', 'u_approx'],
    'error': ['x', 'error'],
}


def _format_meta(kind, meta):
    parts = [f"# kdv-{kind}"]
    for key, value in meta.items():
        text = FLOAT_FORMAT.format(value) if isinstance(value, float) else str(value)
        parts.append(f"{key}={text.replace(' ', '_')}")
    return ' '.join(parts)


def _parse_value(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_table(file_path, kind, meta, columns):
    """
    Write a tabular artifact.

    Args:
        file_path (str): Destination path
        kind (str): One of COLUMNS
        meta (dict): Values for the metadata line
        columns (sequence): One array per column, all of equal length

    Returns:
        tuple: (success: bool, error_message: str or None)
    """
    if kind not in COLUMNS:
        return (False, f"Unknown table kind '{kind}'")
    names = COLUMNS[kind]
    if len(columns) != len(names):
        return (False, f"Table '{kind}' needs {len(names)} columns, got {len(columns)}")
    data = [np.atleast_1d(np.asarray(col, dtype=float)) for col in columns]
    if len({col.size for col in data}) != 1:
        return (False, "Columns have different lengths")

    try:
        directory = os.path.dirname(file_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(file_path, 'w', encoding='utf-8', newline='') as f:
            f.write(_format_meta(kind, meta) + '\n')
            writer = csv.writer(f)
            writer.writerow(names)
            for row in zip(*data):
                writer.writerow([FLOAT_FORMAT.format(v) for v in row])
        return (True, None)
    except Exception as e:
        error_msg = f"Error writing {file_path}: {str(e)}"
        log_error("Write CSV", error_msg)
        return (False, error_msg)


def validate_table(file_path):
    """
    Validate that a file exists and starts with a kdv metadata line and a
    known column header.

    Returns:
        tuple: (success: bool, error_message: str or None)
    """
    if not os.path.exists(file_path):
        return (False, f"File not found: {file_path}")

    if os.path.getsize(file_path) == 0:
        return (False, "File is empty")

    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            first = f.readline().strip()
            if not first.startswith('# kdv-'):
                return (False, f"Missing '# kdv-<kind>' metadata line, found: {first[:60]}")
            kind = first.split()[1][len('kdv-'):]
            if kind not in COLUMNS:
                return (False, f"Unknown table kind '{kind}'")
            try:
                header = next(csv.reader(f))
            except StopIteration:
                return (False, "File has no column header row")
            if header != COLUMNS[kind]:
                return (False, f"Columns for '{kind}' must be {', '.join(COLUMNS[kind])}. Found: {', '.join(header)}")
            return (True, None)
    except UnicodeDecodeError:
        return (False, "File encoding error. Please ensure file is UTF-8 encoded.")
    except Exception as e:
        return (False, f"Error validating file: {str(e)}")


def read_table(file_path):
    """
    Read a tabular artifact.

    Args:
        file_path (str): Path to the file

    Returns:
        tuple: (success: bool, data: dict or error_message: str)
            data has keys 'kind', 'meta' (dict) and 'columns'
            (dict of column name -> ndarray)
    """
    valid, error_msg = validate_table(file_path)
    if not valid:
        log_error("Read CSV", error_msg)
        return (False, error_msg)

    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            tokens = f.readline().split()
            kind = tokens[1][len('kdv-'):]
            meta = {}
            for token in tokens[2:]:
                key, _, value = token.partition('=')
                meta[key] = _parse_value(value)
            reader = csv.reader(f)
            names = next(reader)
            rows = []
            for row_num, row in enumerate(reader, start=3):
                if not row:
                    continue
                if len(row) != len(names):
                    log_warning("Read CSV", f"Skipping malformed row {row_num} in {file_path}")
                    continue
                rows.append([float(v) for v in row])
        table = np.array(rows, dtype=float).reshape(-1, len(names))
        return (True, {
            'kind': kind,
            'meta': meta,
            'columns': {name: table[:, j] for j, name in enumerate(names)},
        })
    except ValueError as e:
        error_msg = f"Non-numeric value in {file_path}: {str(e)}"
        log_error("Read CSV", error_msg)
        return (False, error_msg)
    except Exception as e:
        error_msg = f"Error reading file: {str(e)}"
        log_error("Read CSV", error_msg)
        return (False, error_msg)


def write_snapshot(file_path, field, epsilon):
    """Snapshot `x,u` of a GridField."""
    meta = {'epsilon': float(epsilon), 't': float(field.t), 'N': int(field.N), 'L': float(field.L)}
    return write_table(file_path, 'snapshot', meta, [field.x, field.u])


def write_spectrum(file_path, field, epsilon):
    """Spectral checkpoint `k,Re(uhat),Im(uhat)` of a GridField."""
    meta = {'epsilon': float(epsilon), 't': float(field.t), 'N': int(field.N), 'L': float(field.L)}
    uhat = field.uhat
    return write_table(file_path, 'spectrum', meta, [field.k, uhat.real, uhat.imag])


def write_branches(file_path, branches):
    """Branch file `x, beta1, beta2, beta3, residual` at the zone nodes."""
    x = branches.x
    beta = branches.beta
    residual = branches.residuals
    meta = {'t': float(branches.t), 'Nc': int(branches.Nc),
            'xminus': float(branches.xminus), 'xplus': float(branches.xplus)}
    return write_table(file_path, 'branches', meta, [x, beta[0], beta[1], beta[2], residual])


def read_snapshot(file_path):
    """
    Read a snapshot file back into a GridField.

    Returns:
        tuple: (success: bool, data: (GridField, epsilon) or error_message: str)
    """
    from modules.kdv_spectral import GridField

    success, data = read_table(file_path)
    if not success:
        return (False, data)
    if data['kind'] != 'snapshot':
        return (False, f"Expected a snapshot file, found '{data['kind']}'")
    meta = data['meta']
    field = GridField(L=float(meta['L']), N=int(meta['N']), u=data['columns']['u'], t=float(meta['t']))
    return (True, (field, float(meta['epsilon'])))
