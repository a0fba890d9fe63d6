"""CSV/JSON readers and writers, key=value config files, and output schemas.

Numbers are written with 17 significant digits so a write/read round trip is
bit-exact. Every writer goes through a temporary file and ``os.replace``.
"""

import contextlib
import csv
import json
import math
import os
import tempfile

import numpy as np

from .errors import IoError, NonNumericCell, RaggedRows


def format_float(x):
    return format(float(x), ".17g")


def _read_rows(path, header):
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh)]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if header:
        rows = rows[1:]
    # tolerate trailing blank lines only
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise IoError(f"{path}: no data rows")
    return rows


def parse_matrix_csv(path, header=False):
    """Dense rectangular numeric CSV to a 2-d float array.

    Row and column numbers in error messages are 1-based and count the
    header line when present.
    """
    rows = _read_rows(path, header)
    offset = 2 if header else 1
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRows(path, i + offset, width, len(row))
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise NonNumericCell(path, i + offset, j + 1, cell) from None
            if not math.isfinite(value):
                raise NonNumericCell(path, i + offset, j + 1, cell, "not finite")
            out[i, j] = value
    return out


def parse_vector_csv(path, header=False):
    """A single CSV column (or a single row) as a 1-d float array."""
    m = parse_matrix_csv(path, header)
    if m.shape[1] == 1:
        return m[:, 0]
    if m.shape[0] == 1:
        return m[0]
    raise RaggedRows(path, 1, 1, m.shape[1])


@contextlib.contextmanager
def atomic_open(path, mode="w"):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def write_matrix_csv(path, matrix):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with atomic_open(path) as fh:
        for row in matrix:
            fh.write(",".join(format_float(x) for x in row) + "\n")


def write_vector_csv(path, vector):
    with atomic_open(path) as fh:
        for x in np.asarray(vector, dtype=float).ravel():
            fh.write(format_float(x) + "\n")


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_rows_csv(path, fieldnames, rows):
    """Header line plus one line per mapping in ``rows``."""
    with atomic_open(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_cell(row[f]) for f in fieldnames])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    with atomic_open(path) as fh:
        fh.write(text + "\n")


def parse_config(path):
    """``key = value`` lines; ``#`` starts a comment. Keys are normalized to snake_case."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise IoError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_").lower()] = value
    return out


_NUM = {"type": "number"}
_INT = {"type": "integer"}

FDP_REPORT_SCHEMA = {
    "type": "object",
    "required": ["t", "R", "V_hat", "fdp_hat", "method", "k_used", "m_used"],
    "properties": {
        "t": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "R": {"type": "integer", "minimum": 0},
        "V_hat": {"type": "number", "minimum": 0},
        "fdp_hat": {"type": "number", "minimum": 0, "maximum": 1},
        "method": {"enum": ["PFA", "Storey", "BH-implied", "Efron"]},
        "k_used": {"type": "integer", "minimum": 0},
        "m_used": {"type": "integer", "minimum": 0},
        "storey_fdp": _NUM,
        "storey_p0": _NUM,
        "efron_fdp": {"type": "number", "minimum": 0, "maximum": 1},
        "efron_fdp_raw": _NUM,
        "efron_A_hat": _NUM,
        "efron_variant": {"type": "string"},
        "storey_lambda": _NUM,
    },
}

CONTROL_SCHEMA = {
    "type": "object",
    "required": ["t_star", "fdr_at_t", "mc_se", "n_draws", "seed"],
    "properties": {
        "t_star": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "fdr_at_t": {"type": "number", "minimum": 0, "maximum": 1},
        "mc_se": {"type": "number", "minimum": 0},
        "n_draws": _INT,
        "seed": _INT,
        "clamped": {"enum": [None, "lower", "upper"]},
        "alpha": _NUM,
        "p1": _INT,
        "k_used": _INT,
    },
}

VARIANCE_SCHEMA = {
    "type": "object",
    "required": ["variance", "mc_se", "t", "n_draws", "seed"],
    "properties": {
        "variance": {"type": "number", "minimum": 0},
        "mc_se": {"type": "number", "minimum": 0},
        "mean": _NUM,
        "t": _NUM,
        "n_draws": _INT,
        "seed": _INT,
        "k_used": _INT,
        "subset": {"enum": ["all", "null_mask"]},
        "independence_variance": _NUM,
    },
}

SIM_SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["n_replicates", "thresholds", "spec"],
    "properties": {
        "n_replicates": _INT,
        "spec": {"type": "object"},
        "k_used": _INT,
        "w_error_median": _NUM,
        "thresholds": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["true_fdp_mean", "V_var", "methods"],
                "properties": {"methods": {"type": "object"}},
            },
        },
    },
}

SIM_ROW_FIELDS = ["replicate", "seed", "threshold", "method", "estimate", "true_fdp", "V", "S", "R", "w_error"]
ADJUST_FIELDS = ["index", "z", "adjusted_z", "p", "adjusted_p", "rank"]
HYPOTHESIS_FIELDS = ["index", "z", "p", "eta_hat", "rejected"]
