"""Binary snapshots, trajectory files, diagnostics CSV and norm reports.

Snapshot layout (little-endian): magic ``b"QGSF"``, version ``u32``, ``n``
``u32``, ``box_length`` ``f64``, ``time`` ``f64``, ``gamma`` ``f64``, then
``n*n`` complex128 coefficients in row-major wavenumber order (FFT wrapping,
DC at index ``(0, 0)``). A trajectory file is ``b"QGTR"``, version ``u32``,
count ``u32`` followed by that many snapshot records.
"""
import csv
import io
import json
import math
import struct

import numpy as np

from .dynamics import DIAG_COLUMNS, TrajectoryRecord
from .errors import StructuralError
from .gevrey import SERIES_COLUMNS, NormReport
from .spectral import Grid2D, PhysicalParams, SpectralField

SNAPSHOT_MAGIC = b"QGSF"
TRAJECTORY_MAGIC = b"QGTR"
FORMAT_VERSION = 1
SCHEMA_VERSION = 1
_HEADER = struct.Struct("<4sIIddd")
_TRAJ_HEADER = struct.Struct("<4sII")
_COEFF = np.dtype("<c16")


# ---------------------------------------------------------------------------
# snapshots


def encode_snapshot(field, time=0.0, gamma=math.nan):
    g = field.grid
    head = _HEADER.pack(SNAPSHOT_MAGIC, FORMAT_VERSION, g.n, g.box_length, time, gamma)
    return head + np.ascontiguousarray(field.coeffs, dtype=_COEFF).tobytes()


def decode_snapshot(buf, offset=0):
    """Returns ``(field, time, gamma, next_offset)``."""
    if len(buf) - offset < _HEADER.size:
        raise StructuralError("truncated snapshot header")
    magic, version, n, box, time, gamma = _HEADER.unpack_from(buf, offset)
    if magic != SNAPSHOT_MAGIC:
        raise StructuralError(f"bad snapshot magic {magic!r}")
    if version != FORMAT_VERSION:
        raise StructuralError(f"unsupported snapshot version {version}")
    start = offset + _HEADER.size
    end = start + n * n * _COEFF.itemsize
    if len(buf) < end:
        raise StructuralError("truncated snapshot payload")
    c = np.frombuffer(buf, dtype=_COEFF, count=n * n, offset=start).reshape(n, n)
    field = SpectralField(Grid2D(n, box), c.astype(np.complex128))
    return field, time, gamma, end


def write_snapshot(path, field, time=0.0, gamma=math.nan):
    with open(path, "wb") as fh:
        fh.write(encode_snapshot(field, time, gamma))


def read_snapshot(path):
    """Returns ``(field, time, gamma)``."""
    with open(path, "rb") as fh:
        field, time, gamma, _ = decode_snapshot(fh.read())
    return field, time, gamma


def write_trajectory(path, traj):
    gamma = traj.params.gamma if traj.params is not None else math.nan
    with open(path, "wb") as fh:
        fh.write(_TRAJ_HEADER.pack(TRAJECTORY_MAGIC, FORMAT_VERSION, len(traj)))
        for t, u in zip(traj.times, traj.snapshots):
            fh.write(encode_snapshot(u, float(t), gamma))


def read_trajectory(path, kappa=1.0, alpha=None):
    with open(path, "rb") as fh:
        buf = fh.read()
    magic, version, count = _TRAJ_HEADER.unpack_from(buf, 0)
    if magic != TRAJECTORY_MAGIC:
        raise StructuralError(f"bad trajectory magic {magic!r}")
    if version != FORMAT_VERSION:
        raise StructuralError(f"unsupported trajectory version {version}")
    off = _TRAJ_HEADER.size
    times, snaps, gamma = [], [], math.nan
    for _ in range(count):
        f, t, gamma, off = decode_snapshot(buf, off)
        times.append(t)
        snaps.append(f)
    params = None if math.isnan(gamma) else PhysicalParams(gamma, kappa, alpha)
    return TrajectoryRecord(times, snaps, params=params)


# ---------------------------------------------------------------------------
# CSV / JSON


def _fmt(x):
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def diagnostics_csv(diagnostics, columns=None):
    """Per-step diagnostics as CSV text, one row per recorded step."""
    cols = [c for c in (columns or DIAG_COLUMNS) if c in diagnostics]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    rows = len(diagnostics[cols[0]]) if cols else 0
    for i in range(rows):
        w.writerow([_fmt(diagnostics[c][i]) for c in cols])
    return buf.getvalue()


def read_diagnostics_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    cols = rows[0]
    return {c: np.array([float(r[i]) for r in rows[1:]]) for i, c in enumerate(cols)}


def _json_value(v):
    if v is None or isinstance(v, bool):
        return json.dumps(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "null" if not math.isfinite(v) else format(v, ".17g")
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {type(v).__name__}")


_SCALARS = ("k_norm", "k_time", "g_norm", "g_time", "e1_norm")


def emit_report(report, fmt="json"):
    """Serialise a :class:`NormReport` with 17 significant digits and a stable field order."""
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION}
        for k in _SCALARS:
            doc[k] = getattr(report, k)
        doc["decay_slopes"] = dict(report.decay_slopes)
        doc["meta"] = dict(report.meta)
        doc["series"] = {c: list(report.series.get(c, [])) for c in SERIES_COLUMNS}
        return (_json_value(doc) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SERIES_COLUMNS)
        rows = len(report.series.get("time", []))
        for i in range(rows):
            w.writerow([_fmt(report.series[c][i]) if c in report.series else "nan" for c in SERIES_COLUMNS])
        return buf.getvalue().encode()
    raise ValueError(f"fmt must be 'json' or 'csv', got {fmt!r}")


def _nan(v):
    return math.nan if v is None else v


def parse_report(data, fmt="json"):
    """Inverse of :func:`emit_report`. CSV carries only the per-time series."""
    text = data.decode() if isinstance(data, bytes) else data
    if fmt == "json":
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise StructuralError(f"unsupported report schema {doc.get('schema_version')!r}")
        rep = NormReport(**{k: doc.get(k) for k in _SCALARS})
        rep.decay_slopes = doc.get("decay_slopes", {})
        rep.meta = doc.get("meta", {})
        rep.series = {c: np.array([_nan(v) for v in vals], dtype=float) for c, vals in doc.get("series", {}).items()}
        return rep
    if fmt == "csv":
        rows = list(csv.reader(io.StringIO(text)))
        if tuple(rows[0]) != SERIES_COLUMNS:
            raise StructuralError(f"unexpected CSV columns {rows[0]}")
        series = {c: np.array([float(r[i]) for r in rows[1:]]) for i, c in enumerate(SERIES_COLUMNS)}
        return NormReport(series=series)
    raise ValueError(f"fmt must be 'json' or 'csv', got {fmt!r}")
