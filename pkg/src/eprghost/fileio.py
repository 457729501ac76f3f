"""Scan CSV files, JSON reports and plot-data tables."""

import csv
import hashlib
import json
import math

from .domain import ENTANGLEMENT_BOUND, STEERING_BOUND
from .exceptions import DataError
from .fitting import ScanData

__all__ = [
    "SCAN_HEADER",
    "PLOT_HEADER",
    "REPORT_KEYS",
    "load_scan",
    "write_scan",
    "sha256_file",
    "sha256_json",
    "write_report",
    "read_report",
    "check_report",
    "emit_plot_data",
]

SCAN_HEADER = ("position_mm", "coincidences", "singles_a", "singles_b", "duration_s")
PLOT_HEADER = ("position_mm", "data_value", "data_sigma", "model_value")
REPORT_KEYS = (
    "sigma_plus_per_mm", "sigma_minus_per_mm", "dp_plus_hbar_per_mm", "dx_minus_mm",
    "product_hbar2", "product_err_hbar2", "entangled", "steerable", "chi2_per_dof",
    "provenance",
)


def load_scan(path):
    """Read a scan CSV; errors carry the 1-based line number."""
    cols = [[] for _ in SCAN_HEADER]
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SCAN_HEADER:
            raise DataError(f"{path}: header must be {','.join(SCAN_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(SCAN_HEADER):
                raise DataError(f"{path}:{lineno}: expected {len(SCAN_HEADER)} fields, "
                                f"got {len(row)}", line=lineno)
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric field", line=lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise DataError(f"{path}:{lineno}: non-finite field", line=lineno)
            for name, v in zip(SCAN_HEADER[1:], vals[1:]):
                if v < 0:
                    raise DataError(f"{path}:{lineno}: negative {name}", line=lineno)
            if cols[0] and vals[0] <= cols[0][-1]:
                raise DataError(f"{path}:{lineno}: positions must be strictly increasing",
                                line=lineno)
            for c, v in zip(cols, vals):
                c.append(v)
    return ScanData(*cols)


def _fmt(v):
    return repr(float(v)) if not float(v).is_integer() or abs(v) >= 1e16 else str(int(v))


def format_scan(scan):
    lines = [",".join(SCAN_HEADER)]
    for row in zip(scan.positions, scan.coincidences, scan.singles_a,
                   scan.singles_b, scan.duration):
        lines.append(",".join([repr(float(row[0]))] + [_fmt(v) for v in row[1:]]))
    return "\n".join(lines) + "\n"


def write_scan(scan, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_scan(scan))


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_json(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def check_report(report):
    """Re-derive the verdict flags from the reported product."""
    missing = [k for k in REPORT_KEYS if k not in report]
    if missing:
        raise DataError(f"report lacks keys: {', '.join(missing)}")
    p = report["product_hbar2"]
    if report["entangled"] != (p < ENTANGLEMENT_BOUND) or report["steerable"] != (p < STEERING_BOUND):
        raise DataError("report verdict inconsistent with its uncertainty product")
    if not report["provenance"]:
        raise DataError("report provenance block is empty")


def write_report(report, path):
    check_report(report)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path):
    with open(path, encoding="utf-8") as fh:
        report = json.load(fh)
    check_report(report)
    return report


def emit_plot_data(positions, data_values, data_sigmas, model_values, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(PLOT_HEADER) + "\n")
        for row in zip(positions, data_values, data_sigmas, model_values):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
