"""End-to-end operations used by the command line: synthesis, fitting with
report assembly, and the analytic-versus-quadrature cross-check."""

import logging
import math
from importlib import metadata

import numpy as np

from .domain import CorrelationParams, ModelKind
from .exceptions import ConvergenceError
from .fileio import sha256_json
from .fitting import ScanData, derive_verdict, fit_curve, initial_guess, normalize_scan
from .models import imaging_shape, interference_shape, model_values
from .oracle import oracle_imaging_g2, oracle_interference_g2

log = logging.getLogger(__name__)

__all__ = [
    "SYNTHETIC_SINGLES",
    "SYNTHETIC_DURATION_S",
    "VERIFY_TOLERANCE",
    "tool_version",
    "synthesize_scan",
    "simulate_curve",
    "run_fit",
    "build_report",
    "run_verify",
]

SYNTHETIC_SINGLES = 1.0e4
SYNTHETIC_DURATION_S = 60.0
VERIFY_TOLERANCE = 1e-4


def tool_version():
    try:
        return metadata.version("eprghost")
    except metadata.PackageNotFoundError:
        from . import __version__
        return __version__


def simulate_curve(config, params, positions=None):
    x = config.positions() if positions is None else np.asarray(positions, dtype=float)
    return x, model_values(config.mode, x, config.geometry, params)


def synthesize_scan(config, params, peak_counts):
    """Poisson-sampled coincidence scan whose largest expectation is
    ``peak_counts``; singles fixed at 1e4 and 60 s per point."""
    if isinstance(peak_counts, bool) or int(peak_counts) != peak_counts or peak_counts < 0:
        raise ValueError("peak_counts must be a non-negative integer")
    x, curve = simulate_curve(config, params)
    top = float(np.max(curve))
    expected = curve / top * peak_counts if top > 0 else np.zeros_like(curve)
    rng = np.random.default_rng(config.seed)
    counts = rng.poisson(expected)
    n = x.size
    return ScanData(x, counts, np.full(n, SYNTHETIC_SINGLES), np.full(n, SYNTHETIC_SINGLES),
                    np.full(n, SYNTHETIC_DURATION_S))


def run_fit(config, scan, init=None, bounds=None, max_iter=200):
    """Normalise and fit a scan. Returns ``(normalized, fit)``."""
    data = normalize_scan(scan)
    if init is None:
        init = initial_guess(data, config.mode, config.geometry)
        log.info("initial guess: %s", init)
    fit = fit_curve(data, config.mode, config.geometry, init, bounds=bounds,
                    max_iter=max_iter)
    return data, fit


def _f(v):
    return float(v)


def build_report(config, fit, data_hash, version=None):
    """Structured report for a converged fit."""
    pair, verdict = derive_verdict(fit)
    err = fit.stderr
    p = fit.params
    return {
        "mode": config.mode.value,
        "sigma_plus_per_mm": _f(p.sigma_plus),
        "sigma_plus_err_per_mm": _f(err[0]),
        "sigma_minus_per_mm": _f(p.sigma_minus),
        "sigma_minus_err_per_mm": _f(err[1]),
        "sigma_plus_minus_cov": _f(fit.covariance[0, 1]),
        "amplitude": _f(p.amplitude),
        "amplitude_err": _f(err[2]),
        "center_mm": _f(p.center),
        "center_err_mm": _f(err[3]),
        "background": _f(p.background),
        "background_err": _f(err[4]),
        "dp_plus_hbar_per_mm": _f(pair.dp_plus),
        "dp_plus_err_hbar_per_mm": _f(pair.dp_plus_err),
        "dx_minus_mm": _f(pair.dx_minus),
        "dx_minus_err_mm": _f(pair.dx_minus_err),
        "product_hbar2": _f(verdict.product),
        "product_err_hbar2": _f(verdict.product_err),
        "entangled": verdict.entangled,
        "steerable": verdict.steerable,
        "chi2": _f(fit.chi2),
        "dof": int(fit.dof),
        "chi2_per_dof": _f(fit.chi2_per_dof),
        "converged": bool(fit.converged),
        "iterations": int(fit.iterations),
        "degenerate_directions": fit.degenerate,
        "placeholders": list(config.placeholders),
        "provenance": {
            "config_sha256": sha256_json(config.to_dict()),
            "data_sha256": data_hash,
            "tool_version": version or tool_version(),
        },
    }


def run_verify(config, params, positions=None):
    """Normalised sup-norm distance between the closed form and the
    quadrature oracle on the configured scan grid.

    ``status`` is ``"pass"``, ``"fail"`` or ``"inconclusive"`` (oracle did
    not converge; never reported as a pass).
    """
    x = config.positions() if positions is None else np.asarray(positions, dtype=float)
    offset = x - params.center
    sp, sm, g = params.sigma_plus, params.sigma_minus, config.geometry
    if config.mode is ModelKind.INTERFERENCE:
        analytic = interference_shape(offset, g, sp, sm)
        oracle_fn = oracle_interference_g2
    elif config.mode is ModelKind.IMAGING:
        analytic = imaging_shape(offset, g, sp, sm)
        oracle_fn = oracle_imaging_g2
    else:
        raise ValueError("verification applies to interference and imaging modes")
    result = {
        "mode": config.mode.value,
        "sigma_plus_per_mm": float(sp),
        "sigma_minus_per_mm": float(sm),
        "n_points": int(x.size),
        "tolerance": VERIFY_TOLERANCE,
    }
    try:
        oracle = oracle_fn(0.0, offset, g, sp, sm, config.quad)
    except ConvergenceError as exc:
        log.warning("oracle did not converge: %s", exc)
        result.update(status="inconclusive", max_discrepancy=None, message=str(exc))
        return result
    a_max, o_max = float(np.max(analytic)), float(np.max(oracle))
    if not (a_max > 0 and o_max > 0):
        result.update(status="inconclusive", max_discrepancy=None,
                      message="curve vanishes on the scan grid")
        return result
    dist = float(np.max(np.abs(analytic / a_max - oracle / o_max)))
    result.update(status="pass" if dist <= VERIFY_TOLERANCE and math.isfinite(dist) else "fail",
                  max_discrepancy=dist)
    return result
