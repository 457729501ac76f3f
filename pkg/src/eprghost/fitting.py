"""Weighted least-squares estimation of the correlation widths.

The minimiser is a box-constrained Levenberg-Marquardt iteration with
Marquardt diagonal scaling and projection onto the bounds. Every accepted
step strictly lowers the objective; the history of accepted objective
values is kept on the result.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import CorrelationParams, ModelKind, classify, joint_uncertainties
from .exceptions import DataError, DomainError, EvaluationError, FitError
from .models import model_values

log = logging.getLogger(__name__)

__all__ = [
    "PARAM_NAMES",
    "ZERO_COUNT_SIGMA",
    "ScanData",
    "NormalizedScan",
    "FitResult",
    "default_bounds",
    "normalize_counts",
    "normalize_scan",
    "fit_curve",
    "derive_verdict",
    "initial_guess",
]

PARAM_NAMES = ("sigma_plus", "sigma_minus", "amplitude", "center", "background")

# One-sided 68.27 % upper Poisson limit for zero observed counts:
# P(0 | mu) = exp(-mu) = 1 - 0.6827  ->  mu = -ln(0.3173) = 1.148
ZERO_COUNT_SIGMA = 1.148

MIN_POINTS = 7


@dataclass(frozen=True)
class ScanData:
    positions: tuple
    coincidences: tuple
    singles_a: tuple
    singles_b: tuple
    duration: tuple

    def __post_init__(self):
        cols = {}
        for name in ("positions", "coincidences", "singles_a", "singles_b", "duration"):
            arr = np.asarray(getattr(self, name), dtype=float).ravel()
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{name} contains non-finite values")
            cols[name] = arr
            object.__setattr__(self, name, tuple(arr.tolist()))
        n = {len(v) for v in cols.values()}
        if len(n) != 1:
            raise DataError("all scan columns must have equal length")
        if n.pop() < MIN_POINTS:
            raise DataError(f"a scan needs at least {MIN_POINTS} points")
        for name in ("coincidences", "singles_a", "singles_b", "duration"):
            bad = np.flatnonzero(cols[name] < 0)
            if bad.size:
                raise DataError(f"negative {name} at point {bad[0]}", index=int(bad[0]))
        steps = np.diff(cols["positions"])
        bad = np.flatnonzero(steps <= 0)
        if bad.size:
            raise DataError(f"positions not strictly increasing at point {bad[0] + 1}",
                            index=int(bad[0] + 1))

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True)
class NormalizedScan:
    positions: np.ndarray
    values: np.ndarray
    sigmas: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=float).ravel()
        y = np.asarray(self.values, dtype=float).ravel()
        s = np.asarray(self.sigmas, dtype=float).ravel()
        if not (x.size == y.size == s.size):
            raise DataError("positions, values and sigmas must have equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.all(np.isfinite(s))):
            raise DataError("normalized scan contains non-finite entries")
        if np.any(s <= 0):
            i = int(np.flatnonzero(s <= 0)[0])
            raise DataError(f"sigma must be positive (point {i})", index=i)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "values", y)
        object.__setattr__(self, "sigmas", s)

    def __len__(self):
        return self.positions.size

    def rows(self):
        return list(zip(self.positions.tolist(), self.values.tolist(), self.sigmas.tolist()))


@dataclass
class FitResult:
    params: CorrelationParams
    covariance: np.ndarray
    chi2: float
    dof: int
    converged: bool
    iterations: int
    kind: ModelKind = ModelKind.INTERFERENCE
    free: tuple = (True,) * 5
    degenerate: list = field(default_factory=list)
    history: list = field(default_factory=list)
    message: str = ""

    @property
    def chi2_per_dof(self):
        return self.chi2 / self.dof

    @property
    def stderr(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def normalize_counts(coincidences, singles_a, singles_b):
    """Arrays ``(value, sigma)`` for raw counts; see :func:`normalize_scan`."""
    c = np.asarray(coincidences, dtype=float)
    prod = np.asarray(singles_a, dtype=float) * np.asarray(singles_b, dtype=float)
    neg = np.flatnonzero((c < 0) | (prod < 0))
    if neg.size:
        raise DataError(f"negative counts at point {neg[0]}", index=int(neg[0]))
    zero = np.flatnonzero(prod <= 0)
    if zero.size:
        raise DataError(f"singles product is zero at point {zero[0]}", index=int(zero[0]))
    values = c / prod
    sigmas = np.where(c > 0, np.sqrt(c), ZERO_COUNT_SIGMA) / prod
    return values, sigmas


def normalize_scan(scan):
    """Coincidences over the singles product, with Poisson errors.

    ``value = C / (Sa Sb)`` and ``sigma = sqrt(C) / (Sa Sb)``; points with
    ``C = 0`` get ``sigma = 1.148 / (Sa Sb)``.
    """
    values, sigmas = normalize_counts(scan.coincidences, scan.singles_a, scan.singles_b)
    return NormalizedScan(np.asarray(scan.positions, dtype=float), values, sigmas)


def default_bounds():
    lower = np.array([1e-6, 1e-6, 1e-300, -np.inf, 0.0])
    upper = np.full(5, np.inf)
    return lower, upper


def _as_bounds(bounds):
    if bounds is None:
        return default_bounds()
    if isinstance(bounds, dict):
        lower, upper = default_bounds()
        for name, (lo, hi) in bounds.items():
            i = PARAM_NAMES.index(name)
            lower[i] = -np.inf if lo is None else lo
            upper[i] = np.inf if hi is None else hi
        return lower, upper
    lower, upper = (np.asarray(b, dtype=float) for b in bounds)
    if lower.shape != (5,) or upper.shape != (5,):
        raise DomainError("bounds must be two length-5 sequences")
    return lower.copy(), upper.copy()


def _residuals(kind, geometry, data, theta):
    params = CorrelationParams.from_array(theta)
    model = model_values(kind, data.positions, geometry, params)
    return (model - data.values) / data.sigmas


def _jacobian(fun, theta, r0, free, lower, upper):
    jac = np.zeros((r0.size, int(np.count_nonzero(free))))
    col = 0
    for j in np.flatnonzero(free):
        h = 1e-6 * (1.0 + abs(theta[j]))
        if theta[j] + h > upper[j]:
            h = -h
        step = theta.copy()
        step[j] += h
        jac[:, col] = (fun(step) - r0) / h
        col += 1
    return jac


def fit_curve(data, kind, geometry, init, bounds=None, max_iter=200,
              ftol=1e-15, xtol=1e-12, gtol=1e-12):
    """Fit ``kind`` (interference or imaging) to a normalized scan.

    Minimises ``sum(((y - model) / sigma)^2)`` over ``(sigma_plus,
    sigma_minus, amplitude, center, background)`` inside box ``bounds``.
    Parameters whose lower and upper bounds coincide are held fixed.

    The covariance is the inverse of the Gauss-Newton normal matrix at the
    optimum, scaled by ``chi2/dof`` when that exceeds 1. If the iteration
    budget runs out the best point found is returned with
    ``converged=False``.
    """
    kind = ModelKind.parse(kind)
    if kind not in (ModelKind.INTERFERENCE, ModelKind.IMAGING):
        raise DomainError("only interference and imaging curves can be fitted")
    if not isinstance(data, NormalizedScan):
        data = NormalizedScan(*np.asarray(data, dtype=float).T)
    lower, upper = _as_bounds(bounds)
    theta = np.asarray(init.as_array() if isinstance(init, CorrelationParams) else init,
                       dtype=float).copy()
    if np.any(theta < lower) or np.any(theta > upper):
        raise DomainError("initial parameters lie outside the bounds")
    free = upper > lower
    n_free = int(np.count_nonzero(free))
    dof = len(data) - n_free
    if dof <= 0:
        raise DataError(f"{len(data)} points cannot constrain {n_free} free parameters")

    def fun(t):
        return _residuals(kind, geometry, data, t)

    r = fun(theta)
    cost = float(r @ r)
    history = [cost]
    mu, nu = None, 2.0
    scale = None
    converged = False
    message = "iteration budget exhausted"
    it = 0
    for it in range(1, max_iter + 1):
        J = _jacobian(fun, theta, r, free, lower, upper)
        g = J.T @ r
        colnorm = np.sqrt(np.sum(J * J, axis=0))
        scale = colnorm if scale is None else np.maximum(scale, colnorm)
        dscale = np.where(scale > 0, scale, 1.0)
        # parameters pinned at a bound with the descent direction pointing
        # outward are held there for this iteration (projected gradient)
        t_free = theta[free]
        pinned = ((t_free <= lower[free]) & (g > 0)) | ((t_free >= upper[free]) & (g < 0))
        act = ~pinned
        if not np.any(act) or np.max(np.abs(g[act]) / dscale[act], initial=0.0) <= (
                gtol * max(math.sqrt(cost), 1e-300)):
            converged, message = True, "gradient below tolerance"
            break
        if mu is None:
            mu = 1e-3
        Ja, ra_dim = J[:, act], int(np.count_nonzero(act))
        accepted = False
        while not accepted:
            # solve (J^T J + mu D^2) delta = -J^T r in least-squares form
            A = np.vstack([Ja, math.sqrt(mu) * np.diag(dscale[act])])
            b = np.concatenate([-r, np.zeros(ra_dim)])
            delta = np.zeros(n_free)
            delta[act] = np.linalg.lstsq(A, b, rcond=None)[0]
            trial = theta.copy()
            trial[free] = np.clip(t_free + delta, lower[free], upper[free])
            step = trial[free] - t_free
            try:
                r_new = fun(trial)
                new_cost = float(r_new @ r_new)
            except (EvaluationError, DomainError, FloatingPointError):
                new_cost = math.inf
            predicted = cost - float(np.sum((r + J @ step) ** 2))
            tiny = np.all(np.abs(step) <= xtol * (np.abs(t_free) + xtol))
            if new_cost < cost:
                rho = (cost - new_cost) / predicted if predicted > 0 else 0.0
                mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
                nu = 2.0
                rel_drop = (cost - new_cost) / cost if cost > 0 else 0.0
                theta, r, cost = trial, r_new, new_cost
                history.append(cost)
                accepted = True
                if cost == 0.0 or rel_drop <= ftol or tiny:
                    converged = True
                    message = ("objective reduction below tolerance" if rel_drop <= ftol
                               else "step below tolerance")
            else:
                mu *= nu
                nu *= 2.0
                if mu > 1e16 or tiny:
                    # no downhill step exists at machine resolution
                    converged, message = True, "no further decrease possible"
                    break
        if converged:
            break

    J = _jacobian(fun, theta, r, free, lower, upper)
    cov_free, degenerate = _covariance(J)
    chi2 = cost
    if chi2 / dof > 1.0:
        cov_free = cov_free * (chi2 / dof)
    cov = np.zeros((5, 5))
    idx = np.flatnonzero(free)
    cov[np.ix_(idx, idx)] = cov_free
    degenerate = [{PARAM_NAMES[idx[i]]: float(v[i]) for i in range(len(idx))} for v in degenerate]
    if degenerate:
        log.warning("fit has %d degenerate parameter direction(s)", len(degenerate))
    return FitResult(
        params=CorrelationParams.from_array(theta),
        covariance=cov,
        chi2=chi2,
        dof=dof,
        converged=converged,
        iterations=it,
        kind=kind,
        free=tuple(bool(f) for f in free),
        degenerate=degenerate,
        history=history,
        message=message,
    )


def _covariance(J):
    """Inverse of J^T J via a scaled eigendecomposition.

    Directions whose eigenvalue falls below 1e-12 of the largest are
    treated as unconstrained: they are excluded from the inverse and
    returned as degenerate unit vectors.
    """
    JtJ = J.T @ J
    d = np.sqrt(np.diag(JtJ))
    d = np.where(d > 0, d, 1.0)
    scaled = JtJ / np.outer(d, d)
    evals, evecs = np.linalg.eigh(scaled)
    cut = 1e-12 * max(evals.max(initial=0.0), 1e-300)
    keep = evals > cut
    inv = (evecs[:, keep] / evals[keep]) @ evecs[:, keep].T
    cov = inv / np.outer(d, d)
    cov = 0.5 * (cov + cov.T)
    degenerate = []
    for v in evecs[:, ~keep].T:
        u = v / d
        degenerate.append(u / np.linalg.norm(u))
    return cov, degenerate


def derive_verdict(fit):
    """Uncertainty pair and verdict from a converged fit, propagating the
    full (sigma_plus, sigma_minus) covariance including the cross term."""
    if not fit.converged:
        raise FitError(f"refusing to certify an unconverged fit ({fit.message})")
    cov2 = np.asarray(fit.covariance)[:2, :2]
    pair = joint_uncertainties(fit.params.sigma_plus, fit.params.sigma_minus, cov2)
    return pair, classify(pair)


def _linear_amp_bg(shape, y, w):
    """Weighted linear least squares for ``y ~ A shape + b``, b >= 0."""
    X = np.column_stack([shape, np.ones_like(shape)]) * w[:, None]
    coef = np.linalg.lstsq(X, y * w, rcond=None)[0]
    if coef[1] < 0:
        a = float(np.sum(w * w * shape * y) / max(np.sum(w * w * shape * shape), 1e-300))
        coef = np.array([a, 0.0])
    return coef


def initial_guess(data, kind, geometry,
                  sigma_plus_grid=None, sigma_minus_grid=None):
    """Heuristic starting point for :func:`fit_curve`.

    Centre from the data centroid (of the signal for interference, of the
    missing signal for imaging), background from the median of the outer
    points and amplitude from the peak. The widths come from a coarse
    log-spaced grid search in which amplitude and background are solved
    linearly for each candidate pair.
    """
    kind = ModelKind.parse(kind)
    x, y, s = data.positions, data.values, data.sigmas
    n_edge = max(2, len(x) // 10)
    edge = np.concatenate([y[:n_edge], y[-n_edge:]])
    background = max(float(np.median(edge)), 0.0)
    if kind is ModelKind.IMAGING:
        weight = np.clip(np.max(y) - y, 0.0, None)
    else:
        weight = np.clip(y - background, 0.0, None)
    center = float(np.sum(weight * x) / np.sum(weight)) if np.sum(weight) > 0 else float(np.mean(x))
    amplitude = max(float(np.max(y)) - background, float(np.max(y)) * 1e-3, 1e-300)

    sp_grid = sigma_plus_grid if sigma_plus_grid is not None else np.geomspace(0.2, 10.0, 9)
    sm_grid = sigma_minus_grid if sigma_minus_grid is not None else np.geomspace(3.0, 300.0, 13)
    w = 1.0 / s
    best = None
    for sp in sp_grid:
        for sm in sm_grid:
            shape = model_values(kind, x, geometry,
                                 CorrelationParams(sp, sm, 1.0, center, 0.0))
            a, b = _linear_amp_bg(shape, y, w)
            if a <= 0:
                continue
            chi2 = float(np.sum(((a * shape + b - y) * w) ** 2))
            if best is None or chi2 < best[0]:
                best = (chi2, sp, sm, a, b)
    if best is None:
        return CorrelationParams(1.0, 50.0, amplitude, center, background)
    _, sp, sm, a, b = best
    return CorrelationParams(float(sp), float(sm), float(a), center, float(max(b, 0.0)))
