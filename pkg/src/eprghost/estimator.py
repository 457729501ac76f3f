"""scikit-learn compatible wrappers around the fitting machinery."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .domain import CorrelationParams, ExperimentGeometry, ModelKind
from .exceptions import DataError
from .fitting import NormalizedScan, derive_verdict, fit_curve, initial_guess, normalize_counts
from .models import model_values
from .validation import check_positions, check_sigmas, check_targets

__all__ = ["GhostCurveRegressor", "CoincidenceNormalizer"]


class GhostCurveRegressor(RegressorMixin, BaseEstimator):
    """Fit a ghost-interference or ghost-imaging curve to a scan.

    Parameters
    ----------
    mode : {"interference", "imaging"}
        Which coincidence curve to fit.
    f, f_a, f_b, wavelength, w0, wb : float
        Geometry in mm (see :class:`~eprghost.domain.ExperimentGeometry`).
    init : CorrelationParams, dict or None
        Starting point; ``None`` runs :func:`~eprghost.fitting.initial_guess`.
    bounds : tuple of two length-5 arrays, dict or None
        Box constraints over ``(sigma_plus, sigma_minus, amplitude, center,
        background)``. Equal lower and upper bounds freeze a parameter.
    max_iter : int
        Levenberg-Marquardt iteration budget.

    Attributes
    ----------
    params_ : CorrelationParams
    covariance_ : ndarray of shape (5, 5)
    chi2_ : float
    dof_ : int
    n_iter_ : int
    converged_ : bool
    result_ : FitResult

    Examples
    --------
    >>> import numpy as np
    >>> from eprghost import CorrelationParams, ExperimentGeometry, GhostCurveRegressor
    >>> from eprghost.models import model_values
    >>> truth = CorrelationParams(1.489, 51.63, 1.0, 0.0, 0.01)
    >>> x = np.linspace(-0.03, 0.03, 61)
    >>> y = model_values("interference", x, ExperimentGeometry(), truth)
    >>> reg = GhostCurveRegressor(init=truth.replace(sigma_minus=45.0)).fit(x, y)
    >>> round(reg.params_.sigma_minus, 2)
    51.63
    """

    def __init__(self, mode="interference", f=400.0, f_a=13.5, f_b=25.4,
                 wavelength=7.95e-4, w0=1.6, wb=1.23, init=None, bounds=None,
                 max_iter=200):
        self.mode = mode
        self.f = f
        self.f_a = f_a
        self.f_b = f_b
        self.wavelength = wavelength
        self.w0 = w0
        self.wb = wb
        self.init = init
        self.bounds = bounds
        self.max_iter = max_iter

    @property
    def geometry(self):
        return ExperimentGeometry(self.f, self.f_a, self.f_b, self.wavelength, self.w0, self.wb)

    def fit(self, X, y, sigma=None, sample_weight=None):
        x = check_positions(X)
        y = check_targets(y, x.size)
        s = check_sigmas(sigma, sample_weight, x.size)
        order = np.argsort(x, kind="stable")
        data = NormalizedScan(x[order], y[order], s[order])
        kind = ModelKind.parse(self.mode)
        geometry = self.geometry
        init = self.init
        if init is None:
            init = initial_guess(data, kind, geometry)
        elif isinstance(init, dict):
            init = CorrelationParams(**init)
        result = fit_curve(data, kind, geometry, init, bounds=self.bounds,
                           max_iter=self.max_iter)
        self.result_ = result
        self.params_ = result.params
        self.covariance_ = result.covariance
        self.chi2_ = result.chi2
        self.dof_ = result.dof
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        return model_values(self.mode, check_positions(X), self.geometry, self.params_)

    def verdict(self):
        """``(UncertaintyPair, Verdict)`` for the fitted widths."""
        check_is_fitted(self, "result_")
        return derive_verdict(self.result_)


class CoincidenceNormalizer(TransformerMixin, BaseEstimator):
    """Raw counts ``[coincidences, singles_a, singles_b]`` to
    ``[value, sigma]`` (coincidences over the singles product, Poisson
    errors with the zero-count floor). Stateless."""

    def fit(self, X, y=None):
        check_array(X, dtype=float)
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        X = check_array(X, dtype=float)
        if X.shape[1] != 3:
            raise DataError(f"expected 3 columns, got {X.shape[1]}")
        values, sigmas = normalize_counts(X[:, 0], X[:, 1], X[:, 2])
        return np.column_stack([values, sigmas])
