import dataclasses

import numpy as np
import pytest

from eprghost.config import RunConfig
from eprghost.domain import CorrelationParams
from eprghost.exceptions import DataError, DomainError, FitError
from eprghost.fitting import (
    NormalizedScan,
    ScanData,
    derive_verdict,
    fit_curve,
    initial_guess,
    normalize_scan,
)
from eprghost.models import model_values
from eprghost.pipeline import run_fit, synthesize_scan

TRUTH = {
    "interference": CorrelationParams(1.489, 51.63, 2.0e-6, 0.002, 5e-8),
    "imaging": CorrelationParams(1.489, 51.63, 2.0e-6, 0.05, 5e-8),
}


def _noiseless(mode, geometry):
    x = RunConfig(mode=mode).positions()
    y = model_values(mode, x, geometry, TRUTH[mode])
    sigma = np.sqrt(y * 1e8) / 1e8 + 1e-9
    return NormalizedScan(x, y, sigma)


def _poisson(mode, seed=42):
    cfg = dataclasses.replace(RunConfig(mode=mode), seed=seed)
    return cfg, synthesize_scan(cfg, CorrelationParams(1.489, 51.63), 400)


def test_normalize_examples():
    scan = ScanData(np.arange(7.0), [100, 0, 100, 5, 5, 5, 5], [1e4] * 7, [1e4, 1e4, 2e4] + [1e4] * 4,
                    [60.0] * 7)
    data = normalize_scan(scan)
    assert data.values[0] == pytest.approx(1e-6, rel=1e-15)
    assert data.sigmas[0] == pytest.approx(1e-7, rel=1e-15)
    assert data.values[1] == 0 and data.sigmas[1] == pytest.approx(1.148e-8, rel=1e-15)
    doubled = normalize_scan(dataclasses.replace(
        scan, singles_a=tuple(2 * v for v in scan.singles_a),
        singles_b=tuple(2 * v for v in scan.singles_b)))
    assert np.allclose(doubled.values, data.values / 4, rtol=1e-15)
    assert np.allclose(doubled.sigmas, data.sigmas / 4, rtol=1e-15)


def test_normalize_rejects_zero_singles():
    scan = ScanData(np.arange(7.0), [1] * 7, [1e4] * 3 + [0] + [1e4] * 3, [1e4] * 7, [60.0] * 7)
    with pytest.raises(DataError) as info:
        normalize_scan(scan)
    assert info.value.index == 3


@pytest.mark.parametrize("kw,msg", [
    (dict(positions=np.arange(6.0)), "7"),
    (dict(positions=np.r_[0.0, 0.0, np.arange(2.0, 7.0)]), "increasing"),
    (dict(coincidences=[1, 2, -1, 4, 5, 6, 7]), "negative"),
])
def test_scan_data_invariants(kw, msg):
    base = dict(positions=np.arange(7.0), coincidences=[1] * 7, singles_a=[1e4] * 7,
                singles_b=[1e4] * 7, duration=[60.0] * 7)
    base.update(kw)
    n = len(base["positions"])
    for k in ("coincidences", "singles_a", "singles_b", "duration"):
        base[k] = list(base[k])[:n]
    with pytest.raises(DataError, match=msg):
        ScanData(**base)


@pytest.mark.parametrize("mode", ["interference", "imaging"])
@pytest.mark.parametrize("factor", [0.8, 1.2])
def test_noiseless_round_trip(geometry, mode, factor):
    data = _noiseless(mode, geometry)
    truth = TRUTH[mode]
    t = truth.as_array()
    init = CorrelationParams.from_array(
        [t[0] * factor, t[1] / factor, t[2] * factor, t[3] * factor, t[4] * factor])
    fit = fit_curve(data, mode, geometry, init)
    assert fit.converged
    assert np.allclose(fit.params.as_array(), t, rtol=1e-3, atol=0)
    assert fit.chi2 < 1e-12


@pytest.mark.parametrize("mode", ["interference", "imaging"])
def test_poisson_round_trip_within_three_sigma(mode):
    cfg, scan = _poisson(mode)
    data, fit = run_fit(cfg, scan)
    assert fit.converged and len(data) == 61
    err = fit.stderr
    assert abs(fit.params.sigma_plus - 1.489) <= 3 * err[0]
    assert abs(fit.params.sigma_minus - 51.63) <= 3 * err[1]


def test_objective_monotone(geometry):
    cfg, scan = _poisson("imaging")
    _, fit = run_fit(cfg, scan)
    h = np.asarray(fit.history)
    assert len(h) >= 2 and np.all(np.diff(h) <= 0)


def test_model_discrimination(geometry):
    cfg, scan = _poisson("interference")
    data, matched = run_fit(cfg, scan)
    other = fit_curve(data, "imaging", geometry,
                      initial_guess(data, "imaging", geometry))
    assert other.chi2_per_dof >= 5 * matched.chi2_per_dof


def test_shift_equivariance(geometry):
    cfg, scan = _poisson("imaging")
    data, fit = run_fit(cfg, scan)
    d = 0.37
    shifted = NormalizedScan(data.positions + d, data.values, data.sigmas)
    init = fit.params.replace(center=fit.params.center + d)
    fit2 = fit_curve(shifted, "imaging", geometry, init)
    a, b = fit.params.as_array(), fit2.params.as_array()
    assert b[3] == pytest.approx(a[3] + d, abs=1e-6)
    for i in (0, 1, 2, 4):
        assert b[i] == pytest.approx(a[i], rel=1e-6)


def test_scale_equivariance(geometry):
    cfg, scan = _poisson("imaging")
    data, fit = run_fit(cfg, scan)
    k = 37.5
    scaled = NormalizedScan(data.positions, data.values * k, data.sigmas * k)
    p = fit.params
    init = p.replace(amplitude=p.amplitude * k, background=p.background * k)
    fit2 = fit_curve(scaled, "imaging", geometry, init)
    assert fit2.params.amplitude == pytest.approx(k * p.amplitude, rel=1e-8)
    assert fit2.params.background == pytest.approx(k * p.background, rel=1e-8, abs=1e-20)
    for name in ("sigma_plus", "sigma_minus", "center"):
        assert getattr(fit2.params, name) == pytest.approx(getattr(p, name), rel=1e-8)
    assert fit2.chi2 == pytest.approx(fit.chi2, rel=1e-8)


def _hessian_check(geometry, data, fit):
    """Diagonal of the reported covariance over that of 2 H^-1, with H a
    central-difference Hessian of chi2 at the optimum."""
    free = np.flatnonzero(fit.free)
    theta = fit.params.as_array()

    def chi2(t):
        # background enters additively; adding it afterwards lets the
        # stencil step below zero when the fit sits on that bound
        base = CorrelationParams.from_array(np.r_[t[:4], 0.0])
        m = model_values(fit.kind, data.positions, geometry, base) + t[4]
        r = (data.values - m) / data.sigmas
        return float(r @ r)

    steps = fit.stderr[free] * 1e-2
    n = free.size
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            def at(si, sj):
                t = theta.copy()
                t[free[i]] += si * steps[i]
                t[free[j]] += sj * steps[j]
                return chi2(t)
            H[i, j] = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * steps[i] * steps[j])
    cov_h = 2 * np.linalg.inv(H) * max(1.0, fit.chi2_per_dof)
    return np.diag(fit.covariance[np.ix_(free, free)]) / np.diag(cov_h)


@pytest.mark.parametrize("mode", ["interference", "imaging"])
def test_covariance_matches_hessian_noiseless(geometry, mode):
    data = _noiseless(mode, geometry)
    fit = fit_curve(data, mode, geometry, TRUTH[mode].replace(sigma_plus=1.3))
    assert np.allclose(_hessian_check(geometry, data, fit), 1.0, atol=0.05)


@pytest.mark.parametrize("mode", [
    pytest.param("interference", marks=pytest.mark.xfail(
        strict=True, reason="residual curvature of the noisy fringe fit moves the "
                            "sigma_minus and center Hessian entries by about 8%")),
    "imaging",
])
def test_covariance_matches_hessian_poisson(geometry, mode):
    cfg, scan = _poisson(mode)
    data, fit = run_fit(cfg, scan)
    assert np.allclose(_hessian_check(geometry, data, fit), 1.0, atol=0.05)


def test_covariance_symmetric_psd(geometry):
    cfg, scan = _poisson("interference")
    _, fit = run_fit(cfg, scan)
    assert np.array_equal(fit.covariance, fit.covariance.T)
    assert np.min(np.linalg.eigvalsh(fit.covariance)) >= -1e-12 * np.max(np.abs(fit.covariance))


def test_frozen_parameters(geometry):
    data = _noiseless("imaging", geometry)
    truth = TRUTH["imaging"]
    lower = np.array([1e-6, 1e-6, 1e-300, truth.center, truth.background])
    upper = np.array([np.inf, np.inf, np.inf, truth.center, truth.background])
    init = truth.replace(sigma_plus=1.2, sigma_minus=60.0)
    fit = fit_curve(data, "imaging", geometry, init, bounds=(lower, upper))
    assert fit.free == (True, True, True, False, False)
    assert fit.params.center == truth.center and fit.params.background == truth.background
    assert fit.covariance[3, 3] == 0 and fit.dof == len(data) - 3
    assert fit.params.sigma_plus == pytest.approx(1.489, rel=1e-6)


def test_init_outside_bounds_rejected(geometry):
    data = _noiseless("imaging", geometry)
    with pytest.raises(DomainError):
        fit_curve(data, "imaging", geometry, TRUTH["imaging"].replace(background=-1.0))


def test_too_few_points(geometry):
    data = _noiseless("imaging", geometry)
    small = NormalizedScan(data.positions[:5], data.values[:5], data.sigmas[:5])
    with pytest.raises(DataError):
        fit_curve(small, "imaging", geometry, TRUTH["imaging"])


def test_iteration_budget_reports_unconverged(geometry):
    data = _noiseless("imaging", geometry)
    fit = fit_curve(data, "imaging", geometry, TRUTH["imaging"].replace(sigma_plus=4.0),
                    max_iter=1)
    assert not fit.converged and fit.iterations == 1
    with pytest.raises(FitError):
        derive_verdict(fit)


def _fake_fit(geometry, cov2):
    data = _noiseless("imaging", geometry)
    fit = fit_curve(data, "imaging", geometry, TRUTH["imaging"])
    cov = np.zeros((5, 5))
    cov[:2, :2] = cov2
    return dataclasses.replace(fit, covariance=cov)


def test_derive_verdict_reference_values(geometry):
    pair, verdict = derive_verdict(_fake_fit(geometry, np.diag([1e-6, 1e-4])))
    assert verdict.product == pytest.approx(0.000208, rel=5e-3)
    assert verdict.entangled and verdict.steerable


def test_derive_verdict_error_propagation(geometry):
    _, zero = derive_verdict(_fake_fit(geometry, np.zeros((2, 2))))
    assert zero.product_err == 0
    cov = np.array([[0.04, -0.3], [-0.3, 9.0]])
    _, base = derive_verdict(_fake_fit(geometry, cov))
    _, big = derive_verdict(_fake_fit(geometry, 100 * cov))
    assert big.product_err == pytest.approx(10 * base.product_err, rel=1e-12)


def test_derive_verdict_uses_cross_covariance(geometry):
    # product ~ (sp / sm)^2: positive sp-sm correlation partly cancels
    _, pos = derive_verdict(_fake_fit(geometry, np.array([[0.04, 0.5], [0.5, 9.0]])))
    _, none = derive_verdict(_fake_fit(geometry, np.array([[0.04, 0.0], [0.0, 9.0]])))
    _, neg = derive_verdict(_fake_fit(geometry, np.array([[0.04, -0.5], [-0.5, 9.0]])))
    assert pos.product_err < none.product_err < neg.product_err
    sp, sm = 1.489, 51.63
    p = (sp / (2 * sm)) ** 2
    g = np.array([2 * p / sp, -2 * p / sm])
    ref = np.sqrt(g @ np.array([[0.04, 0.5], [0.5, 9.0]]) @ g)
    assert pos.product_err == pytest.approx(ref, rel=1e-3)


def test_fit_is_deterministic(geometry):
    cfg, scan = _poisson("interference")
    _, a = run_fit(cfg, scan)
    _, b = run_fit(cfg, scan)
    assert np.array_equal(a.params.as_array(), b.params.as_array())
    assert np.array_equal(a.covariance, b.covariance)
