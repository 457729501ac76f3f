"""Brute-force quadrature of the pre-integration correlation integrals.

Ground truth for the closed forms in :mod:`eprghost.models`. Nothing here
uses Gaussian integral identities: the integrands are built from the
envelopes and the object transfer function and integrated numerically.

Quadrature scheme: nested composite 16-point Gauss-Legendre. Each factor
of the integrand (momentum-sum envelope, momentum-difference envelope,
Gaussian object window) is truncated at ``truncation`` of its own standard
deviations; the intersection of those windows, split at the block edges,
is the inner domain. Panel counts are doubled until two successive
estimates agree. Tolerances are relative to the L1 mass of the integrand,
so the peak of a curve carries ``rel_tol`` relative accuracy and tails are
accurate relative to the peak. For the imaging integral (no cancellation
at ``rho_a = 0``) the tolerance is local to each point.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .domain import envelope_minus, envelope_plus, object_transmittance
from .exceptions import ConvergenceError, DomainError

__all__ = [
    "QuadratureSpec",
    "oracle_interference_amplitude",
    "oracle_interference_g2",
    "oracle_imaging_amplitude",
    "oracle_imaging_g2",
]

_GL_X, _GL_W = leggauss(16)
_CHUNK = 4096


@dataclass(frozen=True)
class QuadratureSpec:
    truncation: float = 8.0
    rel_tol: float = 1e-6
    max_evals: int = 400_000_000

    def __post_init__(self):
        if not self.truncation >= 4:
            raise DomainError("truncation must be >= 4")
        if not (1e-12 < self.rel_tol < 1e-2):
            raise DomainError("rel_tol must lie in (1e-12, 1e-2)")
        if not (isinstance(self.max_evals, (int, np.integer)) and self.max_evals > 0):
            raise DomainError("max_evals must be a positive integer")


def _panel_rule(lo, hi, panels):
    """Composite Gauss-Legendre nodes/weights for rows of intervals.

    ``lo``/``hi`` have shape (n,); empty rows (hi <= lo) get zero weights.
    Returns arrays of shape (n, panels * 16).
    """
    lo = np.asarray(lo, dtype=float)[:, None, None]
    hi = np.asarray(hi, dtype=float)[:, None, None]
    width = np.maximum(hi - lo, 0.0) / panels
    starts = lo + width * np.arange(panels)[None, :, None]
    nodes = starts + 0.5 * (_GL_X[None, None, :] + 1.0) * width
    weights = 0.5 * _GL_W[None, None, :] * width * np.ones_like(starts)
    n = nodes.shape[0]
    return nodes.reshape(n, -1), weights.reshape(n, -1)


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0
        # latest (estimate, error bound) pair, reported if the budget runs out
        self.best = (None, None)

    def spend(self, n):
        self.used += int(n)
        if self.used > self.limit:
            estimate, error = self.best
            raise ConvergenceError(
                f"quadrature budget of {self.limit} evaluations exhausted",
                estimate=estimate, error_bound=error)


def _inner(xo, windows, integrand, panels, budget):
    """Inner integrals at outer nodes ``xo`` -> (value, L1 mass)."""
    val = np.zeros(xo.shape, dtype=complex)
    mass = np.zeros(xo.shape, dtype=float)
    for start in range(0, xo.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        xs = xo[sl]
        for lo, hi in windows(xs):
            nodes, weights = _panel_rule(lo, hi, panels)
            budget.spend(nodes.size)
            f = integrand(xs[:, None], nodes) * weights
            val[sl] += f.sum(axis=1)
            mass[sl] += np.abs(f).sum(axis=1)
    return val, mass


def _converged_inner(xo, windows, integrand, quad, budget, local):
    """Double the inner panel count until every node is converged.

    With ``local`` the criterion is relative to each node's own mass,
    otherwise to the largest mass among the nodes.
    """
    panels = 2
    prev, _ = _inner(xo, windows, integrand, panels, budget)
    while True:
        panels *= 2
        cur, mass = _inner(xo, windows, integrand, panels, budget)
        err = np.abs(cur - prev)
        scale = mass if local else np.full_like(mass, mass.max(initial=0.0))
        tol = 0.1 * quad.rel_tol * scale + 1e-300
        if np.all(err <= tol):
            return cur, mass, panels, err
        budget.best = (cur, float(err.max()))
        if budget.used * 2 > budget.limit:
            raise ConvergenceError("inner quadrature did not converge within budget",
                                   estimate=cur, error_bound=float(err.max()))
        prev = cur


def _outer(bounds, windows, integrand, freqs, quad, budget, panels0):
    """Fourier-type outer integral ``int dx F(x) exp(-i freq x)`` for each
    frequency, where ``F`` is the inner integral. Returns (values, errors,
    L1 mass)."""
    lo, hi = bounds
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    panels = max(8, int(panels0))
    inner_panels = None

    def level(p):
        nonlocal inner_panels
        nodes, weights = _panel_rule(np.array([lo]), np.array([hi]), p)
        nodes, weights = nodes[0], weights[0]
        if inner_panels is None:
            vals, _, inner_panels, _ = _converged_inner(
                nodes, windows, integrand, quad, budget, local=False)
        else:
            vals, _ = _inner(nodes, windows, integrand, inner_panels, budget)
        fw = vals * weights
        out = np.empty(freqs.size, dtype=complex)
        for start in range(0, nodes.size, _CHUNK * 8):
            sl = slice(start, start + _CHUNK * 8)
            phase = np.exp(-1j * np.outer(freqs, nodes[sl]))
            if start == 0:
                out[:] = phase @ fw[sl]
            else:
                out += phase @ fw[sl]
        return out, float(np.abs(fw).sum())

    prev, _ = level(panels)
    while True:
        panels *= 2
        cur, mass = level(panels)
        err = np.abs(cur - prev)
        if np.all(err <= quad.rel_tol * mass):
            return cur, err, mass
        budget.best = (cur, float(err.max()))
        if budget.used * 2 > budget.limit:
            raise ConvergenceError("outer quadrature did not converge within budget",
                                   estimate=cur, error_bound=float(err.max()))
        prev = cur


def _check_widths(sigma_plus, sigma_minus):
    for name, s in (("sigma_plus", sigma_plus), ("sigma_minus", sigma_minus)):
        if not (math.isfinite(s) and s > 0):
            raise DomainError(f"{name} must be finite and > 0")


class _Setup:
    """Per-call constants shared by the integrands."""

    def __init__(self, geometry, sigma_plus, sigma_minus, quad, rho_a):
        _check_widths(sigma_plus, sigma_minus)
        self.g = geometry
        self.sp = float(sigma_plus)
        self.sm = float(sigma_minus)
        self.L = float(quad.truncation)
        self.a = geometry.k_scale              # kappa_s = a * rho_o
        self.c = self.a * geometry.wb / 2.0    # block edge in kappa_s
        self.s_obj = self.a * geometry.w0 / math.sqrt(2.0)
        self.gamma = geometry.f / geometry.f_a * float(rho_a)

    def integrand_lab(self, k_as, k_s):
        """Amplitude integrand in (kappa_s, kappa_as); kappa_+- = kappa_s +- kappa_as."""
        val = (envelope_plus(k_s + k_as, self.sp)
               * envelope_minus((k_s - k_as) / 2.0, self.sm)
               * object_transmittance(k_s / self.a, self.g.w0, self.g.wb))
        if self.gamma:
            return val * np.exp(-1j * self.gamma * k_s)
        return val.astype(complex)

    def windows_lab(self, k_as):
        L = self.L
        lo = np.maximum.reduce([-k_as - L * self.sp,
                                k_as - 2.0 * L * self.sm,
                                np.full_like(k_as, -L * self.s_obj)])
        hi = np.minimum.reduce([-k_as + L * self.sp,
                                k_as + 2.0 * L * self.sm,
                                np.full_like(k_as, L * self.s_obj)])
        return [(lo, np.minimum(hi, -self.c)), (np.maximum(lo, self.c), hi)]

    def outer_lab(self):
        L = self.L
        K = min(L * self.s_obj + L * self.sp,
                L * self.s_obj + 2.0 * L * self.sm,
                0.5 * (L * self.sp + 2.0 * L * self.sm))
        return -K, K


def oracle_interference_amplitude(rho_a, rho_b, geometry, sigma_plus, sigma_minus,
                                  quad=None, coordinates="lab"):
    """Complex two-photon amplitude for ghost interference.

    ``coordinates="lab"`` integrates over (kappa_s, kappa_as) with the
    rho_b-independent inner integral shared by every scan point;
    ``"rotated"`` integrates over (kappa_+, kappa_-) with the Jacobian 1/2.
    Returns ``(amplitude, error_bound)`` arrays shaped like ``rho_b``.
    """
    quad = quad or QuadratureSpec()
    st = _Setup(geometry, sigma_plus, sigma_minus, quad, rho_a)
    rho_b = np.asarray(rho_b, dtype=float)
    betas = np.ravel(geometry.f / geometry.f_b * rho_b)
    budget = _Budget(quad.max_evals)

    if coordinates == "lab":
        lo, hi = st.outer_lab()
        panels0 = (hi - lo) * np.max(np.abs(betas), initial=0.0) / (2.0 * math.pi)
        amp, err, _ = _outer((lo, hi), st.windows_lab, st.integrand_lab,
                             betas, quad, budget, panels0)
    elif coordinates == "rotated":
        amp = np.empty(betas.size, dtype=complex)
        err = np.empty(betas.size)
        for j, beta in enumerate(betas):
            amp[j], err[j] = _rotated_point(st, beta, quad, budget)
    else:
        raise DomainError("coordinates must be 'lab' or 'rotated'")
    return amp.reshape(rho_b.shape), err.reshape(rho_b.shape)


def _rotated_point(st, beta, quad, budget):
    L = st.L

    def integrand(k_minus, k_plus):
        k_s = 0.5 * (k_plus + k_minus)
        val = (0.5 * envelope_plus(k_plus, st.sp)
               * envelope_minus(k_minus / 2.0, st.sm)
               * object_transmittance(k_s / st.a, st.g.w0, st.g.wb))
        return val * np.exp(-0.5j * beta * k_plus - 1j * st.gamma * k_s)

    def windows(k_minus):
        lo = np.maximum(-L * st.sp, -k_minus - 2.0 * L * st.s_obj)
        hi = np.minimum(L * st.sp, -k_minus + 2.0 * L * st.s_obj)
        return [(lo, np.minimum(hi, -k_minus - 2.0 * st.c)),
                (np.maximum(lo, -k_minus + 2.0 * st.c), hi)]

    K = min(2.0 * L * st.sm, 2.0 * L * st.s_obj + L * st.sp)
    panels0 = 2.0 * K * abs(beta) / (4.0 * math.pi)
    # outer phase exp(+i beta kappa_- / 2)
    amp, err, _ = _outer((-K, K), windows, integrand, [-0.5 * beta], quad, budget, panels0)
    return amp[0], err[0]


def oracle_interference_g2(rho_a, rho_b, geometry, sigma_plus, sigma_minus,
                           quad=None, coordinates="lab"):
    """``|amplitude|^2`` of the ghost-interference integral (absolute scale,
    normalised envelopes, constant phase factors dropped)."""
    amp, _ = oracle_interference_amplitude(rho_a, rho_b, geometry, sigma_plus,
                                           sigma_minus, quad, coordinates)
    out = np.abs(amp) ** 2
    return out[()] if out.ndim == 0 else out


def oracle_imaging_amplitude(rho_a, rho_b, geometry, sigma_plus, sigma_minus, quad=None):
    """Ghost-imaging amplitude after the delta function pins
    ``kappa_as = 2 pi rho_b / (lambda f)``; the remaining integral over
    kappa_s is done per point. Returns ``(amplitude, error_bound)``."""
    quad = quad or QuadratureSpec()
    st = _Setup(geometry, sigma_plus, sigma_minus, quad, rho_a)
    rho_b = np.asarray(rho_b, dtype=float)
    k_as = np.ravel(st.a * rho_b)
    budget = _Budget(quad.max_evals)
    vals, _, _, err = _converged_inner(k_as, st.windows_lab, st.integrand_lab,
                                       quad, budget, local=True)
    # quadratic phase of Bob's far-field transfer function, G(|k|)[-cf/omega]
    chirp = np.exp(-0.5j * geometry.wavelength * geometry.f / (2.0 * math.pi) * k_as ** 2)
    return (vals * chirp).reshape(rho_b.shape), err.reshape(rho_b.shape)


def oracle_imaging_g2(rho_a, rho_b, geometry, sigma_plus, sigma_minus, quad=None):
    amp, _ = oracle_imaging_amplitude(rho_a, rho_b, geometry, sigma_plus, sigma_minus, quad)
    out = np.abs(amp) ** 2
    return out[()] if out.ndim == 0 else out
