"""Closed-form two-photon coincidence curves.

Each curve is the squared modulus of a transverse two-photon amplitude
with Alice's detector on axis. The shapes are scaled so that the same
source without the block (``wb = 0``) peaks at exactly 1; constant
prefactors that depend only on the widths are dropped because any overall
constant is carried by the fitted amplitude.
"""

import math
from dataclasses import dataclass

import numpy as np

from .domain import (CorrelationParams, ExperimentGeometry, ModelKind,
                     object_transmittance, object_transmittance_ft)
from .exceptions import DomainError, EvaluationError
from .special import erfc_real, scaled_erfc

__all__ = [
    "CurveRequest",
    "interference_shape",
    "imaging_shape",
    "ideal_interference_shape",
    "ideal_imaging_shape",
    "ghost_interference_g2",
    "ghost_imaging_g2",
    "ideal_interference_g2",
    "ideal_imaging_g2",
    "model_values",
    "evaluate_curve",
]

PI = math.pi


def _require_finite(name, arr):
    arr = np.asarray(arr)
    ok = np.isfinite(arr.real) & np.isfinite(arr.imag) if np.iscomplexobj(arr) else np.isfinite(arr)
    if not np.all(ok):
        idx = int(np.flatnonzero(~np.ravel(ok))[0])
        raise EvaluationError(f"non-finite value in {name} at element {idx}",
                              term=name, index=idx)


def interference_shape(x, geometry, sigma_plus, sigma_minus):
    """Ghost-interference coincidence shape at offset ``x`` (mm) from centre.

    Gaussian prefactor times ``|erfc(A-) + erfc(A+)|^2`` with the complex
    arguments ``A-+ = (f_b w_b D -+ 2i f^2 pi (s+^2 - 4 s-^2) w0^2 lambda x) /
    (2 f f_b w0 lambda sqrt(S D))``, ``S = s+^2 + 4 s-^2`` and
    ``D = 8 pi^2 w0^2 + f^2 S lambda^2``. The prefactor exponent is folded
    into each erfc so the product never overflows.
    """
    g = geometry
    sp2, sm2 = sigma_plus ** 2, sigma_minus ** 2
    lam, w0 = g.wavelength, g.w0
    x = np.asarray(x, dtype=float)

    S = sp2 + 4.0 * sm2
    D = 8.0 * PI ** 2 * w0 ** 2 + g.f ** 2 * S * lam ** 2
    gauss = -(g.f ** 2 * x ** 2 * (PI ** 2 * S * w0 ** 2 + 2.0 * g.f ** 2 * sp2 * sm2 * lam ** 2)
              / (g.f_b ** 2 * D))
    _require_finite("gaussian prefactor exponent", gauss)

    den = 2.0 * g.f * g.f_b * w0 * lam * math.sqrt(S * D)
    re = g.f_b * g.wb * D / den
    im = 2.0 * g.f ** 2 * PI * (sp2 - 4.0 * sm2) * w0 ** 2 * lam * x / den
    a_minus = re - 1j * im
    a_plus = re + 1j * im
    _require_finite("erfc argument", a_plus)

    amp = 0.5 * (scaled_erfc(a_minus, gauss) + scaled_erfc(a_plus, gauss))
    out = np.abs(amp) ** 2
    _require_finite("interference curve", out)
    return out


def imaging_shape(x, geometry, sigma_plus, sigma_minus):
    """Ghost-imaging coincidence shape at offset ``x`` (mm) from centre.

    Gaussian prefactor times ``(2 - erf(B1) - erf(B2))^2``. The bracket is
    evaluated as ``erfc(B1) + erfc(B2)``, the same quantity without the
    cancellation inside the dip.
    """
    g = geometry
    sp, sm = sigma_plus, sigma_minus
    sp2, sm2 = sp ** 2, sm ** 2
    lam, w0, wb = g.wavelength, g.w0, g.wb
    x = np.asarray(x, dtype=float)

    S = sp2 + 4.0 * sm2
    E = 2.0 * PI ** 2 * S * w0 ** 2 + 4.0 * g.f ** 2 * sp2 * sm2 * lam ** 2
    gauss = -(2.0 * PI ** 2 * x ** 2 * (8.0 * PI ** 2 * w0 ** 2 + g.f ** 2 * S * lam ** 2)
              / (g.f ** 2 * lam ** 2 * E))
    _require_finite("gaussian prefactor exponent", gauss)

    den = 4.0 * g.f * g.f_a * sp * sm * w0 * lam * math.sqrt(E)
    common = 4.0 * g.f ** 2 * g.f_a * sp2 * sm2 * wb * lam ** 2
    b1 = (2.0 * g.f_a * PI ** 2 * w0 ** 2 * (4.0 * sm2 * (wb - 2.0 * x) + sp2 * (wb + 2.0 * x))
          + common) / den
    b2 = (2.0 * g.f_a * PI ** 2 * w0 ** 2 * (4.0 * sm2 * (wb + 2.0 * x) + sp2 * (wb - 2.0 * x))
          + common) / den
    _require_finite("erf argument", b1)
    _require_finite("erf argument", b2)

    amp = np.exp(gauss) * 0.5 * (erfc_real(b1) + erfc_real(b2))
    out = np.square(amp)
    _require_finite("imaging curve", out)
    return out


def ideal_interference_shape(x, geometry):
    """``|T~(q)|^2 / (pi w0^2)`` at ``q = 2 pi x / (lambda f_b)``.

    The relay maps Bob's position to the object-plane frequency
    ``(2 pi / (lambda f)) (f / f_b) x``.
    """
    g = geometry
    q = 2.0 * PI * np.asarray(x, dtype=float) / (g.wavelength * g.f_b)
    ft = object_transmittance_ft(q, g.w0, g.wb)
    return np.abs(ft) ** 2 / (PI * g.w0 ** 2)


def ideal_imaging_shape(x, geometry):
    """The object itself, mirrored: ``|T(-x)|^2``."""
    t = object_transmittance(-np.asarray(x, dtype=float), geometry.w0, geometry.wb)
    return np.square(t)


def _scaled(shape, params):
    out = params.amplitude * shape + params.background
    return out[()] if np.ndim(out) == 0 else out


def ghost_interference_g2(rho_b, geometry, params):
    x = np.asarray(rho_b, dtype=float) - params.center
    return _scaled(interference_shape(x, geometry, params.sigma_plus, params.sigma_minus), params)


def ghost_imaging_g2(rho_b, geometry, params):
    x = np.asarray(rho_b, dtype=float) - params.center
    return _scaled(imaging_shape(x, geometry, params.sigma_plus, params.sigma_minus), params)


def ideal_interference_g2(rho_b, geometry, params=None):
    if params is None:
        return ideal_interference_shape(rho_b, geometry)
    x = np.asarray(rho_b, dtype=float) - params.center
    return _scaled(ideal_interference_shape(x, geometry), params)


def ideal_imaging_g2(rho_b, geometry, params=None):
    if params is None:
        return ideal_imaging_shape(rho_b, geometry)
    x = np.asarray(rho_b, dtype=float) - params.center
    return _scaled(ideal_imaging_shape(x, geometry), params)


_MODELS = {
    ModelKind.INTERFERENCE: ghost_interference_g2,
    ModelKind.IMAGING: ghost_imaging_g2,
    ModelKind.IDEAL_INTERFERENCE: ideal_interference_g2,
    ModelKind.IDEAL_IMAGING: ideal_imaging_g2,
}


def model_values(kind, rho_b, geometry, params):
    """Evaluate the model selected by ``kind`` on an array of positions."""
    return np.asarray(_MODELS[ModelKind.parse(kind)](rho_b, geometry, params), dtype=float)


@dataclass(frozen=True)
class CurveRequest:
    geometry: ExperimentGeometry
    params: CorrelationParams
    kind: ModelKind
    scan: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        scan = tuple(float(v) for v in self.scan)
        if not scan:
            raise DomainError("scan must be non-empty")
        if not all(np.isfinite(scan)):
            raise DomainError("scan positions must be finite")
        if any(b <= a for a, b in zip(scan, scan[1:])):
            raise DomainError("scan positions must be strictly increasing")
        object.__setattr__(self, "scan", scan)


def evaluate_curve(request):
    """Pointwise model values as a list of ``(rho_b, g2)`` pairs."""
    positions = np.array(request.scan)
    fn = _MODELS[request.kind]
    try:
        values = np.asarray(fn(positions, request.geometry, request.params), dtype=float)
    except EvaluationError as exc:
        # locate the offending scan index by re-evaluating pointwise
        for i, rho in enumerate(request.scan):
            try:
                fn(np.array([rho]), request.geometry, request.params)
            except EvaluationError as inner:
                raise EvaluationError(f"scan index {i} (rho_b={rho}): {inner}",
                                      term=inner.term, index=i) from exc
        raise
    values = np.atleast_1d(values)
    bad = ~np.isfinite(values)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise EvaluationError(f"non-finite g2 at scan index {i}", index=i)
    return [(rho, float(v)) for rho, v in zip(request.scan, values)]
