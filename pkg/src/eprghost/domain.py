"""Physical model: geometry, correlation parameters, envelopes, the object
transfer function and the entanglement / steering classifiers.

Units: lengths in mm, transverse wave numbers in mm^-1, and hbar = 1, so
momenta are reported in hbar*mm^-1 and uncertainty products in hbar^2.
"""

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import DomainError
from .special import scaled_erfc

__all__ = [
    "ExperimentGeometry",
    "CorrelationParams",
    "UncertaintyPair",
    "Verdict",
    "ModelKind",
    "PLACEHOLDER_FIELDS",
    "ENTANGLEMENT_BOUND",
    "STEERING_BOUND",
    "envelope_plus",
    "envelope_minus",
    "transverse_correlation",
    "object_transmittance",
    "object_transmittance_ft",
    "joint_uncertainties",
    "classify",
]

ENTANGLEMENT_BOUND = 1.0
STEERING_BOUND = 0.25

# Geometry fields whose defaults are not measured values.
PLACEHOLDER_FIELDS = ("wavelength", "w0")


class ModelKind(str, enum.Enum):
    INTERFERENCE = "interference"
    IMAGING = "imaging"
    IDEAL_INTERFERENCE = "ideal_interference"
    IDEAL_IMAGING = "ideal_imaging"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace("-", "_"))
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise DomainError(f"unknown model kind {value!r}; expected one of {names}") from None


def _positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer))
            and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class ExperimentGeometry:
    """Optical layout of one run.

    ``f`` relay lens, ``f_a`` Alice objective, ``f_b`` Bob lens focal
    lengths; ``wavelength`` of the (degenerate) photons; ``w0`` the
    object-plane Gaussian envelope half-width; ``wb`` the block width.
    All in mm. ``wb = 0`` means no block.
    """

    f: float = 400.0
    f_a: float = 13.5
    f_b: float = 25.4
    wavelength: float = 7.95e-4
    w0: float = 1.6
    wb: float = 1.23

    def __post_init__(self):
        for name in ("f", "f_a", "f_b", "wavelength", "w0"):
            _positive(name, getattr(self, name))
        if not (math.isfinite(self.wb) and self.wb >= 0):
            raise DomainError(f"wb must be finite and non-negative, got {self.wb!r}")
        for name in ("f", "f_a", "f_b"):
            if self.wavelength / getattr(self, name) >= 1e-3:
                raise DomainError(
                    f"paraxial rule violated: wavelength/{name} must be < 1e-3")

    @property
    def k_scale(self):
        """Transverse wave number per mm at the object plane, 2*pi/(lambda f)."""
        return 2.0 * math.pi / (self.wavelength * self.f)

    def replace(self, **changes):
        return ExperimentGeometry(**{**asdict(self), **changes})


@dataclass(frozen=True)
class CorrelationParams:
    sigma_plus: float
    sigma_minus: float
    amplitude: float = 1.0
    center: float = 0.0
    background: float = 0.0

    def __post_init__(self):
        _positive("sigma_plus", self.sigma_plus)
        _positive("sigma_minus", self.sigma_minus)
        _positive("amplitude", self.amplitude)
        if not math.isfinite(self.center):
            raise DomainError("center must be finite")
        if not (math.isfinite(self.background) and self.background >= 0):
            raise DomainError("background must be finite and non-negative")

    def as_array(self):
        return np.array([self.sigma_plus, self.sigma_minus, self.amplitude,
                         self.center, self.background], dtype=float)

    @classmethod
    def from_array(cls, values):
        sp, sm, a, c, b = (float(v) for v in values)
        return cls(sp, sm, a, c, b)

    def replace(self, **changes):
        return CorrelationParams(**{**asdict(self), **changes})


@dataclass(frozen=True)
class UncertaintyPair:
    """Joint uncertainties with 1-sigma errors.

    ``correlation`` is the correlation coefficient between the errors of
    ``dp_plus`` and ``dx_minus`` (zero when they were estimated
    independently).
    """

    dp_plus: float
    dx_minus: float
    dp_plus_err: float = 0.0
    dx_minus_err: float = 0.0
    correlation: float = 0.0

    def __post_init__(self):
        _positive("dp_plus", self.dp_plus)
        _positive("dx_minus", self.dx_minus)
        for name in ("dp_plus_err", "dx_minus_err"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be finite and >= 0")
        if not (-1.0 <= self.correlation <= 1.0):
            raise DomainError("correlation must lie in [-1, 1]")


@dataclass(frozen=True)
class Verdict:
    product: float
    product_err: float
    entangled: bool = field(init=False)
    steerable: bool = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.product) and self.product >= 0):
            raise DomainError("product must be finite and non-negative")
        object.__setattr__(self, "entangled", bool(self.product < ENTANGLEMENT_BOUND))
        object.__setattr__(self, "steerable", bool(self.product < STEERING_BOUND))


def _check_sigma(name, sigma):
    s = np.asarray(sigma, dtype=float)
    if not np.all(np.isfinite(s)) or np.any(s <= 0):
        raise DomainError(f"{name} must be finite and > 0")
    return s


def _gaussian_envelope(kappa, sigma):
    return (math.pi * sigma ** 2) ** -0.25 * np.exp(-np.square(kappa) / (2.0 * sigma ** 2))


def envelope_plus(kappa_plus, sigma_plus):
    """Momentum-sum envelope, L2-normalised in one dimension."""
    s = _check_sigma("sigma_plus", sigma_plus)
    return _gaussian_envelope(np.asarray(kappa_plus, dtype=float), s)


def envelope_minus(u, sigma_minus):
    """Momentum-difference envelope as a function of its argument ``u``.

    The correlation function evaluates it at ``u = kappa_minus / 2``.
    """
    s = _check_sigma("sigma_minus", sigma_minus)
    return _gaussian_envelope(np.asarray(u, dtype=float), s)


def transverse_correlation(kappa_plus, kappa_minus, sigma_plus, sigma_minus):
    return (envelope_plus(kappa_plus, sigma_plus)
            * envelope_minus(np.asarray(kappa_minus, dtype=float) / 2.0, sigma_minus))


def object_transmittance(rho_o, w0, wb):
    """Gaussian-windowed opaque block; zero on the closed interval |rho| <= wb/2."""
    _check_sigma("w0", w0)
    if not (math.isfinite(wb) and wb >= 0):
        raise DomainError("wb must be finite and non-negative")
    rho = np.asarray(rho_o, dtype=float)
    out = np.where(np.abs(rho) <= wb / 2.0, 0.0, np.exp(-np.square(rho) / w0 ** 2))
    return out[()] if out.ndim == 0 else out


def object_transmittance_ft(q, w0, wb):
    """Fourier transform ``int T(rho) exp(-i q rho) d rho`` of the object.

    Closed form: ``w0 sqrt(pi) exp(-q^2 w0^2/4) Re erfc(wb/(2 w0) + i q w0/2)``,
    evaluated as the average of the two conjugate erfc terms with the
    Gaussian folded into the erfc exponent. The result is real for this
    even object and is returned as a complex array.
    """
    _check_sigma("w0", w0)
    if not (math.isfinite(wb) and wb >= 0):
        raise DomainError("wb must be finite and non-negative")
    q = np.asarray(q, dtype=float)
    u = wb / (2.0 * w0)
    v = q * w0 / 2.0
    log_gauss = -np.square(v)
    zp = u + 1j * v
    zm = u - 1j * v
    total = 0.5 * (scaled_erfc(zp, log_gauss) + scaled_erfc(zm, log_gauss))
    out = np.asarray(w0 * math.sqrt(math.pi) * total, dtype=complex)
    return out[()] if out.ndim == 0 else out


def joint_uncertainties(sigma_plus, sigma_minus, covariance=None):
    """Momentum-sum and position-difference uncertainties from the widths.

    ``dp_plus = sigma_plus / sqrt(2)`` and ``dx_minus = 1 / (sqrt(2) sigma_minus)``.
    ``covariance`` is an optional 2x2 covariance of ``(sigma_plus, sigma_minus)``;
    errors are propagated to first order.
    """
    sp = float(_check_sigma("sigma_plus", sigma_plus))
    sm = float(_check_sigma("sigma_minus", sigma_minus))
    dp = sp / math.sqrt(2.0)
    dx = 1.0 / (math.sqrt(2.0) * sm)
    if covariance is None:
        return UncertaintyPair(dp, dx)
    cov = np.asarray(covariance, dtype=float)
    if cov.shape != (2, 2):
        raise DomainError("covariance must be 2x2 over (sigma_plus, sigma_minus)")
    var_p, var_m = max(cov[0, 0], 0.0), max(cov[1, 1], 0.0)
    dp_err = math.sqrt(var_p) / math.sqrt(2.0)
    # d(dx)/d(sigma_minus) = -1 / (sqrt(2) sigma_minus^2)
    dx_err = math.sqrt(var_m) / (math.sqrt(2.0) * sm ** 2)
    rho = 0.0
    if var_p > 0 and var_m > 0:
        rho = -cov[0, 1] / math.sqrt(var_p * var_m)
        rho = min(1.0, max(-1.0, rho))
    return UncertaintyPair(dp, dx, dp_err, dx_err, rho)


def classify(pair):
    """Product ``(dx_minus dp_plus)^2`` tested against the separability
    (< 1) and steering (< 1/4) bounds, with first-order error."""
    p = (pair.dx_minus * pair.dp_plus) ** 2
    g_dp = 2.0 * pair.dx_minus ** 2 * pair.dp_plus
    g_dx = 2.0 * pair.dp_plus ** 2 * pair.dx_minus
    a = g_dp * pair.dp_plus_err
    b = g_dx * pair.dx_minus_err
    var = a * a + b * b + 2.0 * pair.correlation * a * b
    return Verdict(p, math.sqrt(max(var, 0.0)))
