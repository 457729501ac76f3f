"""Real and complex error functions.

The complex complementary error function is evaluated through the Faddeeva
function ``w(z) = exp(-z**2) * erfc(-1j*z)``. ``scaled_erfc`` multiplies
erfc by ``exp(log_scale)`` before exponentiating, so products whose factors
overflow separately stay finite.
"""

import numpy as np
from scipy import special as _sp

from .exceptions import DomainError, SpecialFunctionRangeError

__all__ = [
    "erf_real",
    "erfc_real",
    "faddeeva",
    "erfc_complex",
    "scaled_erfc",
]

# exp() overflows above this in double precision
_EXP_MAX = 709.0


def _finite_real(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _finite_complex(z, name="z"):
    arr = np.asarray(z, dtype=complex)
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise DomainError(f"{name} must have finite real and imaginary parts")
    return arr


def _unwrap(arr):
    return arr[()] if arr.ndim == 0 else arr


def erf_real(x):
    """Error function of a finite real argument (array-aware)."""
    return _unwrap(np.asarray(_sp.erf(_finite_real(x))))


def erfc_real(x):
    """Complementary error function of a finite real argument."""
    return _unwrap(np.asarray(_sp.erfc(_finite_real(x))))


def faddeeva(z):
    """Faddeeva function ``w(z) = exp(-z**2) erfc(-iz)``.

    Defined on the whole complex plane; in the lower half-plane ``w`` grows
    like ``2 exp(-z**2)`` and raises :class:`SpecialFunctionRangeError`
    once that factor is not representable.
    """
    z = _finite_complex(z)
    out = np.asarray(_sp.wofz(z))
    bad = ~(np.isfinite(out.real) & np.isfinite(out.imag))
    if np.any(bad):
        zb = z[bad] if z.ndim else z
        raise SpecialFunctionRangeError(
            f"w(z) overflows for z = {np.ravel(zb)[0]!r}")
    return _unwrap(out)


def _log_erfc_parts(z):
    """Return ``(exponent, mantissa, offset)`` with
    ``erfc(z) = offset + exp(exponent) * mantissa``.

    For Re z >= 0 the offset is 0 and ``mantissa = w(iz)``; otherwise the
    reflection ``erfc(z) = 2 - erfc(-z)`` is used so the Faddeeva argument
    always lies in the closed upper half-plane where it is bounded.
    """
    right = z.real >= 0
    zz = np.where(right, z, -z)
    mant = np.asarray(_sp.wofz(1j * zz))
    sign = np.where(right, 1.0, -1.0)
    offset = np.where(right, 0.0, 2.0)
    return -zz * zz, sign * mant, offset


def erfc_complex(z):
    """Complementary error function of a finite complex argument.

    Satisfies ``erfc(conj(z)) == conj(erfc(z))`` and reduces to the real
    erfc on the real axis.
    """
    z = _finite_complex(z)
    expo, mant, offset = _log_erfc_parts(z)
    if np.any(expo.real > _EXP_MAX):
        raise SpecialFunctionRangeError("erfc(z) overflows double precision")
    out = offset + np.exp(expo) * mant
    return _unwrap(np.asarray(out))


def scaled_erfc(z, log_scale):
    """``exp(log_scale) * erfc(z)`` without intermediate overflow.

    ``log_scale`` may be complex. Large Gaussian prefactors (very negative
    ``log_scale``) and large erfc magnitudes cancel inside a single
    exponent, which is what keeps the interference curve finite far from
    its centre.
    """
    z = _finite_complex(z)
    log_scale = np.asarray(log_scale, dtype=complex)
    expo, mant, offset = _log_erfc_parts(z)
    total = log_scale + expo
    if np.any(total.real > _EXP_MAX) or np.any(log_scale.real > _EXP_MAX):
        raise SpecialFunctionRangeError(
            "scaled erfc overflows double precision")
    out = np.exp(total) * mant
    if np.any(offset != 0):
        out = out + offset * np.exp(log_scale)
    return _unwrap(np.asarray(out))
