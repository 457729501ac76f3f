"""Ghost interference and ghost imaging with EPR-correlated photon pairs:
closed-form coincidence curves, a quadrature oracle, curve fitting and
entanglement / steering certification."""

__version__ = "0.1.0"

from .config import RunConfig, load_config
from .domain import (
    CorrelationParams,
    ExperimentGeometry,
    ModelKind,
    UncertaintyPair,
    Verdict,
    classify,
    envelope_minus,
    envelope_plus,
    joint_uncertainties,
    object_transmittance,
    object_transmittance_ft,
    transverse_correlation,
)
from .estimator import CoincidenceNormalizer, GhostCurveRegressor
from .fitting import FitResult, NormalizedScan, ScanData, derive_verdict, fit_curve, normalize_scan
from .models import (
    CurveRequest,
    evaluate_curve,
    ghost_imaging_g2,
    ghost_interference_g2,
    ideal_imaging_g2,
    ideal_interference_g2,
)
from .oracle import QuadratureSpec, oracle_imaging_g2, oracle_interference_g2
from .special import erf_real, erfc_complex, erfc_real, faddeeva

__all__ = [
    "CoincidenceNormalizer", "CorrelationParams", "CurveRequest", "ExperimentGeometry",
    "FitResult", "GhostCurveRegressor", "ModelKind", "NormalizedScan", "QuadratureSpec",
    "RunConfig", "ScanData", "UncertaintyPair", "Verdict", "classify", "derive_verdict",
    "envelope_minus", "envelope_plus", "erf_real", "erfc_complex", "erfc_real",
    "evaluate_curve", "faddeeva", "fit_curve", "ghost_imaging_g2", "ghost_interference_g2",
    "ideal_imaging_g2", "ideal_interference_g2", "joint_uncertainties", "load_config",
    "normalize_scan", "object_transmittance", "object_transmittance_ft",
    "oracle_imaging_g2", "oracle_interference_g2", "transverse_correlation",
]
