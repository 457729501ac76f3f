"""Run configuration (YAML or JSON key-value tree).

Schema::

    geometry:            # required
      f: 400.0           # mm, relay lens
      f_a: 13.5          # mm, Alice objective
      f_b: 25.4          # mm, Bob lens
      wavelength: 7.95e-4  # mm (placeholder default)
      w0: 1.6            # mm, object-plane envelope (placeholder default)
      wb: 1.23           # mm, block width
    mode: interference   # or imaging
    scan: {min: -0.03, max: 0.03, step: 0.001}   # mm
    seed: 42
    quadrature: {truncation: 8, rel_tol: 1.0e-6, max_evals: 400000000}
"""

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import yaml

from .domain import PLACEHOLDER_FIELDS, ExperimentGeometry, ModelKind
from .exceptions import ConfigError, DomainError
from .oracle import QuadratureSpec

log = logging.getLogger(__name__)

__all__ = ["RunConfig", "DEFAULT_SCANS", "load_config", "config_from_dict", "scan_grid"]

MAX_SCAN_POINTS = 100_000

DEFAULT_SCANS = {
    ModelKind.INTERFERENCE: (-0.03, 0.03, 0.001),
    ModelKind.IMAGING: (-3.0, 3.0, 0.1),
    ModelKind.IDEAL_INTERFERENCE: (-0.03, 0.03, 0.001),
    ModelKind.IDEAL_IMAGING: (-3.0, 3.0, 0.1),
}


@dataclass(frozen=True)
class RunConfig:
    geometry: ExperimentGeometry = field(default_factory=ExperimentGeometry)
    mode: ModelKind = ModelKind.INTERFERENCE
    scan_min: float = None
    scan_max: float = None
    scan_step: float = None
    seed: int = 42
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    placeholders: tuple = PLACEHOLDER_FIELDS

    def __post_init__(self):
        object.__setattr__(self, "mode", ModelKind.parse(self.mode))
        # unset scan fields fall back to the default grid for the mode
        for name, value in zip(("scan_min", "scan_max", "scan_step"), DEFAULT_SCANS[self.mode]):
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        if not (math.isfinite(self.scan_min) and math.isfinite(self.scan_max)):
            raise ConfigError("scan bounds must be finite", field="scan", rule="finite")
        if not self.scan_min < self.scan_max:
            raise ConfigError("scan.min must be below scan.max", field="scan",
                              rule="scan_min < scan_max")
        if not self.scan_step > 0:
            raise ConfigError("scan.step must be positive", field="scan.step",
                              rule="scan_step > 0")
        if (self.scan_max - self.scan_min) / self.scan_step > MAX_SCAN_POINTS:
            raise ConfigError("scan has too many points", field="scan.step",
                              rule="(scan_max - scan_min) / scan_step <= 1e5")
        if not (isinstance(self.seed, (int, np.integer)) and self.seed >= 0):
            raise ConfigError("seed must be a non-negative integer", field="seed",
                              rule="seed >= 0")

    def positions(self):
        return scan_grid(self.scan_min, self.scan_max, self.scan_step)

    def with_scan(self, lo, hi, step):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(scan_min=lo, scan_max=hi, scan_step=step)
        return RunConfig(**d)

    def with_mode(self, mode):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["mode"] = mode
        return RunConfig(**d)

    def to_dict(self):
        """Canonical plain-data form (used for hashing)."""
        return {
            "geometry": asdict(self.geometry),
            "mode": self.mode.value,
            "scan": {"min": self.scan_min, "max": self.scan_max, "step": self.scan_step},
            "seed": int(self.seed),
            "quadrature": asdict(self.quad),
            "placeholders": list(self.placeholders),
        }


def scan_grid(lo, hi, step):
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


_GEOMETRY_KEYS = tuple(f.name for f in fields(ExperimentGeometry))
_TOP_KEYS = ("geometry", "mode", "scan", "seed", "quadrature")


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}", field=name, rule="type")
    return float(value)


def config_from_dict(raw):
    """Validate a parsed key-value tree and fill defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping", field="<root>", rule="type")
    for key in raw:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown configuration key {key!r}", field=key, rule="schema")
    if "geometry" not in raw:
        raise ConfigError("missing required section 'geometry'", field="geometry",
                          rule="required")
    geo = raw["geometry"]
    if not isinstance(geo, dict):
        raise ConfigError("geometry must be a mapping", field="geometry", rule="type")
    for key in geo:
        if key not in _GEOMETRY_KEYS:
            raise ConfigError(f"unknown geometry key {key!r}", field=f"geometry.{key}",
                              rule="schema")
    given = {k: _number(v, f"geometry.{k}") for k, v in geo.items()}
    for key, value in given.items():
        if key == "wb":
            if value < 0:
                raise ConfigError("geometry.wb must be >= 0", field="geometry.wb",
                                  rule="wb >= 0")
        elif value <= 0:
            raise ConfigError(f"geometry.{key} must be > 0", field=f"geometry.{key}",
                              rule="positive")
    defaulted = [k for k in _GEOMETRY_KEYS if k not in given]
    try:
        geometry = ExperimentGeometry(**given)
    except DomainError as exc:
        raise ConfigError(str(exc), field="geometry", rule="paraxial") from exc
    placeholders = tuple(k for k in PLACEHOLDER_FIELDS if k not in given)

    try:
        mode = ModelKind.parse(raw.get("mode", ModelKind.INTERFERENCE))
    except DomainError as exc:
        raise ConfigError(str(exc), field="mode", rule="enum") from exc
    if mode not in (ModelKind.INTERFERENCE, ModelKind.IMAGING):
        raise ConfigError("mode must be interference or imaging", field="mode", rule="enum")
    if "mode" not in raw:
        defaulted.append("mode")

    scan = raw.get("scan")
    lo, hi, step = DEFAULT_SCANS[mode]
    if scan is None:
        defaulted.append("scan")
    else:
        if not isinstance(scan, dict):
            raise ConfigError("scan must be a mapping", field="scan", rule="type")
        for key in scan:
            if key not in ("min", "max", "step"):
                raise ConfigError(f"unknown scan key {key!r}", field=f"scan.{key}",
                                  rule="schema")
        lo = _number(scan.get("min", lo), "scan.min")
        hi = _number(scan.get("max", hi), "scan.max")
        step = _number(scan.get("step", step), "scan.step")

    seed = raw.get("seed", 42)
    if "seed" not in raw:
        defaulted.append("seed")
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed must be an integer", field="seed", rule="type")

    qraw = raw.get("quadrature", {})
    if not isinstance(qraw, dict):
        raise ConfigError("quadrature must be a mapping", field="quadrature", rule="type")
    for key in qraw:
        if key not in ("truncation", "rel_tol", "max_evals"):
            raise ConfigError(f"unknown quadrature key {key!r}", field=f"quadrature.{key}",
                              rule="schema")
    if "quadrature" not in raw:
        defaulted.append("quadrature")
    qkw = {k: _number(v, f"quadrature.{k}") for k, v in qraw.items()}
    if "max_evals" in qkw:
        qkw["max_evals"] = int(qkw["max_evals"])
    try:
        quad = QuadratureSpec(**qkw)
    except DomainError as exc:
        raise ConfigError(str(exc), field="quadrature", rule=str(exc)) from exc

    if defaulted:
        log.info("notice: defaults applied for %s", ", ".join(defaulted))
    if placeholders:
        log.info("notice: geometry %s use placeholder values", ", ".join(placeholders))
    return RunConfig(geometry=geometry, mode=mode, scan_min=lo, scan_max=hi,
                     scan_step=step, seed=seed, quad=quad, placeholders=placeholders)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not well-formed YAML/JSON: {exc}", field="<file>",
                          rule="syntax") from exc
    return config_from_dict(raw)
