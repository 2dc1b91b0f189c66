"""Run configuration: INI parsing, validation and detector-layout builders.

Configuration files are flat key-value INI sections.  Unknown sections or
keys are hard errors: a typo in a physics run must fail loudly, not silently
fall back to a default.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace

from .correlators import DetectorConfiguration, OracleControls
from .geometry import BtzBackground, StaticDetector, radius_at_distance
from .quadrature import ImageSumControls, QuadratureControls

__all__ = [
    "ConfigError",
    "RunConfig",
    "NumericsConfig",
    "SweepSpec",
    "build_triangle",
    "build_line",
    "build_configuration",
    "parse_config",
    "parse_vary",
    "DEFAULT_LAMBDA_EVAL",
    "DEFAULT_LAMBDA_COMPANION",
]

DEFAULT_LAMBDA_EVAL = 1e-3
DEFAULT_LAMBDA_COMPANION = 10.0 ** -2.75

_GEOMETRIES = ("triangle", "line")
_SWEEPABLE = ("mass", "d_horizon", "omega", "ell", "spacing")


class ConfigError(ValueError):
    """A configuration file or flag is malformed."""


@dataclass(frozen=True)
class NumericsConfig:
    """Every numerical knob of a run, hashed into the result cache key."""

    quad: QuadratureControls = QuadratureControls()
    images: ImageSumControls = ImageSumControls()
    lambda_eval: float = DEFAULT_LAMBDA_EVAL
    lambda_companion: float = DEFAULT_LAMBDA_COMPANION
    epsilons: tuple = (0.08, 0.04, 0.02)
    oracle_panels: int = 400
    oracle_order: int = 8
    oracle_window: float = 8.0

    def oracle_controls(self) -> OracleControls:
        return OracleControls(
            epsilons=self.epsilons,
            panels=self.oracle_panels,
            order=self.oracle_order,
            window=self.oracle_window,
        )

    def key_fields(self) -> dict:
        return {
            "tol_rel": self.quad.tol_rel,
            "tol_abs": self.quad.tol_abs,
            "max_subdivisions": self.quad.max_subdivisions,
            "image_tol_rel": self.images.tol_rel,
            "image_tol_abs": self.images.tol_abs,
            "image_consecutive_small": self.images.consecutive_small,
            "image_n_cap": self.images.n_cap,
        }


@dataclass(frozen=True)
class RunConfig:
    """One fully specified evaluation point."""

    ell: float = 10.0
    mass: float = 0.01
    zeta: int = 1
    omega: float = 1.0
    geometry: str = "triangle"
    d_horizon: float = 1.0       # triangle: common proper distance from horizon
    d_horizon_a: float = 1.0     # line: proper distance of the innermost detector
    spacing: float = 1.0         # line: proper distance between neighbours
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    out_path: str = ""
    out_format: str = "csv"

    def background(self) -> BtzBackground:
        return BtzBackground(ell=self.ell, mass=self.mass, zeta=self.zeta)


@dataclass(frozen=True)
class SweepSpec:
    """A one-parameter grid: name, bounds, point count and axis scale."""

    parameter: str
    minimum: float
    maximum: float
    steps: int
    scale: str = "linear"

    def __post_init__(self):
        if self.parameter not in _SWEEPABLE:
            raise ConfigError(f"cannot sweep {self.parameter!r}; pick one of {_SWEEPABLE}")
        if not self.minimum < self.maximum:
            raise ConfigError("sweep requires min < max")
        if self.steps < 2:
            raise ConfigError("sweep requires at least 2 steps")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"sweep scale must be linear or log, got {self.scale!r}")
        if self.scale == "log" and self.minimum <= 0.0:
            raise ConfigError("log sweep requires positive bounds")

    def values(self) -> list:
        n = self.steps
        if self.scale == "log":
            lo, hi = math.log(self.minimum), math.log(self.maximum)
            return [math.exp(lo + (hi - lo) * i / (n - 1)) for i in range(n)]
        return [self.minimum + (self.maximum - self.minimum) * i / (n - 1) for i in range(n)]

    def apply(self, rc: RunConfig, value: float) -> RunConfig:
        if self.parameter == "mass":
            return replace(rc, mass=value)
        if self.parameter == "omega":
            return replace(rc, omega=value)
        if self.parameter == "ell":
            return replace(rc, ell=value)
        if self.parameter == "spacing":
            if rc.geometry != "line":
                raise ConfigError("spacing only applies to the line geometry")
            return replace(rc, spacing=value)
        # d_horizon: the triangle's common distance, or the innermost
        # detector's distance in the line layout
        if rc.geometry == "line":
            return replace(rc, d_horizon_a=value)
        return replace(rc, d_horizon=value)


def build_triangle(bg: BtzBackground, d_horizon: float, omega: float) -> DetectorConfiguration:
    """Three detectors at one radius, 2 pi/3 apart in angle.

    The common radius sits a proper distance ``d_horizon`` outside the
    horizon.
    """
    if not d_horizon > 0.0:
        raise ValueError(f"d_horizon must be positive, got {d_horizon}")
    radius = radius_at_distance(bg, bg.r_h, d_horizon)
    detectors = tuple(
        StaticDetector(bg, radius, phi, omega)
        for phi in (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)
    )
    return DetectorConfiguration(background=bg, detectors=detectors)


def build_line(bg: BtzBackground, d_horizon_a: float, spacing: float,
               omega: float) -> DetectorConfiguration:
    """Three detectors on one radial ray at equal proper spacing.

    Detector A sits ``d_horizon_a`` outside the horizon, B a further
    ``spacing`` out, C another ``spacing`` beyond B.
    """
    if not d_horizon_a >= 0.01:
        raise ValueError(f"d_horizon_a must be at least 0.01, got {d_horizon_a}")
    if not spacing > 0.0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    r_a = radius_at_distance(bg, bg.r_h, d_horizon_a)
    r_b = radius_at_distance(bg, r_a, spacing)
    r_c = radius_at_distance(bg, r_b, spacing)
    detectors = tuple(StaticDetector(bg, r, 0.0, omega) for r in (r_a, r_b, r_c))
    return DetectorConfiguration(background=bg, detectors=detectors)


def build_configuration(rc: RunConfig) -> DetectorConfiguration:
    bg = rc.background()
    if rc.geometry == "triangle":
        return build_triangle(bg, rc.d_horizon, rc.omega)
    if rc.geometry == "line":
        return build_line(bg, rc.d_horizon_a, rc.spacing, rc.omega)
    raise ConfigError(f"unknown geometry {rc.geometry!r}")


# ---------------------------------------------------------------------------
# INI parsing
# ---------------------------------------------------------------------------

_SCHEMA = {
    "background": {
        "ell": float,
        "mass": float,
        "zeta": int,
    },
    "detectors": {
        "geometry": str,
        "omega": float,
        "d_horizon": float,
        "d_horizon_a": float,
        "spacing": float,
    },
    "numerics": {
        "tol_rel": float,
        "tol_abs": float,
        "max_subdivisions": int,
        "image_tol_rel": float,
        "image_tol_abs": float,
        "image_consecutive_small": int,
        "image_n_cap": int,
        "lambda_eval": float,
        "lambda_companion": float,
        "epsilons": str,
        "oracle_panels": int,
        "oracle_order": int,
        "oracle_window": float,
    },
    "output": {
        "path": str,
        "format": str,
    },
}


def _convert(section: str, key: str, raw: str):
    try:
        return _SCHEMA[section][key](raw)
    except ValueError as err:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {err}") from err


def parse_config(path: str) -> RunConfig:
    """Read a run configuration from an INI file, rejecting unknown keys."""
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read configuration file {path!r}")

    values: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}] in {path}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}] of {path}")
            values[(section, key)] = _convert(section, key, raw)

    quad_kwargs = {}
    for name in ("tol_rel", "tol_abs", "max_subdivisions"):
        if ("numerics", name) in values:
            quad_kwargs[name] = values.pop(("numerics", name))
    image_kwargs = {}
    for src, dst in (
        ("image_tol_rel", "tol_rel"),
        ("image_tol_abs", "tol_abs"),
        ("image_consecutive_small", "consecutive_small"),
        ("image_n_cap", "n_cap"),
    ):
        if ("numerics", src) in values:
            image_kwargs[dst] = values.pop(("numerics", src))

    num_kwargs = {
        "quad": QuadratureControls(**quad_kwargs),
        "images": ImageSumControls(**image_kwargs),
    }
    for name in ("lambda_eval", "lambda_companion", "oracle_panels",
                 "oracle_order", "oracle_window"):
        if ("numerics", name) in values:
            num_kwargs[name] = values.pop(("numerics", name))
    if ("numerics", "epsilons") in values:
        raw = values.pop(("numerics", "epsilons"))
        try:
            num_kwargs["epsilons"] = tuple(float(tok) for tok in raw.split(",") if tok.strip())
        except ValueError as err:
            raise ConfigError(f"epsilons must be comma-separated floats, got {raw!r}") from err

    rc_kwargs: dict = {"numerics": NumericsConfig(**num_kwargs)}
    for (section, key), value in values.items():
        if section == "background":
            rc_kwargs[key] = value
        elif section == "detectors":
            rc_kwargs[key] = value
        elif section == "output":
            rc_kwargs["out_path" if key == "path" else "out_format"] = value

    rc = RunConfig(**rc_kwargs)
    if rc.geometry not in _GEOMETRIES:
        raise ConfigError(f"geometry must be one of {_GEOMETRIES}, got {rc.geometry!r}")
    try:
        rc.background()
    except ValueError as err:
        raise ConfigError(str(err)) from err
    return rc


def parse_vary(text: str) -> SweepSpec:
    """Parse a sweep flag of the form name:min:max:steps[:log]."""
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise ConfigError(f"--vary expects name:min:max:steps[:log], got {text!r}")
    name, lo, hi, steps = parts[:4]
    scale = parts[4] if len(parts) == 5 else "linear"
    try:
        return SweepSpec(name, float(lo), float(hi), int(steps), scale)
    except ValueError as err:
        raise ConfigError(f"bad --vary {text!r}: {err}") from err
