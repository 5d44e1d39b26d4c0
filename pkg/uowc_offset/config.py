import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import yaml
from loguru import logger

from uowc_offset.errors import ConfigError, Violation

SOLAR_MODES = ("raw_nm_multiplier", "band_fraction")

# Largest crosstalk probability for which 1 + ln(1 - P_ct) stays positive.
CROSSTALK_LIMIT = 1.0 - math.exp(-1.0)

# Angle fields are radians in SystemParams and degrees in config files.
ANGLE_KEYS = {
    "phi_half": "phi_half_deg",
    "fov_semi_angle": "fov_semi_angle_deg",
}


@dataclass(frozen=True)
class SystemParams:
    """
    Every physical and network constant of a run, validated once.

    Angles are radians, everything else SI apart from `filter_window_nm` and
    `solar_reference_band_nm`, which are nanometres.
    """

    lambda_2d: float
    slab_depth: float
    phi_half: float
    tx_power: float
    extinction: float
    wavelength: float
    aperture_diameter: float
    fov_semi_angle: float
    pde: float
    sipm_gain: float
    crosstalk_prob: float
    dark_current: float
    bandwidth: float
    load_resistance: float
    solar_surface_irradiance: float
    solar_attenuation: float
    solar_direction_factor: float
    solar_reflectance: float
    filter_window_nm: float
    energy_total: float
    deploy_radius: float
    ber_threshold: float
    ptx_max: float
    responsivity_factor: float = 1.0
    filter_transmittance: float = 1.0
    concentrator_index: float = 1.5
    temperature: float = 290.0
    solar_spectral_fraction_mode: str = "raw_nm_multiplier"
    solar_reference_band_nm: float = 1000.0
    ptx_floor: float = 0.01

    @property
    def aperture_radius(self) -> float:
        return self.aperture_diameter / 2.0

    @property
    def aperture_area(self) -> float:
        return math.pi * self.aperture_diameter**2 / 4.0


FIELD_NAMES: Tuple[str, ...] = tuple(f.name for f in dataclasses.fields(SystemParams))
FIELD_DEFAULTS: Dict[str, Any] = {
    f.name: f.default
    for f in dataclasses.fields(SystemParams)
    if f.default is not dataclasses.MISSING
}


def _gt(bound: float) -> Tuple[Callable[[float], bool], str]:
    return (lambda v: v > bound), f"must be > {bound:g}"


def _ge(bound: float) -> Tuple[Callable[[float], bool], str]:
    return (lambda v: v >= bound), f"must be >= {bound:g}"


_RULES: Dict[str, Tuple[Callable[[float], bool], str]] = {
    "lambda_2d": _gt(0.0),
    "slab_depth": _gt(0.0),
    "phi_half": (lambda v: 0.0 < v < math.pi / 2, "must lie strictly inside (0, 90) degrees"),
    "tx_power": _gt(0.0),
    "extinction": _ge(0.0),
    "wavelength": _gt(0.0),
    "aperture_diameter": _gt(0.0),
    "fov_semi_angle": (lambda v: 0.0 < v < math.pi, "must lie strictly inside (0, 180) degrees"),
    "pde": (lambda v: 0.0 < v <= 1.0, "must lie in (0, 1]"),
    "sipm_gain": _gt(0.0),
    "crosstalk_prob": (
        lambda v: 0.0 <= v < CROSSTALK_LIMIT,
        f"must lie in [0, {CROSSTALK_LIMIT:.6f}) so the excess noise factor stays finite",
    ),
    "dark_current": _ge(0.0),
    "bandwidth": _gt(0.0),
    "load_resistance": _gt(0.0),
    "solar_surface_irradiance": _ge(0.0),
    "solar_attenuation": _ge(0.0),
    "solar_direction_factor": _ge(0.0),
    "solar_reflectance": _ge(0.0),
    "filter_window_nm": _gt(0.0),
    "energy_total": _gt(0.0),
    "deploy_radius": _gt(0.0),
    "ber_threshold": (lambda v: 0.0 < v < 0.5, "must lie in (0, 0.5)"),
    "ptx_max": _gt(0.0),
    "responsivity_factor": _gt(0.0),
    "filter_transmittance": (lambda v: 0.0 < v <= 1.0, "must lie in (0, 1]"),
    "concentrator_index": _gt(0.0),
    "temperature": _gt(0.0),
    "solar_reference_band_nm": _gt(0.0),
    "ptx_floor": _gt(0.0),
}

# Reference deployment parameters, in config-file form.
REFERENCE_PARAMS: Dict[str, Any] = {
    "lambda_2d": 0.001,
    "slab_depth": 50.0,
    "phi_half_deg": 60.0,
    "tx_power": 8.0,
    "extinction": 0.151,
    "wavelength": 4.5e-07,
    "aperture_diameter": 0.3,
    "responsivity_factor": 1.0,
    "filter_transmittance": 1.0,
    "concentrator_index": 1.5,
    "fov_semi_angle_deg": 120.0,
    "pde": 0.31,
    "sipm_gain": 1000000.0,
    "crosstalk_prob": 0.08,
    "dark_current": 1.54e-07,
    "bandwidth": 1000000.0,
    "load_resistance": 50.0,
    "temperature": 290.0,
    "solar_surface_irradiance": 1000.0,
    "solar_attenuation": 0.2,
    "solar_direction_factor": 4.0,
    "solar_reflectance": 1.25,
    "filter_window_nm": 50.0,
    "solar_spectral_fraction_mode": "raw_nm_multiplier",
    "solar_reference_band_nm": 1000.0,
    "energy_total": 1000000.0,
    "deploy_radius": 1000.0,
    "ber_threshold": 1e-06,
    "ptx_floor": 0.01,
    "ptx_max": 8.0,
}


def _number(key: str, value: Any, violations: List[Violation]) -> Optional[float]:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        violations.append(Violation(key, f"must be a number, got {value!r}"))
        return None
    if not math.isfinite(value):
        violations.append(Violation(key, "must be finite"))
        return None
    return float(value)


def validate_params(raw: Mapping[str, Any] | SystemParams) -> SystemParams:
    """
    Validate a raw parameter mapping (or re-validate a record).

    Angle fields may be given in radians under their field name or in degrees
    under the `_deg` key. Every problem is collected before raising, so the
    resulting ConfigError lists all offending fields at once.
    """
    if isinstance(raw, SystemParams):
        raw = dataclasses.asdict(raw)

    violations: List[Violation] = []
    values: Dict[str, Any] = {}

    known = set(FIELD_NAMES) | set(ANGLE_KEYS.values())
    for key in raw:
        if key not in known:
            violations.append(Violation(key, "unknown field"))

    for name in FIELD_NAMES:
        degree_key = ANGLE_KEYS.get(name)

        if degree_key is not None and name in raw and degree_key in raw:
            violations.append(Violation(degree_key, f"conflicts with {name}"))
            continue

        if name in raw:
            key, value = name, raw[name]
        elif degree_key is not None and degree_key in raw:
            key, value = degree_key, raw[degree_key]
        elif name in FIELD_DEFAULTS:
            values[name] = FIELD_DEFAULTS[name]
            continue
        else:
            violations.append(Violation(degree_key or name, "missing"))
            continue

        if name == "solar_spectral_fraction_mode":
            if value not in SOLAR_MODES:
                violations.append(
                    Violation(key, f"must be one of {', '.join(SOLAR_MODES)}")
                )
            else:
                values[name] = value
            continue

        number = _number(key, value, violations)
        if number is None:
            continue
        if key == degree_key:
            number = math.radians(number)

        check, reason = _RULES[name]
        if not check(number):
            violations.append(Violation(key, reason))
            continue
        values[name] = number

    if (
        "ptx_floor" in values
        and "ptx_max" in values
        and not values["ptx_floor"] < values["ptx_max"]
    ):
        violations.append(Violation("ptx_floor", "must be < ptx_max"))

    if violations:
        raise ConfigError(violations)

    return SystemParams(**values)


@dataclass(frozen=True)
class LevelPreset:
    level_id: int
    slab_depth: float
    label: str


LEVEL_PRESETS: Dict[int, LevelPreset] = {
    1: LevelPreset(1, 50.0, "short-range, high-density (0-50 m)"),
    2: LevelPreset(2, 500.0, "medium-range (50-500 m)"),
    3: LevelPreset(3, 6000.0, "long-range, sparse (500-6000 m)"),
}


def apply_level(params: SystemParams, preset: LevelPreset | int) -> SystemParams:
    if not isinstance(preset, LevelPreset):
        if preset not in LEVEL_PRESETS:
            raise ConfigError([Violation("level", f"unknown level {preset!r}")])
        preset = LEVEL_PRESETS[preset]

    return dataclasses.replace(params, slab_depth=preset.slab_depth)


def read_config_file(path: str | Path) -> Dict[str, Any]:
    """
    Parse a parameter file. `.json` goes through the JSON parser (YAML 1.1
    reads exponent-only numbers such as 1e-06 as strings), anything else
    through `yaml.safe_load`.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([Violation("config", f"cannot read {path}: {exc}")])

    try:
        if path.suffix.lower() == ".json":
            document = json.loads(text)
        else:
            document = yaml.safe_load(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            [Violation("config", f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}")]
        )
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1} column {mark.column + 1}: " if mark else ""
        raise ConfigError([Violation("config", f"{path}: {where}{exc}")])

    if not isinstance(document, dict):
        raise ConfigError([Violation("config", f"{path}: top level must be a mapping")])

    return document


def load_config(
    path: Optional[str | Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> Tuple[SystemParams, Dict[str, Any]]:
    """
    Resolve the effective parameter mapping (file or reference parameters, then
    overrides) and validate it. Returns the record and the mapping, which is
    what manifests echo.
    """
    raw = dict(REFERENCE_PARAMS) if path is None else read_config_file(path)

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        # An override of an angle replaces whichever spelling the file used.
        for name, degree_key in ANGLE_KEYS.items():
            if key in (name, degree_key):
                raw.pop(name, None)
                raw.pop(degree_key, None)
        raw[key] = value

    params = validate_params(raw)
    logger.debug("Loaded parameters from {}", path or "reference defaults")

    return params, raw
