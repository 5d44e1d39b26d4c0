import csv
from pathlib import Path
from typing import Any, Dict, List

from uowc_offset.config import REFERENCE_PARAMS, SystemParams, validate_params


def make_params(**overrides: Any) -> SystemParams:
    """Reference record with `overrides` applied; angle overrides in degrees use the `_deg` key."""
    raw = dict(REFERENCE_PARAMS)
    for key in overrides:
        if key == "phi_half":
            raw.pop("phi_half_deg")
        if key == "fov_semi_angle":
            raw.pop("fov_semi_angle_deg")
    raw.update(overrides)
    return validate_params(raw)


def dark_limited(**overrides: Any) -> SystemParams:
    """Reference parameters without sunlight, so the receiver is dark-current limited."""
    return make_params(solar_surface_irradiance=0.0, **overrides)


def read_csv(path: str | Path) -> List[Dict[str, str]]:
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def parse_cell(text: str) -> Any:
    """Inverse of `output.format_value` for the types reports contain."""
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text
