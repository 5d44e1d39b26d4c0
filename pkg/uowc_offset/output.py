import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

import arrow
import numpy as np
from loguru import logger

from uowc_offset.models import RunManifest, SweepRecord

Format = Literal["csv", "json"]

SWEEP_COLUMNS = {
    "lambda_per_m2": "lambda_2d",
    "mean_link_m": "mean_link_m",
    "mean_depth_m": "mean_depth_m",
    "ptx_min_base_w": "ptx_min_base",
    "ptx_min_offset_w": "ptx_min_offset",
    "nb_base_bits": "nb_base",
    "nb_offset_bits": "nb_offset",
    "floor_base": "floor_active_base",
    "floor_offset": "floor_active_offset",
    "feasible_base": "feasible_base",
    "feasible_offset": "feasible_offset",
}


@dataclass
class Report:
    """A named table plus free-form metadata (JSON output only)."""

    name: str
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)


def sweep_report(name: str, records: Sequence[SweepRecord]) -> Report:
    return Report(
        name=name,
        columns=list(SWEEP_COLUMNS),
        rows=[
            {column: getattr(record, attr) for column, attr in SWEEP_COLUMNS.items()}
            for record in records
        ],
    )


def format_value(value: Any) -> str:
    """CSV cell text; floats use the shortest repr that round-trips."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def json_value(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_value(v) for v in value]
    return value


def emit(report: Report, fmt: Format, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    path = out_dir / f"{report.name}.{fmt}"

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as handle:
            if fmt == "csv":
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(report.columns)
                for row in report.rows:
                    writer.writerow([format_value(row.get(c)) for c in report.columns])
            else:
                document = {
                    "name": report.name,
                    "columns": report.columns,
                    "rows": [
                        {c: json_value(row.get(c)) for c in report.columns}
                        for row in report.rows
                    ],
                    "meta": json_value(report.meta),
                }
                json.dump(document, handle, indent=2, allow_nan=False)
                handle.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc

    logger.info("Wrote {}", path)
    return path


def new_manifest(
    command: str,
    argv: List[str],
    config: Dict[str, Any],
    seed: int,
    level: Optional[int],
    outputs: List[str],
    extras: Optional[Dict[str, Any]] = None,
) -> RunManifest:
    from uowc_offset import __version__

    return RunManifest(
        command=command,
        argv=list(argv),
        config=dict(config),
        seed=seed,
        level=level,
        outputs=list(outputs),
        version=__version__,
        timestamp=arrow.utcnow().isoformat(),
        extras=dict(extras or {}),
    )


def manifest_path(data_path: str | Path) -> Path:
    data_path = Path(data_path)
    return data_path.with_name(f"{data_path.stem}.manifest.json")


def write_manifest(manifest: RunManifest, data_path: str | Path) -> Path:
    path = manifest_path(data_path)
    try:
        with open(path, "w") as handle:
            json.dump(json_value(dataclasses.asdict(manifest)), handle, indent=2, allow_nan=False)
            handle.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc

    return path
