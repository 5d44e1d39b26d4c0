import dataclasses
from typing import Any, Dict, List, Literal, Optional

PowerVariant = Literal["random_orientation", "main_lobe", "offset", "pat"]


@dataclasses.dataclass(frozen=True)
class PowerResult:
    value: float  # W
    variant: PowerVariant
    link_length: float
    offset_angle: Optional[float] = None
    pointing_error: Optional[float] = None


@dataclasses.dataclass(frozen=True)
class NoiseBreakdown:
    sigma_q2: float
    sigma_d2: float
    sigma_solar2: float
    sigma_th2: float
    sigma_total2: float
    signal_current: float
    solar_power: float


@dataclasses.dataclass(frozen=True)
class SweepRecord:
    lambda_2d: float
    mean_link_m: float
    mean_depth_m: float
    ptx_min_base: float
    ptx_min_offset: float
    nb_base: float
    nb_offset: float
    floor_active_base: bool
    floor_active_offset: bool
    feasible_base: bool
    feasible_offset: bool


@dataclasses.dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int
    elapsed_note: str = ""


@dataclasses.dataclass
class RunManifest:
    command: str
    argv: List[str]
    config: Dict[str, Any]
    seed: int
    level: Optional[int]
    outputs: List[str]
    version: str
    timestamp: str
    extras: Dict[str, Any] = dataclasses.field(default_factory=dict)
