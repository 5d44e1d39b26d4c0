import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence

import numpy as np
from loguru import logger

from uowc_offset.config import SystemParams
from uowc_offset.errors import DomainError, InfeasibleError
from uowc_offset.geometry import (
    NNDistribution,
    expected_link_depth,
    mean_nn_distance,
    nn_inverse_cdf,
)
from uowc_offset.models import NoiseBreakdown, SweepRecord
from uowc_offset.numerics import bisect_threshold, golden_section_max
from uowc_offset.power import optimal_offset_exact, power_offset
from uowc_offset.sipm import ber_ook, noise_variances, snr

Strategy = Literal["baseline", "offset"]
STRATEGIES = ("baseline", "offset")

POWER_REL_WIDTH = 1e-6
DEFAULT_LAMBDA_GRID = tuple(float(v) for v in np.logspace(-5.0, 1.0, 61))


@dataclass(frozen=True)
class LinkGeometry:
    lambda_2d: float
    link_length: float
    link_depth: float


@dataclass(frozen=True)
class LinkReport:
    lambda_2d: float
    p_tx: float
    delta: float
    link_length: float
    link_depth: float
    p_rx: float
    snr: float
    ber: float
    noise: NoiseBreakdown


@dataclass(frozen=True)
class MinPowerResult:
    ptx: float  # nan when infeasible
    floor_active: bool
    feasible: bool
    ber: float


@dataclass(frozen=True)
class OptimizationResult:
    strategy: Strategy
    best: SweepRecord
    lambda_star: float
    ptx_star: float
    nb_star: float
    unimodal: bool
    refined: bool


def link_geometry(
    lambda_2d: float, params: SystemParams, link_quantile: Optional[float] = None
) -> LinkGeometry:
    """
    Representative link for a density: the mean nearest-neighbour distance
    (or a quantile of it) and the expected neighbour depth.
    """
    dist = NNDistribution(lambda_2d, params.slab_depth)
    if link_quantile is None:
        length = mean_nn_distance(dist)
    else:
        length = nn_inverse_cdf(dist, link_quantile)

    return LinkGeometry(
        lambda_2d=lambda_2d,
        link_length=length,
        link_depth=expected_link_depth(dist),
    )


def strategy_offset(strategy: Strategy, params: SystemParams) -> float:
    if strategy == "baseline":
        return 0.0
    if strategy == "offset":
        return optimal_offset_exact(params.phi_half)
    raise DomainError(f"unknown strategy {strategy!r}")


def link_kpis(
    lambda_2d: float,
    p_tx: float,
    delta: float,
    params: SystemParams,
    link_quantile: Optional[float] = None,
) -> LinkReport:
    geometry = link_geometry(lambda_2d, params, link_quantile)
    link_params = dataclasses.replace(params, tx_power=p_tx)

    p_rx = power_offset(link_params, geometry.link_length, delta).value
    noise = noise_variances(p_rx, params, geometry.link_depth)
    snr_value = noise.signal_current**2 / noise.sigma_total2

    return LinkReport(
        lambda_2d=lambda_2d,
        p_tx=p_tx,
        delta=delta,
        link_length=geometry.link_length,
        link_depth=geometry.link_depth,
        p_rx=p_rx,
        snr=snr_value,
        ber=ber_ook(snr_value),
        noise=noise,
    )


def min_power_for_ber(
    lambda_2d: float,
    delta: float,
    params: SystemParams,
    link_quantile: Optional[float] = None,
    geometry: Optional[LinkGeometry] = None,
) -> MinPowerResult:
    """
    Smallest transmit power in [ptx_floor, ptx_max] meeting the BER target.
    Infeasibility and the floor clamp are reported as flags.
    """
    if geometry is None:
        geometry = link_geometry(lambda_2d, params, link_quantile)

    # Received power is linear in transmit power.
    prx_per_watt = (
        power_offset(params, geometry.link_length, delta).value / params.tx_power
    )

    def ber_at(p_tx: float) -> float:
        return ber_ook(snr(prx_per_watt * p_tx, params, geometry.link_depth))

    def meets_target(p_tx: float) -> bool:
        return ber_at(p_tx) <= params.ber_threshold

    if meets_target(params.ptx_floor):
        return MinPowerResult(
            ptx=params.ptx_floor,
            floor_active=True,
            feasible=True,
            ber=ber_at(params.ptx_floor),
        )

    if not meets_target(params.ptx_max):
        return MinPowerResult(
            ptx=math.nan,
            floor_active=False,
            feasible=False,
            ber=ber_at(params.ptx_max),
        )

    ptx = bisect_threshold(
        meets_target, params.ptx_floor, params.ptx_max, rel_width=POWER_REL_WIDTH
    )
    return MinPowerResult(ptx=ptx, floor_active=False, feasible=True, ber=ber_at(ptx))


def total_bits(lambda_2d: float, p_tx: float, params: SystemParams) -> float:
    """Bits the deployment can move before the shared energy budget runs out."""
    if not lambda_2d > 0 or not p_tx > 0:
        raise DomainError("density and transmit power must be positive")

    area = math.pi * params.deploy_radius**2
    return params.bandwidth * params.energy_total / (area * lambda_2d * p_tx)


def _nb(lambda_2d: float, result: MinPowerResult, params: SystemParams) -> float:
    if not result.feasible:
        return math.nan
    return total_bits(lambda_2d, result.ptx, params)


def sweep_record(
    lambda_2d: float,
    params: SystemParams,
    delta_opt: float,
    link_quantile: Optional[float] = None,
) -> SweepRecord:
    geometry = link_geometry(lambda_2d, params, link_quantile)
    base = min_power_for_ber(lambda_2d, 0.0, params, geometry=geometry)
    offset = min_power_for_ber(lambda_2d, delta_opt, params, geometry=geometry)

    logger.debug(
        "lambda={:.4g} L={:.4g} m: base {} W, offset {} W",
        lambda_2d,
        geometry.link_length,
        base.ptx,
        offset.ptx,
    )

    return SweepRecord(
        lambda_2d=lambda_2d,
        mean_link_m=geometry.link_length,
        mean_depth_m=geometry.link_depth,
        ptx_min_base=base.ptx,
        ptx_min_offset=offset.ptx,
        nb_base=_nb(lambda_2d, base, params),
        nb_offset=_nb(lambda_2d, offset, params),
        floor_active_base=base.floor_active,
        floor_active_offset=offset.floor_active,
        feasible_base=base.feasible,
        feasible_offset=offset.feasible,
    )


def density_sweep(
    params: SystemParams,
    lambda_grid: Sequence[float],
    workers: int = 1,
    link_quantile: Optional[float] = None,
) -> List[SweepRecord]:
    grid = [float(v) for v in lambda_grid]
    if any(v <= 0 for v in grid):
        raise DomainError("density grid must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("density grid must be strictly increasing")

    delta_opt = optimal_offset_exact(params.phi_half)

    def run_cell(lam: float) -> SweepRecord:
        return sweep_record(lam, params, delta_opt, link_quantile)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(run_cell, grid))


def is_unimodal(values: Sequence[float]) -> bool:
    """True when the sequence never rises again after it first falls."""
    falling = False
    for previous, current in zip(values, values[1:]):
        if current < previous:
            falling = True
        elif current > previous and falling:
            return False
    return True


def _strategy_fields(record: SweepRecord, strategy: Strategy):
    if strategy == "baseline":
        return record.feasible_base, record.nb_base, record.ptx_min_base
    return record.feasible_offset, record.nb_offset, record.ptx_min_offset


def optimize(
    params: SystemParams,
    delta_strategy: Strategy,
    lambda_grid: Optional[Sequence[float]] = None,
    workers: int = 1,
    link_quantile: Optional[float] = None,
    rel_tol: float = 1e-4,
    records: Optional[List[SweepRecord]] = None,
) -> OptimizationResult:
    """
    Density maximizing the total bits: grid argmax of the sweep, then a
    golden-section search in log-density over the two neighbouring cells.
    """
    grid = list(DEFAULT_LAMBDA_GRID if lambda_grid is None else lambda_grid)
    if records is None:
        records = density_sweep(params, grid, workers, link_quantile)
    delta = strategy_offset(delta_strategy, params)

    feasible = []
    for index, record in enumerate(records):
        ok, nb, _ = _strategy_fields(record, delta_strategy)
        if ok:
            feasible.append((index, nb))

    if not feasible:
        raise InfeasibleError(
            f"no feasible density for the {delta_strategy} strategy on the grid"
        )

    best_index, best_nb = max(feasible, key=lambda item: item[1])
    best = records[best_index]
    _, _, best_ptx = _strategy_fields(best, delta_strategy)

    unimodal = is_unimodal([nb for _, nb in feasible])
    interior = 0 < best_index < len(records) - 1

    result = OptimizationResult(
        strategy=delta_strategy,
        best=best,
        lambda_star=best.lambda_2d,
        ptx_star=best_ptx,
        nb_star=best_nb,
        unimodal=unimodal,
        refined=False,
    )

    if not unimodal:
        logger.warning(
            "Total bits are not unimodal over the grid for the {} strategy; "
            "returning the grid maximum",
            delta_strategy,
        )
        return result

    if not interior:
        logger.info("Grid maximum sits on the grid edge; skipping refinement")
        return result

    def objective(log_lambda: float) -> float:
        lam = math.exp(log_lambda)
        power = min_power_for_ber(lam, delta, params, link_quantile)
        return _nb(lam, power, params) if power.feasible else 0.0

    lo = math.log(records[best_index - 1].lambda_2d)
    hi = math.log(records[best_index + 1].lambda_2d)
    lambda_star = math.exp(golden_section_max(objective, lo, hi, math.log1p(rel_tol)))

    power = min_power_for_ber(lambda_star, delta, params, link_quantile)
    if not power.feasible:
        return result

    nb_star = total_bits(lambda_star, power.ptx, params)
    if nb_star < best_nb:
        return result

    logger.info(
        "Refined {} optimum: lambda*={:.6g} /m^2, P_Tx={:.6g} W, N_b={:.6g}",
        delta_strategy,
        lambda_star,
        power.ptx,
        nb_star,
    )

    return dataclasses.replace(
        result,
        lambda_star=lambda_star,
        ptx_star=power.ptx,
        nb_star=nb_star,
        refined=True,
    )
