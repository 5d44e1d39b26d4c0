import dataclasses
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

from loguru import logger
from scipy import optimize

from uowc_offset.channel import lambertian_order, path_loss
from uowc_offset.config import SystemParams
from uowc_offset.errors import DomainError, NoCrossingError
from uowc_offset.geometry import NNDistribution, mean_nn_distance
from uowc_offset.models import PowerResult

# Slack on the offset validity bound delta + phi_half <= pi/2 for angles
# that went through a degree conversion.
DOMAIN_SLACK = 1e-12
ROOT_XTOL = 1e-12


def _cos_pow(angle: float, exponent: float) -> float:
    # cos(pi/2) may round to a tiny negative number.
    return max(math.cos(angle), 0.0) ** exponent


def _check_length(length: float) -> None:
    if not length > 0 or not math.isfinite(length):
        raise DomainError(f"link length must be positive, got {length}")


def _aperture_power(params: SystemParams, length: float) -> float:
    _check_length(length)
    return (
        params.responsivity_factor
        * params.tx_power
        * params.aperture_radius**2
        / (4.0 * length**2)
        * path_loss(params.extinction, length)
    )


def main_lobe_factor(phi_half: float) -> float:
    m = lambertian_order(phi_half)
    return 1.0 - _cos_pow(phi_half, m + 1.0)


def offset_factor(phi_half: float, delta: float) -> float:
    """
    Fraction of the random-orientation power collected by a receiver
    pointed `delta` away from the transmitter axis.
    """
    if delta < 0:
        raise DomainError(f"offset angle must be non-negative, got {delta}")
    if delta + phi_half > math.pi / 2 + DOMAIN_SLACK:
        raise DomainError(
            f"offset {math.degrees(delta):.4f} deg plus half-power angle "
            f"{math.degrees(phi_half):.4f} deg exceeds 90 deg"
        )

    m = lambertian_order(phi_half)
    return _cos_pow(delta, m + 1.0) - _cos_pow(delta + phi_half, m + 1.0)


def power_random_orientation(params: SystemParams, length: float) -> PowerResult:
    return PowerResult(
        value=_aperture_power(params, length),
        variant="random_orientation",
        link_length=length,
    )


def power_main_lobe(params: SystemParams, length: float) -> PowerResult:
    return PowerResult(
        value=_aperture_power(params, length) * main_lobe_factor(params.phi_half),
        variant="main_lobe",
        link_length=length,
    )


def power_offset(params: SystemParams, length: float, delta: float) -> PowerResult:
    return PowerResult(
        value=_aperture_power(params, length) * offset_factor(params.phi_half, delta),
        variant="offset",
        link_length=length,
        offset_angle=delta,
    )


def optimal_offset_exact(phi_half: float) -> float:
    """
    Offset that maximizes `offset_factor`, i.e. the root of
    sin(d) cos^m(d) = sin(d + phi) cos^m(d + phi) on (0, pi/2 - phi).
    """
    m = lambertian_order(phi_half)

    def stationarity(delta: float) -> float:
        return math.sin(delta) * _cos_pow(delta, m) - math.sin(
            delta + phi_half
        ) * _cos_pow(delta + phi_half, m)

    upper = math.pi / 2 - phi_half
    try:
        return optimize.bisect(stationarity, 0.0, upper, xtol=ROOT_XTOL, maxiter=200)
    except ValueError as exc:
        raise DomainError(
            f"no sign change for phi_half={math.degrees(phi_half):.6f} deg: {exc}"
        )


def optimal_offset_approx(phi_half: float) -> float:
    if not 0.0 < phi_half < math.pi / 2:
        raise DomainError(f"half-power semi-angle must lie in (0, pi/2), got {phi_half}")

    return math.pi / 12 + (math.cos(2 * phi_half + 4 * math.pi / 3) - 1.0) / (
        2 * math.pi
    )


def pat_power(params: SystemParams, length: float, epsilon: float) -> PowerResult:
    """Received power of an actively tracked link with residual pointing error."""
    _check_length(length)
    if not 0.0 <= epsilon <= math.pi / 2:
        raise DomainError(f"pointing error must lie in [0, pi/2], got {epsilon}")

    m = lambertian_order(params.phi_half)
    value = (
        params.responsivity_factor
        * params.tx_power
        * (m + 1.0)
        * params.aperture_area
        / (2.0 * math.pi * length**2)
        * path_loss(params.extinction, length)
        * _cos_pow(epsilon, m)
    )

    return PowerResult(
        value=value,
        variant="pat",
        link_length=length,
        pointing_error=epsilon,
    )


def pat_crossover(params: SystemParams, length: float, strategy_delta: float) -> float:
    """Pointing error at which a tracked link drops to the offset strategy's power."""
    target = power_offset(params, length, strategy_delta).value
    axial = pat_power(params, length, 0.0).value

    if target >= axial:
        raise NoCrossingError(
            f"offset power {target:.6g} W is not below axial tracked power {axial:.6g} W"
        )

    def gap(epsilon: float) -> float:
        return pat_power(params, length, epsilon).value - target

    crossover = optimize.bisect(gap, 0.0, math.pi / 2, xtol=ROOT_XTOL, maxiter=200)
    logger.debug(
        "Tracked link falls below offset power at {:.4f} deg",
        math.degrees(crossover),
    )

    return crossover


@dataclass(frozen=True)
class OffsetAxes:
    """Rows are half-power semi-angles, columns are pointing offsets."""

    phi_values: Sequence[float]
    delta_values: Sequence[float]
    link_length: float


@dataclass(frozen=True)
class DensityAxes:
    """Rows are slab depths, columns are areal intensities."""

    slab_values: Sequence[float]
    lambda_values: Sequence[float]
    delta: float = 0.0


@dataclass(frozen=True)
class GridCell:
    row: float
    column: float
    result: Optional[PowerResult]
    normalized: Optional[float] = None


def _offset_cell(params: SystemParams, length: float, delta: float) -> Optional[PowerResult]:
    try:
        return power_offset(params, length, delta)
    except DomainError:
        return None


def power_grid(
    params: SystemParams,
    axes: OffsetAxes | DensityAxes,
    normalize: bool = False,
) -> List[GridCell]:
    """
    Row-major table of offset-strategy received power. Cells outside the
    offset validity domain are kept with `result=None`.
    """
    cells: List[GridCell] = []

    if isinstance(axes, OffsetAxes):
        if not axes.phi_values or not axes.delta_values:
            raise DomainError("grid axes must not be empty")
        for phi in axes.phi_values:
            row_params = dataclasses.replace(params, phi_half=phi)
            for delta in axes.delta_values:
                result = _offset_cell(row_params, axes.link_length, delta)
                cells.append(GridCell(row=phi, column=delta, result=result))
    else:
        if not axes.slab_values or not axes.lambda_values:
            raise DomainError("grid axes must not be empty")
        for depth in axes.slab_values:
            for lam in axes.lambda_values:
                length = mean_nn_distance(NNDistribution(lam, depth))
                cell_params = dataclasses.replace(params, lambda_2d=lam, slab_depth=depth)
                result = _offset_cell(cell_params, length, axes.delta)
                cells.append(GridCell(row=depth, column=lam, result=result))

    if normalize:
        peak = max(
            (c.result.value for c in cells if c.result is not None), default=0.0
        )
        if peak > 0:
            cells = [
                dataclasses.replace(
                    c, normalized=None if c.result is None else c.result.value / peak
                )
                for c in cells
            ]

    return cells
