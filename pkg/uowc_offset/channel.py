import math
from dataclasses import dataclass

from uowc_offset.config import SystemParams
from uowc_offset.errors import DomainError


@dataclass(frozen=True)
class RayGeometry:
    irradiance_angle: float  # theta at the transmitter
    incidence_angle: float  # psi at the receiver
    link_length: float

    def __post_init__(self):
        if not 0.0 <= self.irradiance_angle <= math.pi / 2:
            raise DomainError("irradiance angle must lie in [0, 90] degrees")
        if not 0.0 <= self.incidence_angle <= math.pi:
            raise DomainError("incidence angle must lie in [0, 180] degrees")
        if not self.link_length > 0:
            raise DomainError("link length must be positive")


def lambertian_order(phi_half: float) -> float:
    if not 0.0 < phi_half < math.pi / 2:
        raise DomainError(f"half-power semi-angle must lie in (0, pi/2), got {phi_half}")

    return -math.log(2.0) / math.log(math.cos(phi_half))


def path_loss(extinction: float, length: float) -> float:
    if extinction < 0 or length < 0:
        raise DomainError("extinction and length must be non-negative")

    return math.exp(-extinction * length)


def concentrator_gain(psi: float, index: float, fov: float) -> float:
    if psi < 0:
        raise DomainError("incidence angle must be non-negative")

    # Boundary of the field of view is inside.
    if psi > fov:
        return 0.0

    return index**2 / math.sin(fov) ** 2


def los_channel_gain(geom: RayGeometry, params: SystemParams) -> float:
    """DC gain of a single line-of-sight ray; received power is P_Tx times this."""
    cos_theta = math.cos(geom.irradiance_angle)
    cos_psi = math.cos(geom.incidence_angle)
    # Rays leaving behind the transmitter or arriving behind the lens carry nothing.
    if cos_theta <= 0 or cos_psi <= 0 or geom.incidence_angle > params.fov_semi_angle:
        return 0.0

    m = lambertian_order(params.phi_half)
    length = geom.link_length

    return (
        (m + 1.0)
        / (2.0 * math.pi * length**2)
        * cos_theta**m
        * cos_psi
        * params.filter_transmittance
        * concentrator_gain(
            geom.incidence_angle, params.concentrator_index, params.fov_semi_angle
        )
        * path_loss(params.extinction, length)
    )
