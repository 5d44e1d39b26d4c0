import math

from scipy import constants, special

from uowc_offset.config import CROSSTALK_LIMIT, SystemParams
from uowc_offset.errors import DomainError
from uowc_offset.models import NoiseBreakdown


def responsivity(params: SystemParams) -> float:
    """Pre-gain responsivity eta * lambda * q / (h * c), in A/W."""
    return (
        params.pde
        * params.wavelength
        * constants.e
        / (constants.h * constants.c)
    )


def photocurrent(p_rx: float, params: SystemParams) -> float:
    if p_rx < 0:
        raise DomainError(f"received power must be non-negative, got {p_rx}")

    return responsivity(params) * params.sipm_gain * p_rx


def excess_noise_factor(p_ct: float) -> float:
    if not 0.0 <= p_ct < CROSSTALK_LIMIT:
        raise DomainError(
            f"crosstalk probability must lie in [0, {CROSSTALK_LIMIT:.6f}), got {p_ct}"
        )

    return 1.0 / (1.0 + math.log1p(-p_ct))


def spectral_factor(params: SystemParams) -> float:
    if params.solar_spectral_fraction_mode == "band_fraction":
        return params.filter_window_nm / params.solar_reference_band_nm

    # raw_nm_multiplier: the filter window enters as a bare number of nanometres
    return params.filter_window_nm


def solar_power(params: SystemParams, l_deep: float) -> float:
    """Background sunlight collected by the receiver at depth `l_deep`."""
    if l_deep < 0:
        raise DomainError(f"depth must be non-negative, got {l_deep}")

    return (
        params.aperture_area
        * params.fov_semi_angle**2
        * params.solar_direction_factor
        * params.solar_reflectance
        * params.solar_surface_irradiance
        * math.exp(-params.solar_attenuation * l_deep)
        * params.filter_transmittance
        * spectral_factor(params)
    )


def noise_variances(p_rx: float, params: SystemParams, l_deep: float) -> NoiseBreakdown:
    """
    Quantum, dark, solar and thermal noise variances. Shot-type terms use
    pre-gain currents multiplied by G^2 F.
    """
    signal = photocurrent(p_rx, params)
    resp = responsivity(params)
    p_sun = solar_power(params, l_deep)
    shot = (
        2.0
        * constants.e
        * params.bandwidth
        * params.sipm_gain**2
        * excess_noise_factor(params.crosstalk_prob)
    )

    sigma_q2 = shot * resp * p_rx
    sigma_d2 = shot * params.dark_current
    sigma_solar2 = shot * resp * p_sun
    sigma_th2 = (
        4.0 * constants.k * params.temperature * params.bandwidth / params.load_resistance
    )

    return NoiseBreakdown(
        sigma_q2=sigma_q2,
        sigma_d2=sigma_d2,
        sigma_solar2=sigma_solar2,
        sigma_th2=sigma_th2,
        sigma_total2=sigma_q2 + sigma_d2 + sigma_solar2 + sigma_th2,
        signal_current=signal,
        solar_power=p_sun,
    )


def snr(p_rx: float, params: SystemParams, l_deep: float) -> float:
    noise = noise_variances(p_rx, params, l_deep)
    return noise.signal_current**2 / noise.sigma_total2


def ber_ook(snr_value: float) -> float:
    """NRZ-OOK bit error rate. Underflows to 0 beyond SNR of roughly 1.4e3."""
    if snr_value < 0 or math.isnan(snr_value):
        raise DomainError(f"SNR must be non-negative, got {snr_value}")

    return 0.5 * float(special.erfc(math.sqrt(snr_value / 2.0)))


def snr_for_ber(ber: float) -> float:
    """SNR at which `ber_ook` equals `ber`."""
    if not 0.0 < ber <= 0.5:
        raise DomainError(f"BER must lie in (0, 0.5], got {ber}")

    return 2.0 * float(special.erfcinv(2.0 * ber)) ** 2
