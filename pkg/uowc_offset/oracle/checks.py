import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Protocol, runtime_checkable

import numpy as np

from uowc_offset.config import SystemParams
from uowc_offset.geometry import NNDistribution, expected_link_depth, mean_nn_distance
from uowc_offset.models import McEstimate
from uowc_offset.oracle.sampling import (
    mc_expected_depth,
    mc_nn_distance,
    mc_power_angular,
    mc_power_full,
)
from uowc_offset.power import (
    optimal_offset_exact,
    power_main_lobe,
    power_offset,
    power_random_orientation,
)


@dataclass
class OracleState:
    scenario: str
    params: SystemParams
    link_length: float
    seed: int
    workers: int = 1


OracleCheckConfig = Dict[str, str | float | int | bool]


@runtime_checkable
class OracleCheck(Protocol):
    def __init__(self, state: OracleState, config: OracleCheckConfig):
        ...

    def state(self) -> OracleState:
        ...

    def run(self) -> bool:
        ...

    def report(self) -> dict:
        ...


def z_score(closed_form: float, estimate: McEstimate) -> float:
    if estimate.std_error > 0:
        return (estimate.mean - closed_form) / estimate.std_error
    return 0.0 if estimate.mean == closed_form else math.inf


def estimate_report(
    check: str,
    state: OracleState,
    closed_form: float,
    estimate: Optional[McEstimate],
    passed: bool,
) -> Dict[str, Any]:
    if estimate is None:
        return {
            "check": check,
            "scenario": state.scenario,
            "closed_form": closed_form,
            "passed": False,
        }
    return {
        "check": check,
        "scenario": state.scenario,
        "closed_form": closed_form,
        "mc_mean": estimate.mean,
        "std_error": estimate.std_error,
        "z_score": z_score(closed_form, estimate),
        "n_samples": estimate.n_samples,
        "seed": estimate.seed,
        "passed": passed,
    }


class NearestNeighborDistanceCheck(OracleCheck):
    def __init__(self, state: OracleState, config: OracleCheckConfig):
        self.__state = state
        self.__trials: int = int(config["trials"])
        self.__max_ks: float = float(config["max_ks"])
        self.__max_z: float = float(config["max_z"])
        self.__estimate: Optional[McEstimate] = None
        self.__ks: float = math.nan
        self.__closed_form: float = math.nan

    def state(self) -> OracleState:
        return self.__state

    def run(self) -> bool:
        params = self.__state.params
        sample = mc_nn_distance(
            params.lambda_2d,
            params.slab_depth,
            self.__trials,
            self.__state.seed,
            self.__state.workers,
        )
        distances = sample.distances
        self.__closed_form = mean_nn_distance(NNDistribution.from_params(params))
        self.__estimate = McEstimate(
            mean=float(np.mean(distances)),
            std_error=float(np.std(distances, ddof=1)) / math.sqrt(distances.size),
            n_samples=int(distances.size),
            seed=self.__state.seed,
        )
        self.__ks = sample.ks_statistic

        # Fail if the empirical law drifts from the closed-form CDF
        if self.__ks >= self.__max_ks:
            return False

        # Pass if the mean distance agrees too
        return abs(z_score(self.__closed_form, self.__estimate)) <= self.__max_z

    def report(self) -> dict:
        passed = (
            self.__estimate is not None
            and self.__ks < self.__max_ks
            and abs(z_score(self.__closed_form, self.__estimate)) <= self.__max_z
        )
        report = estimate_report(
            "NearestNeighborDistanceCheck",
            self.__state,
            self.__closed_form,
            self.__estimate,
            passed,
        )
        report["ks_statistic"] = self.__ks
        return report


class ExpectedDepthCheck(OracleCheck):
    def __init__(self, state: OracleState, config: OracleCheckConfig):
        self.__state = state
        self.__trials: int = int(config["trials"])
        self.__max_z: float = float(config["max_z"])
        self.__estimate: Optional[McEstimate] = None
        self.__closed_form: float = math.nan

    def state(self) -> OracleState:
        return self.__state

    def run(self) -> bool:
        params = self.__state.params
        self.__closed_form = expected_link_depth(NNDistribution.from_params(params))
        self.__estimate = mc_expected_depth(
            params.lambda_2d,
            params.slab_depth,
            self.__trials,
            self.__state.seed,
            self.__state.workers,
        )
        return abs(z_score(self.__closed_form, self.__estimate)) <= self.__max_z

    def report(self) -> dict:
        passed = (
            self.__estimate is not None
            and abs(z_score(self.__closed_form, self.__estimate)) <= self.__max_z
        )
        return estimate_report(
            "ExpectedDepthCheck",
            self.__state,
            self.__closed_form,
            self.__estimate,
            passed,
        )


class RandomOrientationPowerCheck(OracleCheck):
    def __init__(self, state: OracleState, config: OracleCheckConfig):
        self.__state = state
        self.__samples: int = int(config["samples"])
        self.__max_z: float = float(config["max_z"])
        self.__estimate: Optional[McEstimate] = None
        self.__closed_form: float = math.nan

    def state(self) -> OracleState:
        return self.__state

    def run(self) -> bool:
        state = self.__state
        self.__closed_form = power_random_orientation(state.params, state.link_length).value
        self.__estimate = mc_power_angular(
            state.params, state.link_length, self.__samples, state.seed, state.workers
        )
        return abs(z_score(self.__closed_form, self.__estimate)) <= self.__max_z

    def report(self) -> dict:
        passed = (
            self.__estimate is not None
            and abs(z_score(self.__closed_form, self.__estimate)) <= self.__max_z
        )
        report = estimate_report(
            "RandomOrientationPowerCheck",
            self.__state,
            self.__closed_form,
            self.__estimate,
            passed,
        )
        report["link_length"] = self.__state.link_length
        return report


class MainLobePowerCheck(OracleCheck):
    def __init__(self, state: OracleState, config: OracleCheckConfig):
        self.__state = state
        self.__samples: int = int(config["samples"])
        self.__max_z: float = float(config["max_z"])
        self.__estimate: Optional[McEstimate] = None
        self.__closed_form: float = math.nan

    def state(self) -> OracleState:
        return self.__state

    def run(self) -> bool:
        state = self.__state
        self.__closed_form = power_main_lobe(state.params, state.link_length).value
        self.__estimate = mc_power_angular(
            state.params,
            state.link_length,
            self.__samples,
            state.seed,
            state.workers,
            lobe="main_lobe",
        )
        return abs(z_score(self.__closed_form, self.__estimate)) <= self.__max_z

    def report(self) -> dict:
        passed = (
            self.__estimate is not None
            and abs(z_score(self.__closed_form, self.__estimate)) <= self.__max_z
        )
        report = estimate_report(
            "MainLobePowerCheck",
            self.__state,
            self.__closed_form,
            self.__estimate,
            passed,
        )
        report["link_length"] = self.__state.link_length
        return report


class OffsetPowerCheck(OracleCheck):
    def __init__(self, state: OracleState, config: OracleCheckConfig):
        self.__state = state
        self.__samples: int = int(config["samples"])
        self.__max_z: float = float(config["max_z"])
        # Optimal offset unless the config pins one
        delta_deg = config.get("delta_deg")
        self.__delta: float = (
            optimal_offset_exact(state.params.phi_half)
            if delta_deg is None
            else math.radians(float(delta_deg))
        )
        self.__estimate: Optional[McEstimate] = None
        self.__closed_form: float = math.nan

    def state(self) -> OracleState:
        return self.__state

    def run(self) -> bool:
        state = self.__state
        self.__closed_form = power_offset(
            state.params, state.link_length, self.__delta
        ).value
        self.__estimate = mc_power_angular(
            state.params,
            state.link_length,
            self.__samples,
            state.seed,
            state.workers,
            lobe="offset",
            delta=self.__delta,
        )
        return abs(z_score(self.__closed_form, self.__estimate)) <= self.__max_z

    def report(self) -> dict:
        passed = (
            self.__estimate is not None
            and abs(z_score(self.__closed_form, self.__estimate)) <= self.__max_z
        )
        report = estimate_report(
            "OffsetPowerCheck",
            self.__state,
            self.__closed_form,
            self.__estimate,
            passed,
        )
        report["link_length"] = self.__state.link_length
        report["delta_deg"] = math.degrees(self.__delta)
        return report


class FiniteAperturePowerCheck(OracleCheck):
    def __init__(self, state: OracleState, config: OracleCheckConfig):
        self.__state = state
        self.__samples: int = int(config["samples"])
        self.__distance_ratio: float = float(config["distance_ratio"])
        self.__max_relative_error: float = float(config["max_relative_error"])
        self.__estimate: Optional[McEstimate] = None
        self.__closed_form: float = math.nan

    def state(self) -> OracleState:
        return self.__state

    def link_length(self) -> float:
        return self.__distance_ratio * self.__state.params.aperture_radius

    def relative_error(self) -> float:
        if self.__estimate is None:
            return math.inf
        return abs(self.__estimate.mean - self.__closed_form) / self.__closed_form

    def run(self) -> bool:
        state = self.__state
        length = self.link_length()
        self.__closed_form = power_random_orientation(state.params, length).value
        self.__estimate = mc_power_full(
            state.params, length, self.__samples, state.seed, state.workers
        )
        return self.relative_error() <= self.__max_relative_error

    def report(self) -> dict:
        report = estimate_report(
            "FiniteAperturePowerCheck",
            self.__state,
            self.__closed_form,
            self.__estimate,
            self.relative_error() <= self.__max_relative_error,
        )
        report["link_length"] = self.link_length()
        report["distance_ratio"] = self.__distance_ratio
        report["relative_error"] = self.relative_error()
        return report


class NearFieldBiasCheck(OracleCheck):
    """
    Records how far the finite-aperture power departs from the
    large-distance closed form when the receiver is close. There is no
    target value; the check only fails on a non-finite estimate.
    """

    def __init__(self, state: OracleState, config: OracleCheckConfig):
        self.__state = state
        self.__samples: int = int(config["samples"])
        self.__distance_ratio: float = float(config["distance_ratio"])
        self.__estimate: Optional[McEstimate] = None
        self.__closed_form: float = math.nan

    def state(self) -> OracleState:
        return self.__state

    def run(self) -> bool:
        state = self.__state
        length = self.__distance_ratio * state.params.aperture_radius
        self.__closed_form = power_random_orientation(state.params, length).value
        self.__estimate = mc_power_full(
            state.params, length, self.__samples, state.seed, state.workers
        )
        return math.isfinite(self.__estimate.mean)

    def report(self) -> dict:
        estimate = self.__estimate
        passed = estimate is not None and math.isfinite(estimate.mean)
        report = estimate_report(
            "NearFieldBiasCheck",
            self.__state,
            self.__closed_form,
            estimate,
            passed,
        )
        report["distance_ratio"] = self.__distance_ratio
        if estimate is not None:
            report["relative_bias"] = (estimate.mean - self.__closed_form) / self.__closed_form
        return report


ORACLE_CHECKS = [
    NearestNeighborDistanceCheck,
    ExpectedDepthCheck,
    RandomOrientationPowerCheck,
    MainLobePowerCheck,
    OffsetPowerCheck,
    FiniteAperturePowerCheck,
    NearFieldBiasCheck,
]
