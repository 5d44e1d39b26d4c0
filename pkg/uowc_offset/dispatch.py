import dataclasses
import math
from copy import deepcopy
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from loguru import logger
from prometheus_client import CollectorRegistry, Gauge, write_to_textfile

from uowc_offset.config import SystemParams
from uowc_offset.errors import ConfigError, Violation
from uowc_offset.oracle import ORACLE_CHECKS, OracleState

# Built-in suite, identical to sample.oracle.yaml.
DEFAULT_SUITE: Dict[str, Any] = {
    "scenarios": [
        {"name": "link-5m", "link_length": 5.0},
        {"name": "link-10m", "link_length": 10.0},
        {"name": "link-20m", "link_length": 20.0},
        {"name": "link-40m", "link_length": 40.0},
        {"name": "link-80m", "link_length": 80.0},
    ],
    "checks": {
        "global": {
            "NearestNeighborDistanceCheck": {
                "enable": False,
                "trials": 100000,
                "max_ks": 0.01,
                "max_z": 3,
            },
            "ExpectedDepthCheck": {"enable": False, "trials": 100000, "max_z": 3},
            "RandomOrientationPowerCheck": {
                "enable": True,
                "samples": 1000000,
                "max_z": 3,
            },
            "MainLobePowerCheck": {"enable": True, "samples": 1000000, "max_z": 3},
            "OffsetPowerCheck": {"enable": True, "samples": 1000000, "max_z": 3},
            "FiniteAperturePowerCheck": {
                "enable": False,
                "samples": 1000000,
                "distance_ratio": 1000,
                "max_relative_error": 0.02,
            },
            "NearFieldBiasCheck": {
                "enable": False,
                "samples": 100000,
                "distance_ratio": 3,
            },
        },
        # Geometry and finite-aperture checks do not depend on the link
        # length, so they run once.
        "link-20m": {
            "NearestNeighborDistanceCheck": {"enable": True},
            "ExpectedDepthCheck": {"enable": True},
            "FiniteAperturePowerCheck": {"enable": True},
            "NearFieldBiasCheck": {"enable": True},
        },
    },
}

SCENARIO_OVERRIDES = ("lambda_2d", "slab_depth")


def load_suite(path: Optional[str | Path]) -> Dict[str, Any]:
    if path is None:
        return deepcopy(DEFAULT_SUITE)

    try:
        suite = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError([Violation("oracle_config", f"{path}: {exc}")])

    if not isinstance(suite, dict) or "scenarios" not in suite or "checks" not in suite:
        raise ConfigError(
            [Violation("oracle_config", f"{path}: needs 'scenarios' and 'checks'")]
        )

    return suite


class Dispatch:
    """
    Load configuration for each check/scenario pair, run the enabled checks,
    record their status in gauges, and log the ones that failed.
    """

    def __init__(self, config: Dict[str, Any], registry: Optional[CollectorRegistry] = None):
        self.config = config
        self.registry = registry or CollectorRegistry()
        self.check_gauge = Gauge(
            "oracle_check_failed",
            "Oracle check failure status",
            ["check", "scenario"],
            registry=self.registry,
        )
        self.z_score_gauge = Gauge(
            "oracle_check_z_score",
            "Deviation of the Monte Carlo mean from the closed form, in standard errors",
            ["check", "scenario"],
            registry=self.registry,
        )

    def states(self, params: SystemParams, seed: int, workers: int = 1) -> List[OracleState]:
        states = []
        for scenario in self.config["scenarios"]:
            overrides = {k: float(scenario[k]) for k in SCENARIO_OVERRIDES if k in scenario}
            states.append(
                OracleState(
                    scenario=str(scenario["name"]),
                    params=dataclasses.replace(params, **overrides),
                    link_length=float(scenario.get("link_length", 20.0)),
                    seed=seed,
                    workers=workers,
                )
            )
        return states

    def run(self, states: List[OracleState]) -> Dict[str, Any]:
        reports: List[Dict[str, Any]] = []

        for state in states:
            reports.extend(self.check_scenario(state))

        passed = all(report["passed"] for report in reports)
        logger.info(
            "Oracle suite finished: {} of {} checks passed",
            sum(1 for report in reports if report["passed"]),
            len(reports),
        )

        return {
            "seed": states[0].seed if states else None,
            "passed": passed,
            "checks": reports,
        }

    def check_scenario(self, state: OracleState) -> List[Dict[str, Any]]:
        reports: List[Dict[str, Any]] = []

        for check_class in ORACLE_CHECKS:
            config = self.load_config(check_class.__name__, state.scenario)
            if not config.get("enable", False):
                continue

            check = check_class(state, config)
            gauge = self.check_gauge.labels(
                check=check_class.__name__,
                scenario=state.scenario,
            )

            passed = check.run()
            report = check.report()

            z = report.get("z_score")
            if z is not None and math.isfinite(z):
                self.z_score_gauge.labels(
                    check=check_class.__name__, scenario=state.scenario
                ).set(z)

            if passed:
                gauge.set(0)
            else:
                gauge.set(1)
                with logger.contextualize(**report):
                    logger.error(
                        f"{check_class.__name__} failed for scenario {state.scenario}"
                    )

            reports.append(report)

        return reports

    def load_config(self, check_name: str, scenario: str) -> Dict[str, Any]:
        config = deepcopy(
            self.config["checks"]["global"].get(check_name, {"enable": False})
        )

        if scenario in self.config["checks"]:
            if check_name in self.config["checks"][scenario]:
                config |= self.config["checks"][scenario][check_name]

        return config

    def write_metrics(self, path: str | Path) -> None:
        write_to_textfile(str(path), self.registry)
