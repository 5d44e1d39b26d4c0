from pathlib import Path

import pytest
from prometheus_client import CollectorRegistry

from uowc_offset.dispatch import DEFAULT_SUITE, Dispatch, load_suite
from uowc_offset.errors import ConfigError
from uowc_offset.models import PowerResult

from tests.helpers import make_params

ROOT = Path(__file__).resolve().parent.parent


def small_suite():
    return {
        "scenarios": [
            {"name": "short", "link_length": 10.0},
            {"name": "dense", "link_length": 20.0, "lambda_2d": 0.01},
        ],
        "checks": {
            "global": {
                "RandomOrientationPowerCheck": {
                    "enable": True,
                    "samples": 20000,
                    "max_z": 5,
                },
                "MainLobePowerCheck": {"enable": False, "samples": 20000, "max_z": 5},
                "ExpectedDepthCheck": {"enable": False, "trials": 2000, "max_z": 5},
            },
            "dense": {
                "MainLobePowerCheck": {"enable": True},
                "ExpectedDepthCheck": {"enable": True},
            },
        },
    }


def gauge_value(registry, check, scenario):
    return registry.get_sample_value(
        "oracle_check_failed", {"check": check, "scenario": scenario}
    )


def test_sample_oracle_config_matches_default_suite():
    assert load_suite(ROOT / "sample.oracle.yaml") == DEFAULT_SUITE
    assert load_suite(None) == DEFAULT_SUITE
    assert load_suite(None) is not DEFAULT_SUITE


def test_load_suite_reads_through_path(tmp_path, mocker):
    suite = tmp_path / "suite.yaml"
    suite.write_text("scenarios: []\nchecks: {}\n")
    # Read through Path.read_text, never a bare open().
    bare_open = mocker.patch("uowc_offset.dispatch.open", create=True)

    assert load_suite(str(suite)) == {"scenarios": [], "checks": {}}
    bare_open.assert_not_called()


def test_load_suite_rejects_bad_files(tmp_path):
    missing = tmp_path / "missing.yaml"
    with pytest.raises(ConfigError):
        load_suite(missing)

    flat = tmp_path / "flat.yaml"
    flat.write_text("- just\n- a list\n")
    with pytest.raises(ConfigError):
        load_suite(flat)

    partial = tmp_path / "partial.yaml"
    partial.write_text("scenarios: []\n")
    with pytest.raises(ConfigError):
        load_suite(partial)


class TestDispatch:
    @pytest.fixture(autouse=True)
    def setup(self):
        self.registry = CollectorRegistry()
        self.dispatch = Dispatch(small_suite(), self.registry)
        self.states = self.dispatch.states(make_params(), seed=3)

    def test_states_apply_scenario_overrides(self):
        short, dense = self.states

        assert short.scenario == "short" and short.link_length == 10.0
        assert short.params.lambda_2d == make_params().lambda_2d
        assert dense.params.lambda_2d == 0.01
        assert dense.seed == 3

    def test_load_config_merges_scenario_block(self):
        assert self.dispatch.load_config("MainLobePowerCheck", "short") == {
            "enable": False,
            "samples": 20000,
            "max_z": 5,
        }
        assert self.dispatch.load_config("MainLobePowerCheck", "dense")["enable"]
        assert self.dispatch.load_config("NearFieldBiasCheck", "dense") == {
            "enable": False
        }

    def test_load_config_leaves_global_block_alone(self):
        self.dispatch.load_config("MainLobePowerCheck", "dense")

        assert not small_suite()["checks"]["global"]["MainLobePowerCheck"]["enable"]
        assert not self.dispatch.config["checks"]["global"]["MainLobePowerCheck"][
            "enable"
        ]

    def test_suite_passes(self):
        result = self.dispatch.run(self.states)

        assert result["passed"]
        assert result["seed"] == 3
        assert [(r["check"], r["scenario"]) for r in result["checks"]] == [
            ("RandomOrientationPowerCheck", "short"),
            ("ExpectedDepthCheck", "dense"),
            ("RandomOrientationPowerCheck", "dense"),
            ("MainLobePowerCheck", "dense"),
        ]
        assert gauge_value(self.registry, "RandomOrientationPowerCheck", "short") == 0
        assert gauge_value(self.registry, "MainLobePowerCheck", "dense") == 0

    def test_disabled_checks_are_skipped(self):
        self.dispatch.run(self.states)

        assert gauge_value(self.registry, "MainLobePowerCheck", "short") is None
        assert gauge_value(self.registry, "OffsetPowerCheck", "dense") is None

    def test_failed_check_sets_gauge(self, mocker):
        mocker.patch(
            "uowc_offset.oracle.checks.power_random_orientation",
            return_value=PowerResult(value=1.0, variant="random_orientation", link_length=20.0),
        )

        result = self.dispatch.run(self.states)

        assert not result["passed"]
        failed = [r for r in result["checks"] if not r["passed"]]
        assert {r["check"] for r in failed} == {"RandomOrientationPowerCheck"}
        assert gauge_value(self.registry, "RandomOrientationPowerCheck", "short") == 1
        assert gauge_value(self.registry, "MainLobePowerCheck", "dense") == 0

    def test_write_metrics(self, tmp_path):
        self.dispatch.run(self.states)
        path = tmp_path / "oracle.prom"

        self.dispatch.write_metrics(path)

        text = path.read_text()
        assert "oracle_check_failed" in text
        assert "oracle_check_z_score" in text
