import json

import pytest
from click.testing import CliRunner

from uowc_offset.cli import cli
from uowc_offset.config import REFERENCE_PARAMS
from uowc_offset.models import PowerResult
from uowc_offset.output import SWEEP_COLUMNS

from tests.helpers import parse_cell, read_csv

SMALL_SUITE = """\
scenarios:
  - name: link-20m
    link_length: 20
checks:
  global:
    RandomOrientationPowerCheck:
      enable: true
      samples: 20000
      max_z: 5
    OffsetPowerCheck:
      enable: true
      samples: 20000
      max_z: 5
"""


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def invoke(runner, tmp_path):
    def call(*args):
        return runner.invoke(cli, ["--out", str(tmp_path / "out"), *args])

    return call


def rows(tmp_path, name):
    return read_csv(tmp_path / "out" / f"{name}.csv")


def test_power_random_orientation(invoke, tmp_path):
    result = invoke("power", "--L", "20", "--variant", "random_orientation")

    assert result.exit_code == 0, result.output
    (row,) = rows(tmp_path, "power")
    assert row["variant"] == "random_orientation"
    assert parse_cell(row["power_w"]) == pytest.approx(5.4901e-6, rel=1e-4)
    assert row["delta_deg"] == ""

    manifest = json.loads((tmp_path / "out" / "power.manifest.json").read_text())
    assert manifest["command"] == "power"
    assert manifest["seed"] == 42
    assert manifest["config"] == REFERENCE_PARAMS
    assert manifest["argv"][-4:] == ["--L", "20", "--variant", "random_orientation"]


def test_power_all_variants(invoke, tmp_path):
    result = invoke("power", "--L", "20")

    assert result.exit_code == 0, result.output
    assert [r["variant"] for r in rows(tmp_path, "power")] == [
        "random_orientation",
        "main_lobe",
        "offset",
        "pat",
    ]


def test_manifest_config_reproduces_output(runner, tmp_path):
    first = runner.invoke(cli, ["--out", str(tmp_path / "a"), "--slab-depth", "500", "depth"])
    assert first.exit_code == 0, first.output

    manifest = json.loads((tmp_path / "a" / "depth.manifest.json").read_text())
    assert manifest["config"]["slab_depth"] == 500.0
    config = tmp_path / "replay.json"
    config.write_text(json.dumps(manifest["config"]))

    second = runner.invoke(cli, ["--out", str(tmp_path / "b"), "--config", str(config), "depth"])
    assert second.exit_code == 0, second.output

    assert (tmp_path / "a" / "depth.csv").read_bytes() == (
        tmp_path / "b" / "depth.csv"
    ).read_bytes()


def test_level_and_flag_precedence(invoke, tmp_path):
    result = invoke("--level", "2", "--slab-depth", "100", "depth")

    assert result.exit_code == 0, result.output
    (row,) = rows(tmp_path, "depth")
    assert parse_cell(row["slab_depth_m"]) == 100.0

    manifest = json.loads((tmp_path / "out" / "depth.manifest.json").read_text())
    assert manifest["level"] == 2


def test_invalid_config_exits_2(invoke, tmp_path):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({**REFERENCE_PARAMS, "phi_half_deg": 0.0}))

    result = invoke("--config", str(config), "depth")

    assert result.exit_code == 2
    assert not (tmp_path / "out" / "depth.csv").exists()


def test_config_from_environment(runner, tmp_path, monkeypatch):
    config = tmp_path / "env.json"
    config.write_text(json.dumps({**REFERENCE_PARAMS, "lambda_2d": 0.01}))
    monkeypatch.setenv("UOWC_CONFIG", str(config))

    result = runner.invoke(cli, ["--out", str(tmp_path / "out"), "depth"])

    assert result.exit_code == 0, result.output
    (row,) = rows(tmp_path, "depth")
    assert parse_cell(row["lambda_per_m2"]) == 0.01


@pytest.mark.parametrize(
    "args",
    [
        ["--level", "4", "depth"],
        ["figure", "no-such-figure"],
        ["offset-opt", "--phi-min-deg", "50", "--phi-max-deg", "40"],
    ],
)
def test_bad_arguments_exit_2(invoke, args):
    assert invoke(*args).exit_code == 2


@pytest.mark.parametrize("command", ["optimize", "sweep"])
def test_infeasible_grid_exits_3(invoke, tmp_path, command):
    result = invoke(command, "--lambda-min", "1e-9", "--lambda-max", "1e-8", "--points", "3")

    assert result.exit_code == 3
    # The infeasible table is still written.
    table = rows(tmp_path, command)
    assert len(table) == 3
    assert all(r["feasible_base"] == "false" for r in table)


def test_optimize_writes_summary(invoke, tmp_path):
    # Without sunlight, so the level 1 links close.
    config = tmp_path / "dark.json"
    config.write_text(json.dumps({**REFERENCE_PARAMS, "solar_surface_irradiance": 0.0}))

    result = invoke(
        "--config",
        str(config),
        "--level",
        "1",
        "optimize",
        "--lambda-min",
        "1e-4",
        "--lambda-max",
        "1",
        "--points",
        "21",
    )

    assert result.exit_code == 0, result.output
    summary = rows(tmp_path, "optimize-summary")
    assert [r["strategy"] for r in summary] == ["baseline", "offset"]
    assert all(parse_cell(r["nb_star_bits"]) > 0 for r in summary)


class TestMcValidate:
    @pytest.fixture(autouse=True)
    def setup(self, tmp_path):
        self.suite = tmp_path / "suite.yaml"
        self.suite.write_text(SMALL_SUITE)
        self.metrics = tmp_path / "oracle.prom"

    def test_passes(self, invoke, tmp_path):
        result = invoke(
            "mc-validate",
            "--oracle-config",
            str(self.suite),
            "--metrics-file",
            str(self.metrics),
        )

        assert result.exit_code == 0, result.output
        table = rows(tmp_path, "mc-validate")
        assert [r["check"] for r in table] == [
            "RandomOrientationPowerCheck",
            "OffsetPowerCheck",
        ]
        assert all(r["passed"] == "true" for r in table)
        assert "oracle_check_failed" in self.metrics.read_text()

    def test_failure_exits_4(self, invoke, tmp_path, mocker):
        mocker.patch(
            "uowc_offset.oracle.checks.power_random_orientation",
            return_value=PowerResult(value=1.0, variant="random_orientation", link_length=20.0),
        )

        result = invoke("mc-validate", "--oracle-config", str(self.suite))

        assert result.exit_code == 4
        table = rows(tmp_path, "mc-validate")
        assert [r["passed"] for r in table] == ["false", "true"]


def test_figure_delta_opt(invoke, tmp_path):
    result = invoke("figure", "delta-opt")

    assert result.exit_code == 0, result.output
    table = rows(tmp_path, "delta-opt")
    assert len(table) == 71
    assert parse_cell(table[50]["phi_half_deg"]) == 60.0
    assert parse_cell(table[50]["delta_exact_deg"]) == pytest.approx(15.0, abs=1e-6)


def test_figure_energy_opt_columns(invoke, tmp_path):
    result = invoke("--level", "1", "figure", "energy-opt")

    assert result.exit_code == 0, result.output
    header = (tmp_path / "out" / "energy-opt.csv").read_text().splitlines()[0]
    assert header == ",".join(SWEEP_COLUMNS)


def test_figure_output_does_not_depend_on_workers(runner, tmp_path):
    outputs = []
    for workers in ("1", "4"):
        out = tmp_path / f"w{workers}"
        result = runner.invoke(
            cli,
            ["--out", str(out), "--workers", workers, "figure", "nn-dist", "--trials", "2000"],
        )
        assert result.exit_code == 0, result.output
        outputs.append((out / "nn-dist.csv").read_bytes())

    assert outputs[0] == outputs[1]


def test_json_format(invoke, tmp_path):
    result = invoke(
        "--format",
        "json",
        "offset-opt",
        "--phi-min-deg",
        "30",
        "--phi-max-deg",
        "60",
        "--step-deg",
        "15",
    )

    assert result.exit_code == 0, result.output
    document = json.loads((tmp_path / "out" / "offset-opt.json").read_text())
    assert [r["phi_half_deg"] for r in document["rows"]] == [30.0, 45.0, 60.0]


def test_channel_gain(invoke, tmp_path):
    result = invoke("channel-gain", "--theta-deg", "0", "--psi-deg", "0", "--L", "20")

    assert result.exit_code == 0, result.output
    (row,) = rows(tmp_path, "channel-gain")
    assert parse_cell(row["gain"]) == pytest.approx(1.16505e-4, rel=1e-4)
    assert parse_cell(row["prx_w"]) == pytest.approx(8.0 * 1.16505e-4, rel=1e-4)


def test_snr_at_given_power(invoke, tmp_path):
    result = invoke("snr", "--prx", "5.4901e-6", "--l-deep", "10")

    assert result.exit_code == 0, result.output
    (row,) = rows(tmp_path, "snr")
    snr = parse_cell(row["snr"])
    assert snr == pytest.approx(
        parse_cell(row["signal_current"]) ** 2 / parse_cell(row["sigma_total2"])
    )
    assert 0.0 <= parse_cell(row["ber"]) <= 0.5
    assert parse_cell(row["snr_required"]) == pytest.approx(22.595, rel=1e-4)


def test_ber_at_given_snr(invoke, tmp_path):
    result = invoke("ber", "--snr", "22.595")

    assert result.exit_code == 0, result.output
    (row,) = rows(tmp_path, "ber")
    assert parse_cell(row["ber"]) == pytest.approx(1e-6, rel=1e-3)
