import json
import math

import pytest

from uowc_offset.config import (
    CROSSTALK_LIMIT,
    LEVEL_PRESETS,
    REFERENCE_PARAMS,
    apply_level,
    load_config,
    read_config_file,
    validate_params,
)
from uowc_offset.errors import ConfigError

from tests.helpers import make_params


def fields_of(exc: ConfigError):
    return {v.field for v in exc.violations}


def test_reference_params_validate():
    params = validate_params(REFERENCE_PARAMS)

    assert params.phi_half == pytest.approx(math.pi / 3)
    assert params.fov_semi_angle == pytest.approx(2 * math.pi / 3)
    assert params.aperture_radius == pytest.approx(0.15)
    assert params.aperture_area == pytest.approx(0.0706858, rel=1e-6)
    assert params.solar_spectral_fraction_mode == "raw_nm_multiplier"


def test_zero_half_power_angle_names_the_field():
    with pytest.raises(ConfigError) as info:
        make_params(phi_half_deg=0)

    assert fields_of(info.value) == {"phi_half_deg"}


def test_all_violations_reported_at_once():
    with pytest.raises(ConfigError) as info:
        make_params(pde=2.0, lambda_2d=-1.0, bandwidth="wide")

    assert fields_of(info.value) == {"pde", "lambda_2d", "bandwidth"}


def test_missing_unknown_and_conflicting_fields():
    raw = dict(REFERENCE_PARAMS)
    del raw["extinction"]
    raw["colour"] = "blue"
    raw["phi_half"] = 1.0

    with pytest.raises(ConfigError) as info:
        validate_params(raw)

    assert fields_of(info.value) == {"extinction", "colour", "phi_half_deg"}


def test_booleans_and_non_finite_values_are_rejected():
    with pytest.raises(ConfigError) as info:
        make_params(tx_power=True, extinction=math.inf)

    assert fields_of(info.value) == {"tx_power", "extinction"}


def test_crosstalk_bound():
    # Just below 1 - 1/e the excess noise factor is huge but finite.
    assert 0.632 < CROSSTALK_LIMIT
    assert make_params(crosstalk_prob=0.632).crosstalk_prob == 0.632

    with pytest.raises(ConfigError) as info:
        make_params(crosstalk_prob=0.6322)
    assert fields_of(info.value) == {"crosstalk_prob"}


def test_power_floor_below_cap():
    with pytest.raises(ConfigError) as info:
        make_params(ptx_floor=8.0)

    assert fields_of(info.value) == {"ptx_floor"}


def test_unknown_solar_mode():
    with pytest.raises(ConfigError):
        make_params(solar_spectral_fraction_mode="per_photon")


def test_revalidating_a_record_is_identity():
    params = make_params()
    assert validate_params(params) == params


@pytest.mark.parametrize("level,depth", [(1, 50.0), (2, 500.0), (3, 6000.0)])
def test_apply_level(level, depth):
    params = apply_level(make_params(), level)

    assert params.slab_depth == depth
    assert LEVEL_PRESETS[level].slab_depth == depth


def test_unknown_level():
    with pytest.raises(ConfigError) as info:
        apply_level(make_params(), 4)

    assert fields_of(info.value) == {"level"}


class TestLoadConfig:
    @pytest.fixture(autouse=True)
    def setup(self, tmp_path):
        self.tmp_path = tmp_path

    def write(self, name: str, text: str):
        path = self.tmp_path / name
        path.write_text(text)
        return path

    def test_defaults_to_reference_params(self):
        params, raw = load_config()

        assert raw == REFERENCE_PARAMS
        assert params == validate_params(REFERENCE_PARAMS)

    def test_flag_overrides_file_value(self):
        path = self.write("params.json", json.dumps({**REFERENCE_PARAMS, "slab_depth": 100.0}))

        params, _ = load_config(path)
        assert params.slab_depth == 100.0

        params, raw = load_config(path, {"slab_depth": 500.0, "lambda_2d": None})
        assert params.slab_depth == 500.0
        assert raw["slab_depth"] == 500.0
        assert params.lambda_2d == 0.001

    def test_yaml_exponent_needs_a_dot(self):
        path = self.write("params.yaml", "ber_threshold: 1.0e-6\n")
        assert read_config_file(path) == {"ber_threshold": 1e-6}

    def test_angle_override_replaces_either_spelling(self):
        params, raw = load_config(None, {"phi_half": 0.5})

        assert params.phi_half == 0.5
        assert "phi_half_deg" not in raw

    def test_json_parse_error_has_position(self):
        path = self.write("params.json", '{\n  "lambda_2d": ,\n}\n')

        with pytest.raises(ConfigError) as info:
            read_config_file(path)

        assert "line 2" in str(info.value)

    def test_yaml_parse_error_has_position(self):
        path = self.write("params.yaml", "lambda_2d: [1, 2\nslab_depth: 3\n")

        with pytest.raises(ConfigError) as info:
            read_config_file(path)

        assert "line" in str(info.value)

    def test_top_level_must_be_a_mapping(self):
        path = self.write("params.yaml", "- 1\n- 2\n")

        with pytest.raises(ConfigError):
            read_config_file(path)

    def test_missing_file(self):
        with pytest.raises(ConfigError) as info:
            load_config(self.tmp_path / "nope.json")

        assert fields_of(info.value) == {"config"}

    def test_invalid_file_value(self):
        path = self.write("params.json", '{"phi_half_deg": 0}')

        with pytest.raises(ConfigError) as info:
            load_config(path)

        # Every other required field is missing too.
        assert "phi_half_deg" in fields_of(info.value)
