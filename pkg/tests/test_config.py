import pytest

from horseshoe_ifs.config import PRESETS, ConfigError, format_params, parse_config, params_from_mapping, resolve_params


def test_parse_config_forms():
    text = "beta0 = 1.05  # inline\n\nlambda0: 0.9\n"
    assert parse_config(text) == {"beta0": "1.05", "lambda0": "0.9"}
    with pytest.raises(ConfigError):
        parse_config("beta0 1.05\n")
    with pytest.raises(ConfigError):
        parse_config("a = 1\na = 2\n")
    with pytest.raises(ConfigError):
        parse_config("a =\n")


def test_mapping_errors():
    base = PRESETS["default-validated"].to_dict()
    with pytest.raises(ConfigError):
        params_from_mapping({k: v for k, v in base.items() if k != "gamma"})
    with pytest.raises(ConfigError):
        params_from_mapping({**base, "beta0": 0.5})
    with pytest.raises(ConfigError):
        params_from_mapping({**base, "extra": 1})
    assert params_from_mapping({k: str(v) for k, v in base.items()}) == PRESETS["default-validated"]


def test_resolve():
    assert resolve_params() is PRESETS["default-validated"]
    with pytest.raises(ConfigError):
        resolve_params("x", "default-validated")
    with pytest.raises(ConfigError):
        resolve_params(preset="unknown")


def test_format_uses_repr_precision():
    text = format_params(PRESETS["default-validated"])
    assert "beta0 = 1.0774\n" in text and text.count("\n") == 15
