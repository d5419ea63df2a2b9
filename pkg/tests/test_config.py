import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from yigcat.config import ConfigError, default_config, format_config, load_config, parse_config


def test_empty_config_is_all_defaults():
    config = parse_config("")
    assert config == default_config()
    assert config["protocol.t0"] == 1e-5
    assert config["protocol.gradB"] == 1e6
    assert config["particle.radius"] == 1e-8
    assert config.spin() == 500
    assert "protocol.t0" in config.defaulted


def test_units_are_converted_to_si():
    config = parse_config("[protocol]\nt0 = 10 us\ngradB = 1e6 T/m\n[environment]\npressure = 1e-9 mbar\n")
    assert config["protocol.t0"] == pytest.approx(1e-5, rel=1e-15)
    assert config["protocol.gradB"] == 1e6
    assert config["environment.pressure"] == pytest.approx(1e-7, rel=1e-15)
    assert "protocol.t0" not in config.defaulted


def test_negative_time_rejected_with_line():
    with pytest.raises(ConfigError, match="t0 must be positive") as info:
        parse_config("[protocol]\n\nt0 = -1e-6 s\n")
    assert info.value.line == 3
    assert str(info.value).startswith("line 3: ")


def test_dimension_mismatch_named():
    with pytest.raises(ConfigError, match=r"t0: dimension mismatch, expected s"):
        parse_config("[protocol]\nt0 = 3 m\n")


def test_unknown_key_and_section():
    with pytest.raises(ConfigError, match="'gradient'") as info:
        parse_config("[protocol]\ngradient = 1\n")
    assert "gradB" in str(info.value)
    with pytest.raises(ConfigError, match=r"unknown section \[widgets\]"):
        parse_config("[widgets]\n")


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config("[protocol]\nt0 = 1e-5\nthis line is broken\n")
    assert info.value.line == 3


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("[protocol]\nt0 = 1e-5\nt0 = 2e-5\n")


def test_round_trip_of_echo():
    config = parse_config("[protocol]\ngradB = 1e6 T/m\nt0 = 7 us\n[particle]\nS = auto\n")
    echo = format_config(config)
    assert "gradB = 1000000.0" in echo
    assert "# defaulted: true" in echo
    assert parse_config(echo) == config


@settings(max_examples=40)
@given(
    st.floats(1e-7, 1e-3),
    st.floats(0.0, 1e7),
    st.floats(0.0, 1.5707),
    st.integers(2, 5000),
    st.sampled_from(["naive", "paper-calibrated"]),
)
def test_round_trip_property(t0, grad, theta, S, mode):
    text = f"[protocol]\nt0 = {t0!r}\ngradB = {grad!r}\ntheta = {theta!r}\n[particle]\nS = {S}\n[decoherence]\ncsl_mode = {mode}\n"
    config = parse_config(text)
    assert parse_config(format_config(config)) == config


def test_inline_material_section():
    text = (
        "[particle]\nmaterial = toy\nS = auto\nspin_counting = lattice\nradius = 20 nm\n"
        "[material:toy]\nrho = 4000\na_lattice = 1e-9\nspins_per_cell = 2\ns_ion = 1.5\nK_x = 1e4\n"
        "anisotropy_ratio = 0.02\nomega0 = 1e12\ng_L = 2\ndead_layers = 1\nT_blocking = 30\n"
        "gilbert_alpha = 1e-4\ngamma_r = 1.76e11\nJ_exchange = 1e-21\n"
    )
    config = parse_config(text)
    assert config.material().name == "toy"
    assert config.material().rho == 4000
    assert config.spin() > 0
    assert parse_config(format_config(config)) == config


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.ini")
    assert load_config(None) == default_config()


def test_replace_keeps_validation():
    config = default_config()
    assert config.replace(protocol__t0=2e-6)["protocol.t0"] == 2e-6
    with pytest.raises((ConfigError, ValueError)):
        config.replace(protocol__t0=-1.0)
