import json
import math
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from yigcat.core import (
    CONSTANTS,
    DimensionError,
    PhysicalConstants,
    Quantity,
    convert_pressure,
    ev_to_joule,
    joule_to_kelvin,
    kelvin_to_joule,
    parse_quantity,
    parse_unit,
    round_to_even,
    thermal_energy,
)

GOLDEN = Path(__file__).parent / "data" / "constants_golden.json"


def test_constants_match_golden_file():
    golden = json.loads(GOLDEN.read_text())
    assert CONSTANTS.as_dict() == golden


def test_constants_positive_and_immutable():
    assert all(v > 0 for v in CONSTANTS.as_dict().values())
    with pytest.raises(AttributeError):
        CONSTANTS.hbar = 1.0
    with pytest.raises(ValueError):
        PhysicalConstants(G=-1.0)


def test_constants_codata_consistency():
    assert CONSTANTS.hbar == pytest.approx(CONSTANTS.h / (2 * math.pi), rel=1e-9)
    assert CONSTANTS.wien_b == 2.89e-3
    # mu_0 = 4 pi 1e-7 to better than 1e-9
    assert CONSTANTS.mu_0 == pytest.approx(4e-7 * math.pi, rel=1e-9)


@pytest.mark.parametrize(
    "p_mbar, p_pa",
    [(1e-9, 1e-7), (0.0, 0.0), (1013.25, 1.01325e5)],
)
def test_convert_pressure(p_mbar, p_pa):
    assert convert_pressure(p_mbar) == pytest.approx(p_pa, rel=1e-15)


def test_convert_pressure_rejects_negative():
    with pytest.raises(ValueError):
        convert_pressure(-1.0)


def test_thermal_energy_examples():
    assert thermal_energy(0.0) == 0.0
    assert thermal_energy(1.0) == 1.380649e-23
    # 0.3 * 1.380649e-23 by hand
    assert thermal_energy(0.3) == pytest.approx(4.141947e-24, rel=1e-6)
    with pytest.raises(ValueError):
        thermal_energy(-1.0)


def test_energy_conversions_are_plain_multiplications():
    assert ev_to_joule(1.0) == CONSTANTS.e
    assert kelvin_to_joule(2.0) == 2.0 * CONSTANTS.k_B
    assert joule_to_kelvin(CONSTANTS.k_B) == 1.0


@pytest.mark.parametrize("x, expected", [(499.0, 500), (501.0, 500), (502.9, 502), (0.4, 0), (3.0, 4)])
def test_round_to_even(x, expected):
    assert round_to_even(x) == expected


# -- quantities --------------------------------------------------------------


def test_parse_unit_compound():
    scale, dims = parse_unit("T/m")
    assert scale == 1.0
    assert dims == (1, -1, -2, 0, -1)
    scale, dims = parse_unit("rad/(s*T)")
    assert dims == (-1, 0, 1, 0, 1)
    assert parse_unit("kg/m^3")[1] == (1, -3, 0, 0, 0)


def test_parse_unit_unknown():
    with pytest.raises(DimensionError):
        parse_unit("furlong")


def test_parse_quantity_prefixes():
    assert parse_quantity("10 us").require("s") == pytest.approx(1e-5, rel=1e-15)
    assert parse_quantity("1e-9 mbar").require("Pa") == pytest.approx(1e-7, rel=1e-15)
    assert parse_quantity("300 mK").require("K") == pytest.approx(0.3)
    assert parse_quantity("2.5", "nm").require("m") == pytest.approx(2.5e-9)
    with pytest.raises(ValueError):
        parse_quantity("ten seconds")


def test_mismatched_arithmetic_rejected():
    with pytest.raises(DimensionError):
        Quantity(1.0, "m") + Quantity(1.0, "s")
    with pytest.raises(DimensionError):
        Quantity(1.0, "m").require("s")
    with pytest.raises(DimensionError):
        float(Quantity(1.0, "m"))


def test_quantity_is_immutable():
    q = Quantity(1.0, "m")
    with pytest.raises(AttributeError):
        q.value = 2.0


def test_to_converts_units():
    assert Quantity(1.0, "GHz").to("Hz") == 1e9
    assert Quantity(1.0, "eV").to("J") == CONSTANTS.e
    energy = Quantity(CONSTANTS.k_B, "J")
    assert (energy / Quantity(CONSTANTS.k_B, "J/K")).to("K") == pytest.approx(1.0)


DIMS = st.tuples(*[st.integers(-4, 4)] * 5)
VALUES = st.floats(min_value=1e-6, max_value=1e6)


@given(VALUES, DIMS, VALUES, DIMS)
def test_product_and_quotient_dimensions_add_componentwise(a, da, b, db):
    qa, qb = Quantity(a, da), Quantity(b, db)
    assert (qa * qb).dims == tuple(x + y for x, y in zip(da, db))
    assert (qa / qb).dims == tuple(x - y for x, y in zip(da, db))


@given(VALUES, DIMS, st.integers(-3, 3))
def test_power_scales_dimensions(a, da, n):
    assert (Quantity(a, da) ** n).dims == tuple(n * d for d in da)


@given(VALUES, st.sampled_from(["nm", "um", "mm", "us", "ms", "mK", "mbar", "pT", "GHz", "eV", "meV", "deg"]))
def test_unit_round_trip_is_identity(x, unit):
    q = Quantity(x, unit)
    assert Quantity(q.to(unit), unit).value == pytest.approx(q.value, rel=1e-12)
    assert q.to(unit) == pytest.approx(x, rel=1e-12)


@given(VALUES, VALUES, DIMS)
def test_addition_requires_same_dimension(a, b, d):
    assert (Quantity(a, d) + Quantity(b, d)).value == pytest.approx(a + b)
    other = tuple(x + 1 for x in d)
    with pytest.raises(DimensionError):
        Quantity(a, d) - Quantity(b, other)
