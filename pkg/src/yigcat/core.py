"""Physical constants, a small dimensioned-quantity type and unit conversions.

Everything inside the package works in SI floats. ``Quantity`` exists for the
I/O boundary (config files, CLI flags) where a value arrives with a unit
string attached and has to be checked before it is turned into a float.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "DimensionError",
    "Quantity",
    "parse_unit",
    "parse_quantity",
    "convert_pressure",
    "thermal_energy",
    "ev_to_joule",
    "kelvin_to_joule",
    "joule_to_kelvin",
    "round_to_even",
]


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.054571817e-34
    h: float = 6.62607015e-34
    k_B: float = 1.380649e-23
    mu_B: float = 9.2740100783e-24
    mu_0: float = 1.25663706212e-6
    G: float = 6.67430e-11
    g_acc: float = 9.80665
    sigma_SB: float = 5.670374419e-8
    c: float = 299792458.0
    m_e: float = 9.1093837015e-31
    amu: float = 1.66053906660e-27
    e: float = 1.602176634e-19
    # Wien displacement constant at the 3-digit value used in the blackbody
    # estimate; CODATA is 2.897771955e-3.
    wien_b: float = 2.89e-3

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"constant {f.name} must be positive and finite, got {value!r}")

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


CONSTANTS = PhysicalConstants()


# ---------------------------------------------------------------------------
# Dimensions
# ---------------------------------------------------------------------------

BASE_DIMENSIONS = ("kg", "m", "s", "K", "A")
DIMENSIONLESS = (0, 0, 0, 0, 0)


class DimensionError(ValueError):
    """Raised when quantities with incompatible dimensions are combined."""


def _dim(kg=0, m=0, s=0, K=0, A=0) -> tuple[int, ...]:
    return (kg, m, s, K, A)


def _dim_add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _dim_sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def format_dimension(dims) -> str:
    parts = []
    for name, p in zip(BASE_DIMENSIONS, dims):
        if p == 1:
            parts.append(name)
        elif p:
            parts.append(f"{name}^{p}")
    return "*".join(parts) if parts else "1"


_JOULE = _dim(kg=1, m=2, s=-2)
_TESLA = _dim(kg=1, s=-2, A=-1)
_PASCAL = _dim(kg=1, m=-1, s=-2)

# symbol -> (SI scale, dimension vector)
UNITS: dict[str, tuple[float, tuple[int, ...]]] = {
    "1": (1.0, DIMENSIONLESS),
    "rad": (1.0, DIMENSIONLESS),
    "deg": (math.pi / 180.0, DIMENSIONLESS),
    "m": (1.0, _dim(m=1)),
    "km": (1e3, _dim(m=1)),
    "cm": (1e-2, _dim(m=1)),
    "mm": (1e-3, _dim(m=1)),
    "um": (1e-6, _dim(m=1)),
    "µm": (1e-6, _dim(m=1)),
    "nm": (1e-9, _dim(m=1)),
    "s": (1.0, _dim(s=1)),
    "ms": (1e-3, _dim(s=1)),
    "us": (1e-6, _dim(s=1)),
    "µs": (1e-6, _dim(s=1)),
    "ns": (1e-9, _dim(s=1)),
    "kg": (1.0, _dim(kg=1)),
    "g": (1e-3, _dim(kg=1)),
    "u": (CONSTANTS.amu, _dim(kg=1)),
    "K": (1.0, _dim(K=1)),
    "mK": (1e-3, _dim(K=1)),
    "A": (1.0, _dim(A=1)),
    "N": (1.0, _dim(kg=1, m=1, s=-2)),
    "J": (1.0, _JOULE),
    "eV": (CONSTANTS.e, _JOULE),
    "meV": (1e-3 * CONSTANTS.e, _JOULE),
    "W": (1.0, _dim(kg=1, m=2, s=-3)),
    "Pa": (1.0, _PASCAL),
    "bar": (1e5, _PASCAL),
    "mbar": (1e2, _PASCAL),
    "T": (1.0, _TESLA),
    "mT": (1e-3, _TESLA),
    "uT": (1e-6, _TESLA),
    "nT": (1e-9, _TESLA),
    "pT": (1e-12, _TESLA),
    "Hz": (1.0, _dim(s=-1)),
    "kHz": (1e3, _dim(s=-1)),
    "MHz": (1e6, _dim(s=-1)),
    "GHz": (1e9, _dim(s=-1)),
}

_TOKEN = re.compile(r"^([A-Za-zµ]+|1)(?:\^(-?\d+))?$")


def _parse_product(text: str) -> tuple[float, tuple[int, ...]]:
    scale, dims = 1.0, DIMENSIONLESS
    for token in filter(None, re.split(r"[*·]", text)):
        match = _TOKEN.match(token.strip())
        if match is None or match.group(1) not in UNITS:
            raise DimensionError(f"unknown unit {token!r}")
        unit_scale, unit_dims = UNITS[match.group(1)]
        power = int(match.group(2) or 1)
        scale *= unit_scale**power
        dims = _dim_add(dims, tuple(d * power for d in unit_dims))
    return scale, dims


def parse_unit(text: str) -> tuple[float, tuple[int, ...]]:
    """Parse ``"T/m"``, ``"kg/m^3"``, ``"rad/(s*T)"`` into (SI scale, dimensions)."""
    text = text.strip()
    if not text:
        return 1.0, DIMENSIONLESS
    numerator, _, denominator = text.partition("/")
    scale, dims = _parse_product(numerator)
    if denominator:
        den_scale, den_dims = _parse_product(denominator.replace("(", "").replace(")", "").replace("/", "*"))
        scale /= den_scale
        dims = _dim_sub(dims, den_dims)
    return scale, dims


class Quantity:
    """A real value in SI with a dimension vector over (kg, m, s, K, A)."""

    __slots__ = ("value", "dims")

    def __init__(self, value: float, unit: str | tuple[int, ...] = DIMENSIONLESS):
        if isinstance(unit, str):
            scale, dims = parse_unit(unit)
            value = value * scale
        else:
            dims = tuple(unit)
        object.__setattr__(self, "value", float(value))
        object.__setattr__(self, "dims", dims)

    def __setattr__(self, name, value):
        raise AttributeError("Quantity is immutable")

    def _check(self, other: Quantity, op: str) -> None:
        if self.dims != other.dims:
            raise DimensionError(
                f"cannot {op} {format_dimension(self.dims)} and {format_dimension(other.dims)}"
            )

    def _coerce(self, other) -> Quantity:
        return other if isinstance(other, Quantity) else Quantity(other)

    def __add__(self, other):
        other = self._coerce(other)
        self._check(other, "add")
        return Quantity(self.value + other.value, self.dims)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        self._check(other, "subtract")
        return Quantity(self.value - other.value, self.dims)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        return Quantity(self.value * other.value, _dim_add(self.dims, other.dims))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        return Quantity(self.value / other.value, _dim_sub(self.dims, other.dims))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, power: int):
        if not isinstance(power, int):
            raise TypeError("only integer powers are supported")
        return Quantity(self.value**power, tuple(d * power for d in self.dims))

    def __neg__(self):
        return Quantity(-self.value, self.dims)

    def __eq__(self, other):
        if not isinstance(other, Quantity):
            return NotImplemented
        return self.dims == other.dims and self.value == other.value

    def __hash__(self):
        return hash((self.value, self.dims))

    def __float__(self):
        if self.dims != DIMENSIONLESS:
            raise DimensionError(f"cannot convert {format_dimension(self.dims)} to a plain number")
        return self.value

    def __repr__(self):
        return f"Quantity({self.value!r}, {format_dimension(self.dims)!r})"

    def to(self, unit: str) -> float:
        """Numeric value expressed in ``unit``."""
        scale, dims = parse_unit(unit)
        if dims != self.dims:
            raise DimensionError(
                f"cannot express {format_dimension(self.dims)} in {unit} ({format_dimension(dims)})"
            )
        return self.value / scale

    def require(self, unit: str) -> float:
        """SI value, after checking the dimension matches ``unit``."""
        _, dims = parse_unit(unit)
        if dims != self.dims:
            raise DimensionError(
                f"expected {unit} ({format_dimension(dims)}), got {format_dimension(self.dims)}"
            )
        return self.value


def parse_quantity(text: str, default_unit: str = "") -> Quantity:
    """Read ``"10 us"`` or ``"1e6 T/m"``; a bare number takes ``default_unit``."""
    text = text.strip()
    match = re.match(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf)\s*(.*)$", text)
    if match is None:
        raise ValueError(f"cannot parse quantity {text!r}")
    value = float(match.group(1))
    unit = match.group(2).strip() or default_unit
    return Quantity(value, unit)


# ---------------------------------------------------------------------------
# Conversions
# ---------------------------------------------------------------------------


def convert_pressure(p_mbar: float) -> float:
    """Pressure in mbar to Pa."""
    if p_mbar < 0:
        raise ValueError(f"pressure must be non-negative, got {p_mbar}")
    return p_mbar * 100.0


def thermal_energy(T: float, constants: PhysicalConstants = CONSTANTS) -> float:
    if T < 0:
        raise ValueError(f"temperature must be non-negative, got {T}")
    return constants.k_B * T


def ev_to_joule(energy_ev: float, constants: PhysicalConstants = CONSTANTS) -> float:
    return energy_ev * constants.e


def kelvin_to_joule(T: float, constants: PhysicalConstants = CONSTANTS) -> float:
    return T * constants.k_B


def joule_to_kelvin(energy: float, constants: PhysicalConstants = CONSTANTS) -> float:
    return energy / constants.k_B


def round_to_even(x: float) -> int:
    """Nearest even integer (ties go to the even multiple of 4, as ``round`` does)."""
    return 2 * int(round(x / 2.0))
