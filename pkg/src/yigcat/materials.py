"""Material database and particle geometry.

A particle is a magnetic sphere, optionally wrapped in a non-magnetic shell.
From it we derive mass, moment of inertia, surface area and the total
uncompensated spin S of the core.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .core import round_to_even

__all__ = [
    "MaterialParams",
    "ShellMaterial",
    "ParticleSpec",
    "MaterialDatabase",
    "GeometryError",
    "load_database",
    "default_database",
    "get_material",
    "get_shell",
    "total_spin",
    "raw_spin_count",
    "radius_for_spin",
    "mass_and_inertia",
    "surface_area",
    "COUNTING_MODES",
]

COUNTING_MODES = ("lattice", "anchored")

# Reference pairing for "anchored" counting: S = 500 in a 10 nm radius YIG core.
ANCHOR_SPIN = 500
ANCHOR_RADIUS = 10e-9


class GeometryError(ValueError):
    """Particle geometry leaves no magnetic volume, or is otherwise invalid."""


@dataclass(frozen=True)
class MaterialParams:
    name: str
    rho: float
    a_lattice: float
    spins_per_cell: float
    s_ion: float
    K_x: float
    anisotropy_ratio: float
    omega0: float
    g_L: float
    gilbert_alpha: float
    gamma_r: float
    T_blocking: float
    J_exchange: float
    dead_layers: int

    def __post_init__(self):
        for attr in ("rho", "a_lattice", "K_x", "omega0"):
            if not getattr(self, attr) > 0:
                raise ValueError(f"{self.name}: {attr} must be positive")
        if not 0 < self.anisotropy_ratio < 1:
            raise ValueError(f"{self.name}: anisotropy_ratio must lie in (0, 1)")
        if self.s_ion <= 0 or not float(2 * self.s_ion).is_integer():
            raise ValueError(f"{self.name}: s_ion must be a positive multiple of 1/2")
        if self.dead_layers < 0 or int(self.dead_layers) != self.dead_layers:
            raise ValueError(f"{self.name}: dead_layers must be a non-negative integer")
        for attr in ("spins_per_cell", "g_L", "gilbert_alpha", "gamma_r", "T_blocking", "J_exchange"):
            if getattr(self, attr) < 0:
                raise ValueError(f"{self.name}: {attr} must be non-negative")

    @property
    def dead_thickness(self) -> float:
        return self.dead_layers * self.a_lattice


@dataclass(frozen=True)
class ShellMaterial:
    name: str
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"{self.name}: rho must be positive")


MATERIAL_FIELDS = tuple(f.name for f in fields(MaterialParams) if f.name != "name")
SHELL_FIELDS = ("rho",)


@dataclass(frozen=True)
class ParticleSpec:
    core_material: MaterialParams
    core_radius: float
    shell_material: ShellMaterial | None = None
    shell_outer_radius: float | None = None

    def __post_init__(self):
        if not self.core_radius > 0:
            raise GeometryError("core_radius must be positive")
        if self.shell_outer_radius is None:
            object.__setattr__(self, "shell_outer_radius", self.core_radius)
        if self.shell_outer_radius < self.core_radius:
            raise GeometryError("shell_outer_radius must not be smaller than core_radius")
        if self.shell_material is None and self.shell_outer_radius > self.core_radius:
            raise GeometryError("a shell radius was given without a shell material")

    @property
    def outer_radius(self) -> float:
        return self.shell_outer_radius

    @property
    def has_shell(self) -> bool:
        return self.shell_material is not None and self.shell_outer_radius > self.core_radius

    @property
    def core_volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.core_radius**3

    @property
    def mass(self) -> float:
        return mass_and_inertia(self)[0]

    @property
    def inertia(self) -> float:
        return mass_and_inertia(self)[1]

    def bare_core(self) -> ParticleSpec:
        return ParticleSpec(self.core_material, self.core_radius)

    def with_core_radius(self, radius: float) -> ParticleSpec:
        outer = max(self.shell_outer_radius, radius) if self.shell_material else radius
        return ParticleSpec(self.core_material, radius, self.shell_material, outer)


# ---------------------------------------------------------------------------
# Database
# ---------------------------------------------------------------------------


class MaterialDatabase:
    """Immutable-after-load mapping of magnetic and shell materials.

    ``register`` adds programmatic entries; it returns a new database rather
    than mutating the loaded one.
    """

    def __init__(self, materials=None, shells=None, version: str = "0"):
        self._materials: dict[str, MaterialParams] = dict(materials or {})
        self._shells: dict[str, ShellMaterial] = dict(shells or {})
        self.version = version

    def __contains__(self, name: str) -> bool:
        return name.lower() in self._materials

    @property
    def material_names(self) -> list[str]:
        return sorted(self._materials)

    @property
    def shell_names(self) -> list[str]:
        return sorted(self._shells)

    def material(self, name: str) -> MaterialParams:
        try:
            return self._materials[name.lower()]
        except KeyError:
            raise KeyError(f"unknown material {name!r}; known: {', '.join(self.material_names)}") from None

    def shell(self, name: str) -> ShellMaterial:
        try:
            return self._shells[name.lower()]
        except KeyError:
            raise KeyError(f"unknown shell material {name!r}; known: {', '.join(self.shell_names)}") from None

    def register(self, item: MaterialParams | ShellMaterial) -> MaterialDatabase:
        materials, shells = dict(self._materials), dict(self._shells)
        if isinstance(item, MaterialParams):
            materials[item.name.lower()] = item
        else:
            shells[item.name.lower()] = item
        return MaterialDatabase(materials, shells, self.version)

    @classmethod
    def from_text(cls, text: str, source: str = "<string>") -> MaterialDatabase:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        parser.optionxform = str
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            raise ValueError(f"{source}: {exc}") from exc

        version = parser.get("database", "version", fallback="0")
        materials, shells = {}, {}
        for section in parser.sections():
            if section == "database":
                continue
            kind, _, name = section.partition(":")
            name = name.strip().lower()
            if not name or kind not in ("material", "shell"):
                raise ValueError(f"{source}: bad section header [{section}]")
            allowed = MATERIAL_FIELDS if kind == "material" else SHELL_FIELDS
            entries = dict(parser.items(section))
            unknown = sorted(set(entries) - set(allowed))
            if unknown:
                raise ValueError(f"{source}: [{section}] unknown field(s): {', '.join(unknown)}")
            missing = sorted(set(allowed) - set(entries))
            if missing:
                raise ValueError(f"{source}: [{section}] missing field(s): {', '.join(missing)}")
            values = {}
            for key, raw in entries.items():
                try:
                    values[key] = float(raw)
                except ValueError:
                    raise ValueError(f"{source}: [{section}] {key} = {raw!r} is not a number") from None
            if kind == "material":
                values["dead_layers"] = int(values["dead_layers"])
                materials[name] = MaterialParams(name=name, **values)
            else:
                shells[name] = ShellMaterial(name=name, **values)
        return cls(materials, shells, version)


def load_database(path: str | Path | None = None) -> MaterialDatabase:
    if path is None:
        text = resources.files("yigcat").joinpath("data/materials.txt").read_text(encoding="utf-8")
        return MaterialDatabase.from_text(text, source="materials.txt")
    path = Path(path)
    return MaterialDatabase.from_text(path.read_text(encoding="utf-8"), source=str(path))


@lru_cache(maxsize=1)
def default_database() -> MaterialDatabase:
    return load_database()


def get_material(name: str = "yig") -> MaterialParams:
    return default_database().material(name)


def get_shell(name: str = "silica") -> ShellMaterial:
    return default_database().shell(name)


# ---------------------------------------------------------------------------
# Spin counting
# ---------------------------------------------------------------------------


def _live_radius(material: MaterialParams, core_radius: float) -> float:
    return core_radius - material.dead_thickness


def _lattice_count(material: MaterialParams, core_radius: float) -> float:
    live = _live_radius(material, core_radius)
    if live <= 0:
        raise GeometryError(
            f"core radius {core_radius:.3e} m leaves no live volume under "
            f"{material.dead_layers} dead layer(s) of {material.a_lattice:.3e} m"
        )
    live_volume = 4.0 / 3.0 * math.pi * live**3
    return material.s_ion * material.spins_per_cell * live_volume / material.a_lattice**3


@lru_cache(maxsize=1)
def _anchor_scale() -> float:
    yig = get_material("yig")
    return ANCHOR_SPIN / _lattice_count(yig, ANCHOR_RADIUS)


def raw_spin_count(material: MaterialParams, core_radius: float, counting: str = "lattice") -> float:
    """Unrounded spin count of a core of the given radius.

    ``lattice`` counts uncompensated ions cell by cell inside the live
    (non-dead) sphere. ``anchored`` rescales that count by one fixed factor
    so a 10 nm YIG core holds S = 500; the lattice count for that particle
    is about 4.3e3.
    """
    if counting not in COUNTING_MODES:
        raise ValueError(f"counting must be one of {COUNTING_MODES}, got {counting!r}")
    count = _lattice_count(material, core_radius)
    if counting == "anchored":
        count *= _anchor_scale()
    return count


def total_spin(spec: ParticleSpec, counting: str = "lattice") -> int:
    """Total uncompensated spin S of the particle core, rounded to an even integer."""
    return round_to_even(raw_spin_count(spec.core_material, spec.core_radius, counting))


def radius_for_spin(
    S: int, material: MaterialParams, counting: str = "lattice", rtol: float = 1e-13
) -> float:
    """Smallest core radius whose ``total_spin`` reaches ``S``, by bisection."""
    if S < 0:
        raise ValueError("S must be non-negative")
    lo = material.dead_thickness
    if S == 0:
        return lo if lo > 0 else material.a_lattice

    def spin_at(r):
        if r <= lo:
            return 0
        return round_to_even(raw_spin_count(material, r, counting))

    hi = lo + material.a_lattice
    while spin_at(hi) < S:
        hi = lo + 2.0 * (hi - lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if spin_at(mid) >= S:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rtol * hi:
            break
    return hi


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------


def mass_and_inertia(spec: ParticleSpec) -> tuple[float, float]:
    """Mass (kg) and moment of inertia (kg m^2) of a solid core plus hollow shell."""
    r_core, r_out = spec.core_radius, spec.shell_outer_radius
    m_core = 4.0 / 3.0 * math.pi * spec.core_material.rho * r_core**3
    inertia = 0.4 * m_core * r_core**2
    mass = m_core
    if spec.has_shell:
        rho_shell = spec.shell_material.rho
        m_shell = 4.0 / 3.0 * math.pi * rho_shell * (r_out**3 - r_core**3)
        mass += m_shell
        inertia += 0.4 * m_shell * (r_out**5 - r_core**5) / (r_out**3 - r_core**3)
    return mass, inertia


def surface_area(spec: ParticleSpec) -> float:
    return 4.0 * math.pi * spec.shell_outer_radius**2
