"""Run configuration: a sectioned ``key = value`` file with units.

Every key is declared in ``SCHEMA`` with its kind, SI unit and default.
Physical values may carry any unit of the right dimension (``t0 = 10 us``);
bare numbers are read in the key's SI unit. ``format_config`` writes the
configuration back out in SI, marking keys that were left at their default,
and ``parse_config(format_config(c)) == c`` holds for every valid config.

Materials can be defined inline with ``[material:<name>]`` or
``[shell:<name>]`` sections using the material-database field names.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

from .core import DimensionError, format_dimension, parse_quantity, parse_unit
from .decoherence import CSL_MODES, EnvironmentConfig
from .feasibility import OBJECTIVES, DesignConstraints, SearchSpec
from .materials import (
    COUNTING_MODES,
    MaterialDatabase,
    ParticleSpec,
    default_database,
    total_spin,
)
from .protocol import ProtocolConfig
from .spinmodel import DoubleWellModel

__all__ = ["ConfigError", "RunConfig", "Field", "SCHEMA", "parse_config", "load_config", "format_config"]


class ConfigError(ValueError):
    """Invalid configuration text; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


# check names: "positive", "nonneg", "fraction" (0 < x <= 1), "unit_interval" ([0, 1])
@dataclass(frozen=True)
class Field:
    section: str
    key: str
    kind: str  # quantity | int | float | bool | choice | name | spin | optional_quantity | optional_name
    default: object
    unit: str = ""
    check: str | None = None
    choices: tuple[str, ...] = ()

    @property
    def path(self) -> str:
        return f"{self.section}.{self.key}"


def _f(*args, **kwargs) -> Field:
    return Field(*args, **kwargs)


SCHEMA: tuple[Field, ...] = (
    _f("particle", "material", "name", "yig"),
    _f("particle", "radius", "quantity", 10e-9, "m", "positive"),
    _f("particle", "S", "spin", 500),
    _f("particle", "spin_counting", "choice", "anchored", choices=COUNTING_MODES),
    _f("particle", "shell", "optional_name", None),
    _f("particle", "shell_outer_radius", "optional_quantity", None, "m", "positive"),
    _f("protocol", "gradB", "quantity", 1e6, "T/m", "nonneg"),
    _f("protocol", "t0", "quantity", 10e-6, "s", "positive"),
    _f("protocol", "theta", "quantity", 0.0, "rad", "nonneg"),
    _f("protocol", "p0", "quantity", 0.0, "kg*m/s"),
    _f("protocol", "ramp_fraction", "float", 0.0, check="nonneg"),
    _f("protocol", "method", "choice", "auto", choices=("auto", "analytic", "numeric")),
    _f("protocol", "n_samples", "int", 1001, check="positive"),
    _f("environment", "pressure", "quantity", 1e-7, "Pa", "nonneg"),
    _f("environment", "gas_temperature", "quantity", 0.3, "K", "nonneg"),
    _f("environment", "gas_mass", "quantity", 6.64e-27, "kg", "positive"),
    _f("environment", "internal_temperature", "quantity", 0.3, "K", "nonneg"),
    _f("environment", "shield_field", "quantity", 1e-12, "T", "nonneg"),
    _f("environment", "bias_field", "quantity", 1e-2, "T", "nonneg"),
    _f("decoherence", "visibility_fraction", "float", 1e-2, check="fraction"),
    _f("decoherence", "magnetic_margin", "float", 1e-3, check="positive"),
    _f("decoherence", "magnon_margin", "float", 10.0, check="positive"),
    _f("decoherence", "csl_mode", "choice", "naive", choices=CSL_MODES),
    _f("decoherence", "include_collapse", "bool", False),
    _f("constraints", "T_exp", "quantity", 0.3, "K", "positive"),
    _f("constraints", "min_dE_over_kT", "float", 1.0, check="positive"),
    _f("constraints", "min_dU_over_kT", "float", 100.0, check="positive"),
    _f("constraints", "max_rotation_alpha", "float", 1e-2, check="positive"),
    _f("constraints", "max_gradB", "quantity", 1e6, "T/m", "nonneg"),
    _f("constraints", "max_t0", "quantity", 1e-5, "s", "positive"),
    _f("constraints", "require_T_below_blocking", "bool", True),
    _f("design", "objective", "choice", "delta_z", choices=OBJECTIVES),
    _f("design", "S_min", "int", 10, check="positive"),
    _f("design", "S_max", "int", 5000, check="positive"),
    _f("design", "t0_min", "quantity", 1e-7, "s", "positive"),
    _f("design", "t0_max", "quantity", 1e-5, "s", "positive"),
    _f("design", "gradB_min", "quantity", 1e3, "T/m", "positive"),
    _f("design", "gradB_max", "quantity", 1e6, "T/m", "positive"),
    _f("design", "shell", "optional_name", None),
    _f("design", "shell_outer_min", "optional_quantity", None, "m", "positive"),
    _f("design", "shell_outer_max", "optional_quantity", None, "m", "positive"),
    _f("design", "stage2_steps", "int", 10, check="nonneg"),
    _f("design", "top", "int", 50, check="positive"),
    _f("fig2", "S_min", "int", 100, check="positive"),
    _f("fig2", "S_max", "int", 2000, check="positive"),
    _f("fig2", "S_step", "int", 10, check="positive"),
    _f("gravity", "d", "quantity", 5e-4, "m", "positive"),
    _f("gravity", "shell", "optional_name", "silica"),
    _f("gravity", "shell_outer_radius", "optional_quantity", 2e-6, "m", "positive"),
    _f("run", "seed", "int", 0, check="nonneg"),
    _f("run", "n_shots", "int", 10000, check="nonneg"),
)

FIELDS = MappingProxyType({f.path: f for f in SCHEMA})
SECTIONS = tuple(dict.fromkeys(f.section for f in SCHEMA))
INLINE_KINDS = ("material", "shell")

_SECTION_RE = re.compile(r"^\[\s*([A-Za-z0-9_:\- ]+?)\s*\]$")
_ENTRY_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")
_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _check(fld: Field, value, line):
    if value is None or fld.check is None:
        return
    name = fld.key
    if isinstance(value, float) and math.isnan(value):
        raise ConfigError(f"{name} must be a number, got nan", line)
    if fld.check == "positive" and not value > 0:
        raise ConfigError(f"{name} must be positive", line)
    if fld.check == "nonneg" and value < 0:
        raise ConfigError(f"{name} must be non-negative", line)
    if fld.check == "fraction" and not 0 < value <= 1:
        raise ConfigError(f"{name} must lie in (0, 1]", line)


def _parse_value(fld: Field, raw: str, line: int | None):
    raw = raw.strip()
    kind = fld.kind
    if kind.startswith("optional_"):
        if raw.lower() in ("", "none"):
            return None
        kind = kind[len("optional_"):]
    try:
        if kind == "quantity":
            quantity = parse_quantity(raw, fld.unit)
            try:
                value = quantity.require(fld.unit)
            except DimensionError:
                _, expected = parse_unit(fld.unit)
                raise ConfigError(
                    f"{fld.key}: dimension mismatch, expected {fld.unit} "
                    f"[{format_dimension(expected)}], got [{format_dimension(quantity.dims)}]",
                    line,
                ) from None
        elif kind == "int":
            value = int(raw)
        elif kind == "spin":
            value = "auto" if raw.lower() == "auto" else int(raw)
        elif kind == "float":
            value = float(raw)
        elif kind == "bool":
            low = raw.lower()
            if low not in _TRUE | _FALSE:
                raise ConfigError(f"{fld.key}: expected true or false, got {raw!r}", line)
            value = low in _TRUE
        elif kind == "choice":
            if raw not in fld.choices:
                raise ConfigError(f"{fld.key}: expected one of {', '.join(fld.choices)}, got {raw!r}", line)
            value = raw
        elif kind == "name":
            if not re.fullmatch(r"[A-Za-z0-9_\-]+", raw):
                raise ConfigError(f"{fld.key}: invalid name {raw!r}", line)
            value = raw.lower()
        else:  # pragma: no cover - schema typo
            raise AssertionError(kind)
    except ConfigError:
        raise
    except (ValueError, DimensionError) as exc:
        raise ConfigError(f"{fld.key}: {exc}", line) from None
    if kind == "spin" and value != "auto" and value < 1:
        raise ConfigError("S must be a positive integer or 'auto'", line)
    _check(fld, value, line)
    return value


def _format_value(fld: Field, value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if fld.kind.endswith("quantity"):
        return f"{float(value)!r} {fld.unit}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration.

    ``values`` maps ``"section.key"`` to an SI value. ``defaulted`` records
    which keys were not given and is excluded from equality.
    """

    values: MappingProxyType
    inline_materials: str = ""
    defaulted: frozenset = field(default=frozenset(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "values", MappingProxyType(dict(self.values)))
        self._cross_check()

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return dict(self.values) == dict(other.values) and self.inline_materials == other.inline_materials

    __hash__ = None

    def __getitem__(self, path: str):
        return self.values[path]

    def get(self, section: str, key: str):
        return self.values[f"{section}.{key}"]

    @property
    def seed(self) -> int:
        return self["run.seed"]

    def replace(self, **updates) -> RunConfig:
        """Copy with ``section__key=value`` overrides (already in SI)."""
        values = dict(self.values)
        defaulted = set(self.defaulted)
        for name, value in updates.items():
            path = name.replace("__", ".")
            if path not in FIELDS:
                raise ConfigError(f"unknown key {path!r}")
            fld = FIELDS[path]
            _check(fld, value, None)
            values[path] = value
            defaulted.discard(path)
        return RunConfig(values, self.inline_materials, frozenset(defaulted))

    def _cross_check(self):
        v = self.values
        if v["protocol.ramp_fraction"] >= 0.2:
            raise ConfigError("ramp_fraction must lie in [0, 0.2)")
        if v["protocol.theta"] > math.pi / 2:
            raise ConfigError("theta must lie in [0, pi/2]")
        for section in ("design", "fig2"):
            if v[f"{section}.S_min"] > v[f"{section}.S_max"]:
                raise ConfigError(f"[{section}] S_min must not exceed S_max")
        if v["design.t0_min"] > v["design.t0_max"]:
            raise ConfigError("[design] t0_min must not exceed t0_max")
        if v["design.gradB_min"] > v["design.gradB_max"]:
            raise ConfigError("[design] gradB_min must not exceed gradB_max")
        lo, hi = v["design.shell_outer_min"], v["design.shell_outer_max"]
        if (lo is None) != (hi is None):
            raise ConfigError("[design] give both shell_outer_min and shell_outer_max, or neither")
        if lo is not None and lo > hi:
            raise ConfigError("[design] shell_outer_min must not exceed shell_outer_max")
        if v["particle.shell"] is not None and v["particle.shell_outer_radius"] is None:
            raise ConfigError("[particle] a shell needs shell_outer_radius")

    # -- builders -----------------------------------------------------------

    def database(self) -> MaterialDatabase:
        db = default_database()
        if self.inline_materials:
            extra = MaterialDatabase.from_text(self.inline_materials, source="config")
            for name in extra.material_names:
                db = db.register(extra.material(name))
            for name in extra.shell_names:
                db = db.register(extra.shell(name))
        return db

    def material(self):
        return self.database().material(self["particle.material"])

    def _with_shell(self, core_radius: float, shell: str | None, outer: float | None) -> ParticleSpec:
        material = self.material()
        if shell is None:
            return ParticleSpec(material, core_radius)
        return ParticleSpec(material, core_radius, self.database().shell(shell), outer)

    def particle(self) -> ParticleSpec:
        return self._with_shell(
            self["particle.radius"], self["particle.shell"], self["particle.shell_outer_radius"]
        )

    def gravity_particle(self) -> ParticleSpec:
        return self._with_shell(
            self["particle.radius"], self["gravity.shell"], self["gravity.shell_outer_radius"]
        )

    def spin(self) -> int:
        S = self["particle.S"]
        if S == "auto":
            return total_spin(self.particle(), self["particle.spin_counting"])
        return S

    def model(self) -> DoubleWellModel:
        particle = self.particle()
        return DoubleWellModel.from_material(particle.core_material, self.spin(), particle.core_volume)

    def protocol(self) -> ProtocolConfig:
        return ProtocolConfig(
            self.particle(),
            S_z=self.spin(),
            grad_B=self["protocol.gradB"],
            t0=self["protocol.t0"],
            theta=self["protocol.theta"],
            g_L=self.material().g_L,
            p0=self["protocol.p0"],
            ramp_fraction=self["protocol.ramp_fraction"],
        )

    def environment(self) -> EnvironmentConfig:
        return EnvironmentConfig(
            pressure=self["environment.pressure"],
            gas_temperature=self["environment.gas_temperature"],
            gas_mass=self["environment.gas_mass"],
            internal_temperature=self["environment.internal_temperature"],
            shield_field=self["environment.shield_field"],
            bias_field=self["environment.bias_field"],
        )

    def constraints(self) -> DesignConstraints:
        return DesignConstraints(
            T_exp=self["constraints.T_exp"],
            min_dE_over_kT=self["constraints.min_dE_over_kT"],
            min_dU_over_kT=self["constraints.min_dU_over_kT"],
            max_rotation_alpha=self["constraints.max_rotation_alpha"],
            max_grad_B=self["constraints.max_gradB"],
            max_t0=self["constraints.max_t0"],
            visibility_fraction=self["decoherence.visibility_fraction"],
            require_T_below_blocking=self["constraints.require_T_below_blocking"],
        )

    def search(self) -> SearchSpec:
        shell_name = self["design.shell"]
        shell_range = None
        if self["design.shell_outer_min"] is not None:
            shell_range = (self["design.shell_outer_min"], self["design.shell_outer_max"])
        return SearchSpec(
            S_range=(self["design.S_min"], self["design.S_max"]),
            t0_range=(self["design.t0_min"], self["design.t0_max"]),
            grad_B_range=(self["design.gradB_min"], self["design.gradB_max"]),
            shell=self.database().shell(shell_name) if shell_name else None,
            shell_outer_range=shell_range,
            counting=self["particle.spin_counting"],
            stage2_steps=self["design.stage2_steps"],
            top=self["design.top"],
        )

    def fig2_spins(self) -> list[int]:
        return list(range(self["fig2.S_min"], self["fig2.S_max"] + 1, self["fig2.S_step"]))


def default_config() -> RunConfig:
    return parse_config("")


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text; raises ``ConfigError``."""
    values: dict[str, object] = {}
    seen_at: dict[str, int] = {}
    inline: list[str] = []
    section = None
    inline_section = False

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line or line.startswith(";"):
            continue
        header = _SECTION_RE.match(line)
        if header:
            name = header.group(1).strip()
            kind = name.partition(":")[0].strip()
            if kind in INLINE_KINDS and ":" in name:
                inline_section = True
                inline.append(f"[{name}]")
                section = name
                continue
            if name not in SECTIONS:
                raise ConfigError(f"unknown section [{name}]; known: {', '.join(SECTIONS)}", lineno)
            section, inline_section = name, False
            continue
        entry = _ENTRY_RE.match(line)
        if entry is None:
            raise ConfigError(f"syntax error, expected '[section]' or 'key = value': {raw_line.strip()!r}", lineno)
        key, raw_value = entry.groups()
        if section is None:
            raise ConfigError(f"key {key!r} appears before any [section]", lineno)
        if inline_section:
            inline.append(f"{key} = {raw_value.strip()}")
            continue
        path = f"{section}.{key}"
        if path not in FIELDS:
            known = ", ".join(f.key for f in SCHEMA if f.section == section)
            raise ConfigError(f"unknown key {key!r} in [{section}]; known: {known}", lineno)
        if path in seen_at:
            raise ConfigError(f"duplicate key {key!r} in [{section}] (first set on line {seen_at[path]})", lineno)
        seen_at[path] = lineno
        values[path] = _parse_value(FIELDS[path], raw_value, lineno)

    defaulted = frozenset(f.path for f in SCHEMA if f.path not in values)
    for fld in SCHEMA:
        values.setdefault(fld.path, fld.default)
    inline_text = "\n".join(inline)
    if inline_text:
        try:
            MaterialDatabase.from_text(inline_text, source="config")
        except ValueError as exc:
            raise ConfigError(f"inline material: {exc}") from None
    config = RunConfig(values, inline_text, defaulted)
    try:
        config.material()
        if values["particle.shell"]:
            config.database().shell(values["particle.shell"])
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    return config


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return default_config()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def format_config(config: RunConfig) -> str:
    """Echo in SI units; keys left at their default carry ``# defaulted: true``."""
    out = []
    for section in SECTIONS:
        out.append(f"[{section}]")
        for fld in SCHEMA:
            if fld.section != section:
                continue
            line = f"{fld.key} = {_format_value(fld, config[fld.path])}"
            if fld.path in config.defaulted:
                line += "  # defaulted: true"
            out.append(line)
        out.append("")
    if config.inline_materials:
        out.append(config.inline_materials)
        out.append("")
    return "\n".join(out)
