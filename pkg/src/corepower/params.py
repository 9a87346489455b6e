"""Registry of the 25 injected model parameters and the ParameterSet container.

Parameters live at three levels. Architecture-level values are design options
supplied by the user, implementation-level values are fitted against training
labels, and technology-level values are derived from library characterization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Any, Iterable, Mapping

FORMAT_VERSION = 1


class Level(str, Enum):
    ARCHITECTURE = "Architecture"
    IMPLEMENTATION = "Implementation"
    TECHNOLOGY = "Technology"

    @classmethod
    def parse(cls, text: str) -> "Level":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for level in cls:
            if level.value.lower() == key or level.value.lower()[:4] == key:
                return level
        raise ValueError(f"unknown parameter level {text!r}")


class ValueType(str, Enum):
    ENUM = "Enum"
    BOOL = "Bool"
    INT = "Int"
    FLOAT = "Float"


class Provenance(str, Enum):
    USER = "user-supplied"
    CALIBRATED = "calibrated"
    DEFAULT = "default"


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    label: str
    level: Level
    component: str
    value_type: ValueType
    default: Any
    low: float | None = None
    high: float | None = None
    low_open: bool = False
    choices: tuple[str, ...] = ()
    linear: bool = False

    @property
    def width(self) -> float:
        """Width of the numeric range (0 for enum/bool parameters)."""
        if self.value_type in (ValueType.ENUM, ValueType.BOOL):
            return 0.0
        return float(self.high - self.low)

    @property
    def is_numeric(self) -> bool:
        return self.value_type in (ValueType.INT, ValueType.FLOAT)

    def contains(self, value: Any) -> bool:
        if self.value_type is ValueType.ENUM:
            return value in self.choices
        if self.value_type is ValueType.BOOL:
            return isinstance(value, bool)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False
        if self.low_open:
            return self.low < value <= self.high
        return self.low <= value <= self.high

    def range_text(self) -> str:
        if self.value_type is ValueType.ENUM:
            return " / ".join(self.choices)
        if self.value_type is ValueType.BOOL:
            return "yes / no"
        lo = f"({self.low:g}" if self.low_open else f"{self.low:g}"
        return f"{lo}-{self.high:g}"


# Smallest value a parameter with an open lower bound is clamped to.
OPEN_FLOOR = 1e-6

LOW_LATENCY = "low_latency"
LOW_POWER = "low_power"
MULTI_BANKING = "multi_banking"
DUPLICATED_ARRAY = "duplicated_array"

_A, _I, _T = Level.ARCHITECTURE, Level.IMPLEMENTATION, Level.TECHNOLOGY


def _enum(name, label, component, choices, default):
    return ParameterSpec(name, label, _A, component, ValueType.ENUM, default, choices=choices)


def _bool(name, label, component):
    return ParameterSpec(name, label, _A, component, ValueType.BOOL, False)


def _int(name, label, component, low, high, default):
    return ParameterSpec(name, label, _I, component, ValueType.INT, default, low, high)


def _float(name, label, component, low, high, default, level=_I, low_open=False):
    return ParameterSpec(
        name, label, level, component, ValueType.FLOAT, default, low, high,
        low_open=low_open, linear=True,
    )


SPECS: tuple[ParameterSpec, ...] = (
    _enum("icache_table_access_type", "Table Access Type", "ICache",
          (LOW_LATENCY, LOW_POWER), LOW_POWER),
    _bool("icache_scalability", "Scalability", "ICache"),
    _enum("bp_table_access_type", "Table Access Type", "BP",
          (LOW_LATENCY, LOW_POWER), LOW_POWER),
    _bool("bp_scalability", "Scalability", "BP"),
    _enum("dcache_multi_port_design", "Multi-Port Design", "DCache",
          (MULTI_BANKING, DUPLICATED_ARRAY), MULTI_BANKING),

    _int("bp_global_info_factor", "Global Info Factor", "BP", 1, 64, 1),
    _int("bp_local_info_factor", "Local Info Factor", "BP", 1, 64, 1),
    _int("icache_metadata_bits", "ICache MetaData Bit", "ICache", 0, 64, 0),
    _float("ifu_logic_factor", "IFU Logic Factor", "IFU", 0, 2, 1.0),
    _float("rnu_logic_factor", "RNU Logic Factor", "RNU", 0, 2, 1.0),
    _float("lsu_logic_factor", "LSU Logic Factor", "LSU", 0, 2, 1.0),
    _int("dcache_metadata_bits", "DCache MetaData Bit", "DCache", 0, 64, 0),
    _int("physical_regfile_width", "Physical Regfile Width", "Regfile", 1, 16, 1),
    _int("inst_window_width", "Inst. Window Width", "ISU", 0, 64, 0),
    _int("rob_entry_width", "ROB Entry Width", "ROB", 0, 64, 0),
    _float("fpu_power_scale", "FPU Power Scale", "FUPool", 0, 16, 1.0),
    _float("alu_power_scale", "ALU Power Scale", "FUPool", 0, 16, 1.0),
    _float("mul_power_scale", "MUL Power Scale", "FUPool", 0, 16, 1.0),
    _float("other_logic_factor", "Other Logic Factor", "OtherLogic", 0, 2, 1.0),
    _float("icache_access_coefficient", "Access Coefficient", "ICache", 0, 32, 1.0),
    _float("icache_access_bias", "Access Bias", "ICache", 0, 32, 0.0),
    _float("dcache_access_coefficient", "Access Coefficient", "DCache", 0, 32, 1.0),
    _float("dcache_access_bias", "Access Bias", "DCache", 0, 32, 0.0),

    _float("tech_logic_factor", "Tech Logic Factor", "Global", 0, 64, 1.0, _T, low_open=True),
    _float("tech_array_factor", "Tech Array Factor", "Global", 0, 64, 1.0, _T, low_open=True),
)

REGISTRY: Mapping[str, ParameterSpec] = MappingProxyType({s.name: s for s in SPECS})


def spec(name: str) -> ParameterSpec:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown parameter {name!r}") from None


def names_at(level: Level) -> tuple[str, ...]:
    return tuple(s.name for s in SPECS if s.level is level)


def component_parameters(component: str) -> tuple[str, ...]:
    """Implementation-level parameter names owned by a component."""
    return tuple(
        s.name for s in SPECS if s.level is Level.IMPLEMENTATION and s.component == component
    )


@dataclass(frozen=True)
class ParameterSet:
    """One value per registered parameter plus a provenance tag per level.

    Instances are immutable; the ``with_*`` helpers return modified copies.
    """

    values: Mapping[str, Any]
    provenance: Mapping[Level, Provenance] = field(
        default_factory=lambda: {lvl: Provenance.DEFAULT for lvl in Level}
    )

    def __post_init__(self):
        unknown = set(self.values) - set(REGISTRY)
        if unknown:
            raise KeyError(f"unknown parameter {sorted(unknown)[0]!r}")
        missing = [n for n in REGISTRY if n not in self.values]
        if missing:
            raise KeyError(f"missing parameter {missing[0]!r}")
        object.__setattr__(self, "values", MappingProxyType(dict(self.values)))
        prov = {lvl: Provenance(self.provenance.get(lvl, Provenance.DEFAULT)) for lvl in Level}
        object.__setattr__(self, "provenance", MappingProxyType(prov))

    def __getitem__(self, name: str) -> Any:
        return self.values[name]

    def __eq__(self, other):
        if not isinstance(other, ParameterSet):
            return NotImplemented
        return dict(self.values) == dict(other.values) and dict(self.provenance) == dict(
            other.provenance
        )

    def __hash__(self):
        return hash(tuple(self.values[n] for n in REGISTRY))

    def with_values(self, updates: Mapping[str, Any] | None = None, **kw) -> "ParameterSet":
        merged = dict(self.values)
        for name, value in {**(updates or {}), **kw}.items():
            spec(name)
            merged[name] = value
        return ParameterSet(merged, self.provenance)

    def with_provenance(self, level: Level, tag: Provenance) -> "ParameterSet":
        prov = dict(self.provenance)
        prov[level] = Provenance(tag)
        return ParameterSet(self.values, prov)

    def level_values(self, level: Level) -> dict[str, Any]:
        return {n: self.values[n] for n in names_at(level)}


def default_parameter_set() -> ParameterSet:
    return ParameterSet({s.name: s.default for s in SPECS})


def clamp_value(s: ParameterSpec, value: Any) -> Any:
    if s.value_type is ValueType.ENUM:
        if value not in s.choices:
            raise ValueError(f"{s.name}: {value!r} is not one of {s.range_text()}")
        return value
    if s.value_type is ValueType.BOOL:
        if not isinstance(value, bool):
            raise ValueError(f"{s.name}: {value!r} is not a bool")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != value:
        raise ValueError(f"{s.name}: {value!r} is not a number")
    if value > s.high:
        return type(value)(s.high) if isinstance(value, int) else float(s.high)
    if s.low_open:
        return value if value > s.low else OPEN_FLOOR
    if value < s.low:
        return type(value)(s.low) if isinstance(value, int) else float(s.low)
    return value


def clamp(pset: ParameterSet | Mapping[str, Any]) -> ParameterSet:
    """Project every numeric value onto its range; validate enum and bool values."""
    if isinstance(pset, ParameterSet):
        values, prov = pset.values, pset.provenance
    else:
        values, prov = pset, {}
    out = {}
    for name, value in values.items():
        out[name] = clamp_value(spec(name), value)
    return ParameterSet(out, prov)


def reset_level(pset: ParameterSet, level: Level) -> ParameterSet:
    defaults = {n: REGISTRY[n].default for n in names_at(level)}
    return pset.with_values(defaults).with_provenance(level, Provenance.DEFAULT)


# ---------------------------------------------------------------------------
# Parameter file: `name = value # level=<Level> provenance=<tag>` per line.

def format_value(s: ParameterSpec, value: Any) -> str:
    if s.value_type is ValueType.BOOL:
        return "yes" if value else "no"
    if s.value_type is ValueType.ENUM:
        return str(value)
    if s.value_type is ValueType.INT:
        if isinstance(value, float):
            if not value.is_integer():
                raise ValueError(f"{s.name}: integer parameter holds non-integral {value!r}")
            value = int(value)
        return str(value)
    return repr(float(value))


def parse_value(s: ParameterSpec, text: str) -> Any:
    text = text.strip()
    if s.value_type is ValueType.BOOL:
        low = text.lower()
        if low in ("yes", "true", "1"):
            return True
        if low in ("no", "false", "0"):
            return False
        raise ValueError(f"{s.name}: expected yes/no, got {text!r}")
    if s.value_type is ValueType.ENUM:
        norm = text.lower().replace(" ", "_").replace("-", "_")
        if norm not in s.choices:
            raise ValueError(f"{s.name}: {text!r} is not one of {s.range_text()}")
        return norm
    if s.value_type is ValueType.INT:
        try:
            return int(text)
        except ValueError:
            raise ValueError(f"{s.name}: expected an integer, got {text!r}") from None
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"{s.name}: expected a number, got {text!r}") from None


def serialize(pset: ParameterSet) -> str:
    lines = [f"format_version = {FORMAT_VERSION}"]
    for s in SPECS:
        value = format_value(s, pset.values[s.name])
        lines.append(
            f"{s.name} = {value} # level={s.level.value} provenance={pset.provenance[s.level].value}"
        )
    return "\n".join(lines) + "\n"


class ParameterFileError(ValueError):
    pass


def parse_parameter_file(text: str) -> ParameterSet:
    values: dict[str, Any] = {}
    provenance: dict[Level, Provenance] = {}
    version = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        body, _, comment = raw.partition("#")
        if not body.strip():
            continue
        if "=" not in body:
            raise ParameterFileError(f"line {lineno}: expected 'name = value'")
        key, _, value_text = body.partition("=")
        key = key.strip()
        if key == "format_version":
            version = value_text.strip()
            if version != str(FORMAT_VERSION):
                raise ParameterFileError(f"line {lineno}: unsupported format_version {version}")
            continue
        if key not in REGISTRY:
            raise ParameterFileError(f"line {lineno}: unknown parameter {key!r}")
        if key in values:
            raise ParameterFileError(f"line {lineno}: duplicate parameter {key!r}")
        s = REGISTRY[key]
        try:
            value = parse_value(s, value_text)
        except ValueError as exc:
            raise ParameterFileError(f"line {lineno}: {exc}") from None
        if not s.contains(value):
            raise ParameterFileError(
                f"line {lineno}: {key} = {value_text.strip()} out of range {s.range_text()}"
            )
        values[key] = value
        for token in comment.split():
            tag, _, tag_value = token.partition("=")
            if tag == "level" and Level.parse(tag_value) is not s.level:
                raise ParameterFileError(f"line {lineno}: {key} is not at level {tag_value}")
            if tag == "provenance":
                try:
                    provenance.setdefault(s.level, Provenance(tag_value))
                except ValueError:
                    raise ParameterFileError(
                        f"line {lineno}: unknown provenance {tag_value!r}"
                    ) from None
    if version is None:
        raise ParameterFileError("missing format_version header")
    for name in REGISTRY:
        if name not in values:
            raise ParameterFileError(f"missing parameter {name!r}")
    return ParameterSet(values, provenance)


def arch_from_mapping(entries: Iterable[tuple[str, str]]) -> dict[str, Any]:
    """Parse textual architecture-level overrides (name, value) into typed values."""
    out = {}
    for name, text in entries:
        s = spec(name)
        if s.level is not Level.ARCHITECTURE:
            raise ValueError(f"{name} is not an architecture-level parameter")
        out[name] = parse_value(s, text)
    return out
