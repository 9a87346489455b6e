"""Technology constants for the surrogate energy model and library characterization data."""

from __future__ import annotations

from dataclasses import asdict, dataclass

# Frequency at which TechProfile.dff_clock_toggle_power is stated.
REFERENCE_FREQUENCY = 1e9

# Single-port SRAM macro used to align array energies with a real library.
PROBE_SHAPE = (256, 64)


@dataclass(frozen=True)
class TechProfile:
    """Built-in constants of the analytical model (energies in pJ, powers in uW)."""

    node_name: str
    e_bit_read: float
    e_bit_write: float
    p_leak_bit: float
    dff_clock_toggle_power: float
    dff_leak_power: float
    e_fu_alu: float
    e_fu_mul: float
    e_fu_fpu: float

    def __post_init__(self):
        for key, value in asdict(self).items():
            if key != "node_name" and not value > 0:
                raise ValueError(f"TechProfile.{key} must be > 0, got {value!r}")


SURROGATE_40NM = TechProfile(
    node_name="surrogate-40nm",
    e_bit_read=0.05,
    e_bit_write=0.05,
    p_leak_bit=0.01,
    dff_clock_toggle_power=1.0,
    dff_leak_power=0.1,
    e_fu_alu=2.0,
    e_fu_mul=8.0,
    e_fu_fpu=15.0,
)

SURROGATE_28NM = TechProfile(
    node_name="surrogate-28nm",
    e_bit_read=0.032,
    e_bit_write=0.036,
    p_leak_bit=0.015,
    dff_clock_toggle_power=0.7,
    dff_leak_power=0.15,
    e_fu_alu=1.3,
    e_fu_mul=5.5,
    e_fu_fpu=10.0,
)

PROFILES = {p.node_name: p for p in (SURROGATE_40NM, SURROGATE_28NM)}


def load_profile(name_or_text: str) -> TechProfile:
    """Return a built-in profile by name, or parse ``key = value`` profile text."""
    if name_or_text in PROFILES:
        return PROFILES[name_or_text]
    values: dict[str, object] = {}
    for lineno, raw in enumerate(name_or_text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if not body or body.startswith("["):
            continue
        key, sep, value = body.partition("=")
        key = key.strip()
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        if key not in TechProfile.__dataclass_fields__:
            raise ValueError(f"line {lineno}: unknown tech profile key {key!r}")
        values[key] = value.strip() if key == "node_name" else float(value)
    missing = [k for k in TechProfile.__dataclass_fields__ if k not in values]
    if missing:
        raise ValueError(f"tech profile missing {missing[0]!r}")
    return TechProfile(**values)


@dataclass(frozen=True)
class TechCharacterization:
    """Measured SRAM macro energies and worst-case DFF power from a target library."""

    node_name: str
    sram_rows: int
    sram_width: int
    sram_read_energy: float
    sram_write_energy: float
    dff_worst_case_power: float
    dff_reference_freq: float | None = REFERENCE_FREQUENCY

    def __post_init__(self):
        if self.sram_rows <= 0 or self.sram_width <= 0:
            raise ValueError("SRAM shape must be positive")
        for key in ("sram_read_energy", "sram_write_energy", "dff_worst_case_power"):
            if not getattr(self, key) > 0:
                raise ValueError(f"{key} must be > 0")
        if self.dff_reference_freq is not None and not self.dff_reference_freq > 0:
            raise ValueError("dff_reference_freq must be > 0")

    @property
    def sram_shape(self) -> tuple[int, int]:
        return (self.sram_rows, self.sram_width)


CHAR_KEYS = {
    "node_name": "node_name",
    "sram_rows": "sram_rows",
    "sram_width": "sram_width",
    "sram_read_energy_pj": "sram_read_energy",
    "sram_write_energy_pj": "sram_write_energy",
    "dff_worst_case_power_uw": "dff_worst_case_power",
    "dff_reference_freq_hz": "dff_reference_freq",
}


def parse_tech_characterization(text: str) -> TechCharacterization:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if not body or body.startswith("["):
            continue
        key, sep, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        if key not in CHAR_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        field_name = CHAR_KEYS[key]
        try:
            if field_name == "node_name":
                values[field_name] = value
            elif field_name in ("sram_rows", "sram_width"):
                values[field_name] = int(value)
            else:
                values[field_name] = float(value)
        except ValueError:
            raise ValueError(f"line {lineno}: bad value for {key}: {value!r}") from None
    required = [k for k, f in CHAR_KEYS.items() if f not in values and k != "dff_reference_freq_hz"]
    if required:
        raise ValueError(f"tech characterization missing {required[0]!r}")
    values.setdefault("dff_reference_freq", None)
    return TechCharacterization(**values)


def format_tech_characterization(char: TechCharacterization) -> str:
    lines = [f"node_name = {char.node_name}"]
    for key, field_name in CHAR_KEYS.items():
        if field_name == "node_name":
            continue
        value = getattr(char, field_name)
        if value is None:
            continue
        lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"
