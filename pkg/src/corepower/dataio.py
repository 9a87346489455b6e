"""Design configs, event traces, label files, the bundled configuration table,
and the synthetic ground-truth generator.

All text formats share one grammar: ``key = value`` lines, optional
``[section]`` headers, ``#`` starts a comment. Errors name the key and line.
"""

from __future__ import annotations

import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

from .hardware import (
    COMPONENTS, EVENT_FIELDS, HARDWARE_KEYS, ComponentId, EventCounts, HardwareConfig,
)
from .model import ArrayGeometry, array_op_energy, estimate_core
from .params import (
    REGISTRY, Level, ParameterSet, ValueType, default_parameter_set, names_at, parse_value,
)
from .tech import PROBE_SHAPE, REFERENCE_FREQUENCY, TechCharacterization, TechProfile

log = logging.getLogger(__name__)


class FormatError(ValueError):
    """A file that does not follow the key = value grammar or fails validation."""


# ---------------------------------------------------------------------------
# Bundled configurations (B1-B15 BOOM, X1-X10 XiangShan), ordered small to large.

_TABLE_ROWS = {
    "FetchWidth": [4, 4, 4, 4, 4, 8, 8, 8, 8, 8, 8, 8, 8, 8, 8, 4, 4, 4, 4, 4, 8, 8, 8, 8, 8],
    "DecodeWidth": [1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4, 5, 5, 5, 2, 2, 2, 3, 3, 3, 4, 4, 4, 5],
    "FetchBufferEntry": [5, 8, 16, 8, 16, 24, 18, 24, 30, 24, 32, 40, 30, 35, 40,
                         8, 16, 24, 16, 24, 24, 24, 32, 32, 24],
    "RobEntry": [16, 32, 48, 64, 64, 80, 81, 96, 114, 112, 128, 136, 125, 130, 140,
                 16, 32, 48, 64, 64, 80, 81, 96, 114, 112],
    "IntPhyRegister": [36, 53, 68, 64, 80, 88, 88, 110, 112, 108, 128, 136, 108, 128, 140,
                       36, 53, 68, 64, 80, 88, 88, 110, 112, 108],
    "FpPhyRegister": [36, 48, 56, 56, 64, 72, 88, 96, 112, 108, 128, 136, 108, 128, 140,
                      36, 53, 68, 64, 80, 88, 88, 110, 112, 108],
    "LdqStqEntry": [4, 8, 16, 12, 16, 20, 16, 24, 32, 24, 32, 36, 24, 32, 36,
                    16, 20, 24, 20, 24, 28, 24, 32, 40, 32],
    "BranchCount": [6, 8, 10, 10, 12, 14, 14, 16, 16, 18, 20, 20, 18, 20, 20,
                    7, 7, 7, 7, 7, 7, 7, 7, 7, 7],
    "MemFpIssueWidth": [1, 1, 1, 1, 1, 1, 1, 1, 2, 1, 2, 2, 2, 2, 2,
                        2, 2, 2, 2, 2, 2, 2, 2, 2, 2],
    "IntIssueWidth": [1, 1, 1, 1, 2, 2, 2, 3, 3, 4, 4, 4, 5, 5, 5,
                      2, 2, 2, 2, 4, 4, 4, 6, 6, 6],
    "DCacheICacheWay": [2, 4, 8, 4, 4, 8, 8, 8, 8, 8, 8, 8, 8, 8, 8,
                        4, 4, 8, 4, 4, 8, 8, 8, 8, 8],
    "DTLBEntry": [8, 8, 16, 8, 8, 16, 16, 16, 32, 32, 32, 32, 32, 32, 32,
                  8, 8, 16, 8, 8, 16, 16, 16, 32, 32],
    "MSHREntry": [2, 2, 4, 2, 2, 4, 4, 4, 4, 4, 4, 8, 8, 8, 8,
                  2, 2, 4, 2, 2, 4, 4, 4, 4, 4],
    "ICacheFetchBytes": [2, 2, 2, 2, 2, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4,
                         2, 2, 2, 2, 2, 2, 2, 2, 2, 2],
}

CONFIG_IDS: tuple[str, ...] = tuple(f"B{i}" for i in range(1, 16)) + tuple(
    f"X{i}" for i in range(1, 11))

FAMILIES: dict[str, tuple[str, ...]] = {
    "BOOM": CONFIG_IDS[:15],
    "XiangShan": CONFIG_IDS[15:],
}


def _build_table() -> tuple[tuple[str, HardwareConfig], ...]:
    out = []
    for col, cid in enumerate(CONFIG_IDS):
        kw = {HARDWARE_KEYS[key]: values[col] for key, values in _TABLE_ROWS.items()}
        out.append((cid, HardwareConfig(**kw)))
    return tuple(out)


_BUNDLED = _build_table()


def bundled_config_table() -> tuple[tuple[str, HardwareConfig], ...]:
    return _BUNDLED


def bundled_config(config_id: str) -> HardwareConfig:
    for cid, hw in _BUNDLED:
        if cid == config_id:
            return hw
    raise KeyError(f"unknown configuration {config_id!r}")


def family_of(name: str) -> str:
    for fam in FAMILIES:
        if fam.lower() == name.lower():
            return fam
    raise ValueError(f"unknown family {name!r} (expected boom or xiangshan)")


# ---------------------------------------------------------------------------
# Generic key = value reader


def _entries(text: str) -> Iterator[tuple[int, str | None, str, str]]:
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise FormatError(f"line {lineno}: malformed section header {body!r}")
            section = body[1:-1].strip().lower()
            continue
        key, sep, value = body.partition("=")
        if not sep:
            raise FormatError(f"line {lineno}: expected 'key = value', got {body!r}")
        yield lineno, section, key.strip(), value.strip()


def _atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


write_text_atomic = _atomic_write


# ---------------------------------------------------------------------------
# Design config


@dataclass(frozen=True)
class DesignConfig:
    hw: HardwareConfig
    arch_params: Mapping[str, Any]
    clock_frequency: float
    explicit_arch: frozenset = frozenset()


def parse_design_config(text: str) -> DesignConfig:
    hw_values: dict[str, int] = {}
    arch: dict[str, Any] = {}
    clock = None
    seen_lines: dict[str, int] = {}
    for lineno, section, key, value in _entries(text):
        if key in seen_lines:
            raise FormatError(f"line {lineno}: duplicate key {key}")
        seen_lines[key] = lineno
        if section in (None, "clock", "core") and key == "clock_frequency":
            try:
                clock = float(value)
            except ValueError:
                raise FormatError(f"line {lineno}: clock_frequency: bad value {value!r}") from None
            if not clock > 0:
                raise FormatError(f"line {lineno}: clock_frequency must be > 0")
        elif section == "hardware":
            if key not in HARDWARE_KEYS:
                raise FormatError(f"line {lineno}: unknown hardware key {key}")
            try:
                number = int(value)
            except ValueError:
                raise FormatError(f"line {lineno}: {key} must be an integer, got {value!r}") from None
            if number <= 0:
                raise FormatError(f"line {lineno}: {key} must be a positive integer, got {number}")
            hw_values[key] = number
        elif section == "architecture":
            s = REGISTRY.get(key)
            if s is None or s.level is not Level.ARCHITECTURE:
                raise FormatError(f"line {lineno}: unknown architecture key {key}")
            try:
                arch[key] = parse_value(s, value)
            except ValueError as exc:
                raise FormatError(f"line {lineno}: {exc}") from None
        else:
            raise FormatError(f"line {lineno}: unknown key {key}"
                              + (f" in section [{section}]" if section else ""))
    missing = [k for k in HARDWARE_KEYS if k not in hw_values]
    if missing:
        raise FormatError(f"missing mandatory hardware key {missing[0]}")
    if clock is None:
        raise FormatError("missing clock_frequency")
    try:
        hw = HardwareConfig(**{HARDWARE_KEYS[k]: v for k, v in hw_values.items()})
    except ValueError as exc:
        line = seen_lines.get("DecodeWidth")
        raise FormatError(f"line {line}: {exc}") from None
    explicit = frozenset(arch)
    defaults = default_parameter_set()
    full_arch = {n: arch.get(n, defaults[n]) for n in names_at(Level.ARCHITECTURE)}
    return DesignConfig(hw, full_arch, clock, explicit)


def format_design_config(hw: HardwareConfig, arch_params: Mapping[str, Any] | None = None,
                         clock_frequency: float = 1e9) -> str:
    lines = [f"clock_frequency = {clock_frequency!r}", "", "[hardware]"]
    lines += [f"{k} = {v}" for k, v in hw.as_dict().items()]
    if arch_params:
        lines += ["", "[architecture]"]
        for name in names_at(Level.ARCHITECTURE):
            if name in arch_params:
                value = arch_params[name]
                if REGISTRY[name].value_type is ValueType.BOOL:
                    value = "yes" if value else "no"
                lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Event trace


def _number(value: str, key: str, lineno: int) -> float:
    try:
        number = float(value)
    except ValueError:
        raise FormatError(f"line {lineno}: {key}: bad number {value!r}") from None
    if number.is_integer() and "e" not in value.lower() and "." not in value:
        return int(value)
    return number


def parse_event_trace(text: str) -> EventCounts:
    values: dict[str, float] = {}
    for lineno, _section, key, value in _entries(text):
        if key not in EVENT_FIELDS and key not in ("cycles", "clock_frequency"):
            raise FormatError(f"line {lineno}: unknown event counter {key}")
        if key in values:
            raise FormatError(f"line {lineno}: duplicate counter {key}")
        number = _number(value, key, lineno)
        if number < 0:
            raise FormatError(f"line {lineno}: {key} is negative ({value})")
        values[key] = number
    for key in ("cycles", "clock_frequency"):
        if key not in values:
            raise FormatError(f"missing {key}")
        if not values[key] > 0:
            raise FormatError(f"{key} must be > 0")
    for name in EVENT_FIELDS:
        if name not in values:
            log.warning("event trace lacks %s; using 0", name)
            values[name] = 0
    return EventCounts(**values)


def format_event_trace(events: EventCounts) -> str:
    lines = [f"{name} = {getattr(events, name)!r}" for name in EVENT_FIELDS]
    lines.append(f"cycles = {events.cycles!r}")
    lines.append(f"clock_frequency = {events.clock_frequency!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Labels


LABEL_SUM_TOLERANCE = 0.01


def parse_labels(text: str) -> tuple[dict[ComponentId, float], float]:
    comps: dict[ComponentId, float] = {}
    total = None
    for lineno, _section, key, value in _entries(text):
        try:
            number = float(value)
        except ValueError:
            raise FormatError(f"line {lineno}: {key}: bad number {value!r}") from None
        if not number > 0:
            raise FormatError(f"line {lineno}: label {key} must be > 0")
        if key == "total":
            total = number
            continue
        try:
            cid = ComponentId.parse(key)
        except ValueError:
            raise FormatError(f"line {lineno}: unknown component {key}") from None
        comps[cid] = number
    missing = [c.value for c in COMPONENTS if c not in comps]
    if missing:
        raise FormatError(f"labels missing component {missing[0]}")
    if total is None:
        raise FormatError("labels missing total")
    check_label_sum(comps, total)
    return comps, total


def check_label_sum(comps: Mapping[ComponentId, float], total: float) -> None:
    s = sum(comps.values())
    if abs(s - total) > LABEL_SUM_TOLERANCE * total:
        raise FormatError(f"component labels sum to {s:g} W but total is {total:g} W (>1% apart)")


def format_labels(comps: Mapping[ComponentId, float], total: float) -> str:
    lines = [f"{c.value} = {comps[c]!r}" for c in COMPONENTS]
    lines.append(f"total = {total!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Training samples


@dataclass(frozen=True)
class TrainingSample:
    config_id: str
    workload: str
    hw: HardwareConfig
    arch_params: Mapping[str, Any]
    events: EventCounts
    component_labels: Mapping[ComponentId, float]
    total_label: float

    def __post_init__(self):
        for cid, value in self.component_labels.items():
            if not value > 0:
                raise ValueError(f"label for {cid} must be > 0")
        if not self.total_label > 0:
            raise ValueError("total label must be > 0")
        check_label_sum(self.component_labels, self.total_label)


# ---------------------------------------------------------------------------
# Workload profiles: counts per 1000 committed instructions.


@dataclass(frozen=True)
class WorkloadProfile:
    name: str
    instructions: int
    base_ipc: float
    branches: float
    mispredicts: float
    icache_mpki: float
    loads: float
    stores: float
    dcache_mpki: float
    int_alu: float
    mul: float
    fpu: float


WORKLOAD_PROFILES: tuple[WorkloadProfile, ...] = (
    WorkloadProfile("dhrystone", 220_000, 1.10, 160, 6.0, 0.8, 230, 140, 2.0, 480, 8, 0),
    WorkloadProfile("median", 120_000, 0.95, 210, 18.0, 0.4, 260, 90, 4.0, 430, 0, 0),
    WorkloadProfile("multiply", 150_000, 1.25, 120, 9.0, 0.3, 60, 20, 0.5, 520, 90, 0),
    WorkloadProfile("qsort", 260_000, 0.85, 190, 22.0, 0.5, 280, 160, 6.0, 380, 2, 0),
    WorkloadProfile("rsort", 300_000, 1.05, 110, 4.0, 0.4, 300, 230, 9.0, 360, 0, 0),
    WorkloadProfile("towers", 90_000, 1.00, 150, 7.0, 1.2, 250, 210, 1.5, 400, 0, 0),
    WorkloadProfile("spmv", 280_000, 0.80, 100, 5.0, 0.6, 330, 40, 14.0, 260, 10, 240),
    WorkloadProfile("vvadd", 100_000, 1.30, 70, 1.5, 0.2, 220, 110, 7.0, 210, 0, 110),
)

WORKLOADS: tuple[str, ...] = tuple(w.name for w in WORKLOAD_PROFILES)


def workload_profile(name: str) -> WorkloadProfile:
    for w in WORKLOAD_PROFILES:
        if w.name == name:
            return w
    raise KeyError(f"unknown workload {name!r}")


def synthesize_events(hw: HardwareConfig, profile: WorkloadProfile,
                      clock_frequency: float = 1e9) -> EventCounts:
    """Deterministic event counters for running ``profile`` on ``hw``."""
    n = profile.instructions
    k = n / 1000.0
    width_gain = (hw.decode_width / 2.0) ** 0.45 * (hw.rob_entry / 64.0) ** 0.12
    ipc = min(0.9 * hw.decode_width, profile.base_ipc * width_gain)
    cycles = round(n / ipc)
    branches = profile.branches * k
    mispred = profile.mispredicts * k * (12.0 / (hw.branch_count + 6.0)) ** 0.3
    wrong_path = mispred * hw.fetch_width * 1.5
    decoded = n + wrong_path
    fetch_groups = decoded / (0.7 * hw.fetch_width)
    icache_misses = profile.icache_mpki * k * (4.0 / hw.dcache_icache_way) ** 0.4
    mem_ops = (profile.loads + profile.stores) * k
    dcache_misses = profile.dcache_mpki * k * (4.0 / hw.dcache_icache_way) ** 0.3 * (
        4.0 / hw.mshr_entry) ** 0.1
    fp_frac = profile.fpu / 1000.0
    counts = dict(
        bp_lookups=fetch_groups,
        bp_updates=branches,
        bp_mispredictions=mispred,
        icache_hits=fetch_groups - icache_misses,
        icache_misses=icache_misses,
        decoded_insts=decoded,
        renamed_insts=decoded * 0.97,
        rob_reads=n * 1.0,
        rob_writes=decoded * 0.97,
        issue_window_reads=n * 1.02,
        issue_window_writes=decoded * 0.97,
        issue_window_wakeups=n * 1.4,
        int_regfile_reads=n * (1 - fp_frac) * 1.6,
        int_regfile_writes=n * (1 - fp_frac) * 0.75,
        fp_regfile_reads=n * fp_frac * 2.2,
        fp_regfile_writes=n * fp_frac * 0.9,
        int_alu_ops=profile.int_alu * k,
        mul_ops=profile.mul * k,
        fpu_ops=profile.fpu * k,
        loads=profile.loads * k,
        stores=profile.stores * k,
        dcache_hits=mem_ops - dcache_misses,
        dcache_misses=dcache_misses,
    )
    return EventCounts(**{key: int(round(v)) for key, v in counts.items()},
                       cycles=int(cycles), clock_frequency=clock_frequency)


# ---------------------------------------------------------------------------
# Synthetic ground truth


def characterize(tech: TechProfile, array_factor: float = 1.0, logic_factor: float = 1.0,
                 node_name: str | None = None,
                 dff_reference_freq: float = REFERENCE_FREQUENCY) -> TechCharacterization:
    """A library characterization whose true tech factors relative to ``tech`` are known."""
    probe = ArrayGeometry(*PROBE_SHAPE)
    read = array_op_energy(probe, "read", tech) * array_factor
    write = array_op_energy(probe, "write", tech) * array_factor
    dff = tech.dff_clock_toggle_power * logic_factor * (dff_reference_freq / REFERENCE_FREQUENCY)
    return TechCharacterization(
        node_name=node_name or f"{tech.node_name}-x{array_factor:g}-x{logic_factor:g}",
        sram_rows=PROBE_SHAPE[0], sram_width=PROBE_SHAPE[1],
        sram_read_energy=read, sram_write_energy=write,
        dff_worst_case_power=dff, dff_reference_freq=dff_reference_freq,
    )


@dataclass(frozen=True)
class SyntheticDatasetSpec:
    family: str
    hidden_params: ParameterSet
    workload_profiles: tuple[WorkloadProfile, ...] = WORKLOAD_PROFILES
    noise_rel_stddev: float = 0.0
    rng_seed: int = 0
    tech: TechProfile | None = None
    config_ids: tuple[str, ...] | None = None
    clock_frequency: float = 1e9

    def __post_init__(self):
        if not self.noise_rel_stddev >= 0:
            raise ValueError("noise_rel_stddev must be >= 0")
        for name, value in self.hidden_params.values.items():
            if not REGISTRY[name].contains(value):
                raise ValueError(f"hidden parameter {name} = {value!r} out of range")


def generate_synthetic_dataset(spec: SyntheticDatasetSpec) -> list[TrainingSample]:
    """Label every (configuration, workload) pair with the model under hidden parameters."""
    from .tech import SURROGATE_40NM

    tech = spec.tech or SURROGATE_40NM
    family = family_of(spec.family) if spec.family.lower() != "all" else None
    ids = spec.config_ids or (FAMILIES[family] if family else CONFIG_IDS)
    rng = np.random.default_rng(spec.rng_seed)
    arch = spec.hidden_params.level_values(Level.ARCHITECTURE)
    samples = []
    for cid in ids:
        hw = bundled_config(cid)
        for profile in spec.workload_profiles:
            events = synthesize_events(hw, profile, spec.clock_frequency)
            report = estimate_core(hw, events, spec.hidden_params, tech)
            labels = {}
            for comp in report.components:
                value = comp.dynamic_power + comp.leakage_power
                if spec.noise_rel_stddev > 0:
                    value = value * max(1e-3, 1.0 + rng.normal(0.0, spec.noise_rel_stddev))
                labels[comp.component_id] = value
            total = 0.0
            for comp in COMPONENTS:
                total = total + labels[comp]
            samples.append(TrainingSample(cid, profile.name, hw, dict(arch), events, labels, total))
    return samples


def sample_hidden_parameters(rng_seed: int, tech_range: tuple[float, float] = (0.5, 2.0),
                             levels: Sequence[Level] = tuple(Level)) -> ParameterSet:
    """Seeded in-range parameter draw: uniform over each range, uniform over choices.

    Technology factors are drawn from ``tech_range`` since their registered
    range is open-ended. Levels not listed stay at defaults.
    """
    rng = np.random.default_rng(rng_seed)
    base = default_parameter_set()
    values = dict(base.values)
    for name, s in REGISTRY.items():
        draw_here = s.level in levels
        if s.value_type is ValueType.ENUM:
            v = s.choices[int(rng.integers(len(s.choices)))]
        elif s.value_type is ValueType.BOOL:
            v = bool(rng.integers(2))
        elif s.value_type is ValueType.INT:
            v = int(rng.integers(int(s.low), int(s.high) + 1))
        elif s.level is Level.TECHNOLOGY:
            v = float(rng.uniform(*tech_range))
        else:
            v = float(rng.uniform(s.low, s.high))
        if draw_here:
            values[name] = v
    return ParameterSet(values)


# ---------------------------------------------------------------------------
# Dataset directories: <dir>/<config_id>/design.cfg, events/<wl>.trace, labels/<wl>.labels


def write_dataset(root: str | os.PathLike, samples: Sequence[TrainingSample],
                  tech_char: TechCharacterization | None = None) -> None:
    from .tech import format_tech_characterization

    root = Path(root)
    designs_written = set()
    for s in samples:
        d = root / s.config_id
        if s.config_id not in designs_written:
            _atomic_write(d / "design.cfg",
                          format_design_config(s.hw, s.arch_params, s.events.clock_frequency))
            designs_written.add(s.config_id)
        _atomic_write(d / "events" / f"{s.workload}.trace", format_event_trace(s.events))
        _atomic_write(d / "labels" / f"{s.workload}.labels",
                      format_labels(s.component_labels, s.total_label))
    if tech_char is not None:
        _atomic_write(root / "tech.char", format_tech_characterization(tech_char))


def read_dataset(root: str | os.PathLike, config_ids: Sequence[str] | None = None,
                 arch_overrides: Mapping[str, Any] | None = None) -> list[TrainingSample]:
    root = Path(root)
    if not root.is_dir():
        raise FormatError(f"dataset directory {root} does not exist")
    wanted = None if config_ids is None else set(config_ids)
    samples = []
    for d in sorted(p for p in root.iterdir() if p.is_dir()):
        if wanted is not None and d.name not in wanted:
            continue
        design_path = d / "design.cfg"
        if not design_path.exists():
            continue
        try:
            design = parse_design_config(design_path.read_text(encoding="utf-8"))
        except FormatError as exc:
            raise FormatError(f"{design_path}: {exc}") from None
        arch = dict(design.arch_params)
        arch.update(arch_overrides or {})
        for trace in sorted((d / "events").glob("*.trace")):
            wl = trace.stem
            label_path = d / "labels" / f"{wl}.labels"
            if not label_path.exists():
                raise FormatError(f"{trace}: no matching labels file {label_path}")
            try:
                events = parse_event_trace(trace.read_text(encoding="utf-8"))
                comps, total = parse_labels(label_path.read_text(encoding="utf-8"))
            except FormatError as exc:
                raise FormatError(f"{trace.parent.parent.name}/{wl}: {exc}") from None
            samples.append(TrainingSample(d.name, wl, design.hw, arch, events, comps, total))
    if wanted is not None:
        found = {s.config_id for s in samples}
        if wanted - found:
            raise FormatError(f"dataset {root} lacks configurations {sorted(wanted - found)}")
    samples.sort(key=lambda s: (CONFIG_IDS.index(s.config_id) if s.config_id in CONFIG_IDS
                                else len(CONFIG_IDS), s.config_id, s.workload))
    return samples
