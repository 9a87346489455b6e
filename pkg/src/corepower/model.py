"""Two-step analytical power model with injected parameters.

Step one turns hardware knobs into array geometries and per-operation
energies; step two maps event counters to operations and operations to
energy and power. Every one of the 25 registered parameters enters at a
single documented point:

* architecture level: access plans of the ICache/BP tables, Scalability of
  BP and ICache table sizes, DCache multi-port organization;
* implementation level: geometry widths/rows, logic scale factors, FU power
  scales, and cache access-count scaling before event-to-op mapping;
* technology level: a multiplier on every array energy/leakage and on every
  logic/FU energy/leakage.

Units: energies in pJ, leakage accumulators in uW, reported power in W.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .hardware import COMPONENTS, ComponentId, EventCounts, HardwareConfig
from .params import (
    DUPLICATED_ARRAY,
    LOW_LATENCY,
    ParameterSet,
    default_parameter_set,
)
from .tech import REFERENCE_FREQUENCY, TechProfile

log = logging.getLogger(__name__)

# Fixed microarchitectural constants of the modeled core.
CACHE_SETS = 64
LINE_BYTES = 64
PADDR_BITS = 32
TAG_BITS = PADDR_BITS - int(math.log2(CACHE_SETS)) - int(math.log2(LINE_BYTES))  # 20
FETCH_SLOT_BYTES = 4  # ICacheFetchBytes counts 4-byte instruction slots
DCACHE_WORD_BITS = 64
BP_GLOBAL_ROWS = 512
BP_GLOBAL_WIDTH = 8
BP_LOCAL_ROWS = 256
BP_LOCAL_WIDTH = 16
BTB_SETS = 128
BTB_WAYS = 4
BTB_TARGET_BITS = 32
SNAPSHOT_WIDTH = 64
FETCH_BUFFER_WIDTH = 40
ARCH_REGS = 64  # 32 integer + 32 floating-point logical registers
ROB_BASE_WIDTH = 76
ISU_BASE_WIDTH = 48
ISU_ENTRIES_PER_PORT = 8
XLEN = 64
LDQ_WIDTH = 64
STQ_WIDTH = 128
DTLB_WIDTH = 52
MSHR_WIDTH = 64
SCALABILITY_BASE_FETCH = 4

# DFF-equivalent counts of logic-dominated blocks, per width-driving knob.
IFU_DFF_PER_FETCH = 64 * 8
RNU_DFF_PER_DECODE = 32 * 8
LSU_DFF_PER_ENTRY = 48
OTHER_DFF_PER_DECODE = 256 * 8
FU_DFF_PER_INT_PORT = 1024
FU_DFF_PER_MEM_FP_PORT = 2048

GEOMETRY_LIMIT = 2 ** 31

ARRAY_COMPONENTS = (
    ComponentId.BP, ComponentId.ICACHE, ComponentId.IFU, ComponentId.RNU, ComponentId.ROB,
    ComponentId.ISU, ComponentId.REGFILE, ComponentId.LSU, ComponentId.DCACHE,
)
LOGIC_COMPONENTS = {
    ComponentId.IFU: "ifu_logic_factor",
    ComponentId.RNU: "rnu_logic_factor",
    ComponentId.LSU: "lsu_logic_factor",
    ComponentId.OTHER_LOGIC: "other_logic_factor",
}


@dataclass(frozen=True)
class ArrayGeometry:
    """Shape of one SRAM-like array.

    ``count`` is the number of identical physical copies that exist for
    organizational reasons (one per way); unlike ``duplicates`` they are not
    all written on a write. Fields may be real-valued while integer
    parameters are relaxed during calibration.
    """

    rows: float
    width: float
    read_ports: int = 1
    write_ports: int = 1
    banks: int = 1
    duplicates: int = 1
    count: int = 1

    def __post_init__(self):
        for name in ("rows", "width", "read_ports", "write_ports", "banks", "duplicates", "count"):
            if not getattr(self, name) >= 1:
                raise ValueError(f"ArrayGeometry.{name} must be >= 1, got {getattr(self, name)!r}")
        if self.rows > GEOMETRY_LIMIT or self.width > GEOMETRY_LIMIT:
            raise OverflowError(
                f"array geometry {self.rows}x{self.width} exceeds 2^31; parameters are misconfigured"
            )


@dataclass(frozen=True)
class _Array:
    name: str
    geom: ArrayGeometry
    unit: str
    read_mult: float = 1
    write_mult: float = 1


@dataclass(frozen=True)
class OpCount:
    read: float = 0.0
    write: float = 0.0
    fu: float = 0.0


@dataclass(frozen=True)
class OpCounts:
    """Operations per named unit of a component."""

    ops: dict[str, OpCount] = field(default_factory=dict)

    def __getitem__(self, unit: str) -> OpCount:
        return self.ops.get(unit, OpCount())

    def is_zero(self) -> bool:
        return all(o.read == 0 and o.write == 0 and o.fu == 0 for o in self.ops.values())


@dataclass(frozen=True)
class ComponentPower:
    component_id: ComponentId
    dynamic_power: float
    leakage_power: float

    @property
    def total(self) -> float:
        return self.dynamic_power + self.leakage_power


@dataclass(frozen=True)
class PowerReport:
    components: tuple[ComponentPower, ...]
    total_power: float
    execution_time: float

    def component(self, cid: ComponentId) -> ComponentPower:
        for c in self.components:
            if c.component_id is cid:
                return c
        raise KeyError(cid)

    def as_dict(self) -> dict[str, float]:
        return {c.component_id.value: c.total for c in self.components}


# ---------------------------------------------------------------------------
# Step 1: geometry instantiation


def _scalability(hw: HardwareConfig, enabled: bool) -> float:
    return hw.fetch_width / SCALABILITY_BASE_FETCH if enabled else 1


def _ptag_bits(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


def _cache_tag(hw: HardwareConfig, metadata_bits) -> ArrayGeometry:
    return ArrayGeometry(rows=CACHE_SETS, width=TAG_BITS + metadata_bits, count=hw.dcache_icache_way)


def _layout(cid: ComponentId, hw: HardwareConfig, p: ParameterSet) -> list[_Array]:
    ways = hw.dcache_icache_way
    if cid is ComponentId.BP:
        scale = _scalability(hw, p["bp_scalability"])
        btb_data_reads = BTB_WAYS if p["bp_table_access_type"] == LOW_LATENCY else 1
        global_rows = BP_GLOBAL_ROWS * p["bp_global_info_factor"] * scale
        local_rows = BP_LOCAL_ROWS * p["bp_local_info_factor"] * scale
        return [
            _Array("global", ArrayGeometry(global_rows, BP_GLOBAL_WIDTH), "global"),
            _Array("chooser", ArrayGeometry(global_rows, BP_GLOBAL_WIDTH), "chooser"),
            _Array("local", ArrayGeometry(local_rows, BP_LOCAL_WIDTH), "local"),
            _Array("btb_tag", ArrayGeometry(BTB_SETS * scale, TAG_BITS, count=BTB_WAYS),
                   "btb", BTB_WAYS, 1),
            _Array("btb_data", ArrayGeometry(BTB_SETS * scale, BTB_TARGET_BITS, count=BTB_WAYS),
                   "btb", btb_data_reads, 1),
            _Array("snapshot", ArrayGeometry(hw.branch_count, SNAPSHOT_WIDTH), "snapshot"),
        ]
    if cid is ComponentId.ICACHE:
        block_bytes = hw.icache_fetch_bytes * FETCH_SLOT_BYTES
        rows_per_line = max(1, LINE_BYTES // block_bytes)
        width = block_bytes * 8
        if p["icache_scalability"]:
            width = width * _scalability(hw, True)
        data_reads = ways if p["icache_table_access_type"] == LOW_LATENCY else 1
        return [
            _Array("tag", _cache_tag(hw, p["icache_metadata_bits"]), "cache", ways, 1),
            _Array("data", ArrayGeometry(CACHE_SETS * rows_per_line, width, count=ways),
                   "cache", data_reads, rows_per_line),
        ]
    if cid is ComponentId.IFU:
        return [_Array("fetch_buffer",
                       ArrayGeometry(hw.fetch_buffer_entry, FETCH_BUFFER_WIDTH,
                                     read_ports=hw.decode_width, write_ports=hw.fetch_width),
                       "fetch_buffer")]
    if cid is ComponentId.RNU:
        tag_bits = _ptag_bits(max(hw.int_phy_register, hw.fp_phy_register))
        return [
            _Array("map_table", ArrayGeometry(ARCH_REGS, tag_bits, read_ports=2 * hw.decode_width,
                                              write_ports=hw.decode_width), "map_table"),
            _Array("free_list", ArrayGeometry(hw.int_phy_register + hw.fp_phy_register, tag_bits),
                   "free_list"),
        ]
    if cid is ComponentId.ROB:
        return [_Array("rob", ArrayGeometry(hw.rob_entry, ROB_BASE_WIDTH + p["rob_entry_width"],
                                            read_ports=hw.decode_width,
                                            write_ports=hw.decode_width), "rob")]
    if cid is ComponentId.ISU:
        entries = ISU_ENTRIES_PER_PORT * (hw.int_issue_width + hw.mem_fp_issue_width)
        tag_bits = _ptag_bits(max(hw.int_phy_register, hw.fp_phy_register))
        return [
            _Array("issue_window", ArrayGeometry(entries, ISU_BASE_WIDTH + p["inst_window_width"]),
                   "issue_window"),
            _Array("wakeup_cam", ArrayGeometry(entries, 2 * tag_bits), "wakeup_cam"),
        ]
    if cid is ComponentId.REGFILE:
        width = XLEN * p["physical_regfile_width"]
        return [
            _Array("int_rf", ArrayGeometry(hw.int_phy_register, width,
                                           read_ports=2 * hw.int_issue_width,
                                           write_ports=hw.int_issue_width), "int_rf"),
            _Array("fp_rf", ArrayGeometry(hw.fp_phy_register, width,
                                          read_ports=3 * hw.mem_fp_issue_width,
                                          write_ports=hw.mem_fp_issue_width), "fp_rf"),
        ]
    if cid is ComponentId.LSU:
        n = hw.ldq_stq_entry
        return [
            _Array("ldq", ArrayGeometry(n, LDQ_WIDTH), "ldq"),
            _Array("stq", ArrayGeometry(n, STQ_WIDTH), "stq"),
            _Array("dtlb", ArrayGeometry(hw.dtlb_entry, DTLB_WIDTH), "dtlb"),
        ]
    if cid is ComponentId.DCACHE:
        ports = hw.mem_fp_issue_width
        words_per_line = LINE_BYTES * 8 // DCACHE_WORD_BITS
        if p["dcache_multi_port_design"] == DUPLICATED_ARRAY:
            org = {"duplicates": ports, "banks": 1}
        else:
            org = {"banks": ports, "duplicates": 1}
        data = ArrayGeometry(CACHE_SETS * ways * words_per_line, DCACHE_WORD_BITS,
                             read_ports=1, write_ports=1, **org)
        return [
            _Array("tag", _cache_tag(hw, p["dcache_metadata_bits"]), "cache", ways, 1),
            _Array("data", data, "cache", 1, words_per_line),
            _Array("mshr", ArrayGeometry(hw.mshr_entry, MSHR_WIDTH), "mshr"),
        ]
    if cid in (ComponentId.FUPOOL, ComponentId.OTHER_LOGIC):
        return []
    raise ValueError(f"unknown component {cid!r}")


def instantiate_geometries(component_id, hw: HardwareConfig, params: ParameterSet):
    """Arrays backing a component, with all geometry-affecting parameters applied."""
    cid = ComponentId(component_id)
    return [(a.name, a.geom) for a in _layout(cid, hw, params)]


def array_op_energy(geom: ArrayGeometry, op: str, tech: TechProfile,
                    tech_array_factor: float = 1.0) -> float:
    """Energy (pJ) of one read or write access to ``geom``."""
    if not tech_array_factor > 0:
        raise ValueError("tech_array_factor must be > 0")
    row_term = 1.0 + (geom.rows / geom.banks) / 1024.0
    if op == "read":
        return tech.e_bit_read * geom.width * row_term * tech_array_factor
    if op == "write":
        return tech.e_bit_write * geom.width * row_term * tech_array_factor * geom.duplicates
    raise ValueError(f"op must be 'read' or 'write', got {op!r}")


def array_leakage(geom: ArrayGeometry, tech: TechProfile, tech_array_factor: float = 1.0) -> float:
    """Leakage (uW) of all physical copies of ``geom``."""
    return (tech.p_leak_bit * geom.rows * geom.width * geom.banks * geom.duplicates
            * geom.count * tech_array_factor)


def dff_equivalent(component_id, hw: HardwareConfig) -> int:
    cid = ComponentId(component_id)
    if cid is ComponentId.IFU:
        return IFU_DFF_PER_FETCH * hw.fetch_width
    if cid is ComponentId.RNU:
        return RNU_DFF_PER_DECODE * hw.decode_width
    if cid is ComponentId.LSU:
        return LSU_DFF_PER_ENTRY * hw.ldq_stq_entry
    if cid is ComponentId.OTHER_LOGIC:
        return OTHER_DFF_PER_DECODE * hw.decode_width
    if cid is ComponentId.FUPOOL:
        return FU_DFF_PER_INT_PORT * hw.int_issue_width + FU_DFF_PER_MEM_FP_PORT * hw.mem_fp_issue_width
    return 0


def dff_toggle_energy(tech: TechProfile) -> float:
    """Worst-case (clock toggling) energy of one DFF per cycle, in pJ."""
    return tech.dff_clock_toggle_power / REFERENCE_FREQUENCY * 1e6


def logic_energy_per_cycle(dff_equiv, activity, tech: TechProfile,
                           tech_logic_factor: float = 1.0, logic_factor: float = 1.0) -> float:
    if dff_equiv < 0 or activity < 0 or activity > 1:
        raise ValueError("dff_equiv must be >= 0 and activity within [0, 1]")
    if tech_logic_factor < 0 or logic_factor < 0:
        raise ValueError("factors must be >= 0")
    return dff_equiv * dff_toggle_energy(tech) * activity * tech_logic_factor * logic_factor


def logic_activity(component_id, hw: HardwareConfig, events: EventCounts) -> float:
    """Fraction of cycles a logic block switches, from its driving event counter."""
    cid = ComponentId(component_id)
    if cid is ComponentId.IFU:
        busy, width = events.decoded_insts, hw.fetch_width
    elif cid is ComponentId.RNU:
        busy, width = events.renamed_insts, hw.decode_width
    elif cid is ComponentId.LSU:
        busy, width = events.loads + events.stores, hw.mem_fp_issue_width
    elif cid is ComponentId.OTHER_LOGIC:
        busy, width = events.decoded_insts, hw.decode_width
    else:
        return 0.0
    return min(1.0, busy / (events.cycles * width))


# ---------------------------------------------------------------------------
# Step 2: events to operations


def _scaled(raw: float, coeff: float, bias: float, what: str) -> float:
    eff = coeff * raw + bias
    if eff < 0:
        log.warning("effective %s count %g < 0 after access scaling; clamped to 0", what, eff)
        return 0.0
    return eff


def effective_cache_counts(cid: ComponentId, events: EventCounts, params: ParameterSet):
    if cid is ComponentId.ICACHE:
        coeff, bias = params["icache_access_coefficient"], params["icache_access_bias"]
        hits, misses = events.icache_hits, events.icache_misses
    elif cid is ComponentId.DCACHE:
        coeff, bias = params["dcache_access_coefficient"], params["dcache_access_bias"]
        hits, misses = events.dcache_hits, events.dcache_misses
    else:
        raise ValueError(f"{cid} is not a cache")
    return (_scaled(hits, coeff, bias, f"{cid.value} hit"),
            _scaled(misses, coeff, bias, f"{cid.value} miss"))


def events_to_ops(component_id, events: EventCounts, params: ParameterSet) -> OpCounts:
    cid = ComponentId(component_id)
    e = events
    if cid is ComponentId.BP:
        ops = {
            "global": OpCount(e.bp_lookups, e.bp_updates),
            "chooser": OpCount(e.bp_lookups, e.bp_updates),
            "local": OpCount(e.bp_lookups, e.bp_updates),
            "btb": OpCount(e.bp_lookups, e.bp_mispredictions),
            "snapshot": OpCount(e.bp_mispredictions, e.bp_updates),
        }
    elif cid in (ComponentId.ICACHE, ComponentId.DCACHE):
        hits, misses = effective_cache_counts(cid, e, params)
        # a hit is one read; a miss is a read plus a refill write
        ops = {"cache": OpCount(hits + misses, misses)}
        if cid is ComponentId.DCACHE:
            ops["mshr"] = OpCount(misses, misses)
    elif cid is ComponentId.IFU:
        ops = {"fetch_buffer": OpCount(e.decoded_insts, e.decoded_insts)}
    elif cid is ComponentId.RNU:
        ops = {
            "map_table": OpCount(2 * e.renamed_insts, e.renamed_insts),
            "free_list": OpCount(e.renamed_insts, e.renamed_insts),
        }
    elif cid is ComponentId.ROB:
        ops = {"rob": OpCount(e.rob_reads, e.rob_writes)}
    elif cid is ComponentId.ISU:
        ops = {
            "issue_window": OpCount(e.issue_window_reads, e.issue_window_writes),
            "wakeup_cam": OpCount(e.issue_window_wakeups, 0),
        }
    elif cid is ComponentId.REGFILE:
        ops = {
            "int_rf": OpCount(e.int_regfile_reads, e.int_regfile_writes),
            "fp_rf": OpCount(e.fp_regfile_reads, e.fp_regfile_writes),
        }
    elif cid is ComponentId.FUPOOL:
        ops = {
            "alu": OpCount(fu=e.int_alu_ops),
            "mul": OpCount(fu=e.mul_ops),
            "fpu": OpCount(fu=e.fpu_ops),
        }
    elif cid is ComponentId.LSU:
        ops = {
            "ldq": OpCount(e.stores, e.loads),
            "stq": OpCount(e.loads, e.stores),
            "dtlb": OpCount(e.loads + e.stores, 0),
        }
    elif cid is ComponentId.OTHER_LOGIC:
        ops = {}
    else:
        raise ValueError(f"unknown component {component_id!r}")
    return OpCounts(ops)


def fu_energy(events: EventCounts, params: ParameterSet, tech: TechProfile) -> float:
    """Functional-unit dynamic energy (pJ) including power scales and tech logic factor."""
    ops = events_to_ops(ComponentId.FUPOOL, events, params)
    tlf = params["tech_logic_factor"]
    energy = 0.0
    energy = energy + ops["alu"].fu * tech.e_fu_alu * params["alu_power_scale"] * tlf
    energy = energy + ops["mul"].fu * tech.e_fu_mul * params["mul_power_scale"] * tlf
    energy = energy + ops["fpu"].fu * tech.e_fu_fpu * params["fpu_power_scale"] * tlf
    return energy


# ---------------------------------------------------------------------------
# Estimation


def _structure_rows(layout: list[_Array], ops: OpCounts) -> list[tuple[float, ...]]:
    rows = []
    for a in layout:
        unit = ops[a.unit]
        g = a.geom
        rows.append((g.rows, g.width, g.banks, g.duplicates, g.count,
                     unit.read * a.read_mult, unit.write * a.write_mult))
    return rows


def estimate_component_batch(component_id, hws: Sequence[HardwareConfig],
                             events: Sequence[EventCounts], params: ParameterSet,
                             tech: TechProfile, kernel=None) -> tuple[np.ndarray, np.ndarray]:
    """Dynamic and leakage power (W) of one component for many (hw, events) samples.

    All samples share ``params``; array energies for the whole batch go through
    one kernel call.
    """
    cid = ComponentId(component_id)
    n = len(events)
    if len(hws) != n:
        raise ValueError("hws and events must have equal length")
    taf = params["tech_array_factor"]
    tlf = params["tech_logic_factor"]
    table: list[tuple[float, ...]] = []
    offsets = [0]
    layouts: dict[int, list[_Array]] = {}
    for hw, ev in zip(hws, events):
        key = id(hw)
        if key not in layouts:
            layouts[key] = _layout(cid, hw, params)
        table.extend(_structure_rows(layouts[key], events_to_ops(cid, ev, params)))
        offsets.append(len(table))
    if table:
        array_dyn, array_leak = kernels.structure_energy_sums(
            table, offsets, tech.e_bit_read, tech.e_bit_write, tech.p_leak_bit, taf, impl=kernel)
    else:
        array_dyn, array_leak = np.zeros(n), np.zeros(n)

    logic_factor = params[LOGIC_COMPONENTS[cid]] if cid in LOGIC_COMPONENTS else None
    dyn_out = np.empty(n)
    leak_out = np.empty(n)
    for i, (hw, ev) in enumerate(zip(hws, events)):
        dyn_pj = float(array_dyn[i])
        leak_uw = float(array_leak[i])
        if logic_factor is not None:
            dff = dff_equivalent(cid, hw)
            act = logic_activity(cid, hw, ev)
            per_cycle = logic_energy_per_cycle(dff, act, tech, tlf, logic_factor)
            dyn_pj = dyn_pj + per_cycle * ev.cycles
            leak_uw = leak_uw + dff * tech.dff_leak_power * tlf * logic_factor
        elif cid is ComponentId.FUPOOL:
            dyn_pj = dyn_pj + fu_energy(ev, params, tech)
            leak_uw = leak_uw + dff_equivalent(cid, hw) * tech.dff_leak_power * tlf
        dyn_out[i] = dyn_pj * 1e-12 / ev.execution_time
        leak_out[i] = leak_uw * 1e-6
    return dyn_out, leak_out


def estimate_component(component_id, hw: HardwareConfig, events: EventCounts,
                       params: ParameterSet, tech: TechProfile) -> ComponentPower:
    cid = ComponentId(component_id)
    dyn, leak = estimate_component_batch(cid, [hw], [events], params, tech)
    return ComponentPower(cid, float(dyn[0]), float(leak[0]))


def assemble_report(components: Sequence[ComponentPower], execution_time: float) -> PowerReport:
    total = 0.0
    for c in components:
        total = total + (c.dynamic_power + c.leakage_power)
    return PowerReport(tuple(components), total, execution_time)


def estimate_core(hw: HardwareConfig, events: EventCounts, params: ParameterSet | None = None,
                  tech: TechProfile | None = None) -> PowerReport:
    """Core power report for one (configuration, workload) point."""
    from .tech import SURROGATE_40NM

    params = default_parameter_set() if params is None else params
    tech = SURROGATE_40NM if tech is None else tech
    comps = [estimate_component(cid, hw, events, params, tech) for cid in COMPONENTS]
    return assemble_report(comps, events.execution_time)


def estimate_total_batch(hws, events, params: ParameterSet, tech: TechProfile) -> np.ndarray:
    """Total core power (W) for many samples sharing one parameter set."""
    totals = np.zeros(len(events))
    for cid in COMPONENTS:
        dyn, leak = estimate_component_batch(cid, hws, events, params, tech)
        totals = totals + (dyn + leak)
    return totals
