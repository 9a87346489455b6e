"""Base analytical model without any injected parameters.

This is the uncalibrated model that the injected one reduces to when every
parameter sits at its default: Low Power table access, no Scalability,
multi-banked DCache, unit logic/FU/tech factors, no metadata or status bits,
architectural register width, unscaled cache accesses. It is written out
directly rather than routed through the injection code so that the two
paths check each other.
"""

from __future__ import annotations

import math

from .hardware import COMPONENTS, ComponentId, EventCounts, HardwareConfig
from .model import (
    ARCH_REGS, BP_GLOBAL_ROWS, BP_GLOBAL_WIDTH, BP_LOCAL_ROWS, BP_LOCAL_WIDTH, BTB_SETS,
    BTB_TARGET_BITS, BTB_WAYS, CACHE_SETS, DCACHE_WORD_BITS, DTLB_WIDTH, FETCH_BUFFER_WIDTH,
    FETCH_SLOT_BYTES, FU_DFF_PER_INT_PORT, FU_DFF_PER_MEM_FP_PORT, IFU_DFF_PER_FETCH,
    ISU_BASE_WIDTH, ISU_ENTRIES_PER_PORT, LDQ_WIDTH, LINE_BYTES, LSU_DFF_PER_ENTRY, MSHR_WIDTH,
    OTHER_DFF_PER_DECODE, RNU_DFF_PER_DECODE, ROB_BASE_WIDTH, SNAPSHOT_WIDTH, STQ_WIDTH,
    TAG_BITS, XLEN, ComponentPower, PowerReport,
)
from .tech import REFERENCE_FREQUENCY, SURROGATE_40NM, TechProfile


class _Acc:
    """Running dynamic-energy (pJ) and leakage (uW) sums over arrays."""

    def __init__(self, tech: TechProfile):
        self.t = tech
        self.dyn = 0.0
        self.leak = 0.0

    def array(self, rows, width, reads, writes, banks=1, dups=1, count=1):
        row_term = 1.0 + (rows / banks) / 1024.0
        e_read = self.t.e_bit_read * width * row_term
        e_write = self.t.e_bit_write * width * row_term * dups
        self.dyn = self.dyn + reads * e_read
        self.dyn = self.dyn + writes * e_write
        self.leak = self.leak + self.t.p_leak_bit * rows * width * banks * dups * count


def _tag_bits(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


def _logic(acc: _Acc, dff: int, busy: float, width: int, ev: EventCounts):
    activity = min(1.0, busy / (ev.cycles * width))
    per_cycle = dff * (acc.t.dff_clock_toggle_power / REFERENCE_FREQUENCY * 1e6) * activity
    acc.dyn = acc.dyn + per_cycle * ev.cycles
    acc.leak = acc.leak + dff * acc.t.dff_leak_power


def base_component(cid: ComponentId, hw: HardwareConfig, ev: EventCounts,
                   tech: TechProfile = SURROGATE_40NM) -> ComponentPower:
    acc = _Acc(tech)
    ways = hw.dcache_icache_way
    if cid is ComponentId.BP:
        acc.array(BP_GLOBAL_ROWS, BP_GLOBAL_WIDTH, ev.bp_lookups, ev.bp_updates)
        acc.array(BP_GLOBAL_ROWS, BP_GLOBAL_WIDTH, ev.bp_lookups, ev.bp_updates)
        acc.array(BP_LOCAL_ROWS, BP_LOCAL_WIDTH, ev.bp_lookups, ev.bp_updates)
        # set-associative BTB: all tags compared, one target way read
        acc.array(BTB_SETS, TAG_BITS, ev.bp_lookups * BTB_WAYS, ev.bp_mispredictions,
                  count=BTB_WAYS)
        acc.array(BTB_SETS, BTB_TARGET_BITS, ev.bp_lookups, ev.bp_mispredictions, count=BTB_WAYS)
        acc.array(hw.branch_count, SNAPSHOT_WIDTH, ev.bp_mispredictions, ev.bp_updates)
    elif cid is ComponentId.ICACHE:
        block = hw.icache_fetch_bytes * FETCH_SLOT_BYTES
        per_line = max(1, LINE_BYTES // block)
        reads = ev.icache_hits + ev.icache_misses
        acc.array(CACHE_SETS, TAG_BITS, reads * ways, ev.icache_misses, count=ways)
        acc.array(CACHE_SETS * per_line, block * 8, reads, ev.icache_misses * per_line,
                  count=ways)
    elif cid is ComponentId.IFU:
        acc.array(hw.fetch_buffer_entry, FETCH_BUFFER_WIDTH, ev.decoded_insts, ev.decoded_insts)
        _logic(acc, IFU_DFF_PER_FETCH * hw.fetch_width, ev.decoded_insts, hw.fetch_width, ev)
    elif cid is ComponentId.RNU:
        tag = _tag_bits(max(hw.int_phy_register, hw.fp_phy_register))
        acc.array(ARCH_REGS, tag, 2 * ev.renamed_insts, ev.renamed_insts)
        acc.array(hw.int_phy_register + hw.fp_phy_register, tag, ev.renamed_insts,
                  ev.renamed_insts)
        _logic(acc, RNU_DFF_PER_DECODE * hw.decode_width, ev.renamed_insts, hw.decode_width, ev)
    elif cid is ComponentId.ROB:
        acc.array(hw.rob_entry, ROB_BASE_WIDTH, ev.rob_reads, ev.rob_writes)
    elif cid is ComponentId.ISU:
        entries = ISU_ENTRIES_PER_PORT * (hw.int_issue_width + hw.mem_fp_issue_width)
        tag = _tag_bits(max(hw.int_phy_register, hw.fp_phy_register))
        acc.array(entries, ISU_BASE_WIDTH, ev.issue_window_reads, ev.issue_window_writes)
        acc.array(entries, 2 * tag, ev.issue_window_wakeups, 0)
    elif cid is ComponentId.REGFILE:
        acc.array(hw.int_phy_register, XLEN, ev.int_regfile_reads, ev.int_regfile_writes)
        acc.array(hw.fp_phy_register, XLEN, ev.fp_regfile_reads, ev.fp_regfile_writes)
    elif cid is ComponentId.FUPOOL:
        acc.dyn = acc.dyn + ev.int_alu_ops * tech.e_fu_alu
        acc.dyn = acc.dyn + ev.mul_ops * tech.e_fu_mul
        acc.dyn = acc.dyn + ev.fpu_ops * tech.e_fu_fpu
        dff = FU_DFF_PER_INT_PORT * hw.int_issue_width + FU_DFF_PER_MEM_FP_PORT * hw.mem_fp_issue_width
        acc.leak = acc.leak + dff * tech.dff_leak_power
    elif cid is ComponentId.LSU:
        acc.array(hw.ldq_stq_entry, LDQ_WIDTH, ev.stores, ev.loads)
        acc.array(hw.ldq_stq_entry, STQ_WIDTH, ev.loads, ev.stores)
        acc.array(hw.dtlb_entry, DTLB_WIDTH, ev.loads + ev.stores, 0)
        _logic(acc, LSU_DFF_PER_ENTRY * hw.ldq_stq_entry, ev.loads + ev.stores,
               hw.mem_fp_issue_width, ev)
    elif cid is ComponentId.DCACHE:
        words = LINE_BYTES * 8 // DCACHE_WORD_BITS
        reads = ev.dcache_hits + ev.dcache_misses
        acc.array(CACHE_SETS, TAG_BITS, reads * ways, ev.dcache_misses, count=ways)
        acc.array(CACHE_SETS * ways * words, DCACHE_WORD_BITS, reads, ev.dcache_misses * words,
                  banks=hw.mem_fp_issue_width)
        acc.array(hw.mshr_entry, MSHR_WIDTH, ev.dcache_misses, ev.dcache_misses)
    elif cid is ComponentId.OTHER_LOGIC:
        _logic(acc, OTHER_DFF_PER_DECODE * hw.decode_width, ev.decoded_insts, hw.decode_width, ev)
    else:
        raise ValueError(f"unknown component {cid!r}")
    return ComponentPower(cid, acc.dyn * 1e-12 / ev.execution_time, acc.leak * 1e-6)


def base_estimate_core(hw: HardwareConfig, ev: EventCounts,
                       tech: TechProfile = SURROGATE_40NM) -> PowerReport:
    comps = [base_component(cid, hw, ev, tech) for cid in COMPONENTS]
    total = 0.0
    for c in comps:
        total = total + (c.dynamic_power + c.leakage_power)
    return PowerReport(tuple(comps), total, ev.execution_time)
