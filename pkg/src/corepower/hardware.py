"""Core microarchitecture description and per-workload event counters."""

from __future__ import annotations

from dataclasses import dataclass, fields
from enum import Enum


class ComponentId(str, Enum):
    """The ten major core components plus the catch-all Other Logic slot."""

    BP = "BP"
    IFU = "IFU"
    ICACHE = "ICache"
    RNU = "RNU"
    ROB = "ROB"
    ISU = "ISU"
    REGFILE = "Regfile"
    FUPOOL = "FUPool"
    LSU = "LSU"
    DCACHE = "DCache"
    OTHER_LOGIC = "OtherLogic"

    @classmethod
    def parse(cls, text: str) -> "ComponentId":
        for c in cls:
            if text == c.value or text.upper() == c.name:
                return c
        raise ValueError(f"unknown component {text!r}")


COMPONENTS: tuple[ComponentId, ...] = tuple(ComponentId)

# Keys as they appear in design config files, paired with the dataclass field.
HARDWARE_KEYS: dict[str, str] = {
    "FetchWidth": "fetch_width",
    "DecodeWidth": "decode_width",
    "FetchBufferEntry": "fetch_buffer_entry",
    "RobEntry": "rob_entry",
    "IntPhyRegister": "int_phy_register",
    "FpPhyRegister": "fp_phy_register",
    "LdqStqEntry": "ldq_stq_entry",
    "BranchCount": "branch_count",
    "MemFpIssueWidth": "mem_fp_issue_width",
    "IntIssueWidth": "int_issue_width",
    "DCacheICacheWay": "dcache_icache_way",
    "DTLBEntry": "dtlb_entry",
    "MSHREntry": "mshr_entry",
    "ICacheFetchBytes": "icache_fetch_bytes",
}


@dataclass(frozen=True)
class HardwareConfig:
    fetch_width: int
    decode_width: int
    fetch_buffer_entry: int
    rob_entry: int
    int_phy_register: int
    fp_phy_register: int
    ldq_stq_entry: int
    branch_count: int
    mem_fp_issue_width: int
    int_issue_width: int
    dcache_icache_way: int
    dtlb_entry: int
    mshr_entry: int
    icache_fetch_bytes: int

    def __post_init__(self):
        for key, name in HARDWARE_KEYS.items():
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise ValueError(f"{key} must be a positive integer, got {value!r}")
        if self.decode_width > self.fetch_width:
            raise ValueError(
                f"DecodeWidth ({self.decode_width}) exceeds FetchWidth ({self.fetch_width})"
            )

    def as_dict(self) -> dict[str, int]:
        return {key: getattr(self, name) for key, name in HARDWARE_KEYS.items()}


EVENT_FIELDS: tuple[str, ...] = (
    "bp_lookups",
    "bp_updates",
    "bp_mispredictions",
    "icache_hits",
    "icache_misses",
    "decoded_insts",
    "renamed_insts",
    "rob_reads",
    "rob_writes",
    "issue_window_reads",
    "issue_window_writes",
    "issue_window_wakeups",
    "int_regfile_reads",
    "int_regfile_writes",
    "fp_regfile_reads",
    "fp_regfile_writes",
    "int_alu_ops",
    "mul_ops",
    "fpu_ops",
    "loads",
    "stores",
    "dcache_hits",
    "dcache_misses",
)

# Which component consumes each counter. Every counter has exactly one owner
# except decoded_insts, which also drives the Other Logic activity.
EVENT_OWNERS: dict[str, tuple[ComponentId, ...]] = {
    "bp_lookups": (ComponentId.BP,),
    "bp_updates": (ComponentId.BP,),
    "bp_mispredictions": (ComponentId.BP,),
    "icache_hits": (ComponentId.ICACHE,),
    "icache_misses": (ComponentId.ICACHE,),
    "decoded_insts": (ComponentId.IFU, ComponentId.OTHER_LOGIC),
    "renamed_insts": (ComponentId.RNU,),
    "rob_reads": (ComponentId.ROB,),
    "rob_writes": (ComponentId.ROB,),
    "issue_window_reads": (ComponentId.ISU,),
    "issue_window_writes": (ComponentId.ISU,),
    "issue_window_wakeups": (ComponentId.ISU,),
    "int_regfile_reads": (ComponentId.REGFILE,),
    "int_regfile_writes": (ComponentId.REGFILE,),
    "fp_regfile_reads": (ComponentId.REGFILE,),
    "fp_regfile_writes": (ComponentId.REGFILE,),
    "int_alu_ops": (ComponentId.FUPOOL,),
    "mul_ops": (ComponentId.FUPOOL,),
    "fpu_ops": (ComponentId.FUPOOL,),
    "loads": (ComponentId.LSU,),
    "stores": (ComponentId.LSU,),
    "dcache_hits": (ComponentId.DCACHE,),
    "dcache_misses": (ComponentId.DCACHE,),
}


@dataclass(frozen=True)
class EventCounts:
    """Counters collected by a performance simulator for one workload run."""

    bp_lookups: float = 0
    bp_updates: float = 0
    bp_mispredictions: float = 0
    icache_hits: float = 0
    icache_misses: float = 0
    decoded_insts: float = 0
    renamed_insts: float = 0
    rob_reads: float = 0
    rob_writes: float = 0
    issue_window_reads: float = 0
    issue_window_writes: float = 0
    issue_window_wakeups: float = 0
    int_regfile_reads: float = 0
    int_regfile_writes: float = 0
    fp_regfile_reads: float = 0
    fp_regfile_writes: float = 0
    int_alu_ops: float = 0
    mul_ops: float = 0
    fpu_ops: float = 0
    loads: float = 0
    stores: float = 0
    dcache_hits: float = 0
    dcache_misses: float = 0
    cycles: float = 1
    clock_frequency: float = 1e9

    def __post_init__(self):
        for name in EVENT_FIELDS:
            if getattr(self, name) < 0:
                raise ValueError(f"event counter {name} is negative")
        if not self.cycles > 0:
            raise ValueError("cycles must be > 0")
        if not self.clock_frequency > 0:
            raise ValueError("clock_frequency must be > 0")

    @property
    def execution_time(self) -> float:
        return self.cycles / self.clock_frequency

    def counters(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in EVENT_FIELDS}

    def replace(self, **changes) -> "EventCounts":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return EventCounts(**values)

    @classmethod
    def zero(cls, cycles: float = 1e6, clock_frequency: float = 1e9) -> "EventCounts":
        return cls(cycles=cycles, clock_frequency=clock_frequency)
