"""Hypothesis strategies shared by the property tests."""

from hypothesis import strategies as st

from corepower.hardware import EVENT_FIELDS, EventCounts, HardwareConfig
from corepower.params import SPECS, ValueType, default_parameter_set


@st.composite
def hardware_configs(draw, min_ways=1):
    fetch = draw(st.integers(1, 16))
    return HardwareConfig(
        fetch_width=fetch,
        decode_width=draw(st.integers(1, fetch)),
        fetch_buffer_entry=draw(st.integers(1, 64)),
        rob_entry=draw(st.integers(1, 512)),
        int_phy_register=draw(st.integers(1, 512)),
        fp_phy_register=draw(st.integers(1, 512)),
        ldq_stq_entry=draw(st.integers(1, 128)),
        branch_count=draw(st.integers(1, 64)),
        mem_fp_issue_width=draw(st.integers(1, 8)),
        int_issue_width=draw(st.integers(1, 8)),
        dcache_icache_way=draw(st.integers(min_ways, 16)),
        dtlb_entry=draw(st.integers(1, 128)),
        mshr_entry=draw(st.integers(1, 32)),
        icache_fetch_bytes=draw(st.integers(1, 16)),
    )


counts = st.integers(0, 10**7)


@st.composite
def event_counts(draw, cycles=None):
    values = {name: draw(counts) for name in EVENT_FIELDS}
    values["cycles"] = cycles if cycles is not None else draw(st.integers(1, 10**8))
    values["clock_frequency"] = draw(st.sampled_from([5e8, 1e9, 1.5e9, 2e9, 3.2e9]))
    return EventCounts(**values)


def _in_range(s):
    if s.value_type is ValueType.ENUM:
        return st.sampled_from(s.choices)
    if s.value_type is ValueType.BOOL:
        return st.booleans()
    if s.value_type is ValueType.INT:
        return st.integers(int(s.low), int(s.high))
    if s.low_open:
        return st.floats(0.01, 8.0)
    return st.floats(s.low, s.high)


@st.composite
def parameter_sets(draw):
    return default_parameter_set().with_values({s.name: draw(_in_range(s)) for s in SPECS})
