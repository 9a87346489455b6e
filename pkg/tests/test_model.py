import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

import oracles
from strategies import event_counts, hardware_configs, parameter_sets
from corepower import kernels
from corepower.dataio import WORKLOAD_PROFILES, bundled_config, synthesize_events
from corepower.hardware import COMPONENTS, EVENT_FIELDS, EVENT_OWNERS, ComponentId, EventCounts
from corepower.model import (
    ArrayGeometry, array_leakage, array_op_energy, effective_cache_counts, estimate_component,
    estimate_core, events_to_ops, instantiate_geometries, logic_energy_per_cycle,
)
from corepower.params import REGISTRY, default_parameter_set
from corepower.reference import base_estimate_core
from corepower.tech import SURROGATE_28NM, SURROGATE_40NM, TechProfile

T40 = SURROGATE_40NM
D = default_parameter_set()


def test_array_energy_examples():
    g = ArrayGeometry(256, 64)
    assert array_op_energy(g, "read", T40) == float(oracles.array_energy(0.05, 64, 256)) == 4.0
    assert array_op_energy(g, "read", T40, 2.0) == 8.0
    dup = ArrayGeometry(256, 64, duplicates=2)
    assert array_op_energy(dup, "write", T40) == float(
        oracles.array_energy(0.05, 64, 256, duplicates=2, write=True)) == 8.0
    assert array_op_energy(dup, "read", T40) == 4.0


def test_array_energy_banking_divides_rows():
    g = ArrayGeometry(2048, 64, banks=4)
    assert array_op_energy(g, "read", T40) == float(oracles.array_energy(0.05, 64, 2048, banks=4))


def test_array_geometry_validation():
    with pytest.raises(ValueError):
        ArrayGeometry(0, 8)
    with pytest.raises(ValueError):
        ArrayGeometry(8, 8, banks=0)
    with pytest.raises(OverflowError):
        ArrayGeometry(2 ** 32, 8)
    with pytest.raises(ValueError):
        array_op_energy(ArrayGeometry(8, 8), "erase", T40)


def test_logic_energy_examples():
    assert logic_energy_per_cycle(1000, 0, T40) == 0
    one = logic_energy_per_cycle(1000, 1.0, T40)
    assert one == float(oracles.logic_energy(1000, 1.0, 1e9, 1)) == pytest.approx(1.0, rel=1e-15)
    assert logic_energy_per_cycle(1000, 1.0, T40, logic_factor=2.0) == 2 * one
    with pytest.raises(ValueError):
        logic_energy_per_cycle(10, 1.5, T40)


def test_icache_ops_examples():
    ev = EventCounts(icache_hits=100, icache_misses=10)
    ops = events_to_ops(ComponentId.ICACHE, ev, D)["cache"]
    assert (ops.read, ops.write) == (110, 10)
    p = D.with_values(icache_access_coefficient=2.0, icache_access_bias=5.0)
    ops = events_to_ops(ComponentId.ICACHE, ev, p)["cache"]
    assert (ops.read, ops.write) == tuple(float(x) for x in oracles.cache_ops(100, 10, 2, 5)) \
        == (230, 25)
    zero = events_to_ops(ComponentId.ICACHE, EventCounts(), D)
    assert zero.is_zero()
    for cid in COMPONENTS:
        assert events_to_ops(cid, EventCounts(), D).is_zero()


def test_negative_effective_counts_are_clamped(caplog):
    # coeff and bias are non-negative in range, so only an unclamped set can do this
    p = D.with_values(dcache_access_coefficient=-1.0)
    hits, misses = effective_cache_counts(ComponentId.DCACHE, EventCounts(dcache_hits=5), p)
    assert hits == 0 and misses == 0
    assert "clamped" in caplog.text


def test_geometry_injection_examples():
    hw = bundled_config("B8")
    tag = dict(instantiate_geometries("ICache", hw, D.with_values(icache_metadata_bits=4)))["tag"]
    assert tag.width == 24
    hw2 = bundled_config("B15")
    assert hw2.mem_fp_issue_width == 2
    data = dict(instantiate_geometries(
        "DCache", hw2, D.with_values(dcache_multi_port_design="duplicated_array")))["data"]
    assert (data.duplicates, data.banks) == (2, 1)
    data = dict(instantiate_geometries("DCache", hw2, D))["data"]
    assert (data.duplicates, data.banks) == (1, 2)


def test_geometry_injection_points():
    hw = bundled_config("X10")
    bp = dict(instantiate_geometries("BP", hw, D))
    assert (bp["global"].rows, bp["global"].width) == (512, 8)
    assert (bp["local"].rows, bp["local"].width) == (256, 16)
    p = D.with_values(bp_global_info_factor=3, bp_local_info_factor=5, bp_scalability=True)
    bp2 = dict(instantiate_geometries("BP", hw, p))
    scale = hw.fetch_width / 4
    assert bp2["global"].rows == bp2["chooser"].rows == 512 * 3 * scale
    assert bp2["local"].rows == 256 * 5 * scale
    rf = dict(instantiate_geometries("Regfile", hw, D.with_values(physical_regfile_width=3)))
    assert rf["int_rf"].width == rf["fp_rf"].width == 192
    rob = dict(instantiate_geometries("ROB", hw, D.with_values(rob_entry_width=7)))["rob"]
    assert rob.width == 76 + 7 and rob.rows == hw.rob_entry
    isu = dict(instantiate_geometries("ISU", hw, D.with_values(inst_window_width=9)))
    assert isu["issue_window"].width == 48 + 9
    ic = dict(instantiate_geometries("ICache", hw, D))["data"]
    ic_s = dict(instantiate_geometries("ICache", hw, D.with_values(icache_scalability=True)))["data"]
    assert ic_s.width == ic.width * scale
    assert instantiate_geometries("FUPool", hw, D) == []


def test_icache_hand_example_through_kernel():
    # 110 reads at 4.0 pJ plus 10 writes at 5.0 pJ over 1 us is 0.49 mW
    dyn, _ = kernels.structure_energy_sums(
        [(256, 64, 1, 1, 1, 110, 10)], [0, 1], 0.05, 0.0625, 0.01, 1.0)
    assert dyn[0] == 490.0
    assert dyn[0] * 1e-12 / 1e-6 == pytest.approx(0.49e-3, rel=1e-15)


def test_zero_events_leak_only():
    hw = bundled_config("B3")
    rep = estimate_core(hw, EventCounts.zero())
    for c in rep.components:
        assert c.dynamic_power == 0
        assert c.leakage_power > 0


def test_alu_scale_doubles_fu_energy():
    hw = bundled_config("B3")
    ev = EventCounts(int_alu_ops=12345, cycles=10**5)
    one = estimate_component("FUPool", hw, ev, D, T40)
    two = estimate_component("FUPool", hw, ev, D.with_values(alu_power_scale=2.0), T40)
    assert two.dynamic_power == 2 * one.dynamic_power
    assert two.leakage_power == one.leakage_power


def test_ifu_power_matches_oracle():
    hw = bundled_config("X4")
    ev = synthesize_events(hw, WORKLOAD_PROFILES[3])
    offset, slope = oracles.ifu_power_terms(hw, ev, T40)
    for lf in (0.0, 0.5, 1.0, 1.7):
        got = estimate_component("IFU", hw, ev, D.with_values(ifu_logic_factor=lf), T40).total
        assert got == pytest.approx(float(offset + slope * lf), rel=1e-13)


@pytest.mark.parametrize("config_id", ["B1", "B8", "B15", "X1", "X10"])
def test_default_identity_sample(config_id):
    hw = bundled_config(config_id)
    for profile in WORKLOAD_PROFILES:
        ev = synthesize_events(hw, profile)
        for tech in (SURROGATE_40NM, SURROGATE_28NM):
            assert estimate_core(hw, ev, D, tech) == base_estimate_core(hw, ev, tech)


def test_doubling_cycles_halves_dynamic_power():
    hw = bundled_config("B8")
    ev = synthesize_events(hw, WORKLOAD_PROFILES[0])
    a = estimate_core(hw, ev)
    b = estimate_core(hw, ev.replace(cycles=2 * ev.cycles))
    for ca, cb in zip(a.components, b.components):
        assert cb.dynamic_power == ca.dynamic_power / 2
        assert cb.leakage_power == ca.leakage_power


@settings(max_examples=300)
@given(hardware_configs(), event_counts(), parameter_sets())
def test_total_is_exact_sum_and_deterministic(hw, ev, p):
    rep = estimate_core(hw, ev, p)
    total = 0.0
    for c in rep.components:
        assert c.dynamic_power >= 0 and c.leakage_power >= 0
        # a logic factor of 0 (in range) legitimately removes all logic leakage
        if c.component_id is not ComponentId.OTHER_LOGIC or p["other_logic_factor"] > 0:
            assert c.leakage_power > 0
        total = total + (c.dynamic_power + c.leakage_power)
    assert rep.total_power == total
    assert estimate_core(hw, ev, p) == rep
    assert rep.execution_time == ev.cycles / ev.clock_frequency


@settings(max_examples=1000)
@given(st.sampled_from(["icache", "dcache"]), st.integers(0, 10**9), st.integers(0, 10**9),
       st.floats(0, 32), st.floats(0, 32))
def test_access_scaling_is_affine_before_mapping(cache, hits, misses, coeff, bias):
    cid = ComponentId.ICACHE if cache == "icache" else ComponentId.DCACHE
    ev = EventCounts(**{f"{cache}_hits": hits, f"{cache}_misses": misses})
    p = D.with_values({f"{cache}_access_coefficient": coeff, f"{cache}_access_bias": bias})
    eh, em = effective_cache_counts(cid, ev, p)
    assert eh == coeff * hits + bias
    assert em == coeff * misses + bias
    ops = events_to_ops(cid, ev, p)["cache"]
    assert ops.read == eh + em and ops.write == em


@settings(max_examples=1000)
@given(hardware_configs(), event_counts(), st.sampled_from(EVENT_FIELDS), st.integers(2, 6))
def test_event_scaling_linearity(hw, ev, name, k):
    # scaling one counter scales the ops it feeds by the same factor
    scaled = ev.replace(**{name: ev.counters()[name] * k})
    for cid in EVENT_OWNERS[name]:
        a = events_to_ops(cid, ev, D).ops
        b = events_to_ops(cid, scaled, D).ops
        only = ev.replace(**{n: 0 for n in EVENT_FIELDS if n != name})
        c = events_to_ops(cid, only, D).ops
        for unit in a:
            assert b[unit].read == pytest.approx(a[unit].read + (k - 1) * c[unit].read, rel=1e-12)
            assert b[unit].write == pytest.approx(a[unit].write + (k - 1) * c[unit].write,
                                                  rel=1e-12)
            assert b[unit].fu == pytest.approx(a[unit].fu + (k - 1) * c[unit].fu, rel=1e-12)


@settings(max_examples=1000)
@given(hardware_configs(), event_counts(), parameter_sets())
def test_low_latency_costs_at_least_low_power(hw, ev, p):
    for comp, name, hits in (("ICache", "icache_table_access_type", ev.icache_hits),
                             ("BP", "bp_table_access_type", ev.bp_lookups)):
        lp = estimate_component(comp, hw, ev, p.with_values({name: "low_power"}), T40)
        ll = estimate_component(comp, hw, ev, p.with_values({name: "low_latency"}), T40)
        assert ll.dynamic_power >= lp.dynamic_power
        assert ll.leakage_power == lp.leakage_power
        ways = hw.dcache_icache_way if comp == "ICache" else 4
        if ways >= 2 and hits > 0 and (comp == "BP" or p["icache_access_coefficient"] > 0):
            assert ll.dynamic_power > lp.dynamic_power


@settings(max_examples=500)
@given(st.integers(1, 4096), st.integers(1, 512), st.integers(1, 8), st.integers(1, 8),
       st.integers(1, 64))
def test_array_energy_monotone(rows, width, banks, dups, step):
    g = ArrayGeometry(rows, width, banks=banks, duplicates=dups)
    for op in ("read", "write"):
        e = array_op_energy(g, op, T40)
        assert array_op_energy(ArrayGeometry(rows + step, width, banks=banks, duplicates=dups),
                               op, T40) >= e
        assert array_op_energy(ArrayGeometry(rows, width + step, banks=banks, duplicates=dups),
                               op, T40) >= e
    assert array_leakage(g, T40) == pytest.approx(0.01 * rows * width * banks * dups)


LINEAR = [s for s in REGISTRY.values() if s.linear]


@settings(max_examples=300)
@given(hardware_configs(), event_counts(), parameter_sets(), st.sampled_from(LINEAR),
       st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_output_is_linear_in_linear_parameters(hw, ev, p, s, u, v):
    hi = 8.0 if s.low_open else s.high
    x0, x1, x2 = s.low + u * (hi - s.low) * 0.5, s.low + v * (hi - s.low), hi
    assume(abs(x1 - x0) > 1e-3 * (hi - s.low))
    f = [estimate_core(hw, ev, p.with_values({s.name: x}), T40).total_power for x in (x0, x1, x2)]
    slope01 = (f[1] - f[0]) / (x1 - x0)
    slope02 = (f[2] - f[0]) / (x2 - x0)
    assert math.isclose(slope01, slope02, rel_tol=1e-6, abs_tol=1e-12 * max(map(abs, f)))


@settings(max_examples=1000)
@given(hardware_configs(), event_counts(), st.sampled_from(EVENT_FIELDS), st.integers(1, 10**6))
def test_component_sees_only_its_own_events(hw, ev, name, delta):
    changed = ev.replace(**{name: ev.counters()[name] + delta})
    owners = EVENT_OWNERS[name]
    for cid in COMPONENTS:
        if cid in owners:
            continue
        assert estimate_component(cid, hw, changed, D, T40) == estimate_component(cid, hw, ev, D,
                                                                                   T40)


def test_tech_profile_validation():
    with pytest.raises(ValueError):
        TechProfile("x", 0, 1, 1, 1, 1, 1, 1, 1)


def test_power_report_lookup():
    rep = estimate_core(bundled_config("B1"), EventCounts.zero())
    assert rep.component(ComponentId.ROB).component_id is ComponentId.ROB
    assert set(rep.as_dict()) == {c.value for c in COMPONENTS}
    assert np.isclose(sum(rep.as_dict().values()), rep.total_power)
