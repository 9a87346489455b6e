import hashlib
import logging

import numpy as np
import pytest

from corepower.calibration import decide_tech_array_factor, decide_tech_logic_factor
from corepower.dataio import (
    CONFIG_IDS, FAMILIES, FormatError, SyntheticDatasetSpec, TrainingSample, bundled_config,
    bundled_config_table, characterize, format_design_config, format_event_trace, format_labels,
    generate_synthetic_dataset, parse_design_config, parse_event_trace, parse_labels, read_dataset,
    sample_hidden_parameters, synthesize_events, workload_profile, write_dataset,
)
from corepower.evaluation import mape
from corepower.hardware import COMPONENTS, ComponentId, EventCounts, HardwareConfig
from corepower.model import estimate_core
from corepower.params import Level, default_parameter_set
from corepower.tech import (
    SURROGATE_28NM, SURROGATE_40NM, TechCharacterization, format_tech_characterization,
    load_profile, parse_tech_characterization,
)

TABLE_SHA256 = "e26a9cde142cda55039b8b1690e47441050ee30642b1e43c4fcd19bd348a407f"

B1_FILE = """\
clock_frequency = 1e9

[hardware]
FetchWidth = 4
DecodeWidth = 1
FetchBufferEntry = 5
RobEntry = 16
IntPhyRegister = 36
FpPhyRegister = 36
LdqStqEntry = 4
BranchCount = 6
MemFpIssueWidth = 1
IntIssueWidth = 1
DCacheICacheWay = 2
DTLBEntry = 8
MSHREntry = 2
ICacheFetchBytes = 2
"""


def test_bundled_table_checksum():
    text = ";".join(cid + ":" + ",".join(str(v) for v in hw.as_dict().values())
                    for cid, hw in bundled_config_table())
    assert hashlib.sha256(text.encode()).hexdigest() == TABLE_SHA256
    assert [cid for cid, _ in bundled_config_table()] == list(CONFIG_IDS)


def test_bundled_examples():
    b8 = bundled_config("B8")
    assert (b8.fetch_width, b8.decode_width, b8.rob_entry, b8.int_issue_width) == (8, 3, 96, 3)
    x10 = bundled_config("X10")
    assert (x10.fetch_width, x10.decode_width, x10.rob_entry, x10.int_issue_width) == (8, 5, 112, 6)
    with pytest.raises(KeyError):
        bundled_config("B16")


@pytest.mark.parametrize("family", ["BOOM", "XiangShan"])
def test_family_ends_are_ordered(family):
    small = bundled_config(FAMILIES[family][0]).as_dict()
    large = bundled_config(FAMILIES[family][-1]).as_dict()
    assert all(small[k] <= large[k] for k in small)


def test_parse_design_b1():
    d = parse_design_config(B1_FILE)
    assert d.hw == bundled_config("B1")
    assert d.clock_frequency == 1e9
    assert d.arch_params["icache_table_access_type"] == "low_power"
    assert d.explicit_arch == frozenset()
    back = parse_design_config(format_design_config(d.hw, d.arch_params, d.clock_frequency))
    assert back.hw == d.hw and dict(back.arch_params) == dict(d.arch_params)


def test_parse_design_architecture_section():
    text = B1_FILE + "\n[architecture]\nicache_table_access_type = Low Latency\nbp_scalability = yes\n"
    d = parse_design_config(text)
    assert d.arch_params["icache_table_access_type"] == "low_latency"
    assert d.arch_params["bp_scalability"] is True
    assert d.explicit_arch == {"icache_table_access_type", "bp_scalability"}


@pytest.mark.parametrize("edit, message", [
    (lambda t: t.replace("FetchWidth = 4", "FetchWidth = 0"), r"line 4: FetchWidth"),
    (lambda t: t.replace("RobEntry = 16\n", ""), "RobEntry"),
    (lambda t: t + "Bogus = 3\n", "line 18: unknown hardware key Bogus"),
    (lambda t: t.replace("DecodeWidth = 1", "DecodeWidth = 6"), "line 5: DecodeWidth"),
    (lambda t: t.replace("clock_frequency = 1e9", ""), "clock_frequency"),
    (lambda t: t + "[architecture]\nfpu_power_scale = 2\n", "unknown architecture key"),
    (lambda t: t + "[architecture]\nicache_table_access_type = speedy\n", "line 19"),
    (lambda t: t.replace("MSHREntry = 2", "MSHREntry = two"), "MSHREntry"),
])
def test_parse_design_errors(edit, message):
    with pytest.raises(FormatError, match=message):
        parse_design_config(edit(B1_FILE))


def test_parse_event_trace_exact():
    ev = parse_event_trace(
        "icache_hits = 100\nicache_misses = 10\ncycles = 1000000\nclock_frequency = 1e9\n")
    assert ev.icache_hits == 100 and ev.icache_misses == 10
    assert ev.cycles == 10**6 and ev.clock_frequency == 1e9
    assert ev.execution_time == 1e-3


def test_missing_counter_defaults_to_zero_with_warning(caplog):
    full = format_event_trace(EventCounts(fpu_ops=5, loads=3, cycles=10))
    text = "\n".join(ln for ln in full.splitlines() if not ln.startswith("fpu_ops"))
    with caplog.at_level(logging.WARNING):
        ev = parse_event_trace(text)
    assert ev.fpu_ops == 0 and ev.loads == 3
    assert "fpu_ops" in caplog.text


@pytest.mark.parametrize("text, message", [
    ("cycles = 0\nclock_frequency = 1e9\n", "cycles"),
    ("loads = -1\ncycles = 5\nclock_frequency = 1e9\n", "negative"),
    ("cycles = 5\n", "clock_frequency"),
    ("jumps = 4\ncycles = 5\nclock_frequency = 1e9\n", "unknown event counter jumps"),
    ("loads = x\ncycles = 5\nclock_frequency = 1e9\n", "line 1"),
])
def test_event_trace_errors(text, message):
    with pytest.raises(FormatError, match=message):
        parse_event_trace(text)


def test_event_trace_round_trip():
    ev = synthesize_events(bundled_config("X3"), workload_profile("spmv"))
    assert parse_event_trace(format_event_trace(ev)) == ev


def test_labels_round_trip_and_checks():
    comps = {c: 0.01 * (i + 1) for i, c in enumerate(COMPONENTS)}
    total = sum(comps.values())
    assert parse_labels(format_labels(comps, total)) == (comps, total)
    with pytest.raises(FormatError, match="1%"):
        parse_labels(format_labels(comps, total * 1.05))
    text = "\n".join(ln for ln in format_labels(comps, total).splitlines() if "ROB" not in ln)
    with pytest.raises(FormatError, match="ROB"):
        parse_labels(text)
    with pytest.raises(FormatError, match="> 0"):
        parse_labels(format_labels({**comps, ComponentId.ISU: 0.0}, total))


def test_training_sample_validates_labels():
    hw = bundled_config("B1")
    ev = EventCounts.zero()
    comps = {c: 1.0 for c in COMPONENTS}
    with pytest.raises(FormatError):
        TrainingSample("B1", "w", hw, {}, ev, comps, 20.0)
    with pytest.raises(ValueError):
        TrainingSample("B1", "w", hw, {}, ev, {**comps, ComponentId.BP: -1.0}, 10.0)


def test_synthesize_events_deterministic_and_valid():
    for cid, hw in bundled_config_table():
        for name in ("dhrystone", "vvadd"):
            a = synthesize_events(hw, workload_profile(name))
            assert a == synthesize_events(hw, workload_profile(name))
            assert all(float(v).is_integer() for v in a.counters().values())
            assert a.icache_hits >= 0 and a.dcache_hits >= 0


def test_noise_free_dataset_is_self_consistent():
    hidden = sample_hidden_parameters(11)
    samples = generate_synthetic_dataset(SyntheticDatasetSpec("XiangShan", hidden))
    assert len(samples) == 10 * 8
    preds = [estimate_core(s.hw, s.events, hidden).total_power for s in samples]
    assert mape(preds, [s.total_label for s in samples]) == 0.0


def test_dataset_is_reproducible_from_seed():
    spec = SyntheticDatasetSpec("BOOM", sample_hidden_parameters(3), noise_rel_stddev=0.05,
                                rng_seed=9)
    assert generate_synthetic_dataset(spec) == generate_synthetic_dataset(spec)
    other = SyntheticDatasetSpec("BOOM", spec.hidden_params, noise_rel_stddev=0.05, rng_seed=10)
    assert generate_synthetic_dataset(other) != generate_synthetic_dataset(spec)


def test_noise_level_statistics():
    hidden = default_parameter_set()
    clean = generate_synthetic_dataset(SyntheticDatasetSpec("all", hidden))
    noisy = generate_synthetic_dataset(SyntheticDatasetSpec("all", hidden, noise_rel_stddev=0.05,
                                                            rng_seed=1))
    rel = np.array([n.component_labels[c] / k.component_labels[c] - 1
                    for k, n in zip(clean, noisy) for c in COMPONENTS])
    assert rel.size >= 1000
    assert abs(rel.std() - 0.05) < 0.005
    assert abs(rel.mean()) < 0.005


def test_synthetic_spec_validation():
    with pytest.raises(ValueError):
        SyntheticDatasetSpec("BOOM", default_parameter_set(), noise_rel_stddev=-0.1)
    bad = default_parameter_set().with_values(fpu_power_scale=40.0)
    with pytest.raises(ValueError, match="fpu_power_scale"):
        SyntheticDatasetSpec("BOOM", bad)


def test_hidden_parameter_sampling():
    a = sample_hidden_parameters(4)
    assert a == sample_hidden_parameters(4)
    only_tech = sample_hidden_parameters(4, levels=(Level.TECHNOLOGY,))
    d = default_parameter_set()
    assert only_tech.level_values(Level.IMPLEMENTATION) == d.level_values(Level.IMPLEMENTATION)
    assert 0.5 <= only_tech["tech_array_factor"] <= 2.0


def test_dataset_directory_round_trip(tmp_path):
    hidden = sample_hidden_parameters(5)
    samples = generate_synthetic_dataset(
        SyntheticDatasetSpec("BOOM", hidden, config_ids=("B2", "B9")))
    char = characterize(SURROGATE_40NM, 1.5, 0.8)
    write_dataset(tmp_path, samples, char)
    back = read_dataset(tmp_path)
    key = lambda s: (s.config_id, s.workload)  # noqa: E731
    assert back == sorted(samples, key=key)
    assert parse_tech_characterization((tmp_path / "tech.char").read_text()) == char
    assert read_dataset(tmp_path, config_ids=["B9"]) == sorted(
        (s for s in samples if s.config_id == "B9"), key=key)
    with pytest.raises(FormatError, match="B3"):
        read_dataset(tmp_path, config_ids=["B3"])
    override = read_dataset(tmp_path, arch_overrides={"bp_scalability": True})
    assert all(s.arch_params["bp_scalability"] is True for s in override)
    (tmp_path / "B2" / "labels" / "qsort.labels").unlink()
    with pytest.raises(FormatError, match="labels"):
        read_dataset(tmp_path)


def test_characterize_recovers_factors():
    for tech in (SURROGATE_40NM, SURROGATE_28NM):
        char = characterize(tech, 1.75, 0.625, dff_reference_freq=2e9)
        assert decide_tech_array_factor(char, tech) == pytest.approx(1.75, rel=1e-15)
        assert decide_tech_logic_factor(char, tech) == pytest.approx(0.625, rel=1e-15)


def test_tech_characterization_file():
    text = ("node_name = lib28\nsram_rows = 256\nsram_width = 64\nsram_read_energy_pj = 2.0\n"
            "sram_write_energy_pj = 3.0\ndff_worst_case_power_uw = 1.2\n")
    char = parse_tech_characterization(text)
    assert char.sram_shape == (256, 64)
    assert char.dff_reference_freq is None
    assert parse_tech_characterization(format_tech_characterization(char)) == char
    with pytest.raises(ValueError, match="sram_width"):
        parse_tech_characterization(text.replace("sram_width = 64\n", ""))
    with pytest.raises(ValueError, match="unknown key"):
        parse_tech_characterization(text + "vdd = 0.9\n")
    with pytest.raises(ValueError):
        TechCharacterization("x", 256, 64, -1.0, 1.0, 1.0)


def test_tech_profile_loading():
    assert load_profile("surrogate-28nm") is SURROGATE_28NM
    text = "\n".join(f"{k} = {v}" for k, v in vars(SURROGATE_40NM).items())
    assert load_profile(text) == SURROGATE_40NM
    with pytest.raises(ValueError, match="missing"):
        load_profile("node_name = x\ne_bit_read = 1\n")


def test_hardware_validation():
    hw = bundled_config("B1")
    with pytest.raises(ValueError):
        HardwareConfig(**{**vars(hw), "rob_entry": 0})
