import re

import pytest

from corepower.cli import build_parser, main
from corepower.dataio import (
    bundled_config, format_design_config, format_event_trace, read_dataset,
)
from corepower.evaluation import evaluate_variant, read_metrics_csv, split_scenario
from corepower.hardware import EventCounts
from corepower.params import default_parameter_set, parse_parameter_file, serialize
from corepower.tech import SURROGATE_40NM, format_tech_characterization, parse_tech_characterization
from corepower.dataio import characterize


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def boom_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("boom")
    assert main(["synth", "--family", "boom", "--out", str(d), "--seed", "3"]) == 0
    return d


@pytest.fixture
def b1_files(tmp_path):
    design = tmp_path / "b1.cfg"
    design.write_text(format_design_config(bundled_config("B1"), clock_frequency=1e9))
    return design, tmp_path


def test_estimate_zero_events(capsys, b1_files):
    design, tmp = b1_files
    trace = tmp / "zero.trace"
    trace.write_text(format_event_trace(EventCounts.zero(cycles=1000)))
    code, out, _ = run(capsys, "estimate", "--design", design, "--events", trace,
                       "--csv", tmp / "r.csv")
    assert code == 0
    rows = (tmp / "r.csv").read_text().splitlines()
    assert rows[0] == "component,dynamic_w,leakage_w,total_w" and len(rows) == 13
    for row in rows[1:-1]:
        _, dyn, leak, _ = row.split(",")
        assert float(dyn) == 0.0 and float(leak) > 0
    assert out.splitlines()[-1].startswith("total")


def test_calibrate_then_estimate_reproduces_label(capsys, boom_dir, tmp_path):
    train = tmp_path / "train"
    samples = [s for s in read_dataset(boom_dir) if s.config_id in ("B1", "B8", "B15")]
    from corepower.dataio import write_dataset
    write_dataset(train, samples, parse_tech_characterization(
        (boom_dir / "tech.char").read_text()))
    out_params = tmp_path / "cal.params"
    code, out, _ = run(capsys, "calibrate", "--train", train, "--out", out_params)
    assert code == 0 and "FUPool" in out
    log = (tmp_path / "cal.params.loss.csv").read_text().splitlines()
    assert log[0] == "component,step,loss_mw2"
    pset = parse_parameter_file(out_params.read_text())
    assert pset.provenance
    s = samples[0]
    d = train / s.config_id
    code, out, _ = run(capsys, "estimate", "--design", d / "design.cfg",
                       "--events", d / "events" / f"{s.workload}.trace", "--params", out_params,
                       "--csv", tmp_path / "est.csv")
    assert code == 0
    total = float((tmp_path / "est.csv").read_text().splitlines()[-1].split(",")[-1])
    assert total == pytest.approx(s.total_label, rel=0.02)


def test_evaluate_matches_direct_call(capsys, boom_dir, tmp_path):
    out_csv = tmp_path / "m.csv"
    code, _, _ = run(capsys, "evaluate", "--family", "boom", "--scenario", "balance",
                     "--variant", "full", "--data", boom_dir, "--out", out_csv,
                     "--iters", "40", "--points", tmp_path / "p.csv")
    assert code == 0
    row = read_metrics_csv(out_csv.read_text())[0]
    from corepower.calibration import CalibrationConfig
    char = parse_tech_characterization((boom_dir / "tech.char").read_text())
    direct = evaluate_variant("full", split_scenario("BOOM", "balance"), read_dataset(boom_dir),
                              CalibrationConfig(max_iterations=40), char)
    assert row["mape"] == direct.metrics.mape
    assert row["pearson_r"] == direct.metrics.pearson_r
    assert len((tmp_path / "p.csv").read_text().splitlines()) == 1 + 12 * 8


def test_evaluate_baselines_rows(capsys, boom_dir, tmp_path):
    out_csv = tmp_path / "m.csv"
    code, _, _ = run(capsys, "evaluate", "--family", "boom", "--scenario", "small",
                     "--variant", "wo-impl", "--data", boom_dir, "--out", out_csv, "--baselines")
    assert code == 0
    methods = [r["method"] for r in read_metrics_csv(out_csv.read_text())]
    assert methods == ["injected", "analytical", "analytical-scaled"]


def test_tech_calibrate_and_transfer(capsys, tmp_path):
    char = tmp_path / "t.char"
    char.write_text(format_tech_characterization(characterize(SURROGATE_40NM, 2.0, 0.5)))
    code, out, _ = run(capsys, "tech-calibrate", "--tech-char", char, "--out", tmp_path / "t.params")
    assert code == 0 and "tech_array_factor = 2.0" in out
    # transfer refuses a set whose implementation values were never calibrated
    code, _, err = run(capsys, "transfer", "--params", tmp_path / "t.params", "--tech-char", char,
                       "--out", tmp_path / "x.params")
    assert code == 1 and "not calibrated" in err
    from corepower.params import Level, Provenance
    cal = default_parameter_set().with_values(fpu_power_scale=3.0).with_provenance(
        Level.IMPLEMENTATION, Provenance.CALIBRATED)
    (tmp_path / "cal.params").write_text(serialize(cal))
    code, _, _ = run(capsys, "transfer", "--params", tmp_path / "cal.params", "--tech-char", char,
                     "--out", tmp_path / "x.params")
    assert code == 0
    got = parse_parameter_file((tmp_path / "x.params").read_text())
    assert got["tech_array_factor"] == 2.0 and got["tech_logic_factor"] == 0.5
    assert got["fpu_power_scale"] == 3.0


@pytest.mark.parametrize("argv, fragment", [
    (["estimate", "--design", "missing.cfg", "--events", "x"], "cannot read"),
    (["evaluate", "--family", "rocket", "--scenario", "balance", "--data", ".", "--out", "o"],
     "rocket"),
    (["frobnicate"], "invalid choice"),
    (["calibrate", "--train", "no-such-dir", "--out", "o"], "does not exist"),
])
def test_errors_exit_1_with_one_line(capsys, argv, fragment, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "x").write_text("cycles = 1\nclock_frequency = 1e9\n")
    with pytest.raises(SystemExit) if argv[0] == "frobnicate" else _nullcontext():
        code = main(argv)
        assert code == 1
    err = capsys.readouterr().err
    assert fragment in err
    assert len(err.strip().splitlines()) == 1


class _nullcontext:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def test_bad_design_names_key_and_line(capsys, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text(format_design_config(bundled_config("B1"), clock_frequency=1e9)
                   .replace("FetchWidth = 4", "FetchWidth = 0"))
    trace = tmp_path / "t.trace"
    trace.write_text(format_event_trace(EventCounts.zero(cycles=10)))
    code, _, err = run(capsys, "estimate", "--design", bad, "--events", trace)
    assert code == 1 and re.search(r"line \d+: FetchWidth", err)


def test_divergence_exits_2(capsys, tmp_path):
    hidden = tmp_path / "h.params"
    hidden.write_text(serialize(default_parameter_set().with_values(fpu_power_scale=1.0001)))
    data = tmp_path / "d"
    assert main(["synth", "--family", "boom", "--out", str(data), "--hidden", str(hidden)]) == 0
    capsys.readouterr()
    code, _, err = run(capsys, "calibrate", "--train", data, "--out", tmp_path / "o.params",
                       "--lr", "1e9", "--fixed-lr")
    assert code == 2 and "diverged" in err


def _flags(parser):
    return {opt for a in parser._actions for opt in a.option_strings}


def test_help_documents_every_flag(capsys):
    parser = build_parser()
    sub = next(a for a in parser._actions if a.__class__.__name__ == "_SubParsersAction")
    assert set(sub.choices) >= {"estimate", "tech-calibrate", "calibrate", "evaluate", "transfer"}
    for name, p in sub.choices.items():
        with pytest.raises(SystemExit) as exc:
            main([name, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for flag in _flags(p):
            assert flag in text, (name, flag)
        for a in p._actions:
            if a.option_strings and a.option_strings[0] != "-h":
                assert a.help, (name, a.option_strings)


def test_reruns_are_byte_identical(capsys, boom_dir, tmp_path):
    outputs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        assert main(["calibrate", "--train", str(boom_dir), "--out", str(out), "--iters", "30"]) == 0
        assert main(["evaluate", "--family", "boom", "--scenario", "large", "--data", str(boom_dir),
                     "--out", str(out) + ".csv", "--iters", "30"]) == 0
        outputs.append((out.read_bytes(), (tmp_path / f"run{i}.loss.csv").read_bytes(),
                        (tmp_path / f"run{i}.csv").read_bytes()))
    assert outputs[0] == outputs[1]
    capsys.readouterr()


def test_synth_is_reproducible(tmp_path):
    for d in ("a", "b"):
        assert main(["synth", "--family", "xiangshan", "--out", str(tmp_path / d), "--seed", "5",
                     "--noise", "0.05"]) == 0
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert len(files) == 10 * 8 * 2 + 10 + 2
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
