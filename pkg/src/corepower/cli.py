"""Command-line front end.

Exit status is 0 on success, 1 on any input or validation error and 2 when
calibration diverges. Errors are reported as one line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .calibration import (
    CalibrationConfig, CalibrationDivergence, CalibrationError, calibrate_all,
    decide_tech_parameters,
)
from .dataio import (
    FormatError, _entries, parse_design_config, parse_event_trace, read_dataset,
    write_text_atomic,
)
from .evaluation import (
    ScenarioKind, Variant, evaluate_baseline, evaluate_variant, metrics_csv, points_csv,
    split_scenario,
)
from .model import estimate_core
from .params import (
    Level, ParameterFileError, Provenance, arch_from_mapping, default_parameter_set,
    parse_parameter_file, serialize,
)
from .tech import PROFILES, load_profile, parse_tech_characterization

log = logging.getLogger("corepower")

ESTIMATE_BUDGET_S = 15.0
CALIBRATE_BUDGET_S = 600.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument errors exit 1 like other input errors; 2 is reserved for divergence."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _with_file(what: str, path: str, parse):
    try:
        return parse(_read(path))
    except (FormatError, ParameterFileError, ValueError, KeyError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        raise UsageError(f"{what} {path}: {msg}") from None


def _tech(arg: str):
    if arg in PROFILES:
        return PROFILES[arg]
    if not Path(arg).exists():
        raise UsageError(f"unknown tech profile {arg!r}; built-in profiles: {', '.join(PROFILES)}")
    return _with_file("tech profile", arg, load_profile)


def _arch_overrides(path: str | None) -> dict:
    if path is None:
        return {}

    def parse(text):
        return arch_from_mapping((k, v) for _line, _sec, k, v in _entries(text))

    return _with_file("architecture overrides", path, parse)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_estimate(args) -> int:
    design = _with_file("design", args.design, parse_design_config)
    events = _with_file("event trace", args.events, parse_event_trace)
    params = (_with_file("parameters", args.params, parse_parameter_file)
              if args.params else default_parameter_set())
    # values written in the design file are the user's architecture choices
    explicit = {n: design.arch_params[n] for n in design.explicit_arch}
    if explicit:
        params = params.with_values(explicit).with_provenance(Level.ARCHITECTURE, Provenance.USER)
    if events.clock_frequency != design.clock_frequency:
        log.warning("trace clock %g Hz differs from design clock %g Hz; using the trace clock",
                    events.clock_frequency, design.clock_frequency)
    tech = _tech(args.tech)
    start = time.perf_counter()
    report = estimate_core(design.hw, events, params, tech)
    elapsed = time.perf_counter() - start
    if elapsed > ESTIMATE_BUDGET_S:
        log.warning("estimation took %.1f s (budget %.0f s)", elapsed, ESTIMATE_BUDGET_S)

    out = sys.stdout
    out.write(f"{'component':<12} {'dynamic_w':>14} {'leakage_w':>14} {'total_w':>14}\n")
    for c in report.components:
        out.write(f"{c.component_id.value:<12} {c.dynamic_power:>14.6g} "
                  f"{c.leakage_power:>14.6g} {c.total:>14.6g}\n")
    out.write(f"{'total':<12} {'':>14} {'':>14} {report.total_power:>14.6g}\n")
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["component", "dynamic_w", "leakage_w", "total_w"])
        for c in report.components:
            w.writerow([c.component_id.value, repr(c.dynamic_power), repr(c.leakage_power),
                        repr(c.total)])
        w.writerow(["total", "", "", repr(report.total_power)])
        write_text_atomic(args.csv, buf.getvalue())
    return 0


def cmd_tech_calibrate(args) -> int:
    char = _with_file("tech characterization", args.tech_char, parse_tech_characterization)
    tech = _tech(args.tech)
    base = (_with_file("parameters", args.params, parse_parameter_file)
            if args.params else default_parameter_set())
    try:
        factors = decide_tech_parameters(char, tech)
    except CalibrationError as exc:
        raise UsageError(str(exc)) from None
    pset = base.with_values(factors).with_provenance(Level.TECHNOLOGY, Provenance.CALIBRATED)
    write_text_atomic(args.out, serialize(pset))
    print(f"tech_logic_factor = {factors['tech_logic_factor']!r}")
    print(f"tech_array_factor = {factors['tech_array_factor']!r}")
    return 0


def _calibration_config(args) -> CalibrationConfig:
    kw = {"rng_seed": args.seed}
    if args.lr is not None:
        kw["learning_rate"] = args.lr
    if args.delta is not None:
        kw["delta"] = args.delta
    if args.iters is not None:
        kw["max_iterations"] = args.iters
    if args.patience is not None:
        kw["early_stop_patience"] = args.patience
    if args.fixed_lr:
        kw["adaptive_lr"] = False
    try:
        return CalibrationConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_samples(data_dir: str, arch: dict):
    try:
        samples = read_dataset(data_dir, arch_overrides=arch)
    except (FormatError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if not samples:
        raise UsageError(f"no training samples found under {data_dir}")
    return samples


def _default_char(args, data_dir: str):
    path = args.tech_char
    if path is None and (Path(data_dir) / "tech.char").exists():
        path = str(Path(data_dir) / "tech.char")
    if path is None:
        return None
    return _with_file("tech characterization", path, parse_tech_characterization)


def cmd_calibrate(args) -> int:
    arch = _arch_overrides(args.arch)
    samples = _load_samples(args.train, arch)
    char = _default_char(args, args.train)
    if char is None:
        log.warning("no tech characterization given; technology factors stay at defaults")
    config = _calibration_config(args)
    tech = _tech(args.tech)
    fits = {}
    start = time.perf_counter()
    try:
        pset = calibrate_all(samples, None, char, config, tech, fits=fits)
    except CalibrationError as exc:
        raise UsageError(str(exc)) from None
    elapsed = time.perf_counter() - start
    if elapsed > CALIBRATE_BUDGET_S:
        log.warning("calibration took %.0f s (budget %.0f s)", elapsed, CALIBRATE_BUDGET_S)
    write_text_atomic(args.out, serialize(pset))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["component", "step", "loss_mw2"])
    for cid, fit in fits.items():
        for step, loss in enumerate(fit.history):
            w.writerow([cid.value, step, repr(loss)])
    log_path = args.loss_log or f"{args.out}.loss.csv"
    write_text_atomic(log_path, buf.getvalue())
    for cid, fit in fits.items():
        print(f"{cid.value:<12} loss {fit.initial_loss:.6g} -> {fit.final_loss:.6g} mW^2 "
              f"({fit.iterations} iterations)")
    return 0


def cmd_evaluate(args) -> int:
    try:
        scenario = split_scenario(args.family, args.scenario)
        variants = list(Variant) if args.variant == "all" else [Variant.parse(args.variant)]
    except (KeyError, ValueError) as exc:
        raise UsageError(exc.args[0] if exc.args else str(exc)) from None
    samples = _load_samples(args.data, {})
    char = _default_char(args, args.data)
    tech = _tech(args.tech)
    samples = [s for s in samples
               if s.config_id in scenario.train_config_ids + scenario.test_config_ids]
    config = _calibration_config(args)
    results = []
    try:
        for v in variants:
            results.append(evaluate_variant(v, scenario, samples, config, char, tech))
        if args.baselines:
            for method in ("analytical", "analytical-scaled"):
                results.append(evaluate_baseline(method, scenario, samples, tech))
    except (CalibrationError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    write_text_atomic(args.out, metrics_csv(results))
    if args.points:
        write_text_atomic(args.points, points_csv(results[0].points))
    for r in results:
        print(f"{r.family} {r.scenario.value} {r.variant} {r.method}: "
              f"MAPE {r.metrics.mape:.3f}% R {r.metrics.pearson_r:.4f} (n={r.metrics.n_points})")
    return 0


def cmd_transfer(args) -> int:
    from .evaluation import transfer_tech

    pset = _with_file("parameters", args.params, parse_parameter_file)
    char = _with_file("tech characterization", args.tech_char, parse_tech_characterization)
    tech = _tech(args.tech)
    try:
        out = transfer_tech(pset, char, tech)
    except (CalibrationError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    write_text_atomic(args.out, serialize(out))
    print(f"tech_logic_factor = {out['tech_logic_factor']!r}")
    print(f"tech_array_factor = {out['tech_array_factor']!r}")
    return 0


def cmd_synth(args) -> int:
    from .dataio import (
        SyntheticDatasetSpec, characterize, generate_synthetic_dataset, sample_hidden_parameters,
        write_dataset,
    )

    tech = _tech(args.tech)
    if args.hidden:
        hidden = _with_file("parameters", args.hidden, parse_parameter_file)
    else:
        hidden = sample_hidden_parameters(args.seed)
    try:
        spec = SyntheticDatasetSpec(args.family, hidden, noise_rel_stddev=args.noise,
                                    rng_seed=args.seed, tech=tech)
        samples = generate_synthetic_dataset(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    char = characterize(tech, hidden["tech_array_factor"], hidden["tech_logic_factor"],
                        node_name=f"{tech.node_name}-target")
    write_dataset(args.out, samples, char)
    write_text_atomic(Path(args.out) / "hidden.params", serialize(hidden))
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def _add_tech(p):
    p.add_argument("--tech", default="surrogate-40nm", metavar="PROFILE",
                   help="built-in tech profile name (%s) or a profile file; default %%(default)s"
                   % ", ".join(PROFILES))


def _add_calibration_flags(p):
    p.add_argument("--seed", type=int, default=0, help="random seed recorded with the run")
    p.add_argument("--lr", type=float, help="learning rate in normalized parameter units")
    p.add_argument("--delta", type=float,
                   help="finite-difference step for every parameter "
                        "(default: 1e-3 of the range width for nonlinear parameters, "
                        "1/4 of it for linear ones)")
    p.add_argument("--iters", type=int, help="maximum descent iterations per component")
    p.add_argument("--patience", type=int,
                   help="stop after this many iterations without relative improvement")
    p.add_argument("--fixed-lr", action="store_true",
                   help="disable step-size adaptation and use --lr as is")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="corepower",
        description="Analytical CPU core power model with calibrated parameter injection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("estimate", help="estimate per-component power for one design and trace")
    p.add_argument("--design", required=True, help="design configuration file")
    p.add_argument("--events", required=True, help="event trace file")
    p.add_argument("--params", help="parameter file (default: all parameters at defaults)")
    _add_tech(p)
    p.add_argument("--csv", help="also write the report as CSV to this path")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("tech-calibrate", help="decide technology factors from a library "
                                              "characterization")
    p.add_argument("--tech-char", required=True, help="tech characterization file")
    _add_tech(p)
    p.add_argument("--params", help="parameter file to update (default: defaults)")
    p.add_argument("--out", required=True, help="output parameter file")
    p.set_defaults(func=cmd_tech_calibrate)

    p = sub.add_parser("calibrate", help="decide all parameters from a training dataset")
    p.add_argument("--train", required=True, help="training dataset directory")
    p.add_argument("--arch", help="file of 'name = value' architecture-level overrides")
    p.add_argument("--tech-char",
                   help="tech characterization file (default: <train>/tech.char if present)")
    p.add_argument("--out", required=True, help="output parameter file")
    p.add_argument("--loss-log", help="loss history CSV (default: <out>.loss.csv)")
    _add_tech(p)
    _add_calibration_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="calibrate on a scenario's training split and score "
                                        "its test split")
    p.add_argument("--family", required=True, help="boom or xiangshan")
    p.add_argument("--scenario", required=True, choices=[k.value.lower() for k in ScenarioKind],
                   help="training split")
    p.add_argument("--variant", default="full",
                   choices=[v.value for v in Variant] + ["all"],
                   help="ablation variant, or all four; default %(default)s")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--tech-char",
                   help="tech characterization file (default: <data>/tech.char if present)")
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.add_argument("--points", help="per-point CSV path for the first variant")
    p.add_argument("--baselines", action="store_true",
                   help="add rows for the uncalibrated and uniformly scaled analytical model")
    _add_tech(p)
    _add_calibration_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("transfer", help="re-decide technology factors for another library")
    p.add_argument("--params", required=True, help="calibrated parameter file")
    p.add_argument("--tech-char", required=True, help="target tech characterization file")
    _add_tech(p)
    p.add_argument("--out", required=True, help="output parameter file")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("synth", help="write a synthetic labelled dataset")
    p.add_argument("--family", required=True, help="boom, xiangshan or all")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=0, help="seed for hidden values and noise")
    p.add_argument("--noise", type=float, default=0.0,
                   help="relative std-dev of multiplicative label noise; default %(default)s")
    p.add_argument("--hidden", help="parameter file with the hidden values "
                                    "(default: drawn from --seed)")
    _add_tech(p)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="corepower: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CalibrationDivergence as exc:
        print(f"corepower: calibration diverged: {exc}", file=sys.stderr)
        return 2
    except (UsageError, FormatError, ParameterFileError, OSError) as exc:
        print(f"corepower: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
