"""Compare the compiled and pure-Python structure kernels.

Run from the repository root after an editable install:

    python3 benchmarks/bench_kernels.py [--repeat N]

Three timings per backend: the raw kernel on a large random table, one
component batch over the 25x8 grid, and a whole-core calibration on the
BOOM Balance training split.
"""

import argparse
import timeit

import numpy as np

from corepower import kernels, model
from corepower.calibration import calibrate_all
from corepower.dataio import (
    WORKLOAD_PROFILES, SyntheticDatasetSpec, bundled_config_table, generate_synthetic_dataset,
    sample_hidden_parameters, synthesize_events,
)
from corepower.evaluation import split_samples, split_scenario
from corepower.params import default_parameter_set
from corepower.tech import SURROGATE_40NM


def random_table(rows, segments, seed=0):
    rng = np.random.default_rng(seed)
    table = np.column_stack([
        rng.integers(1, 4096, rows), rng.integers(1, 512, rows), rng.integers(1, 8, rows),
        rng.integers(1, 4, rows), rng.integers(1, 8, rows),
        rng.uniform(0, 1e7, rows), rng.uniform(0, 1e7, rows),
    ]).astype(np.float64)
    offsets = np.linspace(0, rows, segments + 1).astype(np.intp)
    return table, offsets


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5, help="timing repetitions; best is reported")
    args = ap.parse_args()

    backends = {"python": kernels.python_impl()}
    if kernels.compiled_impl() is not None:
        backends["cython"] = kernels.compiled_impl()
    else:
        print("compiled extension not built; timing the Python backend only")

    table, offsets = random_table(200_000, 1000)
    hws, evs = [], []
    for _, hw in bundled_config_table():
        for prof in WORKLOAD_PROFILES:
            hws.append(hw)
            evs.append(synthesize_events(hw, prof))
    d = default_parameter_set()
    samples = generate_synthetic_dataset(SyntheticDatasetSpec("BOOM", sample_hidden_parameters(1)))
    train, _ = split_samples(split_scenario("BOOM", "balance"), samples)

    print(f"{'case':<34} " + " ".join(f"{b:>12}" for b in backends))
    rows = {}
    for name, impl in backends.items():
        rows.setdefault("kernel, 200k rows", []).append(best_of(
            lambda: kernels.structure_energy_sums(table, offsets, 0.05, 0.05, 0.01, 1.0, impl=impl),
            args.repeat, 3))
        rows.setdefault("ICache batch, 200 samples", []).append(best_of(
            lambda: model.estimate_component_batch("ICache", hws, evs, d, SURROGATE_40NM,
                                                   kernel=impl),
            args.repeat, 20))
        original = kernels._impl
        kernels._impl = impl
        try:
            rows.setdefault("calibrate_all, BOOM Balance", []).append(best_of(
                lambda: calibrate_all(train), 1, 1))
        finally:
            kernels._impl = original
    for case, times in rows.items():
        print(f"{case:<34} " + " ".join(f"{t * 1e3:>10.2f}ms" for t in times))


if __name__ == "__main__":
    main()
