"""Run every built-in target at acceptance scale and print one line per check.

Usage: python3 scripts/run_targets.py [--out DIR] [--seed S] [--quick]

``--quick`` skips the two slowest gap computations (t=3 and n=5).
"""

import argparse
import sys
import time
from pathlib import Path

from tdesign.experiments import run
from tdesign.report import ExperimentConfig, emit_table

CONFIGS = [
    ("gap", {"t": 2, "n": 3, "method": "dense"}),
    ("gap", {"t": 3, "n": 3}),
    ("xmatrix", {"t": 2}),
    ("xmatrix", {"t": 3}),
    ("gap", {"t": 2, "n": 4}),
    ("gap", {"t": 2, "n": 5}),
    ("gap", {"t": 2, "n": 3, "model": "uniform"}),
    ("gap", {"t": 2, "n": 4, "model": "uniform"}),
    ("haar-stats", {"d": [2, 4], "t": [1, 2, 3], "samples": 100_000}),
    ("checking", {"unitary": "hadamard", "n": 8, "trials": 1000}),
    ("checking", {"unitary": "fourier", "n": 8, "trials": 1000}),
    ("checking", {"unitary": "sample", "n": 8, "length": 200, "circuits": 5, "trials": 1000}),
    ("kwise", {"unitary": "hadamard", "n": 12, "k": [1, 2, 3], "terms": 20, "samples": 100_000}),
    ("classical", {"task": "distinguish", "unitary": "hadamard", "n": 6, "eps": 0.05, "repetitions": 1000}),
    ("classical", {"task": "sparse", "n": 10, "instances": 100}),
    ("dispersion", {"unitary": "identity", "n": 8}),
    ("dispersion", {"unitary": "hadamard", "n": 8}),
    ("dispersion", {"unitary": "fourier", "n": 8}),
    ("dispersion", {"unitary": "sample", "n": 6, "length": 200, "trials": 200}),
]
SLOW = ({"t": 3, "n": 3}, {"t": 2, "n": 5})


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/targets")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    failed = 0
    for i, (command, params) in enumerate(CONFIGS):
        if args.quick and params in SLOW:
            continue
        cfg = ExperimentConfig(command, params, args.seed, str(out))
        start = time.perf_counter()
        report = run(cfg)
        elapsed = time.perf_counter() - start
        report.write(out / f"{i:02d}-{command}.report.json")
        emit_table(report, out / f"{i:02d}-{command}.table.csv")
        label = " ".join(f"{k}={v}" for k, v in params.items())
        for m in report.results:
            if m.passed is None:
                continue
            failed += not m.passed
            print(f"[{'PASS' if m.passed else 'FAIL'}] {command} {label} :: {m.name} = {m.value:.6g} ({m.relation} {m.target:.6g})")
        print(f"       {command} {label} took {elapsed:.1f} s")
    print(f"{failed} failing checks")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
