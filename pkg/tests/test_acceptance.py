"""Acceptance criteria, one test each, at their stated tolerances.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (visible without -s).
"""

import math
import time

import numpy as np
import pytest

from tdesign.checking import acceptance_samples
from tdesign.circuits import (
    compile_circuit,
    dispersiveness,
    dispersiveness_tail_experiment,
    fourier_unitary,
    hadamard_transform,
    sample_circuit,
)
from tdesign.classical import (
    OracleStream,
    hoeffding_samples,
    independent_query_distinguish,
    kwise_suite,
    sign_correlation,
)
from tdesign.experiments import run
from tdesign.linalg import RandomSource
from tdesign.moments import lambda2_moment, x_matrix
from tdesign.moments.haar import haar_power_means, symmetric_moment
from tdesign.report import ExperimentConfig


@pytest.fixture
def verdict(capsys):
    def _report(number: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return _report


def test_criterion_01_block_gap_t2(verdict):
    start = time.perf_counter()
    cert = lambda2_moment(2, 3, method="dense")
    elapsed = time.perf_counter() - start
    err = abs(cert.lambda2 - 0.7)
    verdict(1, err <= 1e-9 and elapsed <= 30, f"lambda2(M_2,3) = {cert.lambda2:.12f} (err {err:.1e}), dense, {elapsed:.1f} s")


def test_criterion_02_block_gap_t3(verdict):
    start = time.perf_counter()
    cert = lambda2_moment(3, 3, method="deflated-power")
    elapsed = time.perf_counter() - start
    err = abs(cert.lambda2 - 0.7)
    verdict(
        2,
        err <= 1e-6 and elapsed <= 600,
        f"lambda2(M_3,3) = {cert.lambda2:.10f} (err {err:.1e}), {cert.iterations} iterations, {elapsed:.1f} s",
    )


def test_criterion_03_x_matrix(verdict):
    start = time.perf_counter()
    r2, r3 = x_matrix(2), x_matrix(3)
    elapsed = time.perf_counter() - start
    e2, e3 = abs(r2.second_largest - 1.4), abs(r3.second_largest - 1.4)
    ok = r2.matrix.shape == (8, 8) and r3.matrix.shape == (125, 125) and max(e2, e3) <= 1e-10 and elapsed <= 1
    verdict(3, ok, f"second eigenvalue t=2: {r2.second_largest:.12f}, t=3: {r3.second_largest:.12f}, {elapsed:.2f} s")


def test_criterion_04_circle_gaps(verdict):
    start = time.perf_counter()
    block = lambda2_moment(2, 3, method="deflated-power").lambda2
    parts, ok = [], True
    for n in (4, 5):
        lam = lambda2_moment(2, n).lambda2
        gap_bound, block_bound = 1 - 1 / (5 * n), 1 - (3 - 4 * block) / n
        ok &= lam <= gap_bound and lam <= block_bound + 1e-9
        parts.append(f"n={n}: {lam:.8f} <= {gap_bound:.4f}, <= {block_bound:.6f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 1200
    verdict(4, ok, "; ".join(parts) + f"; {elapsed:.1f} s")


def test_criterion_05_uniform_gaps(verdict):
    start = time.perf_counter()
    parts, ok = [], True
    for n in (3, 4):
        lam = lambda2_moment(2, n, "uniform").lambda2
        ok &= lam <= 1 - 1 / (5 * n * n)
        parts.append(f"n={n}: {lam:.10f} <= {1 - 1 / (5 * n * n):.6f}")
    elapsed = time.perf_counter() - start
    verdict(5, ok and elapsed <= 600, "; ".join(parts) + f"; {elapsed:.1f} s")


def test_criterion_06_haar_moments(verdict):
    start = time.perf_counter()
    worst, ok = 0.0, True
    for d in (2, 4):
        for t, (mean, se) in haar_power_means(d, (1, 2, 3), 100_000, RandomSource(6).substream(d)).items():
            z = abs(mean - symmetric_moment(d, t)) / se
            worst = max(worst, z)
            ok &= z <= 3
    elapsed = time.perf_counter() - start
    verdict(6, ok and elapsed <= 60, f"max |mean - 1/binom(d+t-1,t)| = {worst:.2f} standard errors, {elapsed:.1f} s")


def test_criterion_07_checking(verdict):
    start = time.perf_counter()
    n = 8
    Us = [("hadamard", hadamard_transform(n)), ("fourier", fourier_unitary(2**n))]
    Us += [
        (f"circuit{i}", compile_circuit(sample_circuit(n, 200, "local", RandomSource(7, 1).substream(i))))
        for i in range(5)
    ]
    ok, lows, zs = True, [], []
    for k, (_, U) in enumerate(Us):
        src = RandomSource(7).substream(k)
        corr = acceptance_samples(U, "u-correlated", 1000, src.substream(1))
        ind = acceptance_samples(U, "independent", 10_000, src.substream(0))
        c_se = corr.std(ddof=1) / math.sqrt(corr.size)
        i_se = ind.std(ddof=1) / math.sqrt(ind.size)
        ok &= corr.mean() >= 0.07 - 3 * c_se
        ok &= abs(ind.mean() - 2**-n) <= 4 * i_se
        lows.append(corr.mean())
        zs.append(abs(ind.mean() - 2**-n) / i_se)
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 600
    verdict(
        7,
        ok,
        f"min correlated mean {min(lows):.4f} (>= 0.07), independent means within {max(zs):.2f} sigma of 2^-8, {elapsed:.1f} s",
    )


def test_criterion_08_kwise(verdict):
    start = time.perf_counter()
    U = hadamard_transform(12)
    c = dispersiveness(U).c_value
    records = kwise_suite(U, (1, 2, 3), 20, 100_000, RandomSource(8))
    margins = [abs(2**r.term.k * r.estimate - 1) - 6 * r.term.k**3 * 2.0**-6 - 5 * 2**r.term.k * r.stderr for r in records]
    ok = c == 12 and len(records) == 60 and max(margins) <= 0 and all(r.passed for r in records)
    worst = max(margins)
    elapsed = time.perf_counter() - start
    verdict(8, ok and elapsed <= 600, f"C = {c:g}, 60 terms, max(deviation - bound - slack) = {worst:.4f}, {elapsed:.1f} s")


def test_criterion_09_distinguisher(verdict):
    start = time.perf_counter()
    U, eps, reps = hadamard_transform(6), 0.05, 1000
    rates = {}
    for m, mode in enumerate(("independent", "u-correlated")):
        wrong = 0
        for r in range(reps):
            stream = OracleStream(U, mode, RandomSource(9, m).substream(r))
            wrong += independent_query_distinguish(U, stream, eps).decision != mode
        rates[mode] = wrong / reps
    est, se = sign_correlation(U, 0, 0, 100_000, RandomSource(9, 5))
    re = U[0, 0].real
    ok = all(v <= eps + 0.02 for v in rates.values()) and est >= re / 2 - 3 * se
    elapsed = time.perf_counter() - start
    verdict(
        9,
        ok,
        f"error rates {rates['independent']:.3f} / {rates['u-correlated']:.3f} (<= {eps + 0.02}), "
        f"E[f(0)g(0)] = {est:.4f} >= Re(U00)/2 = {re / 2:.4f}, {elapsed:.1f} s",
    )


def test_criterion_10_sparse(verdict):
    start = time.perf_counter()
    cfg = ExperimentConfig("classical", {"task": "sparse", "n": 10, "block": 4, "instances": 100, "accuracy": 0.01, "delta": 0.01}, seed=10)
    rep = run(cfg)
    rows = {m.name: m for m in rep.results}
    per = rep.records["instances"]
    expect = hoeffding_samples(2.0, 0.01, 0.01)
    ok = rep.passed and rows["decision agreement"].value == 1.0 and all(p["samples"] <= expect for p in per)
    elapsed = time.perf_counter() - start
    verdict(
        10,
        ok,
        f"||U - U~|| = {rows['||U - U_sparse||'].value:.1e}, within 0.01: {rows['fraction within accuracy'].value:.2f}, "
        f"max error {rows['max |estimate - exact|'].value:.4f}, agreement {rows['decision agreement'].value:.2f}, {elapsed:.1f} s",
    )


def test_criterion_11_dispersiveness(verdict):
    exact = all(
        dispersiveness(np.eye(2**n)).c_value == 0
        and dispersiveness(hadamard_transform(n)).c_value == n
        and dispersiveness(fourier_unitary(2**n)).c_value == n
        for n in (1, 4, 8, 10)
    )
    exp = dispersiveness_tail_experiment(6, 200, 200, RandomSource(11))
    bound = 2 ** (-6 / 2 + 1)
    frac = exp.fraction_below(1.0)
    slack = 3 * math.sqrt(bound * (1 - bound) / 200)
    verdict(11, exact and frac <= bound + slack, f"exact C values ok: {exact}; fraction C<1 = {frac:.3f} <= {bound} + {slack:.3f}")
