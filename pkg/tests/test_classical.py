import csv
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

import oracles
from tdesign.checking import accept_probability, make_instance
from tdesign.circuits import compile_circuit, dispersiveness, fourier_unitary, hadamard_transform, sample_circuit
from tdesign.classical import (
    KTerm,
    KwiseRecord,
    OracleStream,
    RecordedStream,
    SparseMatrix,
    block_diagonal_haar,
    covariance_matrix,
    decide,
    hoeffding_samples,
    independent_query_distinguish,
    kterm_probability,
    kwise_bound,
    kwise_suite,
    orthant_probability_2,
    query_budget,
    random_kterm,
    sign_correlation,
    sign_correlation_exact,
    signed_samples,
    sparse_approximate,
    sparse_overlap_estimate,
    spectral_norm,
    write_kterm_csv,
)
from tdesign.errors import BudgetError, InsufficientQueriesError, InvalidSpecError
from tdesign.linalg import RandomSource, haar_unitary


def real_orthogonal(N, seed):
    Q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((N, N)))
    return Q


# -- k-terms ----------------------------------------------------------------


def test_kterm_validation():
    with pytest.raises(InvalidSpecError):
        KTerm((1, 1), (1, 1))
    with pytest.raises(InvalidSpecError):
        KTerm((1,), (0,))
    with pytest.raises(InvalidSpecError):
        KTerm(tuple(range(9)), (1,) * 9)
    with pytest.raises(InvalidSpecError):
        KTerm((0, 1), (1,))


@given(st.integers(2, 64), st.integers(1, 8), st.integers(0, 1000))
def test_random_kterm_is_valid(N, k, seed):
    k = min(k, 2 * N)
    term = random_kterm(N, k, seed)
    assert term.k == k and max(term.positions) < 2 * N


def test_single_literal_is_half():
    U = haar_unitary(16, 1)
    for pos in (3, 16 + 5):
        p, se = kterm_probability(U, KTerm((pos,), (-1,)), 20_000, pos)
        assert abs(p - 0.5) < 4 * se


def test_two_f_side_literals_are_quarter():
    p, se = kterm_probability(haar_unitary(8, 2), KTerm((1, 6), (1, -1)), 20_000, 0)
    assert abs(p - 0.25) < 4 * se


def test_orthant_formula_against_brute_force():
    rng = np.random.default_rng(0)
    for rho in (-0.9, -0.3, 0.0, 0.5, 0.95):
        assert orthant_probability_2(rho) == pytest.approx(oracles.orthant_mc(rho, 400_000, rng), abs=4e-3)


def test_mixed_pair_matches_orthant_probability():
    U = real_orthogonal(16, 3)
    i, j = 2, 7
    p, se = kterm_probability(U, KTerm((i, 16 + j), (1, 1)), 100_000, 1)
    assert abs(p - orthant_probability_2(U[j, i])) < 4 * se


def test_marginal_and_full_sampling_agree():
    U = haar_unitary(16, 4)
    term = KTerm((0, 17, 30), (1, -1, 1))
    a, sa = kterm_probability(U, term, 40_000, 1, method="marginal")
    b, sb = kterm_probability(U, term, 20_000, 2, method="full")
    assert abs(a - b) < 4 * math.hypot(sa, sb)


def test_kterm_sample_floor():
    with pytest.raises(ValueError):
        kterm_probability(np.eye(2), KTerm((0,), (1,)), 100, 0)


def test_kwise_bound_examples():
    assert kwise_bound(1, 20) == pytest.approx(6 * 2**-10)
    assert kwise_bound(2, 0) == 48
    assert kwise_bound(2, 12) == pytest.approx(0.75)


@pytest.mark.parametrize("label", ["hadamard10", "fourier10", "circuits10"])
def test_kwise_bound_holds(label):
    if label == "hadamard10":
        Us = [hadamard_transform(10)]
    elif label == "fourier10":
        Us = [fourier_unitary(1024)]
    else:
        Us = [compile_circuit(sample_circuit(10, 200, "local", RandomSource(4).substream(i))) for i in range(10)]
    for idx, U in enumerate(Us):
        for rec in kwise_suite(U, (1, 2, 3), 20, 10_000, RandomSource(idx)):
            assert rec.passed, rec


def test_kterm_csv(tmp_path):
    recs = [KwiseRecord(KTerm((1, 5), (1, -1)), 0.25, 0.001, 0.75)]
    path = tmp_path / "terms.csv"
    write_kterm_csv(recs, path, "hadamard", comment="config")
    lines = path.read_text().splitlines()
    assert lines[0] == "# config"
    rows = list(csv.DictReader(lines[1:]))
    assert rows[0]["positions"] == "1 5" and rows[0]["k"] == "2" and float(rows[0]["bound"]) == 0.75


# -- covariance --------------------------------------------------------------


def test_covariance_identity_example():
    spec = covariance_matrix(np.eye(4), [0], [0], [1, 1])
    assert np.allclose(spec.sigma, [[1, 1], [1, 1]])


def test_covariance_hadamard_sandwich():
    spec = covariance_matrix(hadamard_transform(3), [1], [6], [1, -1])
    assert abs(spec.sigma[0, 1]) == pytest.approx(2**-1.5)
    assert spec.radius == pytest.approx(4 * 2**-1.5)
    assert spec.within_sandwich


def test_covariance_index_convention():
    U = haar_unitary(8, 6)
    spec = covariance_matrix(U, [2], [5], [1, 1])
    # E[v_2 (Uv)_5] = U[5, 2]
    assert spec.sigma[0, 1] == pytest.approx(U[5, 2])


def test_covariance_matches_direct_samples():
    U = haar_unitary(8, 11)
    spec = covariance_matrix(U, [1, 3], [0, 6], [1, -1, 1, -1])
    y = signed_samples(U, spec, 200_000, np.random.default_rng(2))
    emp = y.conj().T @ y / len(y)
    off = spec.sigma[:2, 2:]
    assert np.max(np.abs(emp[:2, 2:] - off)) < 0.02
    # the transposed indexing does not match for a non-symmetric U
    assert np.max(np.abs(emp[:2, 2:] - np.array([[U[1, 0], U[1, 6]], [-U[3, 0], -U[3, 6]]]) * [[1, -1], [1, -1]])) > 0.05


def test_covariance_rejects_bad_specs():
    with pytest.raises(InvalidSpecError):
        covariance_matrix(np.eye(4), [0, 0], [1], [1, 1, 1])
    with pytest.raises(InvalidSpecError):
        covariance_matrix(np.eye(4), [0], [1], [1])


@given(st.integers(0, 1000), st.integers(1, 4), st.integers(1, 4))
def test_covariance_sandwich_always_holds(seed, m, r):
    U = haar_unitary(32, seed)
    rng = np.random.default_rng(seed)
    s = rng.choice(32, m, replace=False)
    rr = rng.choice(32, r, replace=False)
    a = rng.choice([-1, 1], m + r)
    spec = covariance_matrix(U, s, rr, a)
    assert np.allclose(np.diag(spec.sigma), 1)
    assert spec.within_sandwich


def test_covariance_matches_monte_carlo():
    U = haar_unitary(16, 7)
    spec = covariance_matrix(U, [0, 3], [1, 9], [1, -1, -1, 1])
    samples = 100_000
    y = signed_samples(U, spec, samples, 3)
    emp = np.einsum("si,sj->ij", y.conj(), y) / samples
    prods = y.conj()[:, :, None] * y[:, None, :]
    se = np.sqrt(prods.real.var(axis=0) + prods.imag.var(axis=0)) / math.sqrt(samples)
    assert np.all(np.abs(emp - spec.sigma) <= 4 * se + 1e-12)


# -- sign correlations -------------------------------------------------------


def test_sign_correlation_identity():
    est, se = sign_correlation(np.eye(8), 3, 3, 10_000, 0)
    assert est == 1.0 and se == 0.0


def test_sign_correlation_arcsine():
    U = real_orthogonal(8, 1)
    for i, j in [(0, 0), (2, 5), (7, 1)]:
        est, se = sign_correlation(U, i, j, 100_000, i + j)
        assert abs(est - 2 / math.pi * math.asin(U[j, i])) < 4 * se
        assert sign_correlation_exact(U, i, j) == pytest.approx(2 / math.pi * math.asin(U[j, i]))


def test_sign_correlation_flips_with_row_sign():
    U = haar_unitary(8, 3)
    V = U.copy()
    V[4] *= -1
    a, sa = sign_correlation(U, 1, 4, 50_000, 1)
    b, sb = sign_correlation(V, 1, 4, 50_000, 2)
    assert abs(a + b) < 4 * math.hypot(sa, sb)
    assert sign_correlation_exact(V, 1, 4) == pytest.approx(-sign_correlation_exact(U, 1, 4))


@given(st.integers(0, 1000))
def test_headline_correlation_bound_exact(seed):
    # (2/pi) arcsin(rho) >= rho/2 on [0, 1] and rho >= Re U[j, i]
    U = haar_unitary(16, seed)
    for j in range(16):
        for i in range(16):
            if U[j, i].real > 0:
                assert sign_correlation_exact(U, i, j) >= U[j, i].real / 2


def test_headline_correlation_bound_sampled():
    for seed in range(3):
        U = haar_unitary(8, seed)
        j, i = np.unravel_index(np.argmax(U.real), U.shape)
        est, se = sign_correlation(U, i, j, 50_000, seed)
        assert est >= U[j, i].real / 2 - 4 * se


# -- independent-query distinguisher ----------------------------------------


def test_distinguisher_identity_example():
    res = independent_query_distinguish(np.eye(4), OracleStream(np.eye(4), "u-correlated", 0), 0.05, constant=1.0)
    assert res.entry == (0, 0)
    assert res.queries == math.ceil(math.log(20))
    assert res.statistic == 1.0 and res.decision == "u-correlated"


def test_query_budget():
    assert query_budget(0.125, 0.05) == math.ceil(32 * 64 * math.log(20))


def error_rate(U, mode, eps, reps, constant=32.0, seed=0):
    wrong = 0
    for r in range(reps):
        res = independent_query_distinguish(U, OracleStream(U, mode, RandomSource(seed).substream(r)), eps, constant)
        wrong += res.decision != mode
    return wrong / reps


@pytest.mark.parametrize("eps", [0.05, 0.01])
@pytest.mark.parametrize("mode", ["independent", "u-correlated"])
def test_distinguisher_error_rate(eps, mode):
    assert error_rate(hadamard_transform(6), mode, eps, 1000) <= eps + 0.02


def test_distinguisher_unit_constant_is_too_small():
    # with N = ceil(ln(1/eps) / Re^2) the independent case is misread about a third of the time
    assert error_rate(hadamard_transform(6), "independent", 0.05, 400, constant=1.0) > 0.2


def test_distinguisher_on_random_unitary():
    U = haar_unitary(32, 9)
    for mode in ("independent", "u-correlated"):
        assert error_rate(U, mode, 0.05, 200, seed=1) <= 0.07


def test_lazy_and_full_streams_agree():
    U = haar_unitary(16, 2)
    lazy = OracleStream(U, "u-correlated", 0)
    full = OracleStream(U, "u-correlated", 1, lazy=False)
    f1, g1 = lazy.query(3, 5, 40_000)
    f2, g2 = full.query(3, 5, 40_000)
    a, b = np.mean(f1 * g1), np.mean(f2 * g2)
    assert abs(a - b) < 4 * math.sqrt(2 / 40_000)
    assert abs(a - sign_correlation_exact(U, 3, 5)) < 4 / math.sqrt(40_000)


def test_stream_budget_and_replay():
    U = hadamard_transform(2)
    stream = OracleStream(U, "independent", 0, budget=10)
    stream.query(0, 0, 8)
    with pytest.raises(InsufficientQueriesError):
        stream.query(0, 0, 3)
    insts = [make_instance(U, "u-correlated", RandomSource(k)) for k in range(5)]
    rec = RecordedStream(insts)
    f, g = rec.query(1, 2, 5)
    assert list(f) == [i.f[1] for i in insts] and list(g) == [i.g[2] for i in insts]
    with pytest.raises(InsufficientQueriesError):
        rec.query(0, 0, 1)


def test_distinguisher_reports_exhaustion():
    insts = [make_instance(np.eye(4), "independent", RandomSource(k)) for k in range(3)]
    with pytest.raises(InsufficientQueriesError):
        independent_query_distinguish(np.eye(4), RecordedStream(insts), 0.05)


# -- sparse simulation -------------------------------------------------------


@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 1000))
def test_spectral_norm_matches_numpy(r, c, seed):
    A = np.random.default_rng(seed).standard_normal((r, c))
    assert spectral_norm(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-6)


def test_sparse_identity():
    Ut, err = sparse_approximate(np.eye(16), 1)
    assert err == 0 and np.array_equal(Ut.to_dense(), np.eye(16)) and Ut.sparsity == 1


def test_sparse_fourier_resists():
    _, err = sparse_approximate(fourier_unitary(64), 4)
    assert err > 0.9


def test_sparse_block_diagonal_is_exact():
    U = block_diagonal_haar(8, 4, RandomSource(0))
    Ut, err = sparse_approximate(U, 4)
    assert err == 0 and Ut.sparsity == 4
    assert np.allclose(Ut.to_dense(), U)


@given(st.integers(0, 1000), st.integers(1, 6))
def test_sparse_keeps_row_and_column_tops(seed, keep):
    U = haar_unitary(16, seed)
    Ut, err = sparse_approximate(U, keep)
    D = Ut.to_dense()
    assert np.all((D != 0).sum(axis=1) >= keep) and np.all((D != 0).sum(axis=0) >= keep)
    assert err == pytest.approx(np.linalg.norm(U - D, 2), rel=1e-6)


def test_sparse_file_roundtrip(tmp_path):
    Ut, _ = sparse_approximate(haar_unitary(8, 1), 3)
    Ut.save(tmp_path / "s.json")
    back = SparseMatrix.load(tmp_path / "s.json")
    assert np.array_equal(back.to_dense(), Ut.to_dense())
    data = Ut.to_dict()
    assert set(data) == {"version", "dim", "rows"} and len(data["rows"]) == 8
    assert all(len(entry) == 3 for row in data["rows"] for entry in row)


def test_hoeffding_count():
    assert hoeffding_samples(1.0, 0.01, 0.01) == math.ceil(4 * math.log(400) / 1e-4)


def test_overlap_identity_same_sign():
    f = make_instance(None, "independent", RandomSource(1), n=10).f
    est = sparse_overlap_estimate(sparse_approximate(np.eye(1024), 1)[0], f, f, 0)
    assert abs(est.estimate - 1) <= 0.01


def test_overlap_identity_independent():
    inst = make_instance(None, "independent", RandomSource(2), n=10)
    est = sparse_overlap_estimate(sparse_approximate(np.eye(1024), 1)[0], inst.f, inst.g, 0)
    exact = np.mean(inst.f * inst.g.astype(float))
    assert abs(est.estimate - exact) <= 0.01
    # the overlap of an independent pair fluctuates on the 2^(-n/2) scale around 0
    assert abs(est.estimate) <= 0.01 + 4 * 2**-5


def test_overlap_estimator_is_unbiased():
    U = block_diagonal_haar(6, 4, RandomSource(3))
    Ut, _ = sparse_approximate(U, 4)
    inst = make_instance(U, "u-correlated", RandomSource(4))
    exact = inst.g @ U @ inst.f / 64
    ests = [sparse_overlap_estimate(Ut, inst.f, inst.g, RandomSource(5).substream(r), samples=2000) for r in range(100)]
    mean = np.mean([e.estimate for e in ests])
    se = math.sqrt(np.mean([e.stderr**2 for e in ests]) / len(ests))
    assert abs(mean - exact) <= 4 * se


def test_overlap_budget_error():
    Ut, _ = sparse_approximate(np.eye(16), 1)
    with pytest.raises(BudgetError):
        sparse_overlap_estimate(Ut, np.ones(16), np.ones(16), 0, accuracy=1e-4, max_samples=1000)


def test_overlap_decision_on_block_diagonal():
    U = block_diagonal_haar(10, 4, RandomSource(6))
    Ut, _ = sparse_approximate(U, 4)
    for k, mode in enumerate(["u-correlated", "independent"]):
        inst = make_instance(U, mode, RandomSource(7, k))
        est = sparse_overlap_estimate(Ut, inst.f, inst.g, RandomSource(8, k))
        p = accept_probability(U, inst.f, inst.g)
        assert abs(abs(est.estimate) ** 2 - p) <= 0.06 + 3 * est.stderr
        assert decide(abs(est.estimate) ** 2) == decide(p)


def test_approximately_sparse_unitary():
    # a block-diagonal unitary nudged by a small dense rotation
    U0 = block_diagonal_haar(8, 4, RandomSource(9))
    H = haar_unitary(256, 10)
    H = (H + H.conj().T) / 2
    U = U0 @ scipy.linalg.expm(1j * 0.01 * H)
    Ut, err = sparse_approximate(U, 4)
    assert 0 < err <= 0.03
    inst = make_instance(U, "u-correlated", RandomSource(11))
    est = sparse_overlap_estimate(Ut, inst.f, inst.g, RandomSource(12))
    p = accept_probability(U, inst.f, inst.g)
    assert abs(abs(est.estimate) ** 2 - p) <= 2 * err + 0.03
    assert decide(abs(est.estimate) ** 2) == decide(p)


def test_dispersiveness_reported_for_kwise():
    assert dispersiveness(hadamard_transform(12)).c_value == 12
