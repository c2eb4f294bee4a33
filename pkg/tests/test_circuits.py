import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdesign.circuits import (
    Circuit,
    GateStep,
    apply_circuit,
    circuit_from_dict,
    circuit_to_dict,
    compile_circuit,
    dispersiveness,
    dispersiveness_tail_experiment,
    fourier_unitary,
    hadamard_transform,
    hh_dispersing_check,
    load_circuit,
    sample_circuit,
    save_circuit,
)
from tdesign.errors import CapacityError, InvalidDimensionError, ShapeError, UndefinedMeasureError
from tdesign.linalg import RandomSource, embed, haar_unitary, is_unitary


def test_local_model_uses_circle_edges():
    c = sample_circuit(5, 200, "local", RandomSource(0))
    assert all(b == (a + 1) % 5 for a, b in (s.targets for s in c.steps))
    assert {s.targets[0] for s in c.steps} == set(range(5))


def test_uniform_model_uses_all_pairs():
    c = sample_circuit(4, 400, "uniform", RandomSource(0))
    assert {s.targets for s in c.steps} == {(i, j) for i in range(4) for j in range(i + 1, 4)}


def test_sample_circuit_is_reproducible():
    a = sample_circuit(4, 10, "local", RandomSource(3))
    b = sample_circuit(4, 10, "local", RandomSource(3))
    assert all(np.array_equal(x.gate, y.gate) and x.targets == y.targets for x, y in zip(a.steps, b.steps))


def test_sample_circuit_errors():
    with pytest.raises(InvalidDimensionError):
        sample_circuit(1, 3, "local", 0)
    with pytest.raises(ValueError):
        sample_circuit(3, 3, "brickwork", 0)


def test_local_circuit_rejects_non_edges():
    with pytest.raises(ShapeError):
        Circuit(4, "local", [GateStep((0, 2), np.eye(4))])
    with pytest.raises(ShapeError):
        GateStep((1, 1), np.eye(4))


def test_compile_is_product_of_embedded_gates():
    c = sample_circuit(3, 6, "uniform", RandomSource(1))
    U = np.eye(8)
    for s in c.steps:
        U = embed(s.gate, s.targets, 3) @ U
    assert np.allclose(compile_circuit(c), U)
    assert is_unitary(compile_circuit(c))


@given(st.integers(0, 10_000), st.integers(0, 6), st.integers(0, 6))
def test_concatenation_composes_in_order(seed, la, lb):
    a = sample_circuit(3, la, "local", RandomSource(seed))
    b = sample_circuit(3, lb, "local", RandomSource(seed, 1))
    assert np.allclose(compile_circuit(a + b), compile_circuit(b) @ compile_circuit(a))


def test_apply_circuit_matches_compiled():
    c = sample_circuit(4, 20, "local", RandomSource(2))
    psi = RandomSource(9).generator().standard_normal(16) + 0j
    assert np.allclose(apply_circuit(c, psi), compile_circuit(c) @ psi)


def test_compile_capacity():
    with pytest.raises(CapacityError):
        compile_circuit(Circuit(15, "uniform", []))


@pytest.mark.parametrize("n", [1, 3, 6])
def test_structured_unitaries(n):
    H, F = hadamard_transform(n), fourier_unitary(2**n)
    assert is_unitary(H) and is_unitary(F)
    assert np.allclose(H, H.T)
    h1 = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    ref = h1
    for _ in range(n - 1):
        ref = np.kron(ref, h1)
    assert np.allclose(H, ref)


def test_dispersiveness_exact_values():
    for n in (1, 4, 8):
        assert dispersiveness(np.eye(2**n)).c_value == 0.0
        assert dispersiveness(hadamard_transform(n)).c_value == n
        assert dispersiveness(fourier_unitary(2**n)).c_value == n


def test_dispersiveness_tie_break_and_errors():
    rep = dispersiveness(hadamard_transform(2))
    assert rep.argmax_entry == (0, 0)
    U = np.diag([0.5, 1.0, 1.0])
    assert dispersiveness(U).argmax_entry == (1, 1)
    with pytest.raises(UndefinedMeasureError):
        dispersiveness(np.zeros((2, 2)))
    with pytest.raises(ShapeError):
        dispersiveness(np.zeros((2, 3)))


@given(st.integers(1, 6), st.integers(0, 1000))
def test_dispersiveness_bounds(n, seed):
    # 0 <= C(U) <= n for a unitary: some entry has |U_ij|^2 >= 2^-n
    U = haar_unitary(2**n, seed)
    c = dispersiveness(U).c_value
    assert -1e-12 <= c <= n + 1e-9


def test_dispersiveness_phase_invariant():
    U = haar_unitary(8, 4)
    D = np.diag(np.exp(1j * np.arange(8)))
    assert np.isclose(dispersiveness(D @ U @ D).c_value, dispersiveness(U).c_value)


def test_hh_dispersing_check():
    ok, count = hh_dispersing_check(hadamard_transform(6), 1.0, 1.0)
    assert ok and count == 64
    ok, count = hh_dispersing_check(np.eye(64), 0.5, 0.5)
    assert not ok and count == 0


@given(st.integers(2, 6), st.integers(0, 1000))
def test_row_one_norm_follows_from_dispersiveness(n, seed):
    # every row of a unitary has 1-norm >= 1/max|U| >= 2^(C/2)
    U = haar_unitary(2**n, seed)
    c = dispersiveness(U).c_value
    assert np.abs(U).sum(axis=1).min() >= 2 ** (c / 2) * (1 - 1e-12)


def test_circuit_json_roundtrip(tmp_path):
    c = sample_circuit(4, 12, "local", RandomSource(5))
    path = tmp_path / "c.json"
    save_circuit(c, path)
    back = load_circuit(path)
    assert np.allclose(compile_circuit(back), compile_circuit(c))
    data = json.loads(path.read_text())
    assert data["header"] == {"version": 1, "n": 4, "model": "local", "seed": 5, "stream": 0, "length": 12}


def test_circuit_regenerates_from_seed():
    c = sample_circuit(3, 8, "uniform", RandomSource(11, 2))
    data = circuit_to_dict(c, explicit=False)
    assert all("gate" not in s for s in data["steps"])
    assert np.allclose(compile_circuit(circuit_from_dict(data)), compile_circuit(c))


def test_circuit_without_seed_needs_gates():
    c = Circuit(2, "explicit", [GateStep((0, 1), haar_unitary(4, 0))])
    with pytest.raises(ValueError):
        circuit_to_dict(c, explicit=False)


def test_tail_experiment_deterministic_and_bounded():
    a = dispersiveness_tail_experiment(4, 40, 30, RandomSource(3))
    b = dispersiveness_tail_experiment(4, 40, 30, RandomSource(3))
    assert np.array_equal(a.c_values, b.c_values)
    assert np.all(a.c_values <= 4 + 1e-9)
    counts, _ = a.histogram(bins=np.linspace(0, 4, 9))
    assert counts.sum() == 30
    q = a.quantiles()
    assert q[0.0] <= q[0.5] <= q[1.0]


def test_tail_experiment_capacity():
    with pytest.raises(CapacityError):
        dispersiveness_tail_experiment(11, 1, 1, RandomSource(0))
