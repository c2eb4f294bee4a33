"""Random two-qubit circuits, structured unitaries and dispersiveness.

Two random-circuit models are provided. In the ``local`` model qubits sit on a
circle and each step applies a Haar gate to ``(i, i+1 mod n)`` for a uniform
``i``; in the ``uniform`` model each step picks an unordered pair uniformly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, InvalidDimensionError, ShapeError, UndefinedMeasureError
from .linalg import RandomSource, RNGLike, apply_local, as_generator, haar_unitary, num_qubits

MAX_COMPILE_QUBITS = 14
CIRCUIT_FORMAT_VERSION = 1
MODELS = ("local", "uniform", "explicit")


@dataclass(frozen=True)
class GateStep:
    targets: tuple[int, int]
    gate: np.ndarray

    def __post_init__(self):
        a, b = self.targets
        if a == b:
            raise ShapeError(f"gate targets must be distinct, got {self.targets}")
        if np.shape(self.gate) != (4, 4):
            raise ShapeError(f"two-qubit gate must be 4x4, got {np.shape(self.gate)}")


@dataclass
class Circuit:
    n: int
    model: str
    steps: list[GateStep] = field(default_factory=list)
    seed: int | None = None
    stream: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown circuit model {self.model!r}")
        for step in self.steps:
            if max(step.targets) >= self.n or min(step.targets) < 0:
                raise ShapeError(f"targets {step.targets} out of range for n={self.n}")
            if self.model == "local":
                a, b = step.targets
                if b != (a + 1) % self.n:
                    raise ShapeError(f"local-model step {step.targets} is not a circle edge")

    def __len__(self) -> int:
        return len(self.steps)

    def __add__(self, other: "Circuit") -> "Circuit":
        """Run ``self`` first, then ``other``."""
        if other.n != self.n:
            raise ShapeError("cannot concatenate circuits on different registers")
        model = self.model if self.model == other.model else "explicit"
        return Circuit(self.n, model, list(self.steps) + list(other.steps))


def sample_circuit(n: int, length: int, model: str, rng: RNGLike) -> Circuit:
    """Draw ``length`` steps of the local or uniform random-circuit walk."""
    if n < 2:
        raise InvalidDimensionError(f"need at least two qubits, got n={n}")
    if length < 0:
        raise ValueError("length must be non-negative")
    if model not in ("local", "uniform"):
        raise ValueError(f"model must be 'local' or 'uniform', got {model!r}")
    gen = as_generator(rng)
    if model == "local":
        first = gen.integers(0, n, size=length)
        pairs = [(int(i), int((i + 1) % n)) for i in first]
    else:
        all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        idx = gen.integers(0, len(all_pairs), size=length)
        pairs = [all_pairs[k] for k in idx]
    gates = haar_unitary(4, gen, size=length) if length else np.empty((0, 4, 4), complex)
    steps = [GateStep(p, g) for p, g in zip(pairs, gates)]
    seed = rng.master_seed if isinstance(rng, RandomSource) else None
    stream = rng.stream_index if isinstance(rng, RandomSource) and not rng.subkey else 0
    if isinstance(rng, RandomSource) and rng.subkey:
        seed = None  # substreams are not regenerable from a (seed, stream) header
    return Circuit(n, model, steps, seed=seed, stream=stream)


def apply_circuit(circuit: Circuit, state: np.ndarray) -> np.ndarray:
    for step in circuit.steps:
        state = apply_local(step.gate, step.targets, state, circuit.n)
    return state


def compile_circuit(circuit: Circuit) -> np.ndarray:
    """Dense unitary ``U_k ... U_1`` of the circuit."""
    if circuit.n > MAX_COMPILE_QUBITS:
        raise CapacityError(f"compiling {circuit.n} qubits exceeds the dense limit {MAX_COMPILE_QUBITS}")
    return apply_circuit(circuit, np.eye(2**circuit.n, dtype=complex))


def hadamard_transform(n: int) -> np.ndarray:
    if n < 1:
        raise InvalidDimensionError("n must be >= 1")
    idx = np.arange(2**n)
    parity = (np.bitwise_count(idx[:, None] & idx[None, :]) & 1).astype(np.int64)
    return (1 - 2 * parity).astype(complex) / 2 ** (n / 2)


def fourier_unitary(N: int) -> np.ndarray:
    """Fourier transform over the cyclic group Z_N, entries ``exp(2 pi i jk/N)/sqrt(N)``."""
    if N < 2:
        raise InvalidDimensionError("N must be >= 2")
    jk = np.outer(np.arange(N), np.arange(N)) % N
    return np.exp(2j * np.pi * jk / N) / np.sqrt(N)


@dataclass(frozen=True)
class DispersivenessReport:
    c_value: float
    argmax_entry: tuple[int, int]
    modulus: float


def dispersiveness(U: np.ndarray) -> DispersivenessReport:
    """``C(U) = -log2 max |U_ij|^2``; ties resolve to the lexicographically first entry."""
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {U.shape}")
    mod = np.abs(U)
    flat = int(np.argmax(mod))  # first occurrence in row-major order
    i, j = divmod(flat, U.shape[1])
    m = float(mod[i, j])
    if m == 0.0:
        raise UndefinedMeasureError("dispersiveness of the zero matrix is undefined")
    c = -2.0 * math.log2(m)
    # exact-power moduli (identity, Hadamard, QFT) should read as integers
    if abs(c - round(c)) < 1e-9:
        c = float(round(c)) + 0.0
    return DispersivenessReport(c, (i, j), m)


def hh_dispersing_check(U: np.ndarray, alpha: float, beta: float) -> tuple[bool, int]:
    """(alpha, beta) check on row 1-norms: at least ``2**(alpha n)`` rows reach ``beta 2**(n/2)``.

    Returns the verdict and the number of qualifying rows.
    """
    U = np.asarray(U)
    n = num_qubits(U.shape[0])
    row_sums = np.abs(U).sum(axis=1)
    threshold = beta * 2 ** (n / 2)
    count = int(np.count_nonzero(row_sums >= threshold * (1 - 1e-12)))
    return count >= 2 ** (alpha * n) * (1 - 1e-12), count


@dataclass
class TailExperiment:
    n: int
    length: int
    model: str
    c_values: np.ndarray

    def fraction_below(self, threshold: float) -> float:
        return float(np.mean(self.c_values < threshold))

    def quantiles(self, qs: Sequence[float] = (0.0, 0.05, 0.5, 0.95, 1.0)) -> dict[float, float]:
        return {q: float(np.quantile(self.c_values, q)) for q in qs}

    def histogram(self, bins: int | Sequence[float] = 20) -> tuple[np.ndarray, np.ndarray]:
        return np.histogram(self.c_values, bins=bins)


def dispersiveness_tail_experiment(
    n: int, length: int, trials: int, rng: RandomSource, model: str = "local"
) -> TailExperiment:
    """C(U) for ``trials`` independently sampled circuits; trial ``i`` uses ``rng.substream(i)``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n > 10:
        raise CapacityError("tail experiment is limited to n <= 10")
    values = np.empty(trials)
    for k in range(trials):
        circ = sample_circuit(n, length, model, rng.substream(k))
        values[k] = dispersiveness(compile_circuit(circ)).c_value
    return TailExperiment(n, length, model, values)


# -- circuit files ---------------------------------------------------------


def _gate_to_json(gate: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in gate]


def _gate_from_json(rows: Iterable) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def circuit_to_dict(circuit: Circuit, explicit: bool = True) -> dict:
    """Serializable form. With ``explicit=False`` gates are omitted and must be regenerable."""
    if not explicit and circuit.seed is None:
        raise ValueError("circuit has no seed; gates must be stored explicitly")
    header = {"version": CIRCUIT_FORMAT_VERSION, "n": circuit.n, "model": circuit.model}
    if circuit.seed is not None:
        header["seed"] = circuit.seed
        header["stream"] = circuit.stream
    header["length"] = len(circuit)
    steps = []
    for k, step in enumerate(circuit.steps):
        rec = {"index": k, "targets": list(step.targets)}
        if explicit:
            rec["gate"] = _gate_to_json(step.gate)
        steps.append(rec)
    return {"header": header, "steps": steps}


def circuit_from_dict(data: dict) -> Circuit:
    header = data["header"]
    if header.get("version") != CIRCUIT_FORMAT_VERSION:
        raise ValueError(f"unsupported circuit file version {header.get('version')}")
    n, model = int(header["n"]), header["model"]
    records = sorted(data["steps"], key=lambda r: r["index"])
    if records and all("gate" in r for r in records) or not records:
        steps = [GateStep(tuple(r["targets"]), _gate_from_json(r["gate"])) for r in records]
        return Circuit(n, model, steps, seed=header.get("seed"), stream=header.get("stream", 0))
    if "seed" not in header:
        raise ValueError("gates absent and no seed to regenerate them from")
    regen = sample_circuit(n, int(header["length"]), model, RandomSource(header["seed"], header.get("stream", 0)))
    for r, step in zip(records, regen.steps):
        if tuple(r["targets"]) != step.targets:
            raise ValueError(f"step {r['index']} targets disagree with the regenerated circuit")
    return regen


def save_circuit(circuit: Circuit, path: str | Path, explicit: bool = True) -> None:
    Path(path).write_text(json.dumps(circuit_to_dict(circuit, explicit), indent=1))


def load_circuit(path: str | Path) -> Circuit:
    return circuit_from_dict(json.loads(Path(path).read_text()))
