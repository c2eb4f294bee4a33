"""The U-circuit-checking oracle problem and its constant-query quantum test.

An instance is a pair of sign strings ``f, g`` of length ``N = 2**n``. They are
either independent fair coins, or *U-correlated*: ``f = sgn(v)`` and
``g = sgn(Re(U v))`` for a real standard Gaussian vector ``v`` (``sgn(0) = +1``).
The quantum test accepts with probability ``|<g|U|f>|^2`` where ``|f>`` has
amplitudes ``f(x)/sqrt(N)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circuits import hadamard_transform
from .errors import CapacityError, InvalidOracleError, ShapeError
from .linalg import RandomSource, RNGLike, apply_local, as_generator, num_qubits

MODES = ("independent", "u-correlated")
MAX_QUBITS = 14
INSTANCE_FORMAT_VERSION = 1


def sgn(x: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(x) >= 0, 1, -1).astype(np.int8)


@dataclass
class OracleInstance:
    n: int
    f: np.ndarray
    g: np.ndarray
    mode: str
    seed: int | None = None
    stream: int = 0

    def __post_init__(self):
        N = 2**self.n
        if self.f.shape != (N,) or self.g.shape != (N,):
            raise ShapeError(f"sign strings must have length {N}")
        if not (np.all(np.abs(self.f) == 1) and np.all(np.abs(self.g) == 1)):
            raise ValueError("oracle strings must take values in {-1, +1}")


def check_unitary(U: np.ndarray) -> int:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise InvalidOracleError(f"U must be square, got {U.shape}")
    n = num_qubits(U.shape[0])
    if n > MAX_QUBITS:
        raise CapacityError(f"instances are limited to n <= {MAX_QUBITS}")
    dev = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))
    if dev > 1e-8:
        raise InvalidOracleError(f"U is not unitary (deviation {dev:.2e})")
    return n


def correlated_signs(U: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(sgn(v), sgn(Re(U v)))``; ``v`` may be a batch with samples along the last axis."""
    return sgn(v), sgn((U @ v).real)


def make_instance(U: np.ndarray, mode: str, rng: RNGLike, n: int | None = None, check: bool = True) -> OracleInstance:
    """Draw one instance. ``U`` may be ``None`` in independent mode if ``n`` is given.

    ``check=False`` skips the unitarity test for callers that already ran it.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "u-correlated" or U is not None:
        n = check_unitary(U) if check else num_qubits(np.shape(U)[0])
    gen = as_generator(rng)
    N = 2**n
    if mode == "independent":
        f = (2 * gen.integers(0, 2, N) - 1).astype(np.int8)
        g = (2 * gen.integers(0, 2, N) - 1).astype(np.int8)
    else:
        f, g = correlated_signs(U, gen.standard_normal(N))
    seed = rng.master_seed if isinstance(rng, RandomSource) and not rng.subkey else None
    stream = rng.stream_index if isinstance(rng, RandomSource) else 0
    return OracleInstance(n, f, g, mode, seed, stream)


def regenerate(U: np.ndarray | None, mode: str, seed: int, stream: int = 0, n: int | None = None) -> OracleInstance:
    """Rebuild an instance from its recorded seed and stream."""
    return make_instance(U, mode, RandomSource(seed, stream), n=n)


def accept_probability(U: np.ndarray, f: np.ndarray, g: np.ndarray) -> float:
    """``|<g|U|f>|^2`` for the uniform-magnitude sign states."""
    U = np.asarray(U)
    N = U.shape[0]
    if len(f) != N or len(g) != N:
        raise ShapeError(f"sign strings of length {len(f)}, {len(g)} do not match dimension {N}")
    if N > 2**MAX_QUBITS:
        raise CapacityError(f"instances are limited to n <= {MAX_QUBITS}")
    amp = np.dot(np.asarray(g, dtype=float), U @ np.asarray(f, dtype=float)) / N
    return float(min(abs(amp) ** 2, 1.0))


def simulate_algorithm(U: np.ndarray, f: np.ndarray, g: np.ndarray) -> float:
    """Gate-by-gate statevector run of the five-step test; returns the acceptance probability.

    |0..0> -> Hadamard on every qubit -> phase query f -> U -> phase query g ->
    Hadamard on every qubit -> probability of |0..0> (all qubits read ``+``).
    """
    N = len(f)
    n = num_qubits(N)
    h = hadamard_transform(1)
    psi = np.zeros(N, dtype=complex)
    psi[0] = 1.0
    for q in range(n):
        psi = apply_local(h, [q], psi, n)
    psi = psi * f
    psi = U @ psi
    psi = psi * g
    for q in range(n):
        psi = apply_local(h, [q], psi, n)
    return float(abs(psi[0]) ** 2)


@dataclass(frozen=True)
class AcceptanceStats:
    trials: int
    mean_p: float
    stderr: float
    mode: str


def _stats(values: np.ndarray, mode: str) -> AcceptanceStats:
    return AcceptanceStats(len(values), float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values))), mode)


def acceptance_samples(U: np.ndarray, mode: str, trials: int, rng: RandomSource, batch: int = 256) -> np.ndarray:
    """Acceptance probabilities of ``trials`` fresh instances.

    Trials are processed in blocks of ``batch``; block ``b`` draws from
    ``rng.substream(b)``, so results do not depend on how blocks are scheduled.
    """
    n = check_unitary(U)
    N = 2**n
    out = np.empty(trials)
    for b, start in enumerate(range(0, trials, batch)):
        m = min(batch, trials - start)
        gen = rng.substream(b).generator()
        if mode == "independent":
            F = (2 * gen.integers(0, 2, (N, m)) - 1).astype(float)
            G = (2 * gen.integers(0, 2, (N, m)) - 1).astype(float)
        elif mode == "u-correlated":
            F, G = correlated_signs(U, gen.standard_normal((N, m)))
            F, G = F.astype(float), G.astype(float)
        else:
            raise ValueError(f"mode must be one of {MODES}")
        amps = np.einsum("xm,xm->m", G, U @ F) / N
        out[start : start + m] = np.abs(amps) ** 2
    return out


def checking_experiment(U: np.ndarray, trials: int, rng: RandomSource) -> tuple[AcceptanceStats, AcceptanceStats]:
    """Mean acceptance over fresh independent and U-correlated instances."""
    if trials < 100:
        raise ValueError("trials must be >= 100")
    indep = acceptance_samples(U, "independent", trials, rng.substream(0))
    corr = acceptance_samples(U, "u-correlated", trials, rng.substream(1))
    return _stats(indep, "independent"), _stats(corr, "u-correlated")


# -- instance files --------------------------------------------------------


def pack_signs(x: np.ndarray) -> str:
    """Little-endian by index; bit 1 means +1. Returned as hex."""
    return np.packbits(np.asarray(x) > 0, bitorder="little").tobytes().hex()


def unpack_signs(text: str, N: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(bytes.fromhex(text), dtype=np.uint8), bitorder="little")[:N]
    return (2 * bits.astype(np.int8) - 1).astype(np.int8)


def instance_to_dict(inst: OracleInstance) -> dict:
    return {
        "version": INSTANCE_FORMAT_VERSION,
        "n": inst.n,
        "mode": inst.mode,
        "seed": inst.seed,
        "stream": inst.stream,
        "f": pack_signs(inst.f),
        "g": pack_signs(inst.g),
    }


def instance_from_dict(data: dict) -> OracleInstance:
    if data.get("version") != INSTANCE_FORMAT_VERSION:
        raise ValueError(f"unsupported instance file version {data.get('version')}")
    N = 2 ** data["n"]
    return OracleInstance(
        data["n"], unpack_signs(data["f"], N), unpack_signs(data["g"], N), data["mode"], data.get("seed"), data.get("stream", 0)
    )


def save_instance(inst: OracleInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst)))


def load_instance(path: str | Path) -> OracleInstance:
    return instance_from_dict(json.loads(Path(path).read_text()))
