"""Dense linear algebra on qubit registers and seeded randomness.

Conventions used everywhere in the package:

* qubit 0 is the most significant bit of a computational-basis index;
* complex matrices are plain ``numpy`` arrays of dtype ``complex128``;
* randomness comes from :class:`RandomSource`, a (master seed, stream) pair
  mapped onto a counter-based Philox generator, so that a given pair yields the
  same draws on every machine regardless of the order in which streams are used.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import CapacityError, InvalidDimensionError, ShapeError

# 2**28 complex entries is 4 GiB; anything beyond cannot be held here anyway.
MAX_ENTRIES = 2**28

ATOL = 1e-12


@dataclass(frozen=True)
class RandomSource:
    """Reproducible random stream identified by ``(master_seed, stream_index)``.

    ``substream(i)`` derives an independent child stream, used to give each
    trial of an experiment its own generator.
    """

    master_seed: int
    stream_index: int = 0
    subkey: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed % 2**64,
            spawn_key=(self.stream_index, *self.subkey),
        )
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, index: int) -> "RandomSource":
        return RandomSource(self.master_seed, self.stream_index, self.subkey + (int(index),))


RNGLike = Union[RandomSource, np.random.Generator, int]


def as_generator(rng: RNGLike) -> np.random.Generator:
    """Turn a RandomSource, bare integer seed, or live Generator into a Generator.

    A RandomSource (or int) always produces a *fresh* generator, so repeated calls
    with the same source repeat the same draws. Pass a Generator to continue a
    sequence.
    """
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomSource):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RandomSource(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


def haar_unitary(d: int, rng: RNGLike, size: int | None = None) -> np.ndarray:
    """Draw Haar-random ``d x d`` unitaries.

    QR of a complex Ginibre matrix, with the columns of Q rescaled by the phases
    of diag(R). Without that rescaling the result is not Haar distributed.

    Args:
        d: matrix dimension.
        rng: random source.
        size: if given, return a stack of shape ``(size, d, d)``.
    """
    if d < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {d}")
    gen = as_generator(rng)
    shape = (d, d) if size is None else (size, d, d)
    z = (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[..., None, :]


def gaussian_vector(N: int, rng: RNGLike) -> np.ndarray:
    """``N`` independent standard normal reals."""
    if N < 1:
        raise InvalidDimensionError(f"length must be >= 1, got {N}")
    return as_generator(rng).standard_normal(N)


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    total = A.shape[0] * B.shape[0] * A.shape[1] * B.shape[1]
    if total > MAX_ENTRIES:
        raise CapacityError(f"tensor product would hold {total} entries (cap {MAX_ENTRIES})")
    return np.kron(A, B)


def apply_local(gate: np.ndarray, targets: Sequence[int], state: np.ndarray, n: int) -> np.ndarray:
    """Apply ``gate`` to qubits ``targets`` of an ``n``-qubit state.

    ``state`` may carry one trailing batch axis, shape ``(2**n, m)``, in which case
    every column is transformed. The ``2**n x 2**n`` operator is never formed.
    ``targets[0]`` is the most significant qubit of the gate's own index.
    """
    targets = [int(q) for q in targets]
    k = len(targets)
    gate = np.asarray(gate)
    if gate.shape != (2**k, 2**k):
        raise ShapeError(f"gate of shape {gate.shape} does not act on {k} qubits")
    if len(set(targets)) != k or any(q < 0 or q >= n for q in targets):
        raise ShapeError(f"targets {targets} invalid for {n} qubits")
    state = np.asarray(state)
    if state.shape[0] != 2**n or state.ndim > 2:
        raise ShapeError(f"state of shape {state.shape} is not a {n}-qubit register")
    batch = state.shape[1:]
    psi = state.reshape((2,) * n + batch)
    g = gate.reshape((2,) * (2 * k))
    out = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), targets))
    out = np.moveaxis(out, list(range(k)), targets)
    return out.reshape(state.shape)


def embed(gate: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Dense ``2**n`` matrix of ``gate`` acting on ``targets``; for tests and small n."""
    dim = 2**n
    if dim * dim > MAX_ENTRIES:
        raise CapacityError(f"{n}-qubit dense operator exceeds the entry cap")
    return apply_local(gate, targets, np.eye(dim, dtype=complex), n)


def is_unitary(U: np.ndarray, atol: float = 1e-10) -> bool:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return bool(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) <= atol)


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise InvalidDimensionError(f"dimension {dim} is not a power of two")
    return n
