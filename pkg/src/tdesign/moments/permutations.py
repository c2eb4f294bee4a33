"""Permutation operators on ``t`` tensor copies and their orthonormal bases.

Permutations are tuples ``pi`` with ``pi[a] = image of a`` (0-based). The
operator ``V_pi`` moves tensor factor ``a`` to slot ``pi[a]``, i.e.
``V_pi |k_0 ... k_{t-1}> = |k_{pi^-1(0)} ... k_{pi^-1(t-1)}>``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import UnsupportedError

Perm = tuple[int, ...]

# Symmetry-adapted rows (coefficients over V_pi) for qubit-friendly bases.
# t=3 ordering of permutations: (), (12), (23), (13), (123), (132).
_S3 = math.sqrt(3.0)
_T3_ORDER_CYCLES = [(), (1, 2), (2, 3), (1, 3), (1, 2, 3), (1, 3, 2)]
_T3_ROWS = 0.5 * np.array(
    [
        [2 / 3, 0, 0, 0, -1 / 3, -1 / 3],
        [0, -1 / 3, 2 / 3, -1 / 3, 0, 0],
        [0, 1 / _S3, 0, -1 / _S3, 0, 0],
        [0, 0, 0, 0, 1j / _S3, -1j / _S3],
        [1 / 6] * 6,
        [1 / 6, -1 / 6, -1 / 6, -1 / 6, 1 / 6, 1 / 6],
    ],
    dtype=complex,
)
_T3_LABELS = ["R0", "R1", "R2", "R3", "R+", "R-"]
# t=2 ordering: (), (12); symmetric and antisymmetric projectors.
_T2_ROWS = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex)
_T2_LABELS = ["R+", "R-"]


def from_cycles(cycles: tuple[int, ...] | tuple[tuple[int, ...], ...], t: int) -> Perm:
    """Build a permutation from 1-based cycle notation, e.g. ``(1, 2, 3)`` or ``((1, 2),)``."""
    if cycles and isinstance(cycles[0], int):
        cycles = (cycles,)
    pi = list(range(t))
    for cyc in cycles:
        for k, a in enumerate(cyc):
            pi[a - 1] = cyc[(k + 1) % len(cyc)] - 1
    return tuple(pi)


def compose(p: Perm, q: Perm) -> Perm:
    """``(p q)(a) = p(q(a))``."""
    return tuple(p[q[a]] for a in range(len(p)))


def inverse(p: Perm) -> Perm:
    inv = [0] * len(p)
    for a, b in enumerate(p):
        inv[b] = a
    return tuple(inv)


def num_cycles(p: Perm) -> int:
    seen = [False] * len(p)
    count = 0
    for start in range(len(p)):
        if not seen[start]:
            count += 1
            a = start
            while not seen[a]:
                seen[a] = True
                a = p[a]
    return count


def all_perms(t: int) -> list[Perm]:
    return list(itertools.permutations(range(t)))


def permutation_operator(pi: Perm, d: int, t: int | None = None) -> np.ndarray:
    """The ``d**t`` square 0/1 matrix permuting tensor factors according to ``pi``."""
    t = len(pi) if t is None else t
    if len(pi) != t or sorted(pi) != list(range(t)):
        raise ValueError(f"{pi} is not a permutation of {t} symbols")
    D = d**t
    idx = np.arange(D).reshape((d,) * t)
    # output factor pi[a] carries input factor a
    out = np.transpose(idx, axes=inverse(pi)).ravel()
    V = np.zeros((D, D))
    V[np.arange(D), out] = 1.0
    return V


def permutation_vector(pi: Perm, d: int) -> np.ndarray:
    """``|V_pi> = (V_pi x I)|Phi>``: the row-major flattening of ``V_pi``."""
    return permutation_operator(pi, d).ravel()


def gram_matrix(t: int, d: int | float, perms: list[Perm] | None = None) -> np.ndarray:
    """Hilbert-Schmidt Gram matrix ``tr(V_pi^T V_sigma) = d**cycles(pi^-1 sigma)``."""
    perms = all_perms(t) if perms is None else perms
    return np.array([[float(d) ** num_cycles(compose(inverse(p), q)) for q in perms] for p in perms])


@dataclass
class PermutationBasis:
    """Orthonormal operators ``R_k = sum_pi ortho_coeffs[k, pi] V_pi`` spanning the permutations.

    ``ortho_coeffs`` keeps only the nonvanishing ``R_k``; ``labels`` names them and
    ``vanishing`` lists the named elements that are zero at this dimension.
    """

    t: int
    d: int
    perms: list[Perm]
    gram: np.ndarray
    ortho_coeffs: np.ndarray
    labels: list[str]
    vanishing: list[str]

    @property
    def rank(self) -> int:
        return self.ortho_coeffs.shape[0]

    def operators(self) -> list[np.ndarray]:
        Vs = [permutation_operator(p, self.d) for p in self.perms]
        return [sum(c * V for c, V in zip(row, Vs)) for row in self.ortho_coeffs]

    def overlap(self) -> np.ndarray:
        """``C[pi, k] = <R_k, V_pi>`` so that ``V_pi = sum_k C[pi, k] R_k``."""
        return (self.ortho_coeffs.conj() @ self.gram).T

    def projector_vectors(self) -> np.ndarray:
        """Columns are the vectorized ``|R_k>``; their outer-product sum projects onto the span."""
        vecs = np.array([permutation_vector(p, self.d) for p in self.perms])
        return (self.ortho_coeffs @ vecs).T


def _symmetry_rows(t: int) -> tuple[list[Perm], np.ndarray, list[str]]:
    if t == 1:
        return [(0,)], np.ones((1, 1), dtype=complex), ["R+"]
    if t == 2:
        return [(0, 1), (1, 0)], _T2_ROWS, _T2_LABELS
    if t == 3:
        perms = [from_cycles(c, 3) if c else (0, 1, 2) for c in _T3_ORDER_CYCLES]
        return perms, _T3_ROWS, _T3_LABELS
    raise UnsupportedError(f"t={t} is not supported (t <= 3)")


def build_permutation_basis(t: int, d: int, tol: float = 1e-10) -> PermutationBasis:
    """Orthonormal basis of span{V_pi} on ``(C^d)^{x t}``.

    Uses symmetry-adapted combinations (projectors onto the symmetric and
    antisymmetric parts plus, for t=3, the mixed-symmetry elements). These rows
    are mutually orthogonal for every ``d``; they are normalized with the Gram
    matrix and the ones of zero norm (e.g. the antisymmetric element for qubits
    at t=3) are dropped.
    """
    perms, rows, labels = _symmetry_rows(t)
    gram = gram_matrix(t, d, perms)
    norms2 = np.real(np.einsum("ka,ab,kb->k", rows.conj(), gram, rows))
    keep = norms2 > tol * norms2.max()
    coeffs = rows[keep] / np.sqrt(norms2[keep])[:, None]
    if np.allclose(coeffs.imag, 0):
        coeffs = coeffs.real
    return PermutationBasis(
        t=t,
        d=d,
        perms=perms,
        gram=gram,
        ortho_coeffs=coeffs,
        labels=[lab for lab, k in zip(labels, keep) if k],
        vanishing=[lab for lab, k in zip(labels, keep) if not k],
    )


def gram_orthonormal_coeffs(t: int, d: int, tol: float = 1e-10) -> np.ndarray:
    """Basis-agnostic orthonormalization from the Gram eigendecomposition (rows over all_perms order)."""
    gram = gram_matrix(t, d)
    w, vecs = np.linalg.eigh(gram)
    keep = w > tol * w.max()
    return (vecs[:, keep] / np.sqrt(w[keep])).T
