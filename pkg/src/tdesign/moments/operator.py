"""Matrix-free moment operators of local and uniform random circuits.

Vectors live on ``2tn`` binary tensor factors in a *site-major* layout: qubit
site ``q`` owns the ``2t`` consecutive factors (t forward copies, then t
conjugate copies), so a site block has dimension ``s = 4**t`` and the full space
``s**n = 2**(2tn)``. A two-site term then touches two site blocks, and in this
layout the permutation vector of a site (or of a whole register) is a plain
tensor product of single-site vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..errors import CapacityError, ShapeError, UnsupportedError
from ..linalg import MAX_ENTRIES
from .permutations import all_perms, gram_orthonormal_coeffs, permutation_vector

MODELS = ("local", "uniform")
BOUNDARIES = ("periodic", "open")


@lru_cache(maxsize=None)
def site_vectors(t: int) -> np.ndarray:
    """Rows are the single-qubit ``|V_pi>`` (length ``4**t``), in ``all_perms(t)`` order."""
    return np.array([permutation_vector(p, 2) for p in all_perms(t)])


@lru_cache(maxsize=None)
def pair_factor(t: int) -> np.ndarray:
    """Orthonormal columns spanning the two-site fixed space; ``P = W W^T``."""
    if t < 1 or t > 3:
        raise UnsupportedError(f"pair projector implemented for t in 1..3, got {t}")
    v = site_vectors(t)
    pair_vecs = np.array([np.kron(a, a) for a in v])
    # two sites form one d=4 system, so the Gram matrix is the d=4 one
    coeffs = gram_orthonormal_coeffs(t, 4)
    W = (coeffs @ pair_vecs).T
    W.setflags(write=False)
    return W


def pair_projector(t: int) -> np.ndarray:
    """Dense ``16**t`` Haar twirl projector on two neighbouring sites (site-major layout)."""
    W = pair_factor(t)
    return W @ W.T


def haar_moment_operator(t: int, d: int) -> np.ndarray:
    """``E_U[U^{x t} (x) conj(U)^{x t}]`` over Haar ``U(d)`` in the natural copy layout.

    Row index ``(i_1..i_t, i'_1..i'_t)`` against column ``(j_1..j_t, j'_1..j'_t)``
    holds ``E[U_{i1 j1} .. U_{it jt} conj(U_{i'1 j'1}) .. conj(U_{i't j't})]``.
    """
    if d ** (4 * t) > MAX_ENTRIES:
        raise CapacityError("moment operator too large to hold densely")
    vecs = np.array([permutation_vector(p, d) for p in all_perms(t)])
    coeffs = gram_orthonormal_coeffs(t, d)
    W = (coeffs @ vecs).T
    return W @ W.T


def term_pairs(n: int, model: str, boundary: str) -> list[tuple[int, int]]:
    if model == "local":
        pairs = [(i, i + 1) for i in range(n - 1)]
        if boundary == "periodic" and n > 2:
            pairs.append((n - 1, 0))
        return pairs
    if model == "uniform":
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    raise ValueError(f"unknown model {model!r}")


def resolve_boundary(n: int, boundary: str | None) -> str:
    """``None`` means: the open three-site block for n=3, the circle otherwise."""
    if boundary is None:
        return "open" if n == 3 else "periodic"
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    return boundary


@dataclass
class MomentOperator:
    """One step of the t-th moment walk: average of two-site projectors.

    ``local``: ``(1/|E|) sum_{(i,j) in E} P_ij`` over circle (or chain) edges.
    ``uniform``: average over all ``n(n-1)/2`` pairs.
    The top eigenvalue is 1, with eigenspace spanned by the global permutation
    vectors.
    """

    t: int
    n: int
    model: str = "local"
    boundary: str | None = None
    pairs: list[tuple[int, int]] = field(init=False)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.n < 2:
            raise ShapeError("need at least two sites")
        self.boundary = resolve_boundary(self.n, self.boundary) if self.model == "local" else "all-pairs"
        self.pairs = term_pairs(self.n, self.model, self.boundary)
        self.factor = pair_factor(self.t)

    @property
    def site_dim(self) -> int:
        return 4**self.t

    @property
    def dim(self) -> int:
        return self.site_dim**self.n

    @property
    def projector(self) -> np.ndarray:
        return pair_projector(self.t)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return moment_matvec(self, x)

    def global_vectors(self) -> np.ndarray:
        """Rows: the ``t!`` unnormalized global ``|V_pi>`` (tensor power of the site vectors)."""
        out = []
        for v in site_vectors(self.t):
            g = v
            for _ in range(self.n - 1):
                g = np.kron(g, v)
            out.append(g)
        return np.array(out)

    def fixed_basis(self) -> np.ndarray:
        """Orthonormal columns spanning the eigenvalue-1 space, via the analytic Gram matrix."""
        coeffs = gram_orthonormal_coeffs(self.t, 2**self.n)
        return (coeffs @ self.global_vectors()).T

    def dense(self) -> np.ndarray:
        if self.dim**2 > MAX_ENTRIES:
            raise CapacityError(f"dense moment operator of dimension {self.dim} exceeds the cap")
        return self.matvec(np.eye(self.dim))


def moment_matvec(op: MomentOperator, x: np.ndarray) -> np.ndarray:
    """``op @ x`` without forming the operator; ``x`` may have one trailing batch axis.

    Terms are accumulated in ascending pair order.
    """
    x = np.asarray(x)
    if x.shape[0] != op.dim or x.ndim > 2:
        raise ShapeError(f"vector of shape {x.shape} does not match dimension {op.dim}")
    s, n, W = op.site_dim, op.n, op.factor
    batch = x.shape[1:]
    xt = x.reshape((s,) * n + batch)
    y = np.zeros_like(xt, dtype=np.result_type(x.dtype, W.dtype))
    for i, j in op.pairs:
        block = np.moveaxis(xt, (i, j), (0, 1))
        shape = block.shape
        flat = block.reshape(s * s, -1)
        z = W @ (W.T @ flat)
        y += np.moveaxis(z.reshape(shape), (0, 1), (i, j))
    y /= len(op.pairs)
    return y.reshape(x.shape)


def site_to_natural_axes(t: int, n: int) -> list[int]:
    """Axis permutation taking a site-major tensor to the copy-major natural layout.

    Natural layout: forward copies ``c = 0..t-1`` (each n qubits), then conjugate
    copies. Entry ``k`` of the result is the site-major axis that lands at
    natural position ``k``.
    """
    axes = []
    for c in range(2 * t):
        for q in range(n):
            axes.append(q * 2 * t + c)
    return axes
