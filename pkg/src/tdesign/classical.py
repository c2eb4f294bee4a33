"""Classical side of circuit checking.

* k-term probabilities of the sign string ``(sgn(v), sgn(Re(Uv)))`` and the
  almost-k-wise-independence bound ``6 k^3 2^(-C(U)/2)``;
* the covariance of the signed Gaussian coordinates behind that bound;
* a sampling distinguisher for the independent-query oracle model;
* sparse approximation of ``U`` and a Monte-Carlo estimator of ``<g|U|f>``
  that only reads ``f`` and ``g`` at sampled points.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .checking import MODES, OracleInstance, correlated_signs
from .circuits import dispersiveness
from .errors import BudgetError, InsufficientQueriesError, InvalidSpecError
from .linalg import RandomSource, RNGLike, as_generator

MAX_K = 8
SPARSE_FORMAT_VERSION = 1


# -- k-terms ---------------------------------------------------------------


@dataclass(frozen=True)
class KTerm:
    """Conjunction of literals ``omega[p] == sign`` over positions of the length-2N string.

    Positions ``< N`` index ``sgn(v)``; positions ``N + x`` index ``sgn(Re(Uv)_x)``.
    """

    positions: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self):
        if len(self.positions) != len(self.signs):
            raise InvalidSpecError("positions and signs differ in length")
        if not 1 <= len(self.positions) <= MAX_K:
            raise InvalidSpecError(f"k must be in 1..{MAX_K}")
        if len(set(self.positions)) != len(self.positions):
            raise InvalidSpecError("k-term positions must be distinct")
        if any(s not in (-1, 1) for s in self.signs):
            raise InvalidSpecError("signs must be +-1")

    @property
    def k(self) -> int:
        return len(self.positions)


def random_kterm(N: int, k: int, rng: RNGLike) -> KTerm:
    gen = as_generator(rng)
    pos = gen.choice(2 * N, size=k, replace=False)
    signs = 2 * gen.integers(0, 2, k) - 1
    return KTerm(tuple(int(p) for p in pos), tuple(int(s) for s in signs))


def coordinate_map(U: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    """Real ``k x N`` matrix ``L`` with ``(L v)_i`` the pre-sign value at ``positions[i]``."""
    N = U.shape[0]
    rows = []
    for p in positions:
        if p < N:
            e = np.zeros(N)
            e[p] = 1.0
            rows.append(e)
        elif p < 2 * N:
            rows.append(np.asarray(U[p - N]).real.astype(float))
        else:
            raise InvalidSpecError(f"position {p} out of range for N={N}")
    return np.array(rows)


def sample_coordinates(U: np.ndarray, positions: Sequence[int], samples: int, rng: RNGLike) -> np.ndarray:
    """Exact draws of ``L v`` for standard Gaussian ``v``, shape ``(samples, k)``.

    With ``L^T = Q R`` (thin QR), ``L v = R^T (Q^T v)`` and ``Q^T v`` is standard
    normal in ``k`` dimensions, so only ``k`` normals per sample are needed.
    """
    L = coordinate_map(U, positions)
    _, R = np.linalg.qr(L.T)
    w = as_generator(rng).standard_normal((samples, R.shape[0]))
    return w @ R


def kterm_probability(
    U: np.ndarray, term: KTerm, samples: int, rng: RNGLike, method: str = "marginal", batch: int = 4096
) -> tuple[float, float]:
    """Monte-Carlo ``Pr[term holds]`` over Gaussian ``v``; returns (estimate, stderr).

    ``method="full"`` draws the whole vector ``v`` and forms ``Re(Uv)`` (slow,
    kept as a cross-check); ``"marginal"`` samples only the k coordinates involved.
    """
    if samples < 10_000:
        raise ValueError("need at least 10^4 samples")
    signs = np.asarray(term.signs)
    if method == "marginal":
        z = sample_coordinates(U, term.positions, samples, rng)
        hits = np.all(np.where(z >= 0, 1, -1) == signs, axis=1)
    elif method == "full":
        gen = as_generator(rng)
        N = U.shape[0]
        pos = np.asarray(term.positions)
        hits = np.empty(samples, dtype=bool)
        for start in range(0, samples, batch):
            m = min(batch, samples - start)
            f, g = correlated_signs(U, gen.standard_normal((N, m)))
            omega = np.concatenate([f, g])[pos]
            hits[start : start + m] = np.all(omega == signs[:, None], axis=0)
    else:
        raise ValueError(f"unknown method {method!r}")
    p = float(hits.mean())
    return p, math.sqrt(max(p * (1 - p), 1.0 / samples) / samples)


def kwise_bound(k: int, c_value: float) -> float:
    """``eps = 6 k^3 2^(-C/2)``: every k-term probability lies in ``(1 +- eps) 2^-k``."""
    if k < 1 or c_value < 0:
        raise ValueError("need k >= 1 and C >= 0")
    return 6.0 * k**3 * 2.0 ** (-c_value / 2)


def orthant_probability_2(rho: float) -> float:
    """``Pr[X >= 0, Y >= 0]`` for standard bivariate normals with correlation ``rho``."""
    return 0.25 + math.asin(rho) / (2 * math.pi)


@dataclass
class KwiseRecord:
    term: KTerm
    estimate: float
    stderr: float
    bound: float

    @property
    def deviation(self) -> float:
        return abs(2**self.term.k * self.estimate - 1)

    @property
    def slack(self) -> float:
        return 5 * 2**self.term.k * self.stderr

    @property
    def passed(self) -> bool:
        return self.deviation <= self.bound + self.slack


def kwise_suite(U: np.ndarray, ks: Iterable[int], terms: int, samples: int, rng: RandomSource) -> list[KwiseRecord]:
    """Random k-terms per ``k``; term ``i`` of order ``k`` uses ``rng.substream(k).substream(i)``."""
    c = dispersiveness(U).c_value
    N = U.shape[0]
    out = []
    for k in ks:
        bound = kwise_bound(k, c)
        for i in range(terms):
            src = rng.substream(k).substream(i)
            gen = src.generator()
            term = random_kterm(N, k, gen)
            est, se = kterm_probability(U, term, samples, gen)
            out.append(KwiseRecord(term, est, se, bound))
    return out


KTERM_CSV_FIELDS = ("unitary", "k", "positions", "signs", "estimate", "stderr", "bound")


def write_kterm_csv(
    records: Sequence[KwiseRecord], path: str | Path, unitary_id: str | Sequence[str], comment: str | None = None
) -> None:
    """One CSV row per k-term; positions and signs are space-separated.

    ``unitary_id`` is one label for all rows or one label per record. A
    ``comment`` is written first as a ``#`` line.
    """
    ids = [unitary_id] * len(records) if isinstance(unitary_id, str) else list(unitary_id)
    with open(path, "w", newline="") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh)
        w.writerow(KTERM_CSV_FIELDS)
        for uid, rec in zip(ids, records):
            w.writerow(
                [
                    uid,
                    rec.term.k,
                    " ".join(map(str, rec.term.positions)),
                    " ".join(map(str, rec.term.signs)),
                    repr(rec.estimate),
                    repr(rec.stderr),
                    repr(rec.bound),
                ]
            )


# -- covariance ------------------------------------------------------------


@dataclass
class CovarianceSpec:
    m: int
    s: tuple[int, ...]
    r: tuple[int, ...]
    a: tuple[int, ...]
    sigma: np.ndarray
    eig_min: float
    eig_max: float
    radius: float

    @property
    def k(self) -> int:
        return len(self.a)

    @property
    def within_sandwich(self) -> bool:
        return 1 - self.radius - 1e-12 <= self.eig_min and self.eig_max <= 1 + self.radius + 1e-12


def covariance_matrix(U: np.ndarray, s: Sequence[int], r: Sequence[int], a: Sequence[int]) -> CovarianceSpec:
    """Covariance ``E[conj(y) y^T]`` of ``y = (a_1 z_1, ..., a_k z_k)``.

    ``z`` lists ``v_{s(1)}..v_{s(m)}`` then ``(Uv)_{r(1)}..(Uv)_{r(k-m)}``. The
    off-diagonal block is ``Q[i, j] = a_i a_{m+j} U[r(j), s(i)]`` because
    ``E[v_x (Uv)_y] = U[y, x]``. The eigenvalues are compared with
    ``1 +- k^2 2^(-C(U)/2)``.
    """
    s, r, a = tuple(int(x) for x in s), tuple(int(x) for x in r), tuple(int(x) for x in a)
    m, k = len(s), len(s) + len(r)
    if len(set(s)) != len(s) or len(set(r)) != len(r):
        raise InvalidSpecError("index maps s and r must be injective")
    if len(a) != k or any(x not in (-1, 1) for x in a):
        raise InvalidSpecError(f"sign tuple must have {k} entries in {{-1, +1}}")
    if k > MAX_K:
        raise InvalidSpecError(f"k = {k} exceeds {MAX_K}")
    U = np.asarray(U)
    Q = np.array([[a[i] * a[m + j] * U[r[j], s[i]] for j in range(k - m)] for i in range(m)], dtype=complex)
    sigma = np.eye(k, dtype=complex)
    sigma[:m, m:] = Q.reshape(m, k - m)
    sigma[m:, :m] = Q.conj().T.reshape(k - m, m)
    w = np.linalg.eigvalsh(sigma)
    radius = k**2 * 2 ** (-dispersiveness(U).c_value / 2)
    return CovarianceSpec(m, s, r, a, sigma, float(w[0]), float(w[-1]), radius)


def signed_samples(U: np.ndarray, spec: CovarianceSpec, samples: int, rng: RNGLike) -> np.ndarray:
    """Draw ``y`` directly from full Gaussian vectors, shape ``(samples, k)``; for covariance checks."""
    gen = as_generator(rng)
    N = U.shape[0]
    v = gen.standard_normal((N, samples))
    z = np.concatenate([v[list(spec.s)], (U[list(spec.r)] @ v)]).T
    return z * np.asarray(spec.a)


# -- sign correlations and the independent-query distinguisher --------------


def sign_correlation_exact(U: np.ndarray, i: int, j: int) -> float:
    """``E[sgn(v_i) sgn(Re(Uv)_j)] = (2/pi) arcsin(rho)``, ``rho = Re U[j,i] / |Re U[j,:]|``."""
    row = np.asarray(U[j]).real
    norm = np.linalg.norm(row)
    if norm == 0:
        return 0.0
    rho = float(np.clip(row[i] / norm, -1.0, 1.0))
    return 2 / math.pi * math.asin(rho)


def sign_correlation(U: np.ndarray, i: int, j: int, trials: int, rng: RNGLike) -> tuple[float, float]:
    """Monte-Carlo ``E[f(i) g(j)]`` for U-correlated strings; returns (estimate, stderr)."""
    if trials < 10_000:
        raise ValueError("need at least 10^4 trials")
    N = U.shape[0]
    z = sample_coordinates(U, [i, N + j], trials, rng)
    prod = np.where(z[:, 0] >= 0, 1, -1) * np.where(z[:, 1] >= 0, 1, -1)
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(trials))


class OracleStream:
    """Independent-query oracle: each realization is a fresh instance of the given mode.

    ``query(x, y, count)`` returns ``f_r(x)`` and ``g_r(y)`` for ``count`` new
    realizations ``r``. With ``lazy=True`` only the two revealed coordinates
    ``(v_x, Re(Uv)_y)`` are drawn, from their exact joint Gaussian law; with
    ``lazy=False`` every realization is a whole Gaussian vector.
    """

    def __init__(
        self, U: np.ndarray, mode: str, rng: RNGLike, budget: int | None = None, lazy: bool = True, batch: int = 4096
    ):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.U = np.asarray(U)
        self.mode = mode
        self.gen = as_generator(rng)
        self.budget = budget
        self.lazy = lazy
        self.used = 0
        self.batch = batch

    def query(self, x: int, y: int, count: int) -> tuple[np.ndarray, np.ndarray]:
        if self.budget is not None and self.used + count > self.budget:
            raise InsufficientQueriesError(f"stream has {self.budget - self.used} realizations left, {count} requested")
        self.used += count
        N = self.U.shape[0]
        if self.mode == "independent":
            pair = 2 * self.gen.integers(0, 2, (2, count)) - 1
            return pair[0], pair[1]
        if self.lazy:
            z = sample_coordinates(self.U, [x, N + y], count, self.gen)
            return np.where(z[:, 0] >= 0, 1, -1), np.where(z[:, 1] >= 0, 1, -1)
        fs, gs = [], []
        left = count
        while left > 0:
            m = min(self.batch, left)
            F, G = correlated_signs(self.U, self.gen.standard_normal((N, m)))
            fs.append(F[x])
            gs.append(G[y])
            left -= m
        return np.concatenate(fs).astype(int), np.concatenate(gs).astype(int)


class RecordedStream:
    """Replays stored realizations in order."""

    def __init__(self, instances: Sequence[OracleInstance]):
        self.instances = list(instances)
        self.used = 0

    def query(self, x: int, y: int, count: int) -> tuple[np.ndarray, np.ndarray]:
        if self.used + count > len(self.instances):
            raise InsufficientQueriesError(f"{len(self.instances) - self.used} recorded realizations left, {count} requested")
        chunk = self.instances[self.used : self.used + count]
        self.used += count
        return np.array([inst.f[x] for inst in chunk]), np.array([inst.g[y] for inst in chunk])


@dataclass(frozen=True)
class Distinguished:
    decision: str
    queries: int
    entry: tuple[int, int]
    statistic: float
    threshold: float


HOEFFDING_CONSTANT = 32.0


def query_budget(re_entry: float, eps: float, constant: float = HOEFFDING_CONSTANT) -> int:
    """``ceil(constant * ln(1/eps) / Re(U_ij)^2)`` realizations.

    ``constant = 32`` makes both error probabilities at most ``eps`` by
    Hoeffding (deviation ``Re/4`` of a mean of +-1 variables).
    """
    return math.ceil(constant * math.log(1 / eps) / re_entry**2)


def independent_query_distinguish(
    U: np.ndarray, stream, eps: float, constant: float = HOEFFDING_CONSTANT
) -> Distinguished:
    """Decide independent vs U-correlated from single-entry products ``f_r(col) g_r(row)``.

    Picks the entry ``(row, col)`` with the largest ``|Re U|`` (the product's mean is
    ``(2/pi) arcsin`` of a correlation proportional to ``Re U[row, col]``), queries
    ``query_budget`` realizations and thresholds the sign-corrected mean at
    ``|Re U[row, col]| / 4``.
    """
    U = np.asarray(U)
    re = U.real
    row, col = divmod(int(np.argmax(np.abs(re))), U.shape[1])
    u = float(re[row, col])
    if u == 0.0:
        raise ValueError("U has no entry with nonzero real part")
    N = query_budget(abs(u), eps, constant)
    f, g = stream.query(col, row, N)
    stat = float(np.sign(u) * np.mean(f * g))
    thr = abs(u) / 4
    decision = "u-correlated" if stat >= thr else "independent"
    return Distinguished(decision, N, (row, col), stat, thr)


# -- sparse approximation and overlap estimation ---------------------------


@dataclass
class SparseMatrix:
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def sparsity(self) -> int:
        """Largest number of nonzeros in any row or column."""
        A = self.matrix
        return int(max(np.diff(A.indptr).max(initial=0), np.diff(A.tocsc().indptr).max(initial=0)))

    def rows(self) -> list[list[tuple[int, complex]]]:
        A = self.matrix
        return [list(zip(A.indices[A.indptr[i] : A.indptr[i + 1]].tolist(), A.data[A.indptr[i] : A.indptr[i + 1]].tolist())) for i in range(self.dim)]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def to_dict(self) -> dict:
        return {
            "version": SPARSE_FORMAT_VERSION,
            "dim": self.dim,
            "rows": [[[c, z.real, z.imag] for c, z in row] for row in self.rows()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SparseMatrix":
        if data.get("version") != SPARSE_FORMAT_VERSION:
            raise ValueError(f"unsupported sparse file version {data.get('version')}")
        dim = data["dim"]
        r, c, v = [], [], []
        for i, row in enumerate(data["rows"]):
            for col, re, im in row:
                r.append(i)
                c.append(int(col))
                v.append(complex(re, im))
        return cls(sp.csr_matrix((np.array(v, dtype=complex), (r, c)), shape=(dim, dim)))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "SparseMatrix":
        return cls.from_dict(json.loads(Path(path).read_text()))


def spectral_norm(A, iters: int = 1000, tol: float = 1e-12, rng: RNGLike = 0) -> float:
    """Largest singular value by power iteration on ``A^H A``."""
    gen = as_generator(rng)
    n = A.shape[1]
    x = gen.standard_normal(n) + 1j * gen.standard_normal(n)
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(iters):
        y = A.conj().T @ (A @ x)
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0
        new = math.sqrt(norm)
        x = y / norm
        if abs(new - sigma) <= tol * max(new, 1.0):
            return new
        sigma = new
    return sigma


def sparse_approximate(U: np.ndarray, keep_per_row: int) -> tuple[SparseMatrix, float]:
    """Keep each row's ``keep_per_row`` largest-modulus entries, plus each column's.

    Returns the sparse matrix and ``||U - U_sparse||`` (spectral norm, power iteration).
    """
    U = np.asarray(U)
    mod = np.abs(U)
    k = min(keep_per_row, U.shape[1])
    # stable sort so ties resolve to lower indices
    row_top = np.argsort(-mod, axis=1, kind="stable")[:, :k]
    col_top = np.argsort(-mod, axis=0, kind="stable")[:k, :]
    mask = np.zeros(U.shape, dtype=bool)
    np.put_along_axis(mask, row_top, True, axis=1)
    np.put_along_axis(mask, col_top, True, axis=0)
    mask &= U != 0
    Ut = sp.csr_matrix(np.where(mask, U, 0))
    err = spectral_norm(U - Ut.toarray())
    return SparseMatrix(Ut), err


def hoeffding_samples(term_bound: float, accuracy: float, delta: float) -> int:
    """Samples so that a complex mean of terms with ``|term| <= term_bound`` is within
    ``accuracy`` with probability ``1 - delta`` (real and imaginary parts each get
    ``accuracy/sqrt(2)`` and ``delta/2``)."""
    return math.ceil(4 * term_bound**2 * math.log(4 / delta) / accuracy**2)


@dataclass(frozen=True)
class OverlapEstimate:
    estimate: complex
    stderr: float
    samples: int
    queries: int
    term_bound: float


def sparse_overlap_estimate(
    Ut: SparseMatrix,
    f: np.ndarray,
    g: np.ndarray,
    rng: RNGLike,
    accuracy: float = 0.01,
    delta: float = 0.01,
    samples: int | None = None,
    max_samples: int = 50_000_000,
    batch: int = 1_000_000,
) -> OverlapEstimate:
    """Estimate ``<g|U_sparse|f>`` reading the oracles only at sampled points.

    ``x`` is drawn uniformly (the outcome distribution of ``|f>``); each sample
    contributes ``f(x) * sum_a g(a) U[a, x]``, which reads ``f`` once and ``g`` on
    the support of column ``x``. Its mean is the overlap exactly.
    """
    A = Ut.matrix.tocsc()
    N = A.shape[0]
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    col_l1 = np.asarray(abs(A).sum(axis=0)).ravel()
    bound = float(col_l1.max()) if col_l1.size else 0.0
    if samples is None:
        samples = hoeffding_samples(max(bound, 1e-300), accuracy, delta)
    if samples > max_samples:
        raise BudgetError(f"{samples} samples needed for accuracy {accuracy}, cap is {max_samples}")
    gen = as_generator(rng)
    indptr, indices, data = A.indptr, A.indices, A.data
    counts = np.diff(indptr)
    total = 0j
    sq = 0.0
    queries = 0
    left = samples
    while left > 0:
        m = min(batch, left)
        x = gen.integers(0, N, m)
        c = counts[x]
        # gather the support of each sampled column
        owner = np.repeat(np.arange(m), c)
        starts = np.repeat(indptr[x], c)
        offs = np.arange(c.sum()) - np.repeat(np.cumsum(c) - c, c)
        nz = starts + offs
        w = g[indices[nz]] * data[nz]
        contrib = np.bincount(owner, w.real, minlength=m) + 1j * np.bincount(owner, w.imag, minlength=m)
        terms = f[x] * contrib
        total += terms.sum()
        sq += float(np.sum(np.abs(terms) ** 2))
        queries += m + int(c.sum())
        left -= m
    mean = total / samples
    var = max(sq / samples - abs(mean) ** 2, 0.0) * samples / max(samples - 1, 1)
    return OverlapEstimate(complex(mean), math.sqrt(var / samples), samples, queries, bound)


DECISION_THRESHOLD = 0.035


def decide(p: float, threshold: float = DECISION_THRESHOLD) -> str:
    """Accept-probability rule: above ``threshold`` means U-correlated.

    The threshold halves the correlated-mode lower bound 0.07; independent
    instances have mean ``2^-n``.
    """
    return "u-correlated" if p >= threshold else "independent"


def block_diagonal_haar(n: int, block: int, rng: RNGLike) -> np.ndarray:
    """``2^n`` unitary made of independent Haar blocks of size ``block`` (exactly sparse)."""
    from .linalg import haar_unitary

    N = 2**n
    if N % block:
        raise ValueError("block size must divide 2^n")
    blocks = haar_unitary(block, rng, size=N // block)
    U = np.zeros((N, N), dtype=complex)
    for b in range(N // block):
        U[b * block : (b + 1) * block, b * block : (b + 1) * block] = blocks[b]
    return U
