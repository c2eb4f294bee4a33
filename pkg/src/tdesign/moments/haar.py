"""Monte-Carlo Haar moments checked against exact values."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..linalg import RNGLike, as_generator, haar_unitary
from .operator import haar_moment_operator


@dataclass
class MomentEstimate:
    name: str
    estimate: complex
    stderr: float
    exact: complex

    @property
    def z_score(self) -> float:
        return abs(self.estimate - self.exact) / self.stderr if self.stderr > 0 else math.inf


def symmetric_moment(d: int, t: int) -> float:
    """``E|U_ij|^{2t}`` over Haar ``U(d)``: inverse dimension of the symmetric subspace."""
    return 1.0 / math.comb(d + t - 1, t)


def exact_monomial(d: int, rows: tuple[int, ...], cols: tuple[int, ...], crows: tuple[int, ...], ccols: tuple[int, ...]) -> complex:
    """``E[prod U_{rows,cols} prod conj(U)_{crows,ccols}]`` read off the exact Haar moment operator."""
    t = len(rows)
    G = haar_moment_operator(t, d)
    shape = (d,) * (2 * t)
    r = np.ravel_multi_index(tuple(rows) + tuple(crows), shape)
    c = np.ravel_multi_index(tuple(cols) + tuple(ccols), shape)
    return complex(G[r, c])


def _batched(samples: int, d: int, gen: np.random.Generator, batch: int = 20_000):
    left = samples
    while left > 0:
        m = min(batch, left)
        yield haar_unitary(d, gen, size=m)
        left -= m


def monomial_moment_check(t: int, d: int, samples: int, rng: RNGLike) -> list[MomentEstimate]:
    """Sample ``samples`` Haar unitaries; compare moments with exact values.

    Returns one estimate per diagonal moment ``|U_00|^{2s}`` for ``s = 1..t`` and
    one for the off-diagonal balanced monomial ``U_00 U_11 conj(U_01) conj(U_10)``.
    """
    if samples < 10_000:
        raise ValueError("need at least 10^4 samples")
    gen = as_generator(rng)
    powers = {s: [] for s in range(1, t + 1)}
    cross = []
    for Us in _batched(samples, d, gen):
        a2 = np.abs(Us[:, 0, 0]) ** 2
        for s in powers:
            powers[s].append(a2**s)
        cross.append(Us[:, 0, 0] * Us[:, 1, 1] * np.conj(Us[:, 0, 1]) * np.conj(Us[:, 1, 0]))
    out = []
    for s, chunks in powers.items():
        x = np.concatenate(chunks)
        out.append(MomentEstimate(f"|U00|^{2 * s}", float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), symmetric_moment(d, s)))
    x = np.concatenate(cross)
    se = math.sqrt((x.real.var(ddof=1) + x.imag.var(ddof=1)) / x.size)
    out.append(MomentEstimate("U00 U11 U01* U10*", complex(x.mean()), se, exact_monomial(d, (0, 1), (0, 1), (0, 1), (1, 0))))
    return out


def haar_power_means(d: int, t_values=(1, 2, 3), samples: int = 100_000, rng: RNGLike = 0) -> dict[int, tuple[float, float]]:
    """Mean and standard error of ``|U_00|^{2t}`` from one shared batch of draws."""
    gen = as_generator(rng)
    a2 = np.concatenate([np.abs(Us[:, 0, 0]) ** 2 for Us in _batched(samples, d, gen)])
    return {t: (float((a2**t).mean()), float((a2**t).std(ddof=1) / math.sqrt(samples))) for t in t_values}

