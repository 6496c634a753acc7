"""Near-orthogonality of the parity-bit class ``{h_a : a in Z_p^*}``.

All quantities that are asserted exactly are computed in integers: arrays
hold numerators over a known denominator (``p-1`` for expectations over
one variable), and scalar results are returned as :class:`fractions.Fraction`.
Inner products use ``<u, v> = mean(u * v)`` throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .zp_core import GroupSpec, as_group, dlog_table, parity_table

EXHAUSTIVE_LIMIT = 10_000


def _exact_gram(h: np.ndarray) -> np.ndarray:
    # +-1 entries: every partial sum is an integer far below 2**53, so the
    # BLAS product is exact and rounding recovers it.
    prod = h.astype(np.float64) @ h.T.astype(np.float64)
    return np.rint(prod).astype(np.int64)


@dataclass(frozen=True)
class FStatistic:
    """``f(y) = numerators[y-1] / (p-1)`` for every ``y`` in Z_p^*."""

    group: GroupSpec
    numerators: np.ndarray

    @property
    def denominator(self) -> int:
        return self.group.order

    def value(self, y: int) -> Fraction:
        return Fraction(int(self.numerators[y - 1]), self.denominator)


def f_statistic(group) -> FStatistic:
    """``f(y) = E_X[(-1)**X * (-1)**(y*X mod p)]`` for all ``y`` at once."""
    g = as_group(group)
    x = g.nonzero()
    sign_x = 1 - 2 * (x & 1)
    yx = np.outer(x, x) % g.p  # row y, column x
    nums = ((1 - 2 * (yx & 1)) * sign_x[None, :]).sum(axis=1)
    return FStatistic(g, nums.astype(np.int64))


def f_of_y(group, y: int) -> Fraction:
    g = as_group(group)
    if not 0 < y < g.p:
        raise DomainError(f"y={y} must be a nonzero element of Z_{g.p}")
    x = g.nonzero()
    terms = (1 - 2 * (x & 1)) * (1 - 2 * ((y * x % g.p) & 1))
    return Fraction(int(terms.sum()), g.order)


def phi_mean_over_y(group, x: int) -> Fraction:
    """``E_Y[phi(x, Y)]`` exactly; always zero for prime ``p``."""
    g = as_group(group)
    if not 0 < x < g.p:
        raise DomainError(f"x={x} must be a nonzero element of Z_{g.p}")
    y = g.nonzero()
    total = (1 - 2 * (x & 1)) * int((1 - 2 * ((y * x % g.p) & 1)).sum())
    return Fraction(total, g.order)


@dataclass(frozen=True)
class VarianceEstimate:
    """Monte-Carlo estimate of ``Var[f(Y)]`` beyond the exhaustive limit."""

    estimate: float
    standard_error: float
    samples: int


def variance_f(
    group,
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
    samples: int = 2000,
    seed: int = 0,
) -> Fraction | VarianceEstimate:
    """Exact ``Var[f(Y)] = E[f(Y)^2]`` with denominator ``(p-1)**3``.

    Above ``exhaustive_limit`` the variance is estimated by sampling
    ``samples`` values of Y (each f(Y) still exact) and a
    :class:`VarianceEstimate` is returned instead.
    """
    g = as_group(group)
    if g.p <= exhaustive_limit:
        nums = f_statistic(g).numerators
        return Fraction(int(np.dot(nums, nums)), g.order**3)
    rng = np.random.default_rng(seed)
    ys = rng.integers(1, g.p, size=samples)
    sq = np.array([float(f_of_y(g, int(y))) ** 2 for y in ys])
    return VarianceEstimate(
        estimate=float(sq.mean()),
        standard_error=float(sq.std(ddof=1) / math.sqrt(samples)),
        samples=samples,
    )


@dataclass(frozen=True)
class InnerProductTable:
    """``<h_a, h_b> = numerators[a-1, b-1] / (p-1)``."""

    group: GroupSpec
    numerators: np.ndarray

    @property
    def denominator(self) -> int:
        return self.group.order

    def value(self, a: int, b: int) -> Fraction:
        return Fraction(int(self.numerators[a - 1, b - 1]), self.denominator)


def inner_product_table(group, exhaustive_limit: int = EXHAUSTIVE_LIMIT) -> InnerProductTable:
    g = as_group(group)
    if g.p > exhaustive_limit:
        raise DomainError(f"p={g.p} exceeds the exhaustive limit {exhaustive_limit}")
    return InnerProductTable(g, _exact_gram(parity_table(g)))


def sum_squared_all(table: InnerProductTable) -> Fraction:
    """``sum_{a,b} <h_a, h_b>^2`` including the diagonal."""
    nums = table.numerators
    return Fraction(int(np.einsum("ij,ij->", nums, nums)), table.denominator**2)


def sum_squared_offdiag(table: InnerProductTable) -> tuple[Fraction, float]:
    """``sum_{a != b} <h_a, h_b>^2`` and that sum divided by ``p ln^2 p``."""
    nums = table.numerators
    diag = np.diagonal(nums)
    total = int(np.einsum("ij,ij->", nums, nums)) - int(np.dot(diag, diag))
    s = Fraction(total, table.denominator**2)
    p = table.group.p
    return s, float(s) / (p * math.log(p) ** 2)


def dlog_base_distribution(group, exhaustive_limit: int = EXHAUSTIVE_LIMIT) -> np.ndarray:
    """Counts of ``log_b a`` over all pairs; entry ``y-1`` counts the value ``y``.

    Raises if any pair produced the value 0.
    """
    g = as_group(group)
    if g.p > exhaustive_limit:
        raise DomainError(f"p={g.p} exceeds the exhaustive limit {exhaustive_limit}")
    # dlog_table rows are bases b, columns arguments a
    counts = np.bincount(dlog_table(g).ravel(), minlength=g.p)
    if counts[0]:
        raise DomainError("a discrete log evaluated to 0")
    return counts[1:]


def boas_bellman_gap(g, hs) -> tuple[float, float]:
    """Both sides of ``sum <h_i,g>^2 <= |g|^2 (max|h_i|^2 + sqrt(sum_{i!=j} <h_i,h_j>^2))``."""
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(hs, dtype=np.float64)
    if g.ndim != 1 or h.ndim != 2 or h.shape[1] != g.shape[0]:
        raise DomainError(
            f"dimension mismatch: g has shape {g.shape}, hs has shape {h.shape}"
        )
    m = g.shape[0]
    hg = h @ g / m
    gram = h @ h.T / m
    norms = np.diagonal(gram)
    cross = float(np.sum(gram**2) - np.sum(norms**2))
    lhs = float(np.sum(hg**2))
    rhs = float(g @ g / m) * (float(norms.max()) + math.sqrt(max(cross, 0.0)))
    return lhs, rhs


def orthogonality_record(group) -> dict:
    """Per-prime summary consumed by the experiment sweeps."""
    g = as_group(group)
    p = g.p
    var = variance_f(g)
    off, ratio = sum_squared_offdiag(inner_product_table(g))
    return {
        "p": p,
        "var_f": float(var),
        "var_ratio": float(var) * p / math.log(p) ** 2,
        "sum_sq_offdiag": float(off),
        "offdiag_ratio": ratio,
    }
