"""Covariance of discrete logs under different bases, computed exactly."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from ..zp_core import as_group, dlog_table


def _row_sums(logs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return logs.sum(axis=1), (logs * logs).sum(axis=1)


def log_variance(group, base: int) -> Fraction:
    """``Var_X[log_base X]`` over uniform X in Z_p^*, exactly."""
    g = as_group(group)
    logs = dlog_table(g)[base - 1]
    m = g.order
    s1, s2 = int(logs.sum()), int((logs * logs).sum())
    return Fraction(s2 * m - s1 * s1, m * m)


def log_variance_matches_closed_form(group) -> bool:
    """True iff every base has ``Var[log_a X] == p**2/12 - p/6`` exactly."""
    g = as_group(group)
    p, m = g.p, g.order
    s1, s2 = _row_sums(dlog_table(g))
    # 12 * m^2 * Var  ==  (p^2 - 2p) * m^2, all in integers
    lhs = 12 * (s2 * m - s1 * s1)
    return bool(np.all(lhs == (p * p - 2 * p) * m * m))


def mean_squared_covariance(group) -> Fraction:
    """``E_{A,B} Cov_X[log_A X, log_B X]^2`` over all ordered base pairs."""
    g = as_group(group)
    p, m = g.p, g.order
    logs = dlog_table(g)
    # products stay below 2**53, so the float Gram matrix is exact
    t = np.rint(logs.astype(np.float64) @ logs.T.astype(np.float64)).astype(np.int64)
    s1, _ = _row_sums(logs)
    # m^2 * Cov_ab = m * T_ab - s1_a * s1_b
    d = m * t - np.outer(s1, s1)
    total = sum(int(v) * int(v) for v in d.ravel())
    return Fraction(total, m**6)


def fit_power_log(ps, values) -> dict:
    """Least squares for ``ln v = ln C + alpha ln p + beta ln ln p``."""
    ps = np.asarray(ps, dtype=np.float64)
    y = np.log(np.asarray(values, dtype=np.float64))
    design = np.column_stack([np.ones_like(ps), np.log(ps), np.log(np.log(ps))])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return {
        "C": math.exp(coef[0]),
        "alpha": float(coef[1]),
        "beta": float(coef[2]),
        "rms_log_residual": float(np.sqrt(np.mean(resid**2))),
    }
