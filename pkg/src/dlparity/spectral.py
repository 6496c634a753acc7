"""Sign matrices built from Z_p^* and their spectral norms.

``phi`` has entries ``(-1)**x * (-1)**(y*x mod p)`` (row x, column y) and
``phi_prime`` has entries ``(-1)**(j*k mod p)``. Rows and columns are
labelled by ``1..p-1`` in ascending order, so label ``x`` lives at index
``x - 1``.

Two independent routes to singular values are provided: power iteration on
the Gram matrix (used for sweeps) and a one-sided Jacobi SVD (used only as
an oracle on small matrices).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import CapacityError, ConvergenceError, DomainError, VerificationError
from .zp_core import GroupSpec, as_group

DEFAULT_DENSE_LIMIT = 5000
# singular values of the sign matrices come in close clusters; sweeps iterate a block
SWEEP_BLOCK = 8


def _check_dense(g: GroupSpec, dense_limit: int) -> None:
    if g.p > dense_limit:
        raise CapacityError(
            f"p={g.p} exceeds the dense limit {dense_limit}; use sign_operator()"
        )


def _product_parity(g: GroupSpec, rows: np.ndarray) -> np.ndarray:
    return (np.outer(rows, g.nonzero()) % g.p) & 1


def build_phi_prime(group, dense_limit: int = DEFAULT_DENSE_LIMIT) -> np.ndarray:
    g = as_group(group)
    _check_dense(g, dense_limit)
    return 1.0 - 2.0 * _product_parity(g, g.nonzero())


def build_phi(group, dense_limit: int = DEFAULT_DENSE_LIMIT) -> np.ndarray:
    g = as_group(group)
    _check_dense(g, dense_limit)
    x = g.nonzero()
    exponent = (x[:, None] + _product_parity(g, x)) & 1
    return 1.0 - 2.0 * exponent


def row_signs(group) -> np.ndarray:
    """The vector ``xi`` with ``xi[x-1] = (-1)**x``."""
    x = as_group(group).nonzero()
    return 1.0 - 2.0 * (x & 1)


class SignOperator:
    """Matrix-free ``phi`` / ``phi_prime``: entries are regenerated per block.

    Memory stays at ``block_rows * (p-1)`` entries regardless of ``p``.
    """

    def __init__(self, group, kind: str = "phi_prime", block_rows: int = 256):
        if kind not in ("phi", "phi_prime"):
            raise DomainError(f"unknown sign matrix kind {kind!r}")
        self.group = as_group(group)
        self.kind = kind
        self.block_rows = block_rows
        m = self.group.order
        self.shape = (m, m)
        self.dtype = np.float64

    def _blocks(self):
        g = self.group
        x = g.nonzero()
        for start in range(0, g.order, self.block_rows):
            rows = x[start : start + self.block_rows]
            parity = _product_parity(g, rows)
            if self.kind == "phi":
                parity = (rows[:, None] + parity) & 1
            yield start, 1.0 - 2.0 * parity

    def matvec(self, v: np.ndarray) -> np.ndarray:
        # v may be a vector or a matrix of column vectors
        out = np.empty((self.shape[0],) + v.shape[1:], dtype=np.result_type(v, np.float64))
        for start, block in self._blocks():
            out[start : start + block.shape[0]] = block @ v
        return out

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros((self.shape[1],) + v.shape[1:], dtype=np.result_type(v, np.float64))
        for start, block in self._blocks():
            out += block.T @ v[start : start + block.shape[0]]
        return out


def sign_operator(group, kind: str = "phi_prime", dense_limit: int = DEFAULT_DENSE_LIMIT):
    """Dense array when ``p <= dense_limit``, otherwise a :class:`SignOperator`."""
    g = as_group(group)
    if g.p <= dense_limit:
        return build_phi(g, dense_limit) if kind == "phi" else build_phi_prime(g, dense_limit)
    return SignOperator(g, kind)


class _DenseOperator:
    def __init__(self, m: np.ndarray):
        self.m = m
        self.shape = m.shape
        self.dtype = m.dtype

    def matvec(self, v):
        return self.m @ v

    def rmatvec(self, v):
        return self.m.conj().T @ v


def spectral_norm_power(
    m, tol: float = 1e-12, max_iters: int = 100_000, seed: int = 0, block: int = 1
) -> float:
    """Largest singular value by power iteration on ``M^H M``.

    ``m`` is a dense (real or complex) array or anything exposing ``shape``,
    ``matvec`` and ``rmatvec``. Iteration stops when the Rayleigh quotient
    changes by at most ``tol`` relative to its value.

    With ``block > 1`` a block of start vectors is iterated together and the
    estimate is the top Ritz value of the block (subspace iteration). Its
    rate is set by the gap after the ``block``-th singular value, which
    matters when the leading values are clustered.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if block < 1:
        raise DomainError("block must be at least 1")
    op = _DenseOperator(np.asarray(m)) if isinstance(m, np.ndarray) else m
    n = op.shape[1]
    block = min(block, n)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) if block == 1 else rng.standard_normal((n, block))
    v /= np.linalg.norm(v, axis=0)
    if block > 1:
        v, _ = np.linalg.qr(v)
    lam = 0.0
    residual = math.inf
    for _ in range(max_iters):
        w = op.rmatvec(op.matvec(v))
        if block == 1:
            lam_new = float(np.real(np.vdot(v, w)))
            norm_w = np.linalg.norm(w)
            if norm_w == 0.0:
                raise DomainError("matrix is zero (or start vector in its null space)")
            residual = float(np.linalg.norm(w - lam_new * v))
            v = w / norm_w
        else:
            ritz = np.linalg.eigvalsh(v.conj().T @ w)
            lam_new = float(ritz[-1])
            if lam_new <= 0.0:
                raise DomainError("matrix is zero (or start block in its null space)")
            residual = float(np.linalg.norm(w - v @ (v.conj().T @ w)))
            v, _ = np.linalg.qr(w)
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return math.sqrt(lam_new)
        lam = lam_new
    raise ConvergenceError(
        f"power iteration did not converge in {max_iters} iterations",
        last_iterate=v,
        residual=residual,
    )


def jacobi_singular_values(
    m: np.ndarray, tol: float = 1e-15, max_sweeps: int = 100
) -> np.ndarray:
    """Singular values by one-sided (Hestenes) Jacobi, in descending order.

    Column pairs are orthogonalised by plane rotations, which implicitly
    diagonalises ``M^T M``; the singular values are the final column norms.
    Pairs are scheduled round-robin so each round rotates disjoint pairs at
    once. Returns ``min(rows, cols)`` values.
    """
    a = np.array(m, dtype=np.float64, copy=True)
    if a.ndim != 2:
        raise DomainError("expected a matrix")
    if a.shape[0] < a.shape[1]:
        a = a.T.copy()
    n = a.shape[1]
    # columns that shrink to roundoff level carry no rotation information
    floor = (np.finfo(np.float64).eps * np.linalg.norm(a)) ** 2
    if n % 2:
        a = np.hstack([a, np.zeros((a.shape[0], 1))])
    players = list(range(a.shape[1]))
    half = len(players) // 2
    for _ in range(max_sweeps):
        off = 0.0
        for _ in range(len(players) - 1):
            i = np.array(players[:half])
            j = np.array(players[half:][::-1])
            ai, aj = a[:, i], a[:, j]
            alpha = np.einsum("ij,ij->j", ai, ai)
            beta = np.einsum("ij,ij->j", aj, aj)
            gamma = np.einsum("ij,ij->j", ai, aj)
            scale = np.sqrt(alpha * beta)
            active = (gamma != 0.0) & (np.abs(gamma) > tol * scale) & (scale > floor)
            if active.any():
                off = max(off, float(np.max(np.abs(gamma[active]) / scale[active])))
                zeta = (beta[active] - alpha[active]) / (2.0 * gamma[active])
                t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                ii, jj = i[active], j[active]
                col_i, col_j = a[:, ii].copy(), a[:, jj]
                a[:, ii] = c * col_i - s * col_j
                a[:, jj] = s * col_i + c * col_j
            players = [players[0], players[-1]] + players[1:-1]
        if off <= tol:
            break
    else:
        raise ConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")
    sv = np.sort(np.linalg.norm(a[:, :n], axis=0))[::-1]
    return sv


# --- DFT decomposition --------------------------------------------------------


def _roots(p: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(p) / p)


def fourier_coefficient(group, ell: int) -> complex:
    """``(2/sqrt(p)) / (1 + omega**-ell)``: the component of ``(-1)**x`` on e_ell."""
    p = as_group(group).p
    if not 0 <= ell < p:
        raise DomainError(f"ell={ell} not in [0, {p - 1}]")
    return complex(2.0 / math.sqrt(p) / (1.0 + np.exp(-2j * np.pi * ell / p)))


def _scaled_coefficients(p: int) -> np.ndarray:
    # (2/p) / (1 + omega^-ell), ell = 0..p-1
    return (2.0 / p) / (1.0 + np.conj(_roots(p)))


def decomposition_residual(group) -> float:
    """Sup-norm error of rebuilding ``a = [(-1)**x]_{x in Z_p}`` from DFT columns."""
    p = as_group(group).p
    x = np.arange(p)
    a = 1.0 - 2.0 * (x & 1)
    b = _roots(p)[np.outer(x, x) % p]  # column ell is b_ell
    rebuilt = b @ _scaled_coefficients(p)
    return float(np.max(np.abs(a - rebuilt)))


def omega_submatrix(group, ell: int) -> np.ndarray:
    """``U_ell = [omega**(ell*j*k)]`` with row 0 and column 0 removed."""
    g = as_group(group)
    jk = np.outer(g.nonzero(), g.nonzero()) % g.p
    return _roots(g.p)[(ell * jk) % g.p]


def reconstruct_phi_prime(
    group, tol: float = 1e-9, dense_limit: int = DEFAULT_DENSE_LIMIT
) -> np.ndarray:
    """Rebuild ``phi_prime`` as the weighted sum of all ``p`` submatrices Omega_ell.

    Raises :class:`VerificationError` if the imaginary part or the deviation
    from :func:`build_phi_prime` exceeds ``tol``.
    """
    g = as_group(group)
    _check_dense(g, dense_limit)
    p = g.p
    roots = _roots(p)
    jk = np.outer(g.nonzero(), g.nonzero()) % p
    coeffs = _scaled_coefficients(p)
    total = np.zeros(jk.shape, dtype=np.complex128)
    for ell in range(p):
        total += coeffs[ell] * roots[(ell * jk) % p]
    imag = float(np.max(np.abs(total.imag)))
    real_dev = float(np.max(np.abs(total.real - build_phi_prime(g, dense_limit))))
    worst = max(imag, real_dev)
    if worst > tol:
        raise VerificationError(
            f"reconstruction deviates by {worst:.3e} (> {tol:g}) at p={p}",
            max_deviation=worst,
        )
    return total


def harmonic_sum(group) -> float:
    """``sum_{ell=0}^{p-1} (2/p) / |1 + omega**ell|``."""
    p = as_group(group).p
    return float(np.sum((2.0 / p) / np.abs(1.0 + _roots(p))))


def spectral_record(
    group,
    dense_limit: int = DEFAULT_DENSE_LIMIT,
    tol: float = 1e-12,
    max_iters: int = 100_000,
    seed: int = 0,
    block: int = SWEEP_BLOCK,
) -> dict:
    """Per-prime summary consumed by the experiment sweeps."""
    g = as_group(group)
    p = g.p
    s_phi = spectral_norm_power(
        sign_operator(g, "phi", dense_limit), tol, max_iters, seed, block
    )
    s_phi_prime = spectral_norm_power(
        sign_operator(g, "phi_prime", dense_limit), tol, max_iters, seed, block
    )
    s = harmonic_sum(g)
    return {
        "p": p,
        "sigma1_phi": s_phi,
        "sigma1_phi_prime": s_phi_prime,
        "sigma_ratio": s_phi_prime / (math.sqrt(p) * math.log(p)),
        "harmonic_sum": s,
        "harmonic_ratio": s / math.log(p),
    }
