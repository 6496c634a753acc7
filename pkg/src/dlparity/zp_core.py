"""Modular arithmetic over (Z_p, +) and the additive discrete logarithm.

In the additive group the discrete log of ``x`` to base ``a`` is the unique
``k`` in ``[1, p-1]`` with ``k*a = x (mod p)``, i.e. ``a^{-1} x mod p``.
Everything here is exact integer arithmetic.
"""

from __future__ import annotations

import operator
import random
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, RangeError

# Moduli are kept below 2**63 so every element fits a signed 64-bit slot.
MAX_MODULUS_BITS = 63

# Deterministic Miller-Rabin: these bases are exact for n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    n = operator.index(n)
    if n < 0:
        raise DomainError(f"is_prime expects n >= 0, got {n}")
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for base in _MR_BASES:
        x = pow(base, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class GroupSpec:
    """The additive cyclic group (Z_p, +) for an odd prime ``p``.

    Nonzero elements are labelled ``1..p-1``; these index the rows and
    columns of every matrix built from the group.
    """

    p: int

    def __post_init__(self):
        p = operator.index(self.p)
        object.__setattr__(self, "p", p)
        if p.bit_length() > MAX_MODULUS_BITS:
            raise RangeError(f"p={p} does not fit below 2**{MAX_MODULUS_BITS}")
        if p <= 2:
            raise DomainError(f"group order must be an odd prime, got {p}")
        if not is_prime(p):
            raise DomainError(f"{p} is not prime")

    @property
    def order(self) -> int:
        """Number of nonzero elements, ``p - 1``."""
        return self.p - 1

    @property
    def bitlength(self) -> int:
        return self.p.bit_length()

    def nonzero(self) -> np.ndarray:
        return np.arange(1, self.p, dtype=np.int64)

    def element(self, value: int) -> "ZpElement":
        return ZpElement(value, self)


@dataclass(frozen=True)
class ZpElement:
    value: int
    group: GroupSpec

    def __post_init__(self):
        v = operator.index(self.value)
        if not 0 <= v < self.group.p:
            raise DomainError(f"{v} is not in [0, {self.group.p - 1}]")
        object.__setattr__(self, "value", v)

    def __index__(self) -> int:
        return self.value

    def __int__(self) -> int:
        return self.value


def as_group(group: GroupSpec | int) -> GroupSpec:
    return group if isinstance(group, GroupSpec) else GroupSpec(group)


def ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, s, t)`` with ``g = gcd(a, b) = s*a + t*b``."""
    a, b = operator.index(a), operator.index(b)
    if a < 0 or b < 0:
        raise DomainError("ext_gcd expects non-negative inputs")
    if a == 0 and b == 0:
        raise DomainError("gcd(0, 0) is undefined")
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_r, old_s, old_t


def _nonzero_residue(v, p: int, what: str) -> int:
    v = operator.index(v)
    if not 0 <= v < p:
        raise DomainError(f"{what}={v} is not in [0, {p - 1}]")
    if v == 0:
        raise DomainError(f"{what} must be a nonzero element of Z_{p}")
    return v


def mod_inverse(a, group: GroupSpec | int) -> int:
    """Multiplicative inverse of ``a`` modulo ``p`` via extended Euclid."""
    p = as_group(group).p
    a = _nonzero_residue(a, p, "a")
    _, s, _ = ext_gcd(a, p)
    return s % p


def additive_dlog(a, x, group: GroupSpec | int) -> int:
    """Discrete log of ``x`` to base ``a`` in (Z_p, +); result in ``[1, p-1]``."""
    p = as_group(group).p
    a = _nonzero_residue(a, p, "a")
    x = _nonzero_residue(x, p, "x")
    return mod_inverse(a, p) * x % p


def parity_bit(a, x, group: GroupSpec | int) -> int:
    """``(-1) ** log_a(x)`` as a Python int in {-1, +1}."""
    return -1 if additive_dlog(a, x, group) & 1 else 1


def generate_table(a, group: GroupSpec | int) -> list[int]:
    """Multiples ``k*a mod p`` for ``k = 0..p-1``."""
    p = as_group(group).p
    a = _nonzero_residue(a, p, "a")
    return [k * a % p for k in range(p)]


# --- vectorised tables over all of Z_p^* -----------------------------------


@lru_cache(maxsize=64)
def _inverse_table_cached(p: int) -> np.ndarray:
    inv = [0, 1] + [0] * (p - 2)
    for i in range(2, p):
        inv[i] = (p - (p // i) * inv[p % i] % p) % p
    out = np.asarray(inv[1:], dtype=np.int64)
    out.flags.writeable = False
    return out


def inverse_table(group: GroupSpec | int) -> np.ndarray:
    """Inverses of ``1..p-1`` (entry ``i`` holds the inverse of ``i + 1``)."""
    return _inverse_table_cached(as_group(group).p)


def dlog_table(group: GroupSpec | int) -> np.ndarray:
    """Matrix ``L[a-1, x-1] = log_a x`` over all nonzero bases and inputs."""
    g = as_group(group)
    return np.outer(inverse_table(g), g.nonzero()) % g.p


def parity_table(group: GroupSpec | int) -> np.ndarray:
    """Matrix ``H[a-1, x-1] = h_a(x)`` with entries in {-1, +1} (int64)."""
    return 1 - 2 * (dlog_table(group) & 1)


# --- primes ----------------------------------------------------------------


def primes_between(lo: int, hi: int) -> list[int]:
    """All primes in the closed interval ``[lo, hi]`` by sieving."""
    if hi < 2 or hi < lo:
        return []
    sieve = np.ones(hi + 1, dtype=bool)
    sieve[:2] = False
    for q in range(2, int(hi**0.5) + 1):
        if sieve[q]:
            sieve[q * q :: q] = False
    return [int(q) for q in np.flatnonzero(sieve) if q >= lo]


def sample_prime_in_bitlength(n: int, rng_seed: int) -> GroupSpec:
    """Uniformly random odd prime from ``[2**(n-1), 2**n - 1]``.

    Rejection sampling over the interval gives every prime the same
    probability. ``n = 2`` can only return 3 because 2 is excluded.
    """
    n = operator.index(n)
    if n > MAX_MODULUS_BITS:
        raise RangeError(f"bitlength {n} exceeds {MAX_MODULUS_BITS}")
    if n < 2:
        raise DomainError(f"no odd prime has bitlength {n}")
    lo, hi = 1 << (n - 1), (1 << n) - 1
    rng = random.Random(rng_seed)
    while True:
        c = rng.randint(lo, hi)
        if c > 2 and is_prime(c):
            return GroupSpec(c)
