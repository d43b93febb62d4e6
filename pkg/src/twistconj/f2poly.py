"""Truncated polynomials over GF(2), i.e. the ring F2[x]/(x^n).

A polynomial is stored as a nonnegative Python integer whose bit i is the
coefficient of x^i, so the integer's limbs are the packed machine words.
Addition is XOR, multiplication is carryless and truncated at x^n.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

__all__ = [
    "DimensionError",
    "TruncPoly",
    "Endo",
    "clmul",
    "poly_add",
    "poly_mul",
    "poly_compose",
    "endo_apply_poly",
    "poly_random",
    "as_rng",
]


class DimensionError(ValueError):
    """Operands live in rings with different truncation orders."""


def as_rng(rng) -> random.Random:
    """Accept a seed, ``None`` or an existing ``random.Random``."""
    if isinstance(rng, random.Random):
        return rng
    return random.Random(rng)


def clmul(a: int, b: int, mask: int = -1) -> int:
    """Carryless product of two packed bit vectors, reduced by ``mask``."""
    if a.bit_length() < b.bit_length():
        a, b = b, a
    if b.bit_length() <= 24:
        r = 0
        while b:
            low = b & -b
            r ^= a << (low.bit_length() - 1)
            b ^= low
        return r & mask
    # 4-bit window: 16 precomputed multiples of a, then one xor per nibble
    t = [0] * 16
    t[1] = a
    for i in range(2, 16, 2):
        t[i] = t[i >> 1] << 1
        t[i + 1] = t[i] ^ a
    r = 0
    sh = 0
    while b:
        r ^= t[b & 15] << sh
        b >>= 4
        sh += 4
    return r & mask


@dataclass(frozen=True, slots=True)
class TruncPoly:
    """Element of F2[x]/(x^n); ``value`` bit i is the coefficient of x^i."""

    n: int
    value: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"truncation order must be positive, got {self.n}")
        if self.value < 0 or self.value >> self.n:
            raise ValueError(f"value has bits at or above x^{self.n}")

    @classmethod
    def from_bits(cls, bits: Sequence[int], n: Optional[int] = None) -> TruncPoly:
        if n is None:
            n = len(bits)
        value = 0
        for i, b in enumerate(bits):
            if b & 1:
                value |= 1 << i
        return cls(n, value)

    @classmethod
    def zero(cls, n: int) -> TruncPoly:
        return cls(n, 0)

    @classmethod
    def one(cls, n: int) -> TruncPoly:
        return cls(n, 1)

    @classmethod
    def x(cls, n: int) -> TruncPoly:
        return cls(n, 2 & ((1 << n) - 1))

    @property
    def mask(self) -> int:
        return (1 << self.n) - 1

    @property
    def bits(self) -> tuple[int, ...]:
        v = self.value
        return tuple((v >> i) & 1 for i in range(self.n))

    def coeff(self, i: int) -> int:
        return (self.value >> i) & 1

    def weight(self) -> int:
        return self.value.bit_count()

    def is_zero(self) -> bool:
        return self.value == 0

    def __add__(self, other: TruncPoly) -> TruncPoly:
        return poly_add(self, other)

    __sub__ = __add__

    def __mul__(self, other: TruncPoly) -> TruncPoly:
        return poly_mul(self, other)

    def __call__(self, g: TruncPoly) -> TruncPoly:
        return poly_compose(self, g)

    def __str__(self):
        terms = []
        for i in range(self.n):
            if (self.value >> i) & 1:
                terms.append("1" if i == 0 else "x" if i == 1 else f"x^{i}")
        return " + ".join(terms) if terms else "0"


def _check(a: TruncPoly, b: TruncPoly) -> None:
    if a.n != b.n:
        raise DimensionError(f"truncation orders differ: {a.n} != {b.n}")


def poly_add(a: TruncPoly, b: TruncPoly) -> TruncPoly:
    _check(a, b)
    return TruncPoly(a.n, a.value ^ b.value)


def poly_mul(a: TruncPoly, b: TruncPoly) -> TruncPoly:
    _check(a, b)
    return TruncPoly(a.n, clmul(a.value, b.value, a.mask))


def _compose(f: int, g: int, n: int) -> int:
    # Horner: f(g) = (...(f_{n-1} g + f_{n-2}) g + ...) g + f_0
    mask = (1 << n) - 1
    r = 0
    for i in range(f.bit_length() - 1, -1, -1):
        r = clmul(r, g, mask) ^ ((f >> i) & 1)
    return r


def poly_compose(f: TruncPoly, g: TruncPoly) -> TruncPoly:
    """Return f(g(x)) mod x^n.

    When g has zero constant term, coefficient d of the result depends only
    on the coefficients 0..d of f.
    """
    _check(f, g)
    return TruncPoly(f.n, _compose(f.value, g.value, f.n))


@lru_cache(maxsize=256)
def power_table(p: int, n: int) -> tuple[int, ...]:
    """Packed powers p^0, p^1, ..., p^(n-1) mod x^n."""
    mask = (1 << n) - 1
    out = [1 & mask]
    for _ in range(1, n):
        out.append(clmul(out[-1], p, mask))
    return tuple(out)


def apply_powers(q: int, powers: Sequence[int]) -> int:
    """Evaluate packed q at the polynomial whose powers are tabulated."""
    r = 0
    while q:
        low = q & -q
        r ^= powers[low.bit_length() - 1]
        q ^= low
    return r


@dataclass(frozen=True, slots=True)
class Endo:
    """Ring endomorphism of F2[x]/(x^n) induced by x -> p(x), p(0) = 0."""

    p: TruncPoly

    def __post_init__(self):
        if self.p.value & 1:
            raise ValueError("endomorphism polynomial must have zero constant term")

    @property
    def n(self) -> int:
        return self.p.n

    def powers(self) -> tuple[int, ...]:
        return power_table(self.p.value, self.p.n)

    def apply_int(self, q: int) -> int:
        """Image of a packed polynomial of the same truncation order."""
        return apply_powers(q, self.powers())

    def __call__(self, q):
        from .matsemi import Mat2, endo_apply_mat

        if isinstance(q, Mat2):
            return endo_apply_mat(self, q)
        return endo_apply_poly(self, q)


def endo_apply_poly(e: Endo, q: TruncPoly) -> TruncPoly:
    _check(e.p, q)
    return TruncPoly(q.n, e.apply_int(q.value))


def poly_random(n: int, constant_term: Optional[int] = None, rng=None) -> TruncPoly:
    """Uniform polynomial with fair independent coefficient bits.

    ``constant_term`` forces the coefficient of x^0 to 0 or 1; ``None``
    leaves it free.
    """
    if n < 1:
        raise ValueError(f"truncation order must be positive, got {n}")
    if constant_term not in (None, 0, 1):
        raise ValueError("constant_term must be 0, 1 or None")
    rng = as_rng(rng)
    if constant_term is None:
        return TruncPoly(n, rng.getrandbits(n))
    high = rng.getrandbits(n - 1) if n > 1 else 0
    return TruncPoly(n, (high << 1) | constant_term)
