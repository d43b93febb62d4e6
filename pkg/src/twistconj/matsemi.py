"""The platform semigroup: 2x2 matrices over F2[x]/(x^n).

Entries are kept row-major, ``[[a, b], [c, d]]``.  There is deliberately no
inverse or determinant; transpose plays the role of inversion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .f2poly import DimensionError, Endo, TruncPoly, as_rng, clmul, poly_random

__all__ = ["Mat2", "mat_mul", "mat_transpose", "endo_apply_mat", "mat_random"]


@dataclass(frozen=True, slots=True)
class Mat2:
    a: TruncPoly
    b: TruncPoly
    c: TruncPoly
    d: TruncPoly

    def __post_init__(self):
        n = self.a.n
        if not (self.b.n == self.c.n == self.d.n == n):
            raise DimensionError("matrix entries have different truncation orders")

    @property
    def n(self) -> int:
        return self.a.n

    @classmethod
    def from_ints(cls, n: int, a: int, b: int, c: int, d: int) -> Mat2:
        return cls(TruncPoly(n, a), TruncPoly(n, b), TruncPoly(n, c), TruncPoly(n, d))

    @classmethod
    def identity(cls, n: int) -> Mat2:
        return cls.from_ints(n, 1, 0, 0, 1)

    @classmethod
    def zero(cls, n: int) -> Mat2:
        return cls.from_ints(n, 0, 0, 0, 0)

    def entries(self) -> tuple[TruncPoly, TruncPoly, TruncPoly, TruncPoly]:
        return (self.a, self.b, self.c, self.d)

    def ints(self) -> tuple[int, int, int, int]:
        return (self.a.value, self.b.value, self.c.value, self.d.value)

    @property
    def T(self) -> Mat2:
        return mat_transpose(self)

    def __mul__(self, other: Mat2) -> Mat2:
        return mat_mul(self, other)

    def __add__(self, other: Mat2) -> Mat2:
        if self.n != other.n:
            raise DimensionError(f"truncation orders differ: {self.n} != {other.n}")
        return Mat2.from_ints(self.n, *(x ^ y for x, y in zip(self.ints(), other.ints())))

    def __str__(self):
        return f"[[{self.a}, {self.b}], [{self.c}, {self.d}]]"


def mul_ints(x, y, mask):
    """Row-major 2x2 product on packed integer entries."""
    a, b, c, d = x
    e, f, g, h = y
    return (
        clmul(a, e, mask) ^ clmul(b, g, mask),
        clmul(a, f, mask) ^ clmul(b, h, mask),
        clmul(c, e, mask) ^ clmul(d, g, mask),
        clmul(c, f, mask) ^ clmul(d, h, mask),
    )


def mat_mul(A: Mat2, B: Mat2) -> Mat2:
    if A.n != B.n:
        raise DimensionError(f"truncation orders differ: {A.n} != {B.n}")
    n = A.n
    return Mat2.from_ints(n, *mul_ints(A.ints(), B.ints(), (1 << n) - 1))


def mat_transpose(A: Mat2) -> Mat2:
    return Mat2(A.a, A.c, A.b, A.d)


def endo_apply_mat(e: Endo, A: Mat2) -> Mat2:
    if e.n != A.n:
        raise DimensionError(f"truncation orders differ: {e.n} != {A.n}")
    return Mat2.from_ints(A.n, *(e.apply_int(v) for v in A.ints()))


def mat_random(n: int, constant_term: Optional[int] = None, rng=None) -> Mat2:
    rng = as_rng(rng)
    return Mat2(*(poly_random(n, constant_term, rng) for _ in range(4)))
