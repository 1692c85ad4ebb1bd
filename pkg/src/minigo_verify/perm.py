"""Permission amounts: exact rationals plus the wildcard.

Wildcard denotes an unknown strictly positive amount. It absorbs addition,
survives wildcard subtraction, and can never be consumed in full: taking a
wildcard sliver from a known fraction leaves a wildcard remainder (still
positive, never again known to be full), so wildcard holdings can be split
indefinitely but never fully reclaimed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union


class _Insufficient:
    """Subtraction result when the demanded amount exceeds the held amount."""

    _instance: Optional["_Insufficient"] = None

    def __new__(cls) -> "_Insufficient":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Insufficient"


INSUFFICIENT = _Insufficient()


@dataclass(frozen=True)
class Perm:
    """Fraction(num/den) in lowest terms, or the wildcard."""

    wildcard: bool
    frac: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if not self.wildcard and self.frac < 0:
            raise ValueError(f"negative permission {self.frac}")

    @staticmethod
    def fraction(num: int, den: int = 1) -> "Perm":
        return Perm(False, Fraction(num, den))

    @staticmethod
    def write() -> "Perm":
        return Perm(False, Fraction(1))

    @property
    def num(self) -> int:
        return self.frac.numerator

    @property
    def den(self) -> int:
        return self.frac.denominator

    def is_zero(self) -> bool:
        return not self.wildcard and self.frac == 0

    def is_positive(self) -> bool:
        return self.wildcard or self.frac > 0

    def is_full(self) -> bool:
        return not self.wildcard and self.frac >= 1

    def __str__(self) -> str:
        if self.wildcard:
            return "_"
        if self.frac.denominator == 1:
            return f"{self.frac.numerator}/1"
        return str(self.frac)


WILDCARD = Perm(True)
FULL = Perm.write()
NONE = Perm.fraction(0)


def amount_add(p: Perm, q: Perm) -> Perm:
    if p.wildcard or q.wildcard:
        return WILDCARD
    return Perm(False, p.frac + q.frac)


def amount_sub(p: Perm, q: Perm) -> Union[Perm, _Insufficient]:
    """p minus q, or INSUFFICIENT.

    Wildcard demand takes an unknown positive sliver: any positive holding
    satisfies it and the remainder is downgraded to wildcard.
    """
    if q.wildcard:
        return WILDCARD if p.is_positive() else INSUFFICIENT
    if p.wildcard:
        # an unknown positive amount cannot be shown to cover a concrete one
        return WILDCARD if q.frac == 0 else INSUFFICIENT
    if q.frac > p.frac:
        return INSUFFICIENT
    return Perm(False, p.frac - q.frac)


def amount_mul(p: Perm, q: Perm) -> Perm:
    if p.wildcard or q.wildcard:
        return WILDCARD
    return Perm(False, p.frac * q.frac)
