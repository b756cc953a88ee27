"""Exact arithmetic for the dyadic adding machine on [0, 1).

Points are dyadic rationals ``num / 2**level`` held in canonical form, so the
map and its inverse are computed without any floating point.  The adding
machine S acts on the interval [1 - 2**-k, 1 - 2**-(k+1)) as the translation

    S(x) = x - 1 + 2**-k + 2**-(k+1),

which is addition of 1 with carry on the binary expansion read from the most
significant bit.  Every finite dyadic has a well-defined image and the level
grows by at most one per application.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "DyadicPoint",
    "odometer_apply",
    "odometer_inverse",
    "stage_of",
    "random_dyadic",
]


@dataclass(frozen=True, order=False)
class DyadicPoint:
    """A dyadic rational in [0, 1), canonical: num odd or zero, 0 <= num < 2**level."""

    num: int
    level: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        if not 0 <= self.num < (1 << self.level):
            raise ValueError(f"{self.num}/2^{self.level} outside [0, 1)")
        if self.num and self.num % 2 == 0:
            raise ValueError("not canonical: numerator must be odd or zero")
        if self.num == 0 and self.level != 0:
            raise ValueError("not canonical: zero is 0/2^0")

    @staticmethod
    def make(num: int, level: int) -> "DyadicPoint":
        """Build a point from any (num, level) pair, normalising to canonical form."""
        if num == 0:
            return DyadicPoint(0, 0)
        while num % 2 == 0:
            num //= 2
            level -= 1
        return DyadicPoint(num, level)

    @staticmethod
    def from_fraction(f: Fraction) -> "DyadicPoint":
        den = f.denominator
        level = den.bit_length() - 1
        if (1 << level) != den:
            raise ValueError(f"{f} is not dyadic")
        return DyadicPoint(f.numerator, level)

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.level)

    def __lt__(self, other: "DyadicPoint") -> bool:
        return self.num << other.level < other.num << self.level

    def __le__(self, other: "DyadicPoint") -> bool:
        return self.num << other.level <= other.num << self.level

    def __repr__(self) -> str:
        return f"DyadicPoint({self.num}/2^{self.level})"


def _leading_ones(x: DyadicPoint) -> int:
    """Number of leading 1 bits in the binary expansion of x.

    Equals the k with x in [1 - 2**-k, 1 - 2**-(k+1)); the expansion of a
    canonical point terminates, so the count is finite.
    """
    num, level = x.num, x.level
    inv = ~num & ((1 << level) - 1)
    if inv == 0:
        return level
    return level - inv.bit_length()


def odometer_apply(x: DyadicPoint) -> DyadicPoint:
    """Apply the adding machine: binary add-one-with-carry from the top bit."""
    k = _leading_ones(x)
    lvl = max(x.level, k + 1)
    num = x.num << (lvl - x.level)
    # x - (1 - 2**-k) + 2**-(k+1) at working level lvl
    num = num - ((1 << lvl) - (1 << (lvl - k))) + (1 << (lvl - k - 1))
    return DyadicPoint.make(num, lvl)


def odometer_inverse(y: DyadicPoint) -> DyadicPoint:
    """Inverse map; defined for every point except 0."""
    if y.num == 0:
        raise ValueError("0 has no preimage under the adding machine")
    # y in [2**-(k+1), 2**-k) where k is the number of leading zeros
    k = y.level - y.num.bit_length()
    lvl = max(y.level, k + 1)
    num = y.num << (lvl - y.level)
    num = num + ((1 << lvl) - (1 << (lvl - k))) - (1 << (lvl - k - 1))
    return DyadicPoint.make(num, lvl)


def stage_of(x: DyadicPoint) -> int:
    """The m with x in [1 - 2**-(m-1), 1 - 2**-m), i.e. the base-set stage of x."""
    return _leading_ones(x) + 1


def random_dyadic(rng, level: int = 48) -> DyadicPoint:
    """Uniform dyadic point on the 2**-level grid (for sampling oracles)."""
    return DyadicPoint.make(int(rng.integers(0, 1 << level)), level)
