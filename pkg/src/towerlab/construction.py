"""Cutting-and-stacking construction of staged return times over the adding machine.

Tower n is the standard height 2**n column of dyadic intervals for the adding
machine S: rung 1 is [0, 2**-n) and S translates rung i onto rung i+1.  The
marked rung of Tower n is the one at height 2**(n-1); call its interval the
stage-n base piece.  The base pieces B_1 = [0, 1/2), B_2 = [1/2, 3/4), ...
partition [0, 1) and B_n = [1 - 2**-(n-1), 1 - 2**-n).

Stage n assigns a return-time value r to B_n.  The value is required to be
independent of the pair of labels

    approach(y) = return times read while climbing rungs 1 .. 2**(n-1) of
                  Tower n up to y (one value per step, lowest rung first),
    departure(y) = return times read while climbing the upper half starting
                   from S(y),

so each atom of the partition of B_n generated by the label pair is cut into
k_n slices of equal measure, left to right, and the j-th slice gets the value
M_n + j - 1.  All interval arithmetic is exact over rationals; no floats
enter the construction.
"""

from __future__ import annotations

import csv
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

from .dyadic import DyadicPoint, odometer_apply, stage_of
from .errors import BudgetError
from .schedule import StageSchedule

__all__ = [
    "Tower",
    "ReturnTimeMap",
    "LabelLaw",
    "TowerBuild",
    "base_piece",
    "return_map_to_csv",
]

ZERO = DyadicPoint(0, 0)


def base_piece(n: int) -> tuple[Fraction, Fraction]:
    """The stage-n base piece B_n = [1 - 2**-(n-1), 1 - 2**-n) as fractions."""
    if n < 1:
        raise ValueError("stage must be >= 1")
    return Fraction(2 ** (n - 1) - 1, 2 ** (n - 1)), Fraction(2**n - 1, 2**n)


@dataclass(frozen=True)
class Tower:
    """Tower n: rung i is [bases[i-1], bases[i-1] + 2**-n), i = 1 .. 2**n."""

    n: int
    bases: tuple[DyadicPoint, ...]

    @property
    def height(self) -> int:
        return 1 << self.n

    @property
    def width(self) -> Fraction:
        return Fraction(1, 1 << self.n)

    def rung(self, i: int) -> tuple[Fraction, Fraction]:
        lo = self.bases[i - 1].as_fraction()
        return lo, lo + self.width

    @property
    def marked_index(self) -> int:
        """Height of the stage-n base piece inside this tower."""
        return 1 << (self.n - 1)

    @staticmethod
    def build(n: int, rung_budget: int = 1 << 22) -> "Tower":
        if n < 1:
            raise ValueError("tower index must be >= 1")
        if (1 << n) > rung_budget:
            raise BudgetError(f"tower {n} needs {1 << n} rungs, budget is {rung_budget}")
        bases = [ZERO]
        for _ in range((1 << n) - 1):
            bases.append(odometer_apply(bases[-1]))
        return Tower(n, tuple(bases))


@dataclass(frozen=True)
class ReturnTimeMap:
    """Stage-n return-time values as a finite list of half-open interval pieces.

    ``pieces`` is sorted by left endpoint and partitions the stage base piece.
    Endpoints are exact rationals; they leave the dyadic grid whenever k_n is
    not a power of two.
    """

    stage: int
    pieces: tuple[tuple[Fraction, Fraction, int], ...]
    los: tuple[Fraction, ...] = field(repr=False, default=())

    @staticmethod
    def from_pieces(stage, pieces) -> "ReturnTimeMap":
        pieces = tuple(sorted(pieces, key=lambda p: p[0]))
        return ReturnTimeMap(stage, pieces, tuple(p[0] for p in pieces))

    def value_at(self, x: Fraction) -> int:
        i = bisect_right(self.los, x) - 1
        if i < 0 or not (self.pieces[i][0] <= x < self.pieces[i][1]):
            raise ValueError(f"{x} outside stage-{self.stage} base piece")
        return self.pieces[i][2]

    def values(self) -> list[int]:
        return sorted({p[2] for p in self.pieces})

    def mass_of_value(self, r: int) -> Fraction:
        return sum((hi - lo for lo, hi, v in self.pieces if v == r), Fraction(0))


@dataclass(frozen=True)
class LabelLaw:
    """Exact joint law of (approach, departure) labels for a uniform point of B_n.

    ``mass`` maps label pairs to Fractions summing to 1.  Entry tuples use the
    return-time integers; stage 1 has the empty label pair only.
    """

    stage: int
    alphabet_base: int  # labels take entries in 1 .. alphabet_base
    length: int  # entries per label: 2**(n-1) - 1
    mass: dict[tuple[tuple[int, ...], tuple[int, ...]], Fraction]

    def marginal(self, side: int) -> dict[tuple[int, ...], Fraction]:
        out: dict[tuple[int, ...], Fraction] = {}
        for pair, m in self.mass.items():
            out[pair[side]] = out.get(pair[side], Fraction(0)) + m
        return out

    @property
    def approach_marginal(self):
        return self.marginal(0)

    @property
    def departure_marginal(self):
        return self.marginal(1)

    def alphabet_size(self) -> int:
        return self.alphabet_base**self.length


class TowerBuild:
    """Workspace holding towers, trace partitions and return maps for stages 1..n.

    Stages are built in order; stage n needs every earlier return map to read
    labels off the climb.  ``piece_budget`` caps the total number of interval
    pieces a stage may produce.
    """

    def __init__(self, schedule: StageSchedule, piece_budget: int = 10**6,
                 rung_budget: int = 1 << 22):
        self.schedule = schedule
        self.piece_budget = piece_budget
        self.rung_budget = rung_budget
        self.towers: dict[int, Tower] = {}
        self.maps: dict[int, ReturnTimeMap] = {}
        self._traces: dict[int, list] = {}

    def tower(self, n: int) -> Tower:
        if n not in self.towers:
            self.towers[n] = Tower.build(n, self.rung_budget)
        return self.towers[n]

    def build(self, n: int) -> "TowerBuild":
        for stage in range(1, n + 1):
            if stage not in self.maps:
                self._build_stage(stage)
        return self

    def return_map(self, n: int) -> ReturnTimeMap:
        self.build(n)
        return self.maps[n]

    def return_time(self, x: Fraction | DyadicPoint) -> int:
        """r(x) for any x whose stage is already built."""
        if isinstance(x, DyadicPoint):
            m = stage_of(x)
            x = x.as_fraction()
        else:
            m = _stage_of_fraction(x)
        if m > self.schedule.stages:
            raise ValueError(f"point {x} sits at stage {m}, beyond the schedule")
        self.build(m)
        return self.maps[m].value_at(x)

    def label_of(self, y: DyadicPoint | Fraction, n: int):
        """The (approach, departure) label pair of a point of B_n.

        approach entry i is the return time at rung i of Tower n on the
        backward climb to y; departure entry i is the return time read i - 1
        steps after S(y).  Both tuples have 2**(n-1) - 1 entries.
        """
        yf = y.as_fraction() if isinstance(y, DyadicPoint) else y
        lo, hi = base_piece(n)
        if not (lo <= yf < hi):
            raise ValueError(f"{yf} is not in the stage-{n} base piece")
        self.build(max(n - 1, 1) if n > 1 else 1)
        tower = self.tower(n) if n > 1 else None
        half = 1 << (n - 1)
        approach = []
        departure = []
        if n > 1:
            marked_lo = tower.bases[tower.marked_index - 1].as_fraction()
            for i in range(1, half):
                approach.append(self.return_time(yf + tower.bases[i - 1].as_fraction() - marked_lo))
            for i in range(half + 1, 2 * half):
                departure.append(self.return_time(yf + tower.bases[i - 1].as_fraction() - marked_lo))
        return tuple(approach), tuple(departure)

    def label_law(self, n: int) -> LabelLaw:
        self.build(n)
        mass: dict = {}
        total = Fraction(0)
        for lo, hi, pair in self._traces[n]:
            mass[pair] = mass.get(pair, Fraction(0)) + (hi - lo)
            total += hi - lo
        blo, bhi = base_piece(n)
        assert total == bhi - blo
        scale = 1 / total
        return LabelLaw(
            stage=n,
            alphabet_base=self.schedule.max_value(n - 1),
            length=(1 << (n - 1)) - 1,
            mass={pair: m * scale for pair, m in mass.items()},
        )

    # construction internals

    def _build_stage(self, n: int) -> None:
        M, k = self.schedule.stage(n)
        traces = self._trace_partition(n)
        self._traces[n] = traces
        if len(traces) * k > self.piece_budget:
            raise BudgetError(
                f"stage {n} would cut {len(traces)} trace intervals into {k} slices each, "
                f"budget is {self.piece_budget} pieces"
            )
        # group trace intervals into label atoms, ordered left to right
        atoms: dict = {}
        order = []
        for lo, hi, pair in traces:
            if pair not in atoms:
                atoms[pair] = []
                order.append(pair)
            atoms[pair].append((lo, hi))
        pieces = []
        for pair in order:
            ivs = atoms[pair]
            atom_mass = sum((hi - lo for lo, hi in ivs), Fraction(0))
            slice_mass = atom_mass / k
            j = 1
            room = slice_mass
            for lo, hi in ivs:
                cur = lo
                while cur < hi:
                    take = min(hi - cur, room)
                    if take == 0:
                        raise AssertionError("slice accounting drifted; atom not consumed exactly")
                    pieces.append((cur, cur + take, M + j - 1))
                    cur += take
                    room -= take
                    if room == 0 and j < k:
                        j += 1
                        room = slice_mass
            assert j == k and room == 0, "slicing must consume the atom exactly"
        self.maps[n] = ReturnTimeMap.from_pieces(n, pieces)

    def _trace_partition(self, n: int):
        """Refine B_n by every return-time piece met on the climb through Tower n.

        Returns a sorted list of (lo, hi, (approach, departure)) on whose
        interiors both labels are constant.
        """
        blo, bhi = base_piece(n)
        if n == 1:
            return [(blo, bhi, ((), ()))]
        tower = self.tower(n)
        half = tower.marked_index
        marked_lo = tower.bases[half - 1].as_fraction()
        width = tower.width
        # rung index -> (translation from B_n, stage of the rung)
        legs = []
        for i in list(range(1, half)) + list(range(half + 1, 2 * half)):
            base = tower.bases[i - 1]
            legs.append((i, base.as_fraction() - marked_lo, stage_of(base)))
        cuts = {blo, bhi}
        for _, t, m in legs:
            rlo = blo + t
            rhi = rlo + width
            for plo, phi, _r in self.maps[m].pieces:
                if rlo < phi and plo < rhi:  # overlap
                    for b in (plo, phi):
                        if rlo < b < rhi:
                            cuts.add(b - t)
        bounds = sorted(cuts)
        out = []
        for lo, hi in zip(bounds, bounds[1:]):
            mid = (lo + hi) / 2
            approach = []
            departure = []
            for i, t, m in legs:
                val = self.maps[m].value_at(mid + t)
                (approach if i < half else departure).append(val)
            out.append((lo, hi, (tuple(approach), tuple(departure))))
        return out


def _stage_of_fraction(x: Fraction) -> int:
    if not 0 <= x < 1:
        raise ValueError(f"{x} outside [0, 1)")
    m = 1
    while not (Fraction(2 ** (m - 1) - 1, 2 ** (m - 1)) <= x < Fraction(2**m - 1, 2**m)):
        m += 1
    return m


def return_map_to_csv(rmap: ReturnTimeMap, path) -> None:
    """Write interval pieces as stage,left_num,left_den,right_num,right_den,r rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "left_num", "left_den", "right_num", "right_den", "r"])
        for lo, hi, r in rmap.pieces:
            w.writerow([rmap.stage, lo.numerator, lo.denominator, hi.numerator, hi.denominator, r])
