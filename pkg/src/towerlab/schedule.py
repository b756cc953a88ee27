"""Stage schedules: the (M_n, k_n) parameters driving the tower construction.

At stage n the new return-time values are the k_n integers M_n .. M_n+k_n-1.
The offsets M_n must be strictly increasing in n.  R_n is the largest value
that can appear through stage n; it bounds the label alphabet of stage n+1.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction

from .config import parse_kv_file, parse_kv_text

__all__ = ["StageSchedule", "default_schedule", "divergence_report"]


@dataclass(frozen=True)
class StageSchedule:
    """Per-stage pairs (M_n, k_n), stage numbering starting at 1."""

    M: tuple[int, ...]
    k: tuple[int, ...]

    def __post_init__(self):
        if len(self.M) != len(self.k) or not self.M:
            raise ValueError("schedule needs matching nonempty M and k lists")
        for n, (m, kk) in enumerate(zip(self.M, self.k), start=1):
            if m < 1:
                raise ValueError(f"M.{n} must be a positive integer, got {m}")
            if kk < 1:
                raise ValueError(f"k.{n} must be a positive integer, got {kk}")
        if any(b <= a for a, b in zip(self.M, self.M[1:])):
            raise ValueError("offsets M.n must be strictly increasing in n")

    @property
    def stages(self) -> int:
        return len(self.M)

    def stage(self, n: int) -> tuple[int, int]:
        if not 1 <= n <= self.stages:
            raise ValueError(f"stage {n} outside schedule with {self.stages} stages")
        return self.M[n - 1], self.k[n - 1]

    def max_value(self, n: int) -> int:
        """R_n: the largest return-time value assigned through stage n (R_0 = 0)."""
        if n < 0 or n > self.stages:
            raise ValueError(f"stage {n} outside schedule")
        return max((self.M[i] + self.k[i] - 1 for i in range(n)), default=0)

    def finite_measure_through(self, n: int) -> Fraction:
        """Exact mass of the tower over stages 1..n: sum 2**-i (M_i + (k_i-1)/2)."""
        tot = Fraction(0)
        for i in range(1, n + 1):
            m, kk = self.stage(i)
            tot += Fraction(1, 2**i) * (Fraction(m) + Fraction(kk - 1, 2))
        return tot

    def canonical_text(self) -> str:
        lines = []
        for n in range(1, self.stages + 1):
            lines.append(f"M.{n} = {self.M[n-1]}")
            lines.append(f"k.{n} = {self.k[n-1]}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Short hash identifying the schedule in output metadata."""
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:12]

    @staticmethod
    def from_mapping(kv: dict[str, str]) -> "StageSchedule":
        ms: dict[int, int] = {}
        ks: dict[int, int] = {}
        for key, value in kv.items():
            head, dot, idx = key.partition(".")
            if head not in ("M", "k") or not dot or not idx.isdigit() or int(idx) < 1:
                raise ValueError(f"unknown schedule key {key!r} (expected M.n or k.n)")
            try:
                num = int(value)
            except ValueError:
                raise ValueError(f"schedule value for {key} must be an integer, got {value!r}")
            (ms if head == "M" else ks)[int(idx)] = num
        stages = max(list(ms) + list(ks), default=0)
        for n in range(1, stages + 1):
            if n not in ms:
                raise ValueError(f"missing M.{n}")
            if n not in ks:
                raise ValueError(f"missing k.{n}")
        return StageSchedule(
            tuple(ms[n] for n in range(1, stages + 1)),
            tuple(ks[n] for n in range(1, stages + 1)),
        )

    @staticmethod
    def from_text(text: str, source: str = "<string>") -> "StageSchedule":
        return StageSchedule.from_mapping(parse_kv_text(text, source))

    @staticmethod
    def from_file(path) -> "StageSchedule":
        return StageSchedule.from_mapping(parse_kv_file(path))


def default_schedule(stages: int, k: int | tuple[int, ...] = 4) -> StageSchedule:
    """The house schedule M_n = 2 + 4(n-1) with a flat (or given) k list."""
    ks = tuple(k for _ in range(stages)) if isinstance(k, int) else tuple(k)
    if len(ks) != stages:
        raise ValueError("k list length must equal the number of stages")
    return StageSchedule(tuple(2 + 4 * (n - 1) for n in range(1, stages + 1)), ks)


def divergence_report(M_rule, k_rule, terms: int = 64) -> dict:
    """Report whether an asymptotic rule keeps the total tower mass infinite.

    ``M_rule`` and ``k_rule`` map a stage index n >= 1 to M_n and k_n.  The
    total mass is sum over n of 2**-n (M_n + (k_n - 1)/2); it diverges iff the
    terms fail to vanish.  The report sums ``terms`` stages exactly and checks
    whether the last terms are still bounded away from zero (ratio test on the
    tail), which settles every rule of geometric or polynomial type.
    """
    vals = []
    for n in range(1, terms + 1):
        t = Fraction(1, 2**n) * (Fraction(int(M_rule(n))) + Fraction(int(k_rule(n)) - 1, 2))
        vals.append(t)
    tail = vals[terms // 2:]
    nonvanishing = all(t >= vals[terms // 2 - 1] * Fraction(1, 2) for t in tail) and vals[-1] > 0
    return {
        "partial_sum": float(sum(vals)),
        "last_term": float(vals[-1]),
        "diverges": bool(nonvanishing),
    }
