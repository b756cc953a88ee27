"""Block-entropy estimation and the entropy bookkeeping around it.

Everything is in nats.  The acceptance estimator is the plug-in entropy of
overlapping L-blocks (optionally Miller-Madow corrected); an LZ78 phrase
estimate ships as a cross-check only.  The induced-map side codes exact
odometer orbits by finite partitions (tower rung index, or return-time value
with a reserved symbol for points deeper than the coded stages) and feeds the
symbol stream to the same estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .construction import TowerBuild, ZERO
from .dyadic import DyadicPoint, odometer_apply, stage_of
from .errors import InsufficientSampleError

__all__ = [
    "EntropyReport",
    "block_entropy",
    "replicated_block_entropy",
    "poisson_entropy",
    "binary_entropy",
    "entropy_gap_bound",
    "rung_symbols",
    "return_time_symbols",
    "induced_coding_entropy",
    "lz78_estimate",
]

DEEP_SYMBOL = 0  # return times are >= 2, so 0 is free for "deeper than coded"


@dataclass(frozen=True)
class EntropyReport:
    L: int
    ceiling: int | None
    h_per_symbol: float  # block entropy divided by L, nats
    block_count: int
    correction: str | None
    distinct_blocks: int

    @property
    def h_block(self) -> float:
        return self.h_per_symbol * self.L


def _entropy_from_counts(counts: np.ndarray, correction: str | None) -> float:
    n = counts.sum()
    p = counts / n
    h = float(-(p * np.log(p)).sum())
    if correction == "miller-madow":
        h += (len(counts) - 1) / (2.0 * n)
    elif correction is not None:
        raise ValueError(f"unknown correction {correction!r}")
    return h


def _report(blocks: np.ndarray, L: int, ceiling, correction) -> EntropyReport:
    _, counts = np.unique(blocks, axis=0, return_counts=True)
    h = _entropy_from_counts(counts, correction)
    return EntropyReport(L=L, ceiling=ceiling, h_per_symbol=h / L,
                         block_count=len(blocks), correction=correction,
                         distinct_blocks=len(counts))


def block_entropy(values, L: int, ceiling: int | None = None,
                  correction: str | None = None,
                  min_blocks: int = 1000) -> EntropyReport:
    """Plug-in entropy of the overlapping stride-1 L-blocks of one series."""
    values = np.asarray(getattr(values, "values", values), dtype=np.int64)
    if L < 1:
        raise ValueError("L must be >= 1")
    if len(values) - L + 1 < min_blocks:
        raise InsufficientSampleError(
            f"{len(values)} sites give {max(0, len(values) - L + 1)} blocks, "
            f"need {min_blocks}")
    if ceiling is not None:
        values = np.minimum(values, ceiling)
    blocks = np.lib.stride_tricks.sliding_window_view(values, L)
    return _report(blocks, L, ceiling, correction)


def replicated_block_entropy(windows: np.ndarray, L: int,
                             ceiling: int | None = None,
                             correction: str | None = None,
                             min_blocks: int = 1000) -> EntropyReport:
    """Same estimator fed by many short windows (stride-1 blocks per row)."""
    windows = np.asarray(windows, dtype=np.int64)
    if windows.ndim != 2 or windows.shape[1] < L:
        raise ValueError("windows must be (R, W) with W >= L")
    if ceiling is not None:
        windows = np.minimum(windows, ceiling)
    per_row = windows.shape[1] - L + 1
    if windows.shape[0] * per_row < min_blocks:
        raise InsufficientSampleError("too few blocks across the windows")
    blocks = np.lib.stride_tricks.sliding_window_view(
        windows, L, axis=1).reshape(-1, L)
    return _report(blocks, L, ceiling, correction)


def poisson_entropy(lam: float, ceiling: int | None = None) -> float:
    """Entropy of Poisson(lam), optionally with mass >= ceiling lumped.

    Untruncated sums run until the remaining tail is below 1e-12, which the
    error term then provably cannot exceed in nats times a bounded log factor.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if ceiling is not None and ceiling < 1:
        raise ValueError("ceiling must be >= 1")
    h = 0.0
    p = math.exp(-lam)
    acc = p
    k = 0
    kmax = ceiling if ceiling is not None else int(lam + 40 * math.sqrt(lam) + 40)
    while k < kmax:
        if p > 0:
            h -= p * math.log(p)
        k += 1
        p *= lam / k
        acc += p
    if ceiling is not None:
        lump = max(0.0, 1.0 - (acc - p))  # mass at values >= ceiling
        if lump > 0:
            h -= lump * math.log(lump)
    else:
        tail = max(0.0, 1.0 - acc)
        if tail > 1e-12:
            raise RuntimeError("tail did not clear the cutoff; lam too large")
    return h


def binary_entropy(d: float) -> float:
    if not 0.0 <= d <= 1.0:
        raise ValueError("argument must lie in [0, 1]")
    if d in (0.0, 1.0):
        return 0.0
    return -d * math.log(d) - (1.0 - d) * math.log(1.0 - d)


def entropy_gap_bound(dbar_value: float, alphabet_size: int) -> float:
    """Fano-type modulus: entropy rates of processes on a common alphabet
    differ by at most d * ln(size - 1) + H2(d) when their dbar distance is d."""
    if alphabet_size < 2:
        raise ValueError("alphabet size must be >= 2")
    if not 0.0 <= dbar_value <= 1.0:
        raise ValueError("dbar value must lie in [0, 1]")
    return dbar_value * math.log(alphabet_size - 1) + binary_entropy(dbar_value)


def _first_digits(x: DyadicPoint, m: int) -> int:
    if x.level >= m:
        return x.num >> (x.level - m)
    return x.num << (m - x.level)


def rung_symbols(orbit_length: int, m: int, start: DyadicPoint = ZERO) -> np.ndarray:
    """Tower-m rung index (1..2^m) along the odometer orbit of ``start``."""
    if not 1 <= m <= 20:
        raise ValueError("tower index out of range")
    size = 1 << m
    # rung index = bit-reversed leading digits + 1
    rev = np.zeros(size, dtype=np.int64)
    for j in range(size):
        rev[j] = int(format(j, f"0{m}b")[::-1], 2)
    out = np.empty(orbit_length, dtype=np.int64)
    x = start
    for t in range(orbit_length):
        out[t] = rev[_first_digits(x, m)] + 1
        x = odometer_apply(x)
    return out


def _return_time_grid(build: TowerBuild, depth: int):
    """Dyadic lookup grid for return times through the given stage, if the
    piece endpoints allow one (they do whenever every k_n is a power of two)."""
    level = 0
    for n in range(1, depth + 1):
        for lo, hi, _r in build.return_map(n).pieces:
            for b in (lo, hi):
                if b.denominator & (b.denominator - 1):
                    return None, 0
                level = max(level, b.denominator.bit_length() - 1)
    grid = np.full(1 << level, DEEP_SYMBOL, dtype=np.int64)
    cell = Fraction(1, 1 << level)
    for n in range(1, depth + 1):
        for lo, hi, r in build.return_map(n).pieces:
            grid[int(lo / cell):int(hi / cell)] = r
    return grid, level


def return_time_symbols(orbit_length: int, build: TowerBuild, depth: int = 3,
                        start: DyadicPoint = ZERO) -> np.ndarray:
    """Return-time value along the induced-map orbit, DEEP_SYMBOL beyond depth."""
    if depth < 1 or depth > build.schedule.stages:
        raise ValueError("depth outside the built schedule")
    build.build(depth)
    grid, level = _return_time_grid(build, depth)
    out = np.empty(orbit_length, dtype=np.int64)
    x = start
    for t in range(orbit_length):
        if grid is not None:
            out[t] = grid[_first_digits(x, level)]
        else:
            m = stage_of(x)
            out[t] = build.return_time(x) if m <= depth else DEEP_SYMBOL
        x = odometer_apply(x)
    return out


def induced_coding_entropy(scheme: str, orbit_length: int, L: int,
                           build: TowerBuild, start: DyadicPoint = ZERO,
                           depth: int = 3, tower_index: int = 4,
                           correction: str | None = None) -> EntropyReport:
    """Block entropy of a finite coding of the induced-map orbit.

    ``rung`` codes by the Tower-``tower_index`` rung, an exactly periodic
    sequence; ``return-time`` codes by the return-time partition through
    ``depth`` stages.  Both give per-symbol block entropies falling toward 0
    as L grows, the zero-entropy signature of the induced map.
    """
    if scheme == "rung":
        symbols = rung_symbols(orbit_length, tower_index, start)
    elif scheme == "return-time":
        symbols = return_time_symbols(orbit_length, build, depth, start)
    else:
        raise ValueError(f"unknown coding scheme {scheme!r}")
    return block_entropy(symbols, L, ceiling=None, correction=correction,
                         min_blocks=1)


def lz78_estimate(values) -> float:
    """LZ78 phrase-count entropy estimate in nats (cross-check only)."""
    values = np.asarray(getattr(values, "values", values), dtype=np.int64)
    phrases: set[tuple] = set()
    cur: tuple = ()
    count = 0
    for v in values.tolist():
        cur = cur + (v,)
        if cur not in phrases:
            phrases.add(cur)
            count += 1
            cur = ()
    if cur:
        count += 1
    return count * math.log(max(count, 2)) / len(values)
