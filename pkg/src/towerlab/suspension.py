"""Count processes of the stage suspensions, via labeled-particle unpacking.

A stage-n labeled sample packs each particle's pass through the stage tower
into one lead particle (the visit to the marked rung) and one trail particle
(the visit one rung above, at the link offset).  The label entries are the
return times read along the climb, in climb order, so the lead particle at
site s stood at s - h_m, s - h_m - h_{m-1}, .. on the way up (the last entry
is the step onto the marked rung), and its trail particle at site s' moves on
to s' + w_1, s' + w_1 + w_2, ..  Unpacking those visits over all particles
yields the count-in-base process of the suspension; with links it is the
stage-n process, without links it reproduces the stage-(n-1) process.

Stage 0 is the doubly infinite tower of unit intervals: i.i.d. Poisson(1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .construction import TowerBuild
from .errors import BudgetError
from .particles import LabeledSiteCounts, LemmaParams, sample_linked, sample_unlinked
from .rng import generator, seed_split

__all__ = [
    "CountWindow",
    "sample_xi0",
    "stage_lemma_params",
    "reconstruction_reach",
    "reconstruct",
    "sample_xi_n",
    "sample_xi_infinity",
    "window_replicates",
    "site_replicates",
    "window_to_csv",
]


@dataclass
class CountWindow:
    """Nonnegative counts on the integer sites lo, lo+1, .., lo+len-1."""

    lo: int
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.values.ndim != 1 or not len(self.values):
            raise ValueError("values must be a nonempty 1-d array")
        if self.values.min() < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def hi(self) -> int:
        return self.lo + len(self.values) - 1

    @property
    def width(self) -> int:
        return len(self.values)


def sample_xi0(window: tuple[int, int], seed: int) -> CountWindow:
    """Stage-0 process: independent Poisson(1) at every site."""
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise ValueError(f"empty window {window}")
    values = generator(seed).poisson(1.0, size=hi - lo + 1)
    return CountWindow(lo, values, {"n": 0, "seed": seed, "kind": "xi"})


def stage_lemma_params(n: int, build: TowerBuild) -> LemmaParams:
    """Lemma parameters of stage n: density 2^(1-n), stage offsets, label law."""
    if n < 1:
        raise ValueError("stage must be >= 1")
    M, k = build.schedule.stage(n)
    law = build.label_law(n)
    joining = {pair: float(m) for pair, m in sorted(law.mass.items())}
    return LemmaParams(delta=2.0 ** (1 - n), M=M, k=k, joining=joining)


def reconstruction_reach(n: int, build: TowerBuild) -> int:
    """Largest label partial sum: R_{n-1} entries summed over a half climb."""
    return build.schedule.max_value(n - 1) * ((1 << (n - 1)) - 1)


def _lead_offsets(label) -> list[int]:
    # visits lie below the lead site by the tail sums of the climb label
    offs = [0]
    acc = 0
    for h in reversed(label):
        acc += h
        offs.append(acc)
    return offs


def _trail_offsets(label) -> list[int]:
    offs = [0]
    acc = 0
    for h in label:
        acc += h
        offs.append(acc)
    return offs


def reconstruct(labeled: LabeledSiteCounts, window: tuple[int, int],
                meta: dict | None = None) -> CountWindow:
    """Unpack the labeled sample into base-visit counts on the window.

    The labeled sample must extend far enough beyond the window: leads reach
    down by their label sum, trails reach up by theirs.
    """
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise ValueError(f"empty window {window}")
    lead_reach = max((sum(lab) for lab in labeled.lead), default=0)
    trail_reach = max((sum(lab) for lab in labeled.trail), default=0)
    if labeled.lo > lo - trail_reach or labeled.hi < hi + lead_reach:
        raise ValueError(
            f"labeled window [{labeled.lo}, {labeled.hi}] cannot cover "
            f"[{lo}, {hi}] with reaches {lead_reach} (lead), {trail_reach} (trail)")
    width = hi - lo + 1
    out = np.zeros(width, dtype=np.int64)
    for label, counts in labeled.lead.items():
        for off in _lead_offsets(label):
            start = lo + off - labeled.lo
            out += counts[start:start + width]
    for label, counts in labeled.trail.items():
        for off in _trail_offsets(label):
            start = lo - off - labeled.lo
            out += counts[start:start + width]
    return CountWindow(lo, out, dict(meta or {}))


def sample_xi_n(n: int, build: TowerBuild, window: tuple[int, int], seed: int,
                linked: bool = True) -> CountWindow:
    """Stage-n count process on the window (linked), or its stage-(n-1)
    lookalike from the same stage parameters with the links severed."""
    if n == 0:
        return sample_xi0(window, seed)
    params = stage_lemma_params(n, build)
    reach = reconstruction_reach(n, build)
    ext = (int(window[0]) - reach, int(window[1]) + reach)
    sampler = sample_linked if linked else sample_unlinked
    labeled = sampler(params, ext, seed)
    meta = {"n": n, "seed": seed, "schedule": build.schedule.digest(),
            "kind": "xi" if linked else "xi_unlinked"}
    return reconstruct(labeled, window, meta)


def sample_xi_infinity(L: int, build: TowerBuild, seed: int) -> CountWindow:
    """Window [0, L-1] of the full-tower process.

    The stage-n process shows the same window law once every deeper return
    time exceeds the window span, so the smallest stage n with M_{n+1} > L is
    sampled; the stage used is recorded in the metadata.
    """
    if L < 1:
        raise ValueError("window length must be >= 1")
    sched = build.schedule
    for n in range(1, sched.stages):
        if sched.stage(n + 1)[0] > L:
            w = sample_xi_n(n, build, (0, L - 1), seed, linked=True)
            w.meta.update({"kind": "xi_infinity", "stage_used": n, "L": L})
            return w
    raise BudgetError(
        f"no built stage has its successor offset beyond L={L}; "
        f"deepest schedule stage is {sched.stages}")


def _dependence_stride(n: int, build: TowerBuild, L: int) -> int:
    params = stage_lemma_params(n, build)
    reach = reconstruction_reach(n, build)
    return L + 2 * reach + params.max_offset() + 1


def window_replicates(n: int, build: TowerBuild | None, L: int, replicates: int,
                      seed: int, linked: bool = True,
                      site_budget: int = 1_000_000) -> np.ndarray:
    """Independent copies of the stage-n window [0, L-1], one per row.

    Rows are cut from long windows at strides exceeding the particle span, so
    they are genuinely independent; chunks keep memory flat.
    """
    if replicates < 1 or L < 1:
        raise ValueError("replicates and L must be positive")
    if n == 0:
        return generator(seed).poisson(1.0, size=(replicates, L))
    stride = _dependence_stride(n, build, L)
    per_chunk = max(1, site_budget // stride)
    rows = []
    done = 0
    chunk = 0
    while done < replicates:
        count = min(per_chunk, replicates - done)
        w = sample_xi_n(n, build, (0, count * stride - 1),
                        seed_split(seed, "win", chunk), linked=linked)
        rows.append(w.values.reshape(count, stride)[:, :L])
        done += count
        chunk += 1
    return np.concatenate(rows, axis=0)


def site_replicates(n: int, build: TowerBuild | None, replicates: int, seed: int,
                    linked: bool = True) -> np.ndarray:
    """Independent single-site counts of the stage-n process."""
    return window_replicates(n, build, 1, replicates, seed, linked=linked)[:, 0]


def window_to_csv(window: CountWindow, path) -> None:
    lines = []
    for key in sorted(window.meta):
        lines.append(f"# {key} = {window.meta[key]}")
    lines.append("site,value")
    for i, v in enumerate(window.values):
        lines.append(f"{window.lo + i},{int(v)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
