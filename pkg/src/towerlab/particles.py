"""Linked and unlinked labeled particle processes on the integer line.

The model has two species per site: lead particles and trail particles, each
carrying a label (a tuple of return-time integers).  In the unlinked process
the two species are independent Poisson fields with label marginals P_lead,
P_trail.  In the linked process every lead particle at site x spawns exactly
one trail particle at site x + j with j uniform on {M, .., M+k-1}, the label
pair drawn jointly, and the offset independent of the labels.

Conditioning a linked sample on everything left of a cutoff, enriched with
the link offsets of the lead particles that have already appeared, leaves the
trail count at the cutoff a sum of independent Bernoulli variables: a lead
particle at distance M+k-j left of the cutoff is still unresolved ("free")
with probability j/k, and if free it hits the cutoff site with probability
1/j.  The helpers below expose that conditional law exactly, closed forms for
the free-count field, and the Poisson approximation gap used to turn the
conditional law into a closeness certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .rng import generator, seed_split

__all__ = [
    "LemmaParams",
    "LabeledSiteCounts",
    "FreeCounts",
    "sample_unlinked",
    "sample_linked",
    "enriched_past",
    "free_counts_batch",
    "conditional_white_law",
    "no_free_probability",
    "free_weight_stats",
    "lecam_gap",
    "poisson_pmf_array",
    "l1_to_poisson",
    "conditional_criterion_estimate",
    "CriterionEstimate",
]

Label = tuple[int, ...]


@dataclass(frozen=True)
class LemmaParams:
    """Parameters of one linked-process stage.

    ``delta`` is the expected total particle count per site (lead plus trail,
    so each species has per-site mean delta/2).  Offsets are uniform on
    {M, .., M+k-1}.  ``joining`` maps label pairs (lead, trail) to
    probabilities; it defaults to the trivial empty-label joining.
    """

    delta: float
    M: int
    k: int
    joining: dict[tuple[Label, Label], float] = field(
        default_factory=lambda: {((), ()): 1.0}
    )

    def __post_init__(self):
        if self.M < 1 or self.k < 1:
            raise ValueError("M and k must be positive integers")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        tot = float(sum(self.joining.values()))
        if abs(tot - 1.0) > 1e-9:
            raise ValueError(f"joining masses sum to {tot}, expected 1")

    @property
    def rate(self) -> float:
        """Per-site mean of each species: delta / 2."""
        return self.delta / 2.0

    def marginal(self, side: int) -> dict[Label, float]:
        out: dict[Label, float] = {}
        for pair, p in self.joining.items():
            out[pair[side]] = out.get(pair[side], 0.0) + float(p)
        return out

    @property
    def lead_marginal(self) -> dict[Label, float]:
        return self.marginal(0)

    @property
    def trail_marginal(self) -> dict[Label, float]:
        return self.marginal(1)

    def max_offset(self) -> int:
        return self.M + self.k - 1


@dataclass
class LabeledSiteCounts:
    """Counts per site and label over a window [lo, hi], plus optional links.

    ``lead`` and ``trail`` map labels to int arrays of length hi - lo + 1.
    ``links`` (linked samples only, when requested) is an array of rows
    (lead_site, offset, pair_index) covering every lead particle drawn,
    including those left of the window whose trail lands inside; ``pairs``
    lists the label pairs indexed by pair_index.
    """

    lo: int
    hi: int
    lead: dict[Label, np.ndarray]
    trail: dict[Label, np.ndarray]
    links: np.ndarray | None = None
    pairs: list[tuple[Label, Label]] | None = None

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    def total(self) -> np.ndarray:
        out = np.zeros(self.width, dtype=np.int64)
        for arr in self.lead.values():
            out += arr
        for arr in self.trail.values():
            out += arr
        return out


@dataclass(frozen=True)
class FreeCounts:
    """Unresolved lead counts left of a cutoff.

    ``counts[j-1]`` is the number of free lead particles at site
    cutoff - (M+k) + j, for j = 1 .. k.  ``near_count`` counts the lead
    particles strictly right of cutoff - M; they are always unresolved but
    sit too close to influence the cutoff site, so they are reported apart
    and excluded from the conditional law.
    """

    M: int
    k: int
    counts: np.ndarray
    near_count: int


def _window_check(window: tuple[int, int]) -> tuple[int, int]:
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise ValueError(f"empty window {window}")
    return lo, hi


def sample_unlinked(params: LemmaParams, window: tuple[int, int], seed: int) -> LabeledSiteCounts:
    """Independent species: per site and label, Poisson(marginal * delta/2) counts."""
    lo, hi = _window_check(window)
    rng = generator(seed)
    width = hi - lo + 1
    lead = {}
    for lab in sorted(params.lead_marginal):
        lead[lab] = rng.poisson(params.rate * params.lead_marginal[lab], size=width)
    trail = {}
    for lab in sorted(params.trail_marginal):
        trail[lab] = rng.poisson(params.rate * params.trail_marginal[lab], size=width)
    return LabeledSiteCounts(lo, hi, lead, trail)


def sample_linked(params: LemmaParams, window: tuple[int, int], seed: int,
                  keep_links: bool = False) -> LabeledSiteCounts:
    """Linked pairs: leads Poisson(delta/2) per site, one trail each at offset
    uniform on {M, .., M+k-1}, label pair joint and independent of the offset.

    Leads are drawn on the window extended left by M+k-1 so the trail counts
    inside the window are stationary; counts outside [lo, hi] are dropped, but
    every drawn lead appears in the link records when ``keep_links`` is set.
    """
    lo, hi = _window_check(window)
    rng = generator(seed)
    ext_lo = lo - params.max_offset()
    n_sites = hi - ext_lo + 1
    lead_n = rng.poisson(params.rate, size=n_sites)
    total = int(lead_n.sum())
    sites = np.repeat(np.arange(ext_lo, hi + 1, dtype=np.int64), lead_n)
    offsets = rng.integers(params.M, params.M + params.k, size=total)
    pairs = sorted(params.joining)
    probs = np.array([float(params.joining[p]) for p in pairs])
    probs = probs / probs.sum()
    pair_idx = rng.choice(len(pairs), size=total, p=probs) if total else np.zeros(0, dtype=np.int64)

    width = hi - lo + 1
    lead: dict[Label, np.ndarray] = {}
    trail: dict[Label, np.ndarray] = {}
    for lab in sorted({p[0] for p in pairs}):
        lead[lab] = np.zeros(width, dtype=np.int64)
    for lab in sorted({p[1] for p in pairs}):
        trail[lab] = np.zeros(width, dtype=np.int64)
    trail_sites = sites + offsets
    for i, pair in enumerate(pairs):
        mine = pair_idx == i
        ls = sites[mine]
        ls = ls[(ls >= lo) & (ls <= hi)]
        np.add.at(lead[pair[0]], ls - lo, 1)
        ts = trail_sites[mine]
        ts = ts[(ts >= lo) & (ts <= hi)]
        np.add.at(trail[pair[1]], ts - lo, 1)
    links = None
    if keep_links:
        links = np.column_stack([sites, offsets, pair_idx]).astype(np.int64)
    return LabeledSiteCounts(lo, hi, lead, trail, links=links,
                             pairs=pairs if keep_links else None)


def enriched_past(sample: LabeledSiteCounts, params: LemmaParams,
                  cutoff: int = 0, depth: int | None = None) -> FreeCounts:
    """Classify the lead particles left of ``cutoff`` by their link offsets.

    A lead particle at site cutoff - (M+k) + j (j = 1 .. k) is free exactly
    when its trail lands at or beyond the cutoff.  The sample must have been
    drawn with ``keep_links`` and must cover depth >= M+k sites before the
    cutoff.
    """
    if sample.links is None:
        raise ValueError("sample was drawn without link records")
    M, k = params.M, params.k
    depth = M + k if depth is None else depth
    if depth < M + k:
        raise ValueError(f"depth {depth} is too small, need at least M+k = {M + k}")
    if sample.lo > cutoff - depth or sample.hi < cutoff - 1:
        raise ValueError("sample window does not cover the requested past")
    sites = sample.links[:, 0]
    offsets = sample.links[:, 1]
    lead_site_ok = (sites >= cutoff - (M + k) + 1) & (sites <= cutoff - M)
    free = lead_site_ok & (sites + offsets >= cutoff)
    j = sites[free] + (M + k) - cutoff
    counts = np.bincount(j - 1, minlength=k).astype(np.int64)
    near = int(((sites > cutoff - M) & (sites <= cutoff - 1)).sum())
    return FreeCounts(M=M, k=k, counts=counts, near_count=near)


def free_counts_batch(params: LemmaParams, replicates: int, seed: int) -> np.ndarray:
    """Free-count fields for many independent pasts, one row per replicate.

    Each replicate draws the lead counts on the k relevant sites and one
    offset per lead particle, then classifies it free when its trail clears
    the cutoff; this is the per-particle definition of ``enriched_past``
    vectorised across replicates.
    """
    M, k = params.M, params.k
    rng = generator(seed)
    out = np.zeros((replicates, k), dtype=np.int64)
    batch = max(1, min(replicates, int(2e6) // max(k, 1)))
    done = 0
    while done < replicates:
        b = min(batch, replicates - done)
        lead_n = rng.poisson(params.rate, size=(b, k))
        total = int(lead_n.sum())
        if total:
            flat = lead_n.ravel()
            cells = np.repeat(np.arange(b * k, dtype=np.int64), flat)
            j = cells % k + 1  # particle at site cutoff - (M+k) + j
            offsets = rng.integers(M, M + k, size=total)
            # trail site - cutoff = j - (M+k) + offset >= 0
            free = offsets >= (M + k) - j
            hist = np.bincount(cells[free], minlength=b * k)
            out[done:done + b] = hist.reshape(b, k)
        done += b
    return out


def _binom_pmf(n: int, p: float) -> np.ndarray:
    q = 1.0 - p
    return np.array([math.comb(n, i) * p**i * q ** (n - i) for i in range(n + 1)])


def conditional_white_law(free: FreeCounts | np.ndarray, k: int | None = None) -> np.ndarray:
    """Exact law of the trail count at the cutoff given the free-count field.

    Each free particle at depth index j contributes an independent
    Bernoulli(1/j); the law is the sequential convolution of the binomial
    blocks Binomial(F_j, 1/j).  Returns the pmf on 0 .. sum(F_j).
    """
    if isinstance(free, FreeCounts):
        counts = free.counts
    else:
        counts = np.asarray(free, dtype=np.int64)
        if k is not None and len(counts) != k:
            raise ValueError("free-count vector length must equal k")
    pmf = np.array([1.0])
    for j in np.nonzero(counts)[0] + 1:
        pmf = np.convolve(pmf, _binom_pmf(int(counts[j - 1]), 1.0 / float(j)))
    return pmf


def no_free_probability(J: int, k: int, delta: float) -> float:
    """P(no free particle at depth indices 1..J) = exp(-delta J(J+1) / (4k))."""
    if not 0 <= J <= k:
        raise ValueError(f"J must lie in 0..k, got J={J}, k={k}")
    return math.exp(-delta * J * (J + 1) / (4.0 * k))


def free_weight_stats(k: int, delta: float) -> tuple[float, float]:
    """Mean and variance of the weighted free count sum S = sum_j F_j / j.

    F_j is Poisson(delta j / (2k)), so S has mean delta/2 and variance
    (delta / (2k)) H_k with H_k the k-th harmonic number.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    harmonic = float(np.sum(1.0 / np.arange(1, k + 1)))
    return delta / 2.0, (delta / (2.0 * k)) * harmonic


def poisson_pmf_array(lam: float, n: int) -> np.ndarray:
    """pmf of Poisson(lam) on 0..n-1, by the stable multiplicative recurrence."""
    out = np.empty(n)
    out[0] = math.exp(-lam)
    for i in range(1, n):
        out[i] = out[i - 1] * lam / i
    return out


def l1_to_poisson(pmf: np.ndarray, lam: float) -> float:
    """Sum of |pmf - Poisson(lam)| over all of N.

    The pmf has finite support, so the Poisson tail beyond it enters exactly;
    no truncation error.
    """
    n = len(pmf)
    pois = poisson_pmf_array(lam, n)
    return float(np.abs(pmf - pois).sum() + max(0.0, 1.0 - pois.sum()))


def lecam_gap(bernoulli_ps) -> tuple[float, float]:
    """Exact L1 gap between a Bernoulli sum law and its matching Poisson law.

    Returns (exact, bound) where exact = sum_l |P(Z = l) - Poisson(sum p)(l)|
    computed by convolution, and bound = 2 sum p_i**2.  The Bernoulli-sum law
    lives on 0..n, so the Poisson mass beyond n is added exactly.
    """
    ps = np.asarray(bernoulli_ps, dtype=float)
    if ps.ndim != 1 or len(ps) == 0:
        raise ValueError("need a nonempty 1-d array of probabilities")
    if np.any((ps < 0) | (ps > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    pmf = np.array([1.0])
    for p in ps:
        pmf = np.convolve(pmf, [1.0 - p, p])
    lam = float(ps.sum())
    n = len(pmf)
    pois = poisson_pmf_array(lam, n)
    exact = float(np.abs(pmf - pois).sum() + max(0.0, 1.0 - pois.sum()))
    return exact, float(2.0 * np.sum(ps**2))


@dataclass(frozen=True)
class CriterionEstimate:
    """Monte Carlo summary of the conditional closeness criterion.

    ``bad_mass`` estimates the probability that the conditional trail law at
    the cutoff is at L1 distance >= eps_target from Poisson(delta/2);
    ``max_l1_good`` is the largest distance seen outside that bad event.  The
    certified closeness bound is 3 * max(eps_target, max_l1_good) whenever
    bad_mass <= eps_target; both numbers carry Monte Carlo error.
    """

    eps_target: float
    replicates: int
    bad_mass: float
    max_l1_good: float
    mean_l1: float
    q99_l1: float

    @property
    def certified(self) -> bool:
        return self.bad_mass <= self.eps_target

    def upper_bound(self) -> float:
        """3 eps with eps = max(eps_target, max_l1_good); valid when certified."""
        return 3.0 * max(self.eps_target, self.max_l1_good)

    def metadata(self) -> dict:
        return {
            "eps_target": self.eps_target,
            "replicates": self.replicates,
            "bad_mass": self.bad_mass,
            "max_l1_good": self.max_l1_good,
            "mean_l1": self.mean_l1,
            "q99_l1": self.q99_l1,
            "certified": self.certified,
            "upper_bound": self.upper_bound(),
            "caveat": "bad_mass and max_l1_good are Monte Carlo estimates; "
                      "the 3-eps bound inherits their sampling error",
        }


def conditional_criterion_estimate(params: LemmaParams, eps_target: float,
                                   replicates: int, seed: int,
                                   past_depth: int | None = None) -> CriterionEstimate:
    """Estimate the closeness criterion by Monte Carlo over enriched pasts.

    For each replicate, draw the free-count field of an independent past
    (depth >= M+k), build the exact conditional law, and measure its L1
    distance to Poisson(delta/2).
    """
    M, k = params.M, params.k
    depth = M + k if past_depth is None else past_depth
    if depth < M + k:
        raise ValueError(f"past depth {depth} < M+k = {M + k}")
    F = free_counts_batch(params, replicates, seed_split(seed, "criterion", "free"))
    lam = params.rate
    l1 = np.empty(replicates)
    for i in range(replicates):
        l1[i] = l1_to_poisson(conditional_white_law(F[i], k), lam)
    bad = l1 >= eps_target
    good = l1[~bad]
    return CriterionEstimate(
        eps_target=float(eps_target),
        replicates=replicates,
        bad_mass=float(bad.mean()),
        max_l1_good=float(good.max()) if len(good) else 0.0,
        mean_l1=float(l1.mean()),
        q99_l1=float(np.quantile(l1, 0.99)),
    )
