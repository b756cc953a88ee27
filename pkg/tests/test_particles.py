"""Particle-system laws against enumeration oracles and closed forms.

The conditional-law oracle expands the product over individual particles:
each free particle at depth index j is an independent Bernoulli(1/j), and the
law of the sum is built term by term over all outcome vectors.  The module
under test convolves binomial blocks instead, so agreement checks both the
block decomposition and the convolution order.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from towerlab.particles import (FreeCounts, LemmaParams, conditional_white_law,
                                enriched_past, free_counts_batch,
                                free_weight_stats, l1_to_poisson, lecam_gap,
                                no_free_probability, poisson_pmf_array,
                                sample_linked, sample_unlinked)
from towerlab.rng import seed_split
from towerlab.stats import poisson_gof, two_sample_counts_test


def oracle_white_law(counts) -> np.ndarray:
    """Sum law by direct enumeration of every particle outcome."""
    js = [j for j, c in enumerate(counts, start=1) for _ in range(int(c))]
    pmf = np.zeros(len(js) + 1)
    for outcome in itertools.product((0, 1), repeat=len(js)):
        prob = 1.0
        for bit, j in zip(outcome, js):
            prob *= (1.0 / j) if bit else (1.0 - 1.0 / j)
        pmf[sum(outcome)] += prob
    return pmf


@given(st.lists(st.integers(0, 2), min_size=1, max_size=5).filter(
    lambda c: sum(c) <= 8))
def test_conditional_white_law_matches_enumeration(counts):
    got = conditional_white_law(np.array(counts, dtype=np.int64))
    want = oracle_white_law(counts)
    assert len(got) == len(want)
    assert np.abs(got - want).max() < 1e-12


def test_conditional_white_law_frozen():
    # two particles at depth 2: Binomial(2, 1/2)
    law = conditional_white_law(np.array([0, 2]))
    assert np.allclose(law, [0.25, 0.5, 0.25])
    law = conditional_white_law(FreeCounts(M=4, k=3, counts=np.array([1, 0, 1]),
                                           near_count=0))
    # Bernoulli(1) * Bernoulli(1/3): P(0) = 0, P(1) = 2/3, P(2) = 1/3
    assert np.allclose(law, [0.0, 2.0 / 3.0, 1.0 / 3.0])


def test_conditional_white_law_k_check():
    with pytest.raises(ValueError):
        conditional_white_law(np.array([1, 0]), k=3)


def test_no_free_probability_is_termwise_product():
    for delta, k in [(2.0, 100), (1.0, 7), (0.5, 1000)]:
        for J in (0, 1, 3, min(k, 5)):
            want = math.prod(math.exp(-delta * j / (2 * k)) for j in range(1, J + 1))
            assert no_free_probability(J, k, delta) == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        no_free_probability(8, 7, 1.0)


def test_free_weight_stats_termwise():
    for delta, k in [(2.0, 100), (1.0, 3)]:
        mean, var = free_weight_stats(k, delta)
        # S = sum F_j / j with F_j ~ Poisson(delta j / (2k)) independent
        want_mean = sum((delta * j / (2 * k)) / j for j in range(1, k + 1))
        want_var = sum((delta * j / (2 * k)) / j**2 for j in range(1, k + 1))
        assert mean == pytest.approx(want_mean, rel=1e-12)
        assert var == pytest.approx(want_var, rel=1e-12)


def test_poisson_pmf_against_scipy():
    for lam in (0.3, 1.0, 5.0):
        got = poisson_pmf_array(lam, 30)
        want = sps.poisson.pmf(np.arange(30), lam)
        assert np.abs(got - want).max() < 1e-13


def test_l1_to_poisson_includes_tail():
    # a pmf equal to the Poisson head: the gap is exactly the missing tail * 2
    lam = 1.0
    head = poisson_pmf_array(lam, 3)
    head = head / head.sum()
    direct = float(np.abs(head - poisson_pmf_array(lam, 3)).sum())
    tail = 1.0 - sps.poisson.cdf(2, lam)
    assert l1_to_poisson(head, lam) == pytest.approx(direct + tail, abs=1e-12)


@settings(max_examples=200)
@given(st.lists(st.floats(0.0, 0.4), min_size=1, max_size=8))
def test_lecam_gap_bounded(ps):
    exact, bound = lecam_gap(np.array(ps))
    assert exact <= bound + 1e-12
    assert exact >= 0.0


def test_lecam_gap_frozen_single():
    # one Bernoulli(p) vs Poisson(p), all terms written out
    p = 0.2
    exact, bound = lecam_gap([p])
    want = (abs((1 - p) - math.exp(-p)) + abs(p - p * math.exp(-p))
            + (1 - math.exp(-p) - p * math.exp(-p)))
    assert exact == pytest.approx(want, abs=1e-12)
    assert bound == pytest.approx(2 * p * p, abs=1e-15)


def test_lecam_gap_validation():
    with pytest.raises(ValueError):
        lecam_gap([])
    with pytest.raises(ValueError):
        lecam_gap([0.5, 1.2])


def test_lemma_params_validation():
    with pytest.raises(ValueError):
        LemmaParams(delta=0.0, M=4, k=2)
    with pytest.raises(ValueError):
        LemmaParams(delta=1.0, M=0, k=2)
    with pytest.raises(ValueError):
        LemmaParams(delta=1.0, M=4, k=2, joining={((), ()): 0.5})
    p = LemmaParams(delta=1.0, M=4, k=2)
    assert p.rate == 0.5
    assert p.max_offset() == 5
    assert p.lead_marginal == {(): 1.0} and p.trail_marginal == {(): 1.0}


def test_sample_unlinked_poisson_rates():
    params = LemmaParams(delta=1.0, M=4, k=2,
                         joining={((2,), (4,)): 0.5, ((3,), (5,)): 0.5})
    s = sample_unlinked(params, (0, 39999), seed=5)
    assert set(s.lead) == {(2,), (3,)} and set(s.trail) == {(4,), (5,)}
    for label, arr in {**s.lead, **s.trail}.items():
        _, _, p = poisson_gof(arr, 0.25)
        assert p > 0.001, (label, p)
    # lead and trail totals both have site intensity delta / 2
    assert s.total().mean() == pytest.approx(1.0, abs=0.02)


def test_sample_linked_matches_unlinked_marginals():
    params = LemmaParams(delta=1.0, M=4, k=3,
                         joining={((2,), (4,)): 0.5, ((3,), (5,)): 0.5})
    linked = sample_linked(params, (0, 29999), seed=7)
    unlinked = sample_unlinked(params, (0, 29999), seed=8)
    for label in ((2,), (3,)):
        ca = {int(v): int(c) for v, c in zip(*np.unique(linked.lead[label][100:-100],
                                                        return_counts=True))}
        cb = {int(v): int(c) for v, c in zip(*np.unique(unlinked.lead[label][100:-100],
                                                        return_counts=True))}
        _, _, p = two_sample_counts_test(ca, cb)
        assert p > 0.001, (label, p)


def test_sample_linked_links_record_every_particle():
    params = LemmaParams(delta=2.0, M=3, k=2)
    s = sample_linked(params, (0, 4999), seed=11, keep_links=True)
    sites = s.links[:, 0]
    offsets = s.links[:, 1]
    assert ((offsets >= 3) & (offsets <= 4)).all()
    in_window = (sites >= 0) & (sites <= 4999)
    lead_total = int(sum(a.sum() for a in s.lead.values()))
    assert int(in_window.sum()) == lead_total
    # every recorded trail landing inside the window is counted there
    t_sites = sites + offsets
    t_in = (t_sites >= 0) & (t_sites <= 4999)
    trail_total = int(sum(a.sum() for a in s.trail.values()))
    assert int(t_in.sum()) == trail_total


def test_enriched_past_matches_batch_sampler():
    # the windowed classifier and the direct replicate sampler draw the same law
    params = LemmaParams(delta=2.0, M=5, k=4)
    reps = 4000
    direct = free_counts_batch(params, reps, seed=21)
    windowed = np.empty((reps, params.k), dtype=np.int64)
    s = sample_linked(params, (-(params.M + params.k) - 10 * reps, 10),
                      seed=22, keep_links=True)
    for i in range(reps):
        fc = enriched_past(s, params, cutoff=-10 * i)
        windowed[i] = fc.counts
    for j in (1, 2, 4):
        lam = params.delta * j / (2 * params.k)
        for arr in (direct, windowed):
            _, _, p = poisson_gof(arr[:, j - 1], lam, min_expected=3)
            assert p > 0.001, (j, p)
    ca = {int(v): int(c) for v, c in zip(*np.unique(direct.sum(axis=1),
                                                    return_counts=True))}
    cb = {int(v): int(c) for v, c in zip(*np.unique(windowed.sum(axis=1),
                                                    return_counts=True))}
    _, _, p = two_sample_counts_test(ca, cb)
    assert p > 0.001


def test_enriched_past_validation():
    params = LemmaParams(delta=2.0, M=3, k=2)
    plain = sample_linked(params, (-20, 5), seed=1)
    with pytest.raises(ValueError, match="without link records"):
        enriched_past(plain, params)
    s = sample_linked(params, (-3, 5), seed=2, keep_links=True)
    with pytest.raises(ValueError, match="does not cover"):
        enriched_past(s, params, cutoff=10)
    with pytest.raises(ValueError, match="too small"):
        enriched_past(s, params, depth=2)


def test_free_counts_batch_deterministic():
    params = LemmaParams(delta=1.0, M=4, k=8)
    a = free_counts_batch(params, 100, seed=seed_split(3, "x"))
    b = free_counts_batch(params, 100, seed=seed_split(3, "x"))
    assert (a == b).all()
