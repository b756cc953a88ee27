"""Block-distribution distance against full-coupling enumeration.

The oracle solves the coupling over the complete support product with the
spanning-tree enumerator, never stripping shared mass, so agreement also
certifies the keep-overlap-in-place reduction.  Everything else checks metric
structure: single-site distance is total variation, product laws couple
coordinatewise, truncation never increases the distance.
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from towerlab.dbar import (BlockDistribution, blocks_from_series, dbar_exact,
                           dbar_empirical, hamming, plan_to_csv,
                           total_variation, truncate_saturate)
from towerlab.errors import InsufficientSampleError
from towerlab.transport import transport_bruteforce


def oracle_dbar(p: BlockDistribution, q: BlockDistribution) -> float:
    """Optimal coupling over the full product support, no reductions."""
    cost = (p.support[:, None, :] != q.support[None, :, :]).mean(axis=2)
    return transport_bruteforce(p.mass, q.mass, cost)


def _random_distribution(rng, length, alphabet, max_support):
    n_rows = int(rng.integers(2, min(max_support, alphabet**length) + 1))
    rows = set()
    while len(rows) < n_rows:
        rows.add(tuple(int(x) for x in rng.integers(0, alphabet, size=length)))
    mass = rng.random(len(rows)) + 0.05
    return BlockDistribution(np.array(sorted(rows)), mass / mass.sum())


def test_matches_full_enumeration():
    rng = np.random.default_rng(10)
    for trial in range(60):
        length = int(rng.integers(1, 3))
        p = _random_distribution(rng, length, 3, 4)
        q = _random_distribution(rng, length, 3, 4)
        got = dbar_exact(p, q)
        want = oracle_dbar(p, q)
        assert got.value == pytest.approx(want, abs=1e-9), trial
        assert 0.0 <= got.value <= 1.0
        assert got.overlap + got.shipped_mass == pytest.approx(1.0, abs=1e-9)


def test_single_site_distance_is_total_variation():
    rng = np.random.default_rng(11)
    for _ in range(30):
        p = _random_distribution(rng, 1, 5, 5)
        q = _random_distribution(rng, 1, 5, 5)
        tv = total_variation(p.as_dict(), q.as_dict())
        assert dbar_exact(p, q).value == pytest.approx(tv, abs=1e-9)


def test_fair_coin_vs_point_mass_frozen():
    p = BlockDistribution.iid({0: 0.5, 1: 0.5}, 1)
    q = BlockDistribution.iid({0: 1.0}, 1)
    assert dbar_exact(p, q).value == pytest.approx(0.5, abs=1e-12)


def test_product_laws_couple_coordinatewise():
    # dbar between iid powers equals the single-coordinate total variation
    rng = np.random.default_rng(12)
    for length in (2, 3):
        a = rng.random(3) + 0.1
        b = rng.random(3) + 0.1
        pm = {i: float(x) for i, x in enumerate(a / a.sum())}
        qm = {i: float(x) for i, x in enumerate(b / b.sum())}
        p = BlockDistribution.iid(pm, length)
        q = BlockDistribution.iid(qm, length)
        tv = total_variation(pm, qm)
        assert dbar_exact(p, q).value == pytest.approx(tv, abs=1e-9)


def test_metric_axioms():
    rng = np.random.default_rng(13)
    for _ in range(15):
        p = _random_distribution(rng, 2, 3, 4)
        q = _random_distribution(rng, 2, 3, 4)
        r = _random_distribution(rng, 2, 3, 4)
        dpq = dbar_exact(p, q).value
        dqp = dbar_exact(q, p).value
        assert dpq == pytest.approx(dqp, abs=1e-9)
        assert dbar_exact(p, p).value == pytest.approx(0.0, abs=1e-12)
        dpr = dbar_exact(p, r).value
        dqr = dbar_exact(q, r).value
        assert dpq <= dpr + dqr + 1e-9


def test_integer_and_float_paths_agree():
    rng = np.random.default_rng(14)
    for trial in range(10):
        xa = rng.poisson(1.0, size=800)
        xb = rng.poisson(1.3, size=800)
        L = int(rng.integers(2, 5))
        p = BlockDistribution.from_blocks(blocks_from_series(xa, L, ceiling=5))
        q = BlockDistribution.from_blocks(blocks_from_series(xb, L, ceiling=5))
        assert p.counts is not None and q.counts is not None
        got = dbar_exact(p, q)
        stripped_p = BlockDistribution(p.support, p.mass)
        stripped_q = BlockDistribution(q.support, q.mass)
        want = dbar_exact(stripped_p, stripped_q)
        assert got.value == pytest.approx(want.value, abs=1e-9), trial
        assert got.overlap == pytest.approx(want.overlap, abs=1e-12)


def test_integer_path_plan_marginals_exact():
    rng = np.random.default_rng(15)
    xa = rng.poisson(1.0, size=2000)
    xb = rng.poisson(0.7, size=2000)
    p = BlockDistribution.from_blocks(blocks_from_series(xa, 3, ceiling=4))
    q = BlockDistribution.from_blocks(blocks_from_series(xb, 3, ceiling=4))
    res = dbar_exact(p, q, keep_plan=True)
    to_a: dict = {}
    to_b: dict = {}
    for (ka, kb), m in res.plan.items():
        to_a[ka] = to_a.get(ka, 0.0) + m
        to_b[kb] = to_b.get(kb, 0.0) + m
    pa, qb = p.as_dict(), q.as_dict()
    assert max(abs(to_a[k] - pa[k]) for k in pa) < 1e-12
    assert max(abs(to_b[k] - qb[k]) for k in qb) < 1e-12
    # transport block reports exact bookkeeping on the integer path
    assert res.transport.marginal_residual == 0.0


def test_truncation_never_increases_distance():
    rng = np.random.default_rng(16)
    for _ in range(10):
        xa = rng.poisson(2.0, size=600)
        xb = rng.poisson(1.0, size=600)
        full = dbar_empirical(xa, xb, 2, ceiling=12, min_blocks=100)
        cut = dbar_empirical(xa, xb, 2, ceiling=2, min_blocks=100)
        assert cut.value <= full.value + 1e-9


def test_hamming():
    assert hamming((1, 2, 3), (1, 2, 3)) == 0.0
    assert hamming((1, 2, 3), (1, 0, 0)) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        hamming((1,), (1, 2))
    with pytest.raises(ValueError):
        hamming((), ())


def test_truncate_saturate():
    out = truncate_saturate(np.array([0, 1, 5, 99]), 3)
    assert out.tolist() == [0, 1, 3, 3]
    with pytest.raises(ValueError):
        truncate_saturate(np.array([1]), 0)


def test_blocks_from_series_frozen():
    blocks = blocks_from_series(np.array([3, 1, 4, 1, 5]), 3)
    assert blocks.tolist() == [[3, 1, 4], [1, 4, 1], [4, 1, 5]]
    with pytest.raises(ValueError):
        blocks_from_series(np.array([1, 2]), 3)
    with pytest.raises(ValueError):
        blocks_from_series(np.array([[1, 2]]), 1)


def test_distribution_validation():
    with pytest.raises(ValueError):
        BlockDistribution(np.array([[0], [0]]), np.array([0.5, 0.5]))  # dup rows
    with pytest.raises(ValueError):
        BlockDistribution(np.array([[0]]), np.array([0.9]))  # mass off 1
    with pytest.raises(ValueError):
        BlockDistribution(np.array([[0], [1]]), np.array([1.5, -0.5]))
    with pytest.raises(ValueError):
        BlockDistribution.iid({0: 1.0}, 0)
    d = BlockDistribution.from_counts({(1, 2): 3, (0, 0): 1})
    assert d.denom == 4 and d.counts.tolist() == [1, 3]  # sorted support order
    assert d.as_dict() == {(0, 0): 0.25, (1, 2): 0.75}


def test_from_blocks_keeps_counts():
    blocks = np.array([[0, 1], [0, 1], [2, 0]])
    d = BlockDistribution.from_blocks(blocks)
    assert d.denom == 3
    assert d.as_dict() == {(0, 1): pytest.approx(2 / 3), (2, 0): pytest.approx(1 / 3)}
    assert d.counts.tolist() == [2, 1]


def test_empirical_floor():
    with pytest.raises(InsufficientSampleError):
        dbar_empirical(np.zeros(50, dtype=int), np.zeros(50, dtype=int), 2,
                       min_blocks=1000)


def test_identical_series_distance_zero():
    x = np.arange(200) % 4
    res = dbar_empirical(x, x.copy(), 3, min_blocks=10)
    assert res.value == 0.0 and res.overlap == pytest.approx(1.0)
    assert res.transport is None


def test_plan_csv(tmp_path):
    p = BlockDistribution.iid({0: 0.5, 1: 0.5}, 1)
    q = BlockDistribution.iid({0: 1.0}, 1)
    res = dbar_exact(p, q, keep_plan=True)
    path = tmp_path / "plan.csv"
    plan_to_csv(res, path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "block_a,block_b,mass"
    masses = {}
    for row in rows[1:]:
        a, b, m = row.split(",")
        masses[(a, b)] = float(m)
    assert masses == {("0", "0"): 0.5, ("1", "0"): 0.5}
    assert sum(masses.values()) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_value_invariants_random(seed):
    rng = np.random.default_rng(seed)
    p = _random_distribution(rng, 2, 3, 5)
    q = _random_distribution(rng, 2, 3, 5)
    res = dbar_exact(p, q)
    tv = total_variation(p.as_dict(), q.as_dict())
    assert -1e-12 <= res.value <= tv + 1e-9  # identity coupling caps at TV
    assert res.shipped_mass == pytest.approx(tv, abs=1e-9)
