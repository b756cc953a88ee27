"""Transport solvers against each other and against basis enumeration.

Three independent routes to the same optimum: the column-generation LP, the
integer primal-dual flow, and the spanning-tree enumeration.  The enumeration
is the ground truth on tiny instances; the two real solvers must then agree
with each other on instances too large to enumerate.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from towerlab.netflow import integer_transport
from towerlab.transport import (_staircase_edges, min_cost_transport,
                                transport_bruteforce)


def test_bruteforce_hand_case():
    # 2x2, mass must cross: optimum ships 0.3 over the cheap diagonal
    p = np.array([0.7, 0.3])
    q = np.array([0.4, 0.6])
    cost = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert transport_bruteforce(p, q, cost) == pytest.approx(0.3)
    # and the expensive direction flips the plan
    cost2 = np.array([[0.0, 1.0], [5.0, 0.0]])
    assert transport_bruteforce(p, q, cost2) == pytest.approx(0.3)
    cost3 = np.array([[2.0, 1.0], [1.0, 2.0]])
    # fill both cheap off-diagonal edges (0.6 and 0.3), rest pays 2
    assert transport_bruteforce(p, q, cost3) == pytest.approx(1.1)


def test_bruteforce_guard():
    with pytest.raises(ValueError):
        transport_bruteforce(np.ones(7) / 7, np.ones(7) / 7, np.zeros((7, 7)))


def _random_instance(rng, m, n, int_costs=False):
    supply = rng.integers(1, 30, size=m)
    demand = rng.multinomial(int(supply.sum()), np.ones(n) / n)
    while (demand == 0).any():
        demand = rng.multinomial(int(supply.sum()), np.ones(n) / n)
    if int_costs:
        cost = rng.integers(0, 10, size=(m, n))
    else:
        cost = np.round(rng.random((m, n)), 6)
    return supply.astype(np.int64), demand.astype(np.int64), cost


def test_three_routes_agree_small():
    rng = np.random.default_rng(0)
    for trial in range(40):
        m, n = rng.integers(2, 5, size=2)
        supply, demand, cost = _random_instance(rng, m, n, int_costs=True)
        want = transport_bruteforce(supply.astype(float), demand.astype(float),
                                    cost.astype(float))

        ii, jj = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
        flow, u, v = integer_transport(supply, demand, ii.ravel(), jj.ravel(),
                                       cost.ravel().astype(np.int64))
        got_int = int((flow * cost.ravel()).sum())
        assert got_int == pytest.approx(want, abs=1e-6), trial

        total = supply.sum()
        fc = cost.astype(float)
        tr = min_cost_transport(supply / total, demand / total,
                                lambda idx: fc[idx], n)
        assert tr.value * total == pytest.approx(want, abs=1e-6), trial


def test_lp_and_integer_agree_mid():
    rng = np.random.default_rng(1)
    for trial in range(8):
        m = int(rng.integers(30, 90))
        n = int(rng.integers(30, 90))
        supply, demand, cost = _random_instance(rng, m, n, int_costs=True)
        ii, jj = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
        flow, u, v = integer_transport(supply, demand, ii.ravel().copy(),
                                       jj.ravel().copy(),
                                       cost.ravel().astype(np.int64))
        got_int = int((flow * cost.ravel()).sum())
        # strong duality certifies the integer optimum on its own
        assert got_int == int(u @ supply) + int(v @ demand)

        total = supply.sum()
        fc = cost.astype(float)
        tr = min_cost_transport(supply / total, demand / total,
                                lambda idx: fc[idx], n)
        assert tr.value * total == pytest.approx(got_int, rel=1e-9, abs=1e-6)


def test_integer_transport_validation():
    with pytest.raises(ValueError):
        integer_transport(np.array([2, 1]), np.array([2, 2]),
                          np.array([0]), np.array([0]), np.array([1]))
    with pytest.raises(ValueError):
        integer_transport(np.array([-1, 3]), np.array([1, 1]),
                          np.array([0]), np.array([0]), np.array([1]))


def test_integer_transport_infeasible_arcs():
    # no arc into column 1: must fail loudly, not return garbage
    with pytest.raises(RuntimeError):
        integer_transport(np.array([1, 1]), np.array([1, 1]),
                          np.array([0, 1]), np.array([0, 0]),
                          np.array([1, 1]))


def test_staircase_edges_feasible():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m, n = rng.integers(1, 9, size=2)
        p = rng.random(m) + 1e-3
        p /= p.sum()
        q = rng.random(n) + 1e-3
        q /= q.sum()
        edges = _staircase_edges(p, q)
        # connected, monotone pairing: enough edges to carry any feasible flow
        assert len(edges) >= max(m, n)
        assert edges[0] == (0, 0) and edges[-1] == (m - 1, n - 1)
        for (i0, j0), (i1, j1) in zip(edges, edges[1:]):
            assert (i1 - i0, j1 - j0) in ((0, 1), (1, 0), (1, 1))


def test_min_cost_transport_zero_distance():
    p = np.array([0.25, 0.75])
    tr = min_cost_transport(p, p, lambda idx: np.abs(
        idx[:, None] - np.arange(2)[None, :]).astype(float), 2)
    assert tr.value == pytest.approx(0.0, abs=1e-12)
    assert tr.marginal_residual <= 1e-9


def test_min_cost_transport_validation():
    good = np.array([0.5, 0.5])
    with pytest.raises(ValueError):
        min_cost_transport(good, np.array([0.4, 0.4]), lambda i: np.zeros((len(i), 2)), 2)
    with pytest.raises(ValueError):
        min_cost_transport(np.array([-0.1, 1.1]), good, lambda i: np.zeros((len(i), 2)), 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_duals_certify_integer_optimum(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(2, 12, size=2)
    supply, demand, cost = _random_instance(rng, m, n, int_costs=True)
    ii, jj = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    carr = cost.ravel().astype(np.int64)
    flow, u, v = integer_transport(supply, demand, ii.ravel().copy(),
                                   jj.ravel().copy(), carr)
    red = carr - u[ii.ravel()] - v[jj.ravel()]
    assert red.min() >= 0
    assert (flow[red > 0] == 0).all()
    assert int((flow * carr).sum()) == int(u @ supply) + int(v @ demand)
    # flow is a genuine coupling
    rs = np.zeros(m, dtype=np.int64)
    cs = np.zeros(n, dtype=np.int64)
    np.add.at(rs, ii.ravel(), flow)
    np.add.at(cs, jj.ravel(), flow)
    assert (rs == supply).all() and (cs == demand).all()
