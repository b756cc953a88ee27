"""Exact integer transportation solver for empirical block instances.

Empirical residual couplings have integer supplies (block counts over a
common denominator) and integer costs (mismatch counts, at most the block
length), so the optimum is attained at integer flows and can be computed in
exact arithmetic.  The core is the classical primal-dual method on the
bipartite network: keep potentials with nonnegative reduced costs, push
blocking flow (Dinic) through the zero-reduced-cost subgraph, and raise the
duals by the minimum crossing slack when stuck.  Column generation against
the full pair set happens in the caller; this module only ever sees an
explicit arc list.

The hot loops are numba-compiled; everything is int64 and deterministic.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["integer_transport"]

_INF = np.int64(1) << 60


@njit(cache=True)
def _mcf_core(m, n, supply, demand, arc_i, arc_j, arc_c):
    """Primal-dual min-cost transportation on the given candidate arcs.

    Returns (status, u, v, flow) with status 0 on success, 1 if the arc set
    cannot route all supply (caller seeds a spanning staircase, so this
    signals a bug rather than a data condition).
    """
    ec = len(arc_i)
    V = m + n + 2
    S = m + n
    T = m + n + 1
    E = 2 * (m + n + ec)

    to = np.empty(E, dtype=np.int64)
    res = np.zeros(E, dtype=np.int64)
    nxt = np.full(E, -1, dtype=np.int64)
    head = np.full(V, -1, dtype=np.int64)
    # cost bookkeeping per arc pair: row, col, cost of the bipartite edge,
    # or -1 markers for source/sink arcs (always admissible)
    arow = np.full(E, -1, dtype=np.int64)
    acol = np.full(E, -1, dtype=np.int64)
    acost = np.zeros(E, dtype=np.int64)

    cnt = 0
    for i in range(m):
        to[cnt] = i; res[cnt] = supply[i]; nxt[cnt] = head[S]; head[S] = cnt; cnt += 1
        to[cnt] = S; res[cnt] = 0; nxt[cnt] = head[i]; head[i] = cnt; cnt += 1
    for j in range(n):
        to[cnt] = T; res[cnt] = demand[j]; nxt[cnt] = head[m + j]; head[m + j] = cnt; cnt += 1
        to[cnt] = m + j; res[cnt] = 0; nxt[cnt] = head[T]; head[T] = cnt; cnt += 1
    first_cand = cnt
    for t in range(ec):
        i = arc_i[t]; j = arc_j[t]; c = arc_c[t]
        arow[cnt] = i; acol[cnt] = j; acost[cnt] = c
        to[cnt] = m + j; res[cnt] = _INF; nxt[cnt] = head[i]; head[i] = cnt; cnt += 1
        arow[cnt] = i; acol[cnt] = j; acost[cnt] = c
        to[cnt] = i; res[cnt] = 0; nxt[cnt] = head[m + j]; head[m + j] = cnt; cnt += 1

    u = np.zeros(m, dtype=np.int64)
    v = np.zeros(n, dtype=np.int64)
    total = np.int64(0)
    for i in range(m):
        total += supply[i]
    routed = np.int64(0)

    level = np.empty(V, dtype=np.int64)
    queue = np.empty(V, dtype=np.int64)
    it = np.empty(V, dtype=np.int64)
    path = np.empty(V + 2, dtype=np.int64)

    while routed < total:
        # Dinic phases on the admissible (zero reduced cost) residual graph
        progressed = True
        while progressed:
            progressed = False
            for w in range(V):
                level[w] = -1
            level[S] = 0
            qh = 0; qt = 0
            queue[qt] = S; qt += 1
            while qh < qt:
                w = queue[qh]; qh += 1
                a = head[w]
                while a != -1:
                    if res[a] > 0:
                        r = arow[a]
                        if r < 0 or acost[a] - u[r] - v[acol[a]] == 0:
                            x = to[a]
                            if level[x] < 0:
                                level[x] = level[w] + 1
                                queue[qt] = x; qt += 1
                    a = nxt[a]
            if level[T] < 0:
                break
            for w in range(V):
                it[w] = head[w]
            # iterative DFS with current-arc pointers; path holds arc ids
            depth = 0
            node = S
            while True:
                if node == T:
                    bott = _INF
                    for d in range(depth):
                        if res[path[d]] < bott:
                            bott = res[path[d]]
                    for d in range(depth):
                        res[path[d]] -= bott
                        res[path[d] ^ 1] += bott
                    routed += bott
                    progressed = True
                    # retreat to the first saturated arc on the path
                    d = 0
                    while d < depth and res[path[d]] > 0:
                        d += 1
                    depth = d
                    if depth == 0:
                        node = S
                    else:
                        node = to[path[depth - 1]]
                    continue
                advanced = False
                a = it[node]
                while a != -1:
                    if res[a] > 0 and level[to[a]] == level[node] + 1:
                        r = arow[a]
                        if r < 0 or acost[a] - u[r] - v[acol[a]] == 0:
                            it[node] = a
                            path[depth] = a
                            depth += 1
                            node = to[a]
                            advanced = True
                            break
                    a = nxt[a]
                if advanced:
                    continue
                it[node] = -1
                level[node] = -1  # dead end, prune
                if depth == 0:
                    break
                depth -= 1
                node = S if depth == 0 else to[path[depth - 1]]
                it[node] = nxt[it[node]] if it[node] != -1 else -1
        if routed == total:
            break
        # dual raise: level >= 0 marks the reachable cut of the last BFS
        delta = _INF
        for t in range(ec):
            a = first_cand + 2 * t
            i = arc_i[t]
            if level[i] >= 0 and level[m + arc_j[t]] < 0:
                slack = acost[a] - u[i] - v[arc_j[t]]
                if slack < delta:
                    delta = slack
        if delta >= _INF:
            return 1, u, v, res
        for i in range(m):
            if level[i] >= 0:
                u[i] += delta
        for j in range(n):
            if level[m + j] >= 0:
                v[j] -= delta
    return 0, u, v, res


def integer_transport(supply, demand, arc_i, arc_j, arc_c):
    """Solve min sum c_ij x_ij with integer data on explicit arcs.

    Returns (flow, u, v) with ``flow`` aligned to the arc arrays and duals
    satisfying c_ij - u_i - v_j >= 0 on every supplied arc (certified by a
    final exact check), flow > 0 only on tight arcs.
    """
    supply = np.ascontiguousarray(supply, dtype=np.int64)
    demand = np.ascontiguousarray(demand, dtype=np.int64)
    arc_i = np.ascontiguousarray(arc_i, dtype=np.int64)
    arc_j = np.ascontiguousarray(arc_j, dtype=np.int64)
    arc_c = np.ascontiguousarray(arc_c, dtype=np.int64)
    if supply.sum() != demand.sum():
        raise ValueError("supply and demand totals differ")
    if np.any(supply < 0) or np.any(demand < 0):
        raise ValueError("negative supply or demand")
    if np.any(arc_c < 0):
        raise ValueError("negative costs")
    m, n = len(supply), len(demand)
    status, u, v, res = _mcf_core(m, n, supply, demand, arc_i, arc_j, arc_c)
    if status != 0:
        raise RuntimeError("arc set cannot route the supply")
    first_cand = 2 * (m + n)
    flow = res[first_cand + 1::2].copy()
    rc = arc_c - u[arc_i] - v[arc_j]
    if rc.min() < 0 or np.any(flow[rc > 0] != 0):
        raise RuntimeError("complementary slackness violated")
    rows = np.zeros(m, dtype=np.int64)
    cols = np.zeros(n, dtype=np.int64)
    np.add.at(rows, arc_i, flow)
    np.add.at(cols, arc_j, flow)
    if np.any(rows != supply) or np.any(cols != demand):
        raise RuntimeError("flow does not meet the marginals")
    return flow, u, v
