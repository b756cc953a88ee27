"""Exact transportation problems between finitely supported measures.

The solver runs delayed column generation on the classical LP formulation:
start from a feasible staircase pairing plus any caller-supplied candidate
edges, solve the restricted problem with HiGHS, then price every pair against
the dual potentials and pull in violated edges until none remain.  The final
duals certify optimality of the returned value, so the result is exact up to
LP tolerance even though most edges are never materialised.

``transport_bruteforce`` enumerates basic solutions (spanning-tree supports)
directly and is intended as an independent oracle on tiny instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

__all__ = ["TransportResult", "min_cost_transport", "transport_bruteforce"]

_PRICE_TOL = 1e-9
_FEAS_TOL = 1e-9


@dataclass
class TransportResult:
    value: float
    plan: dict[tuple[int, int], float]
    dual_rows: np.ndarray
    dual_cols: np.ndarray
    iterations: int
    edges_solved: int
    marginal_residual: float


def _staircase_edges(p: np.ndarray, q: np.ndarray) -> list[tuple[int, int]]:
    """Greedy merge pairing in index order; feasible spanning support."""
    edges = []
    i = j = 0
    pi, qj = p[0], q[0]
    while True:
        edges.append((i, j))
        step = min(pi, qj)
        pi -= step
        qj -= step
        if pi <= qj:
            i += 1
            if i == len(p):
                edges.extend((len(p) - 1, jj) for jj in range(j + 1, len(q)))
                break
            pi = p[i]
        else:
            j += 1
            if j == len(q):
                edges.extend((ii, len(q) - 1) for ii in range(i + 1, len(p)))
                break
            qj = q[j]
    return edges


def _solve_restricted(p, q, rows, cols, costs):
    m, n = len(p), len(q)
    e = len(rows)
    ar = np.empty(2 * e, dtype=np.int64)
    ac = np.empty(2 * e, dtype=np.int64)
    ar[0::2] = rows
    ar[1::2] = m + cols
    ac[0::2] = np.arange(e)
    ac[1::2] = np.arange(e)
    A = sparse.csr_matrix((np.ones(2 * e), (ar, ac)), shape=(m + n, e))
    b = np.concatenate([p, q])
    res = linprog(costs, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"restricted transport LP failed: {res.message}")
    return res


def min_cost_transport(p, q, cost_rows, n_cols: int,
                       candidate_edges=None,
                       row_block: int = 512,
                       add_cap_per_row: int = 16,
                       max_rounds: int = 60) -> TransportResult:
    """Minimise sum c_ij x_ij over couplings of (p, q).

    ``cost_rows(idx)`` must return the dense cost block for row indices
    ``idx`` as an array of shape (len(idx), n_cols); it is called lazily in
    blocks during pricing so the full matrix never needs to exist at once.
    ``candidate_edges`` seeds the restricted problem (list of (i, j) pairs).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.ndim != 1 or q.ndim != 1 or not len(p) or not len(q) or len(q) != n_cols:
        raise ValueError("bad marginals")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("marginals must be nonnegative")
    if abs(p.sum() - q.sum()) > 1e-9 * max(1.0, p.sum()):
        raise ValueError(f"marginal totals differ: {p.sum()} vs {q.sum()}")
    m, n = len(p), len(q)

    def gather_costs(keys: np.ndarray) -> np.ndarray:
        # keys sorted; fetch c[i, j] in row blocks
        out = np.empty(len(keys))
        rows = keys // n
        cols = keys % n
        start = 0
        while start < len(keys):
            r0 = rows[start]
            stop = int(np.searchsorted(rows, min(r0 + row_block, m), side="left"))
            idx = np.unique(rows[start:stop])
            blk = cost_rows(idx)
            pos = np.searchsorted(idx, rows[start:stop])
            out[start:stop] = blk[pos, cols[start:stop]]
            start = stop
        return out

    stair = np.array(_staircase_edges(p, q), dtype=np.int64)
    keys = stair[:, 0] * n + stair[:, 1]
    if candidate_edges is not None and len(candidate_edges):
        cand = np.asarray(candidate_edges, dtype=np.int64).reshape(-1, 2)
        keys = np.concatenate([keys, cand[:, 0] * n + cand[:, 1]])
    keys = np.unique(keys)
    costs = gather_costs(keys)

    res = None
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        res = _solve_restricted(p, q, keys // n, keys % n, costs)
        u = res.eqlin.marginals[:m]
        v = res.eqlin.marginals[m:]
        new_keys = []
        new_costs = []
        for start in range(0, m, row_block):
            idx = np.arange(start, min(start + row_block, m))
            blk = cost_rows(idx)
            red = blk - u[idx][:, None] - v[None, :]
            ti, tj = np.nonzero(red < -_PRICE_TOL)
            if not len(ti):
                continue
            cap = add_cap_per_row * len(idx)
            if len(ti) > cap:
                # keep the most violated pairs; the sweep repeats anyway
                keep = np.argpartition(red[ti, tj], cap)[:cap]
                ti, tj = ti[keep], tj[keep]
            new_keys.append(idx[ti] * n + tj)
            new_costs.append(blk[ti, tj])
        if not new_keys:
            break
        nk = np.concatenate(new_keys)
        nc = np.concatenate(new_costs)
        fresh = ~np.isin(nk, keys, assume_unique=False)
        nk, first = np.unique(nk[fresh], return_index=True)
        if not len(nk):
            break
        keys = np.concatenate([keys, nk])
        costs = np.concatenate([costs, nc[fresh][first]])
        order = np.argsort(keys)
        keys = keys[order]
        costs = costs[order]
    else:
        raise RuntimeError("column generation did not converge within max_rounds")

    x = res.x
    live = x > 0
    plan = {}
    row_sum = np.zeros(m)
    col_sum = np.zeros(n)
    li = (keys[live] // n).astype(int)
    lj = (keys[live] % n).astype(int)
    for i, j, mass in zip(li, lj, x[live]):
        plan[(int(i), int(j))] = float(mass)
    np.add.at(row_sum, li, x[live])
    np.add.at(col_sum, lj, x[live])
    resid = max(np.abs(row_sum - p).max(), np.abs(col_sum - q).max())
    if resid > _FEAS_TOL:
        raise RuntimeError(f"transport plan violates marginals by {resid}")
    return TransportResult(
        value=float(res.fun),
        plan=plan,
        dual_rows=res.eqlin.marginals[:m].copy(),
        dual_cols=res.eqlin.marginals[m:].copy(),
        iterations=rounds,
        edges_solved=len(keys),
        marginal_residual=float(resid),
    )


def transport_bruteforce(p, q, cost) -> float:
    """Exact optimum by enumerating spanning-tree basic solutions.

    Only for tiny instances (m * n choose m + n - 1 subsets are scanned).
    Every vertex of the transportation polytope is supported on a spanning
    tree of the bipartite graph, so the minimum over feasible tree systems is
    the LP optimum.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    cost = np.asarray(cost, dtype=float)
    m, n = len(p), len(q)
    if m * n > 36:
        raise ValueError("brute force is restricted to supports with m*n <= 36")
    edges = list(itertools.product(range(m), range(n)))
    b = np.concatenate([p, q])
    best = np.inf
    for subset in itertools.combinations(edges, m + n - 1):
        A = np.zeros((m + n, m + n - 1))
        for col, (i, j) in enumerate(subset):
            A[i, col] = 1.0
            A[m + j, col] = 1.0
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.abs(A @ x - b).max() > 1e-9 or x.min() < -1e-9:
            continue
        val = sum(cost[i, j] * xv for (i, j), xv in zip(subset, x))
        best = min(best, val)
    if not np.isfinite(best):
        raise RuntimeError("no feasible basic solution found")
    return float(best)
