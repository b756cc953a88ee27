"""Mean-Hamming (dbar) distance between stationary block distributions.

A block distribution is a finitely supported law on length-L integer tuples.
The dbar distance between two of them is the optimal-coupling expectation of
the normalized Hamming distance.  Because Hamming is a metric, an optimal
coupling can always be chosen to keep the shared mass min(P, Q) in place, so
we strip that overlap first and only ship the residual, which keeps the
solver small even when the supports mostly agree.

Empirical estimation consumes realizations, cuts them into overlapping
stride-1 blocks (optionally saturating large values at a ceiling first), and
runs the exact solver on the two empirical laws.  Empirical instances carry
integer block counts over a common denominator, so they route through an
exact integer flow solver; general float-mass instances use the LP engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import InsufficientSampleError
from .netflow import integer_transport
from .transport import TransportResult, _staircase_edges, min_cost_transport

__all__ = [
    "BlockDistribution",
    "DbarResult",
    "hamming",
    "total_variation",
    "truncate_saturate",
    "blocks_from_series",
    "dbar_exact",
    "dbar_empirical",
    "plan_to_csv",
]

_DENSE_PAIR_LIMIT = 200_000
_CACHE_PAIR_LIMIT = 260_000_000  # int8 mismatch-count cache, ~260 MB ceiling


def hamming(a: Iterable[int], b: Iterable[int]) -> float:
    a = tuple(a)
    b = tuple(b)
    if len(a) != len(b) or not a:
        raise ValueError("blocks must share a positive length")
    return sum(x != y for x, y in zip(a, b)) / len(a)


class BlockDistribution:
    """Probability law on length-L tuples, stored as sorted support + mass.

    Distributions built from raw block samples also remember the integer
    counts (``counts`` summing to ``denom``); those enable the exact integer
    coupling path in ``dbar_exact``.
    """

    def __init__(self, support: np.ndarray, mass: np.ndarray, counts=None):
        support = np.asarray(support, dtype=np.int64)
        mass = np.asarray(mass, dtype=float)
        if support.ndim != 2 or len(support) != len(mass) or not len(mass):
            raise ValueError("support must be (N, L) with matching masses")
        if np.any(mass < 0) or abs(mass.sum() - 1.0) > 1e-9:
            raise ValueError("masses must be nonnegative and sum to 1")
        order = np.lexsort(support.T[::-1])
        support = support[order]
        mass = mass[order]
        if len(support) > 1 and not np.any(np.diff(support, axis=0) != 0, axis=1).all():
            raise ValueError("support rows must be distinct")
        self.support = support
        self.mass = mass
        if counts is not None:
            counts = np.asarray(counts, dtype=np.int64)[order]
            if np.any(counts < 0):
                raise ValueError("counts must be nonnegative")
            self.counts = counts
            self.denom = int(counts.sum())
        else:
            self.counts = None
            self.denom = None

    @property
    def length(self) -> int:
        return self.support.shape[1]

    def __len__(self) -> int:
        return len(self.mass)

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {tuple(map(int, row)): float(m)
                for row, m in zip(self.support, self.mass)}

    @classmethod
    def from_counts(cls, counts: Mapping[tuple[int, ...], float]) -> "BlockDistribution":
        if not counts:
            raise ValueError("empty distribution")
        keys = list(counts)
        support = np.array([tuple(k) for k in keys], dtype=np.int64)
        mass = np.array([float(counts[k]) for k in keys], dtype=float)
        total = mass.sum()
        if total <= 0:
            raise ValueError("total mass must be positive")
        ints = np.array([counts[k] for k in keys])
        if ints.dtype.kind in "iu":
            return cls(support, mass / total, counts=ints)
        return cls(support, mass / total)

    @classmethod
    def from_blocks(cls, blocks: np.ndarray) -> "BlockDistribution":
        blocks = np.asarray(blocks, dtype=np.int64)
        if blocks.ndim != 2 or not len(blocks):
            raise ValueError("blocks must be a nonempty (N, L) array")
        support, counts = np.unique(blocks, axis=0, return_counts=True)
        return cls(support, counts / counts.sum(), counts=counts)

    @classmethod
    def iid(cls, marginal: Mapping[int, float], length: int) -> "BlockDistribution":
        """Product law of a single-coordinate marginal."""
        if length < 1:
            raise ValueError("length must be >= 1")
        vals = sorted(marginal)
        probs = np.array([float(marginal[v]) for v in vals])
        support = np.array(
            np.meshgrid(*([vals] * length), indexing="ij")
        ).reshape(length, -1).T
        idx = np.array(
            np.meshgrid(*([np.arange(len(vals))] * length), indexing="ij")
        ).reshape(length, -1).T
        mass = probs[idx].prod(axis=1)
        return cls(support, mass)


def total_variation(p: Mapping, q: Mapping) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def truncate_saturate(values: np.ndarray, ceiling: int) -> np.ndarray:
    """Clip large symbols to the ceiling; keeps alphabets finite and shared."""
    if ceiling < 1:
        raise ValueError("ceiling must be >= 1")
    return np.minimum(np.asarray(values, dtype=np.int64), ceiling)


def blocks_from_series(values: np.ndarray, length: int,
                       ceiling: int | None = None) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    if values.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if length < 1 or len(values) < length:
        raise ValueError("series shorter than block length")
    if ceiling is not None:
        values = truncate_saturate(values, ceiling)
    return np.lib.stride_tricks.sliding_window_view(values, length)


@dataclass
class DbarResult:
    value: float
    overlap: float
    shipped_mass: float
    plan: dict[tuple[tuple[int, ...], tuple[int, ...]], float]
    transport: TransportResult | None


def _neighbor_edges(sup_a: np.ndarray, sup_b: np.ndarray,
                    cap_per_row: int = 24) -> list[tuple[int, int]]:
    """Candidate pairs at Hamming distance <= 2 via coordinate-drop hashing."""
    length = sup_a.shape[1]
    masks = []
    for d in range(length):
        masks.append([c for c in range(length) if c != d])
    if length >= 3:
        for d1 in range(length):
            for d2 in range(d1 + 1, length):
                masks.append([c for c in range(length) if c not in (d1, d2)])
    per_row: dict[int, list[int]] = {}
    for mask in masks:
        buckets: dict[bytes, list[int]] = {}
        kb = np.ascontiguousarray(sup_b[:, mask])
        for j in range(len(sup_b)):
            buckets.setdefault(kb[j].tobytes(), []).append(j)
        ka = np.ascontiguousarray(sup_a[:, mask])
        for i in range(len(sup_a)):
            hits = buckets.get(ka[i].tobytes())
            if hits:
                lst = per_row.setdefault(i, [])
                if len(lst) < cap_per_row:
                    lst.extend(hits[: cap_per_row - len(lst)])
    return [(i, j) for i, js in per_row.items() for j in sorted(set(js))]


def _mismatch_cache(sup_a: np.ndarray, sup_b: np.ndarray):
    """Dense int8 mismatch counts, or None when too large to hold."""
    na, nb = len(sup_a), len(sup_b)
    if na * nb > _CACHE_PAIR_LIMIT:
        return None
    ham = np.empty((na, nb), dtype=np.int8)
    for s in range(0, na, 512):
        blk = sup_a[s:s + 512][:, None, :] != sup_b[None, :, :]
        ham[s:s + 512] = blk.sum(axis=2, dtype=np.int8)
    return ham


def _candidate_edges(sup_a: np.ndarray, sup_b: np.ndarray) -> np.ndarray:
    na, nb = len(sup_a), len(sup_b)
    if na * nb <= _DENSE_PAIR_LIMIT:
        return np.stack(np.meshgrid(np.arange(na), np.arange(nb),
                                    indexing="ij"), axis=-1).reshape(-1, 2)
    return np.asarray(_neighbor_edges(sup_a, sup_b),
                      dtype=np.int64).reshape(-1, 2)


def _integer_residual_transport(sup_a, sup_b, supply, demand, length,
                                add_cap: int = 16, max_rounds: int = 60):
    """Column generation around the exact integer flow core."""
    m, n = len(supply), len(demand)
    ham = _mismatch_cache(sup_a, sup_b)

    def mism_rows(idx):
        if ham is not None:
            return ham[idx]
        return (sup_a[idx][:, None, :] != sup_b[None, :, :]).sum(axis=2)

    stair = np.array(_staircase_edges(supply, demand), dtype=np.int64)
    keys = stair[:, 0] * n + stair[:, 1]
    cand = _candidate_edges(sup_a, sup_b)
    if len(cand):
        keys = np.concatenate([keys, cand[:, 0] * n + cand[:, 1]])
    keys = np.unique(keys)

    def costs_of(kk):
        out = np.empty(len(kk), dtype=np.int64)
        rows = kk // n
        cols = kk % n
        start = 0
        while start < len(kk):
            stop = int(np.searchsorted(rows, min(rows[start] + 512, m), "left"))
            idx = np.unique(rows[start:stop])
            blk = mism_rows(idx)
            pos = np.searchsorted(idx, rows[start:stop])
            out[start:stop] = blk[pos, cols[start:stop]]
            start = stop
        return out

    costs = costs_of(keys)
    flow = u = v = None
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        flow, u, v = integer_transport(supply, demand, keys // n, keys % n, costs)
        new_keys = []
        new_costs = []
        for start in range(0, m, 512):
            idx = np.arange(start, min(start + 512, m))
            blk = mism_rows(idx)
            red = blk - u[idx][:, None] - v[None, :]
            ti, tj = np.nonzero(red < 0)
            if not len(ti):
                continue
            cap = add_cap * len(idx)
            if len(ti) > cap:
                keep = np.argpartition(red[ti, tj], cap)[:cap]
                ti, tj = ti[keep], tj[keep]
            new_keys.append(idx[ti] * n + tj)
            new_costs.append(blk[ti, tj].astype(np.int64))
        if not new_keys:
            break
        nk = np.concatenate(new_keys)
        nc = np.concatenate(new_costs)
        fresh = ~np.isin(nk, keys)
        nk, first = np.unique(nk[fresh], return_index=True)
        if not len(nk):
            break
        keys = np.concatenate([keys, nk])
        costs = np.concatenate([costs, nc[fresh][first]])
        order = np.argsort(keys)
        keys, costs = keys[order], costs[order]
    else:
        raise RuntimeError("integer column generation did not converge")

    total_cost = int((flow * costs).sum())
    # strong duality in exact arithmetic; a failure here is a solver bug
    if total_cost != int(u @ supply) + int(v @ demand):
        raise RuntimeError("integer transport duality gap")
    return keys, costs, flow, u, v, rounds, total_cost


def dbar_exact(p: BlockDistribution, q: BlockDistribution,
               keep_plan: bool = True) -> DbarResult:
    if p.length != q.length:
        raise ValueError("block lengths differ")
    if (p.counts is not None and q.counts is not None
            and p.denom == q.denom):
        return _dbar_exact_counts(p, q, keep_plan)
    return _dbar_exact_float(p, q, keep_plan)


def _dbar_exact_counts(p: BlockDistribution, q: BlockDistribution,
                       keep_plan: bool) -> DbarResult:
    length = p.length
    denom = p.denom
    da = {tuple(map(int, r)): int(c) for r, c in zip(p.support, p.counts)}
    db = {tuple(map(int, r)): int(c) for r, c in zip(q.support, q.counts)}
    shared = da.keys() & db.keys()
    overlap_num = sum(min(da[k], db[k]) for k in shared)
    res_a = {k: c - (min(c, db[k]) if k in db else 0) for k, c in da.items()}
    res_a = {k: c for k, c in res_a.items() if c > 0}
    res_b = {k: c - (min(c, da[k]) if k in da else 0) for k, c in db.items()}
    res_b = {k: c for k, c in res_b.items() if c > 0}
    plan = {}
    if keep_plan:
        plan = {(k, k): min(da[k], db[k]) / denom for k in shared
                if min(da[k], db[k]) > 0}
    overlap = overlap_num / denom
    if not res_a or not res_b:
        return DbarResult(0.0, overlap, 0.0, plan, None)

    keys_a = sorted(res_a)
    keys_b = sorted(res_b)
    sup_a = np.array(keys_a, dtype=np.int64)
    sup_b = np.array(keys_b, dtype=np.int64)
    supply = np.array([res_a[k] for k in keys_a], dtype=np.int64)
    demand = np.array([res_b[k] for k in keys_b], dtype=np.int64)
    shipped_num = int(supply.sum())

    keys, costs, flow, u, v, rounds, total_cost = _integer_residual_transport(
        sup_a, sup_b, supply, demand, length)
    n = len(sup_b)
    value = total_cost / (length * denom)
    live = flow > 0
    if keep_plan:
        for key, f in zip(keys[live], flow[live]):
            plan[(keys_a[int(key // n)], keys_b[int(key % n)])] = f / denom
    tr = TransportResult(
        value=value,
        plan={(int(k // n), int(k % n)): f / denom
              for k, f in zip(keys[live], flow[live])},
        dual_rows=u / length,
        dual_cols=v / length,
        iterations=rounds,
        edges_solved=len(keys),
        marginal_residual=0.0,
    )
    return DbarResult(float(value), float(overlap),
                      shipped_num / denom, plan, tr)


def _dbar_exact_float(p: BlockDistribution, q: BlockDistribution,
                      keep_plan: bool) -> DbarResult:
    length = p.length
    pd = p.as_dict()
    qd = q.as_dict()
    overlap_map = {}
    for key in set(pd) & set(qd):
        overlap_map[key] = min(pd[key], qd[key])
    overlap = sum(overlap_map.values())
    res_p = {k: v - overlap_map.get(k, 0.0) for k, v in pd.items()
             if v - overlap_map.get(k, 0.0) > 1e-15}
    res_q = {k: v - overlap_map.get(k, 0.0) for k, v in qd.items()
             if v - overlap_map.get(k, 0.0) > 1e-15}
    plan = {(k, k): v for k, v in overlap_map.items() if v > 0} if keep_plan else {}
    if not res_p or not res_q:
        return DbarResult(0.0, overlap, 0.0, plan, None)

    keys_a = sorted(res_p)
    keys_b = sorted(res_q)
    sup_a = np.array(keys_a, dtype=np.int64)
    sup_b = np.array(keys_b, dtype=np.int64)
    mass_a = np.array([res_p[k] for k in keys_a])
    mass_b = np.array([res_q[k] for k in keys_b])
    shipped = mass_a.sum()
    # totals match up to float error by construction; rescale exactly
    mass_b *= shipped / mass_b.sum()

    ham = _mismatch_cache(sup_a, sup_b)
    if ham is not None:
        def cost_rows(idx):
            return ham[idx] / float(length)
    else:
        def cost_rows(idx):
            diff = sup_a[idx][:, None, :] != sup_b[None, :, :]
            return diff.mean(axis=2)

    cand = _candidate_edges(sup_a, sup_b)
    tr = min_cost_transport(mass_a, mass_b, cost_rows, len(sup_b),
                            candidate_edges=cand)
    if keep_plan:
        for (i, j), m in tr.plan.items():
            plan[(keys_a[i], keys_b[j])] = m
    value = tr.value  # residual couples with cost already scaled by mass
    return DbarResult(float(value), float(overlap), float(shipped), plan, tr)


def dbar_empirical(series_a: np.ndarray, series_b: np.ndarray, length: int,
                   ceiling: int | None = None,
                   min_blocks: int = 10_000,
                   keep_plan: bool = False) -> DbarResult:
    blocks_a = blocks_from_series(series_a, length, ceiling)
    blocks_b = blocks_from_series(series_b, length, ceiling)
    if len(blocks_a) < min_blocks or len(blocks_b) < min_blocks:
        raise InsufficientSampleError(
            f"need at least {min_blocks} blocks per side, "
            f"got {len(blocks_a)} and {len(blocks_b)}")
    return dbar_exact(BlockDistribution.from_blocks(blocks_a),
                      BlockDistribution.from_blocks(blocks_b),
                      keep_plan=keep_plan)


def plan_to_csv(result: DbarResult, path) -> None:
    lines = ["block_a,block_b,mass"]
    for (ka, kb) in sorted(result.plan):
        mass = result.plan[(ka, kb)]
        lines.append("{},{},{:.17g}".format(
            " ".join(map(str, ka)), " ".join(map(str, kb)), mass))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
