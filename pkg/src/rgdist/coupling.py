"""Edge coupling between the Poissonian graph and another rank-1 graph.

Both graphs are drawn from one pass of skip sampling under the envelope
``max(h_P, h')``.  Each envelope hit gets a uniform keyed on the node pair,
and that uniform decides membership in each graph.  A pair present in exactly
one of the two graphs is a mismatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import pair_uniform, substream
from .capacities import CapacitySequence
from .distances import _bidirectional, _clustered_se, default_cap, sample_pairs
from .errors import DomainError
from .graphgen import ConnectionKernel, SparseGraph, _skip_sample, _sorted_view

DEFAULT_XI = 0.1


@dataclass(frozen=True)
class CoupledEdge:
    x: int
    x_prime: int

    @property
    def k(self) -> int:
        return int(self.x != self.x_prime)


def _couple(p, pp, u):
    """Vectorised maximal coupling: edge in each graph iff ``u`` falls below its probability."""
    return u < p, u < pp


def couple_edge(p: float, p_prime: float, u: float) -> CoupledEdge:
    """Couple ``Bernoulli(p)`` and ``Bernoulli(p_prime)`` through one uniform ``u``.

    Below ``min(p, p_prime)`` both edges are present, above the maximum
    neither is, and in between only the graph with the larger probability
    has the edge.  The mismatch probability is ``|p - p_prime|``.
    """
    for name, v in (("p", p), ("p_prime", p_prime)):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name} = {v} outside [0, 1]")
    if not 0.0 <= u < 1.0:
        raise DomainError(f"u = {u} outside [0, 1)")
    x, xp = _couple(p, p_prime, u)
    return CoupledEdge(int(x), int(xp))


@dataclass(frozen=True, eq=False)
class MismatchReport:
    """Mismatch bookkeeping of one coupled pair of graphs.

    ``k_i[i]`` counts the mismatched pairs at node ``i``.  ``a_n`` holds when
    no mismatch touches a node of capacity above ``c_N = N**xi``.
    """

    k_i: np.ndarray
    mismatches: np.ndarray
    capacities: np.ndarray
    xi: float = DEFAULT_XI
    failure: float | None = None
    failure_se: float | None = None

    @property
    def N(self) -> int:
        return self.k_i.size

    @property
    def total(self) -> int:
        return int(self.mismatches.shape[0])

    @property
    def c_N(self) -> float:
        return float(self.N) ** self.xi

    @property
    def a_n(self) -> bool:
        return bool(np.sum(self.k_i[self.capacities > self.c_N]) == 0)

    def summary(self) -> dict:
        return {"N": self.N, "total_mismatches": self.total, "xi": self.xi,
                "c_N": self.c_N, "A_N": self.a_n}


def coupled_generate(
    seq: CapacitySequence, kernel_prime: ConnectionKernel, seed: int, xi: float = DEFAULT_XI
) -> tuple[SparseGraph, SparseGraph, MismatchReport]:
    """Draw the Poissonian graph and the ``kernel_prime`` graph together.

    Each marginal has exactly the law of its standalone generator.  The
    result depends only on ``seed``.
    """
    N = seq.N
    seed = int(seed)
    h_p = ConnectionKernel.poissonian().h
    h_q = kernel_prime.h
    if N < 2:
        e = SparseGraph.empty(N)
        return e, e, MismatchReport(np.zeros(N, dtype=np.int64), np.empty((0, 2), np.int64), seq.values, xi)

    def env(x):
        return np.maximum(h_p(x), h_q(x))

    order, w = _sorted_view(seq)
    si, sj = _skip_sample(w, seq.l_N, env, substream(seed, 0))
    i, j = order[si], order[sj]
    x = seq.values[i] * seq.values[j] / seq.l_N
    pe = env(x)
    u = pair_uniform(seed, i, j)
    in_p, in_q = _couple(h_p(x) / pe, h_q(x) / pe, u)
    g = SparseGraph.from_edges(N, i[in_p], j[in_p])
    gq = SparseGraph.from_edges(N, i[in_q], j[in_q])
    mis = in_p != in_q
    mi, mj = i[mis], j[mis]
    k_i = np.bincount(mi, minlength=N) + np.bincount(mj, minlength=N)
    pairs = np.column_stack([np.minimum(mi, mj), np.maximum(mi, mj)]).astype(np.int64)
    return g, gq, MismatchReport(k_i.astype(np.int64), pairs, seq.values, xi)


def coupling_replicate(
    seq: CapacitySequence, kernel_prime: ConnectionKernel, pairs_per_rep: int, seed: int, r: int, cap: int
) -> tuple[np.ndarray, MismatchReport]:
    """Replicate ``r``: hopcount-failure indicators for its sampled pairs and its mismatch report."""
    rng = substream(seed, r)
    g, gq, rep = coupled_generate(seq, kernel_prime, int(rng.integers(2**63)))
    pairs = sample_pairs(rng, seq.N, pairs_per_rep)
    fail = np.zeros(pairs_per_rep)
    if rep.total == 0:
        return fail, rep  # identical graphs
    for k, (a, b) in enumerate(pairs):
        d1, _ = _bidirectional(g, int(a), int(b), cap)
        d2, _ = _bidirectional(gq, int(a), int(b), cap)
        fail[k] = d1 != d2
    return fail, rep


def estimate_coupling_failure(
    seq: CapacitySequence,
    kernel_prime: ConnectionKernel,
    reps: int,
    pairs_per_rep: int = 1,
    seed: int = 0,
    cap: int | None = None,
) -> tuple[float, float]:
    """Fraction of sampled pairs whose hopcount differs between the coupled graphs.

    Every replicate draws a coupled pair of graphs and ``pairs_per_rep``
    uniform distinct node pairs.  Two infinite distances count as equal.  The
    standard error is clustered by replicate.
    """
    if reps < 1:
        raise DomainError("reps must be at least 1")
    if pairs_per_rep < 1:
        raise DomainError("pairs_per_rep must be at least 1")
    cap = cap if cap is not None else default_cap(seq.N, seq.nu_N if seq.nu_N > 1 else 2.0)
    fail = np.concatenate([
        coupling_replicate(seq, kernel_prime, pairs_per_rep, seed, r, cap)[0] for r in range(reps)
    ])
    cluster = np.repeat(np.arange(reps), pairs_per_rep)
    return float(fail.mean()), _clustered_se(fail, cluster)


def expected_mismatches(seq: CapacitySequence, kernel_prime: ConnectionKernel) -> float:
    """``sum_{i<j} |h_P(x_ij) - h'(x_ij)|`` by a direct chunked double sum."""
    lam = seq.values
    h_p = ConnectionKernel.poissonian().h
    total = 0.0
    chunk = max(1, 2_000_000 // max(seq.N, 1))
    for s in range(0, seq.N, chunk):
        rows = np.arange(s, min(s + chunk, seq.N))
        x = np.outer(lam[rows], lam) / seq.l_N
        d = np.abs(h_p(x) - kernel_prime.h(x))
        d[np.arange(rows.size), rows] = 0.0
        total += math.fsum(d.ravel())
    return total / 2.0


def mismatch_bound_check(seq: CapacitySequence, kernel_prime: ConnectionKernel) -> float:
    """Largest ``|h_P(x) - h'(x)| / x**2`` over node pairs, with ``x = lambda_i lambda_j / l_N``."""
    lam = seq.values
    if np.any(lam <= 0):
        raise DomainError("zero capacity: the bound is undefined")
    vals, counts = np.unique(lam, return_counts=True)
    h_p = ConnectionKernel.poissonian().h
    best = 0.0
    chunk = max(1, 2_000_000 // vals.size)
    for s in range(0, vals.size, chunk):
        rows = np.arange(s, min(s + chunk, vals.size))
        x = np.outer(vals[rows], vals) / seq.l_N
        ratio = np.abs(h_p(x) - kernel_prime.h(x)) / (x * x)
        # a value paired with itself needs two nodes carrying it
        single = counts[rows] == 1
        ratio[np.flatnonzero(single), rows[single]] = 0.0
        best = max(best, float(ratio.max()))
    return best
