"""Graph distances: BFS shells, hopcount sampling and survival curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._rng import substream
from .capacities import CapacitySequence
from .errors import DomainError
from .graphgen import SparseGraph

INFINITE = math.inf


def default_cap(N: int, nu: float) -> int:
    """Censoring cap ``3 * ceil(log_nu N) + 20``."""
    if nu <= 1:
        return N
    return 3 * math.ceil(math.log(N) / math.log(nu)) + 20


def _bidirectional(g: SparseGraph, a: int, b: int, cap: int) -> tuple[float, bool]:
    """Return ``(distance, censored)``; distance is ``inf`` when disconnected or censored."""
    if a == b:
        raise DomainError("distance between a node and itself is not sampled")
    seen_a = np.zeros(g.N, dtype=bool)
    seen_b = np.zeros(g.N, dtype=bool)
    seen_a[a] = True
    seen_b[b] = True
    front_a = np.array([a], dtype=np.int64)
    front_b = np.array([b], dtype=np.int64)
    depth = 0  # current radius_a + radius_b
    while True:
        if depth >= cap:
            return INFINITE, True
        # grow the side whose next expansion touches fewer edges
        cost_a = int((g.indptr[front_a + 1] - g.indptr[front_a]).sum())
        cost_b = int((g.indptr[front_b + 1] - g.indptr[front_b]).sum())
        if cost_a <= cost_b:
            nxt = g.expand(front_a)
            nxt = np.unique(nxt[~seen_a[nxt]])
            if nxt.size and seen_b[nxt].any():
                return float(depth + 1), False
            seen_a[nxt] = True
            front_a = nxt
        else:
            nxt = g.expand(front_b)
            nxt = np.unique(nxt[~seen_b[nxt]])
            if nxt.size and seen_a[nxt].any():
                return float(depth + 1), False
            seen_b[nxt] = True
            front_b = nxt
        depth += 1
        if nxt.size == 0:
            return INFINITE, False


def bfs_distance(g: SparseGraph, a1: int, a2: int, cap: int | None = None) -> float:
    """Graph distance between ``a1`` and ``a2`` by bidirectional BFS.

    Returns ``inf`` when the nodes lie in different components or the distance
    exceeds ``cap`` hops.  Use :func:`bfs_distance_censored` to tell the two
    apart.
    """
    return _bidirectional(g, a1, a2, g.N if cap is None else cap)[0]


def bfs_distance_censored(g: SparseGraph, a1: int, a2: int, cap: int | None = None):
    """Like :func:`bfs_distance` but returns ``(distance, censored)``."""
    return _bidirectional(g, a1, a2, g.N if cap is None else cap)


def single_source_distances(g: SparseGraph, root: int) -> np.ndarray:
    """Distances from ``root`` to every node (``-1`` if unreachable)."""
    dist = np.full(g.N, -1, dtype=np.int64)
    dist[root] = 0
    front = np.array([root], dtype=np.int64)
    k = 0
    while front.size:
        k += 1
        nxt = g.expand(front)
        nxt = np.unique(nxt[dist[nxt] < 0])
        dist[nxt] = k
        front = nxt
    return dist


@dataclass(frozen=True)
class ShellDecomposition:
    root: int
    shells: list
    shell_capacities: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s.size for s in self.shells], dtype=np.int64)


def shells(g: SparseGraph, a: int, t_max: int, seq: CapacitySequence | None = None) -> ShellDecomposition:
    """Exact BFS layers ``{j : d(a, j) = k}`` for ``k = 0..t_max``.

    Empty layers are kept so that the result always has ``t_max + 1`` entries.
    """
    if t_max < 0:
        raise DomainError("t_max must be non-negative")
    seen = np.zeros(g.N, dtype=bool)
    seen[a] = True
    front = np.array([a], dtype=np.int64)
    layers = [front]
    for _ in range(t_max):
        if front.size:
            nxt = g.expand(front)
            nxt = np.unique(nxt[~seen[nxt]])
            seen[nxt] = True
        else:
            nxt = front
        layers.append(nxt)
        front = nxt
    if seq is None:
        caps = np.array([float(s.size) for s in layers])
    else:
        caps = np.array([math.fsum(seq.values[s]) for s in layers])
    return ShellDecomposition(a, layers, caps)


# ---------------------------------------------------------------------------
# Hopcount samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HopcountSample:
    """Distances between sampled node pairs.

    ``distance`` holds ``inf`` for disconnected or censored pairs; ``censored``
    marks the latter.  ``graph`` records which replicate each pair came from,
    for standard errors clustered by graph.
    """

    pairs: np.ndarray
    distance: np.ndarray
    censored: np.ndarray
    graph: np.ndarray
    N: int
    nu_used: float

    def __len__(self):
        return self.distance.size

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.distance)

    @classmethod
    def concat(cls, parts: list["HopcountSample"]) -> "HopcountSample":
        return cls(
            np.concatenate([p.pairs for p in parts]),
            np.concatenate([p.distance for p in parts]),
            np.concatenate([p.censored for p in parts]),
            np.concatenate([p.graph for p in parts]),
            parts[0].N,
            parts[0].nu_used,
        )


def sample_pairs(rng: np.random.Generator, N: int, k: int) -> np.ndarray:
    """``k`` distinct ordered pairs ``(a, b)``, ``a != b``, uniform without replacement."""
    total = N * (N - 1)
    if k > total:
        raise DomainError(f"cannot draw {k} distinct pairs from {N} nodes")
    idx = rng.choice(total, size=k, replace=False)
    a = idx // (N - 1)
    r = idx % (N - 1)
    b = r + (r >= a)
    return np.column_stack([a, b]).astype(np.int64)


def hopcounts_on_graph(
    g: SparseGraph, pairs_per_graph: int, rng: np.random.Generator, cap: int, graph_id: int = 0,
    nu: float = float("nan"),
) -> HopcountSample:
    pairs = sample_pairs(rng, g.N, pairs_per_graph)
    dist = np.empty(len(pairs))
    cens = np.zeros(len(pairs), dtype=bool)
    for k, (a, b) in enumerate(pairs):
        dist[k], cens[k] = _bidirectional(g, int(a), int(b), cap)
    return HopcountSample(pairs, dist, cens, np.full(len(pairs), graph_id), g.N, nu)


def sample_hopcounts(
    graphs: Iterable[SparseGraph],
    pairs_per_graph: int,
    seed,
    nu: float = float("nan"),
    cap: int | None = None,
) -> HopcountSample:
    """Sample hopcounts between uniform distinct pairs on each graph replicate.

    Pairs on replicate ``r`` come from the sub-stream ``(seed, r)``; the
    result does not depend on how the graphs were produced.
    """
    if pairs_per_graph < 1:
        raise DomainError("pairs_per_graph must be at least 1")
    parts = []
    for r, g in enumerate(graphs):
        c = cap if cap is not None else default_cap(g.N, nu if nu == nu else 2.0)
        parts.append(hopcounts_on_graph(g, pairs_per_graph, substream(seed, r), c, r, nu))
    if not parts:
        raise DomainError("no graphs supplied")
    return HopcountSample.concat(parts)


# ---------------------------------------------------------------------------
# Survival curves
# ---------------------------------------------------------------------------


def _clustered_se(x: np.ndarray, clusters: np.ndarray) -> float:
    """Cluster-robust standard error of ``mean(x)``."""
    n = x.size
    if n == 0:
        return float("nan")
    resid = x - x.mean()
    _, inv = np.unique(clusters, return_inverse=True)
    sums = np.bincount(inv, weights=resid)
    return float(math.sqrt(np.dot(sums, sums)) / n)


@dataclass(frozen=True)
class EmpiricalSurvival:
    """Empirical ``P(H > t)`` on ``t = 0..t_max``, unconditional and given ``H < inf``.

    Censored and disconnected pairs count as exceeding every finite ``t`` in
    the unconditional curve and are left out of the conditional one.
    ``conditional_defined`` is false when no pair had a finite distance.
    """

    t: np.ndarray
    survival: np.ndarray
    se: np.ndarray
    cond_survival: np.ndarray
    cond_se: np.ndarray
    counts: np.ndarray
    n_total: int
    n_finite: int
    infinite_count: int
    censored_count: int

    @property
    def conditional_defined(self) -> bool:
        return self.n_finite > 0

    def at(self, t: int, conditional: bool = False) -> float:
        curve = self.cond_survival if conditional else self.survival
        if t < 0:
            return 1.0
        if t >= self.t.size:
            return 0.0 if conditional else float(curve[-1]) if curve.size else 0.0
        return float(curve[t])

    def rows(self, conditional: bool = True):
        """``(t, survival, se, n_finite, n_total)`` rows for CSV output."""
        s = self.cond_survival if conditional else self.survival
        e = self.cond_se if conditional else self.se
        for k in range(self.t.size):
            yield int(self.t[k]), float(s[k]), float(e[k]), self.n_finite, self.n_total


def survival(sample: HopcountSample) -> EmpiricalSurvival:
    """Empirical survival curves of a hopcount sample with clustered standard errors."""
    n = len(sample)
    if n == 0:
        raise DomainError("empty hopcount sample")
    fin = sample.finite
    d = sample.distance
    t_hi = int(d[fin].max()) if fin.any() else 0
    t = np.arange(t_hi + 1)
    counts = np.bincount(d[fin].astype(np.int64), minlength=t_hi + 1) if fin.any() else np.zeros(1, int)
    surv = np.empty(t.size)
    se = np.empty(t.size)
    csurv = np.full(t.size, np.nan)
    cse = np.full(t.size, np.nan)
    dfin = d[fin]
    gfin = sample.graph[fin]
    for k in t:
        ind = (d > k).astype(float)
        surv[k] = ind.mean()
        se[k] = _clustered_se(ind, sample.graph)
        if dfin.size:
            cind = (dfin > k).astype(float)
            csurv[k] = cind.mean()
            cse[k] = _clustered_se(cind, gfin)
    return EmpiricalSurvival(
        t, surv, se, csurv, cse, counts, n, int(fin.sum()),
        int((~fin & ~sample.censored).sum()), int(sample.censored.sum()),
    )


# ---------------------------------------------------------------------------
# sigma_N, a_N and graph-size ladders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SigmaA:
    sigma: int
    a: float


def log_nu(N: float, nu: float) -> float:
    x = math.log(N) / math.log(nu)
    r = round(x)
    return float(r) if abs(x - r) < 1e-9 else x


def sigma_a(N: int, nu: float) -> SigmaA:
    """``sigma = floor(log_nu N)`` and ``a = sigma - log_nu N`` in ``(-1, 0]``."""
    if N < 2:
        raise DomainError("N must be at least 2")
    if not nu > 1:
        raise DomainError("nu must exceed 1 (supercritical case only)")
    x = log_nu(N, nu)
    s = math.floor(x)
    return SigmaA(int(s), s - x)


def ladder(M: int, nu: float, k_max: int) -> list[int]:
    """Graph sizes ``round(M * nu**(2k))`` for ``k = 0..k_max``; ``a_N`` is nearly equal along it."""
    if M < 2:
        raise DomainError("M must be at least 2")
    if not nu > 1:
        raise DomainError("nu must exceed 1")
    out = []
    for k in range(k_max + 1):
        v = M * nu ** (2 * k)
        if not math.isfinite(v) or v > 2**62:
            raise OverflowError(f"ladder size for k={k} overflows")
        out.append(int(round(v)))
    return out


def ladder_spread(sizes: list[int], nu: float) -> float:
    """Largest difference between the ``a_N`` values along a ladder."""
    a = [sigma_a(n, nu).a for n in sizes]
    return max(a) - min(a)
