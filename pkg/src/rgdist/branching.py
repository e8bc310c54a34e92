"""Branching processes behind the distance results.

Two processes live here.  The delayed Galton-Watson process draws its first
generation from ``f`` and every later generation from ``g``; its normalised
size converges to the martingale limit ``W`` that enters the limit law of the
hopcount.  The marked (NR) process gives every individual a node as its mark;
thinning it by removing repeated marks reproduces the BFS shells of the
Poissonian random graph exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._rng import substream
from ._stats import mean_se, two_sample_chi2
from .capacities import CapacitySequence, MixedPoissonLaw
from .distances import _bidirectional, sample_pairs, shells, sigma_a
from .errors import DomainError
from .graphgen import ConnectionKernel, generate, generate_prg

POPULATION_CAP = 10_000_000
W_ZERO = 1e-9


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# Delayed branching process
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BPTrajectory:
    sizes: np.ndarray
    aborted: bool = False


def simulate_delayed_bp(f: MixedPoissonLaw, g: MixedPoissonLaw, t: int, seed, cap: int = POPULATION_CAP) -> BPTrajectory:
    """Generation sizes ``Z_0..Z_t`` with ``Z_1 ~ f`` and later offspring i.i.d. ``g``.

    Truncated tails are dropped (the laws are renormalised).  If a generation
    exceeds ``cap`` the trajectory stops there and is flagged as aborted.
    """
    if t < 0:
        raise DomainError("t must be non-negative")
    rng = _rng(seed)
    pf, pg = f.normalized(), g.normalized()
    vals_g = np.arange(pg.size)
    sizes = np.zeros(t + 1, dtype=np.int64)
    sizes[0] = 1
    if t == 0:
        return BPTrajectory(sizes)
    z = int(rng.choice(pf.size, p=pf))
    sizes[1] = z
    for k in range(2, t + 1):
        if z == 0:
            break
        if z > cap:
            return BPTrajectory(sizes, aborted=True)
        z = int(rng.multinomial(z, pg) @ vals_g)
        sizes[k] = z
    return BPTrajectory(sizes)


def _means(f: MixedPoissonLaw, g: MixedPoissonLaw) -> tuple[float, float]:
    return f.normalized_mean(), g.normalized_mean()


def default_depth(mu: float, nu: float, target: float = 1e3) -> int:
    """Smallest ``t >= 1`` with ``mu * nu**(t-1) >= target``."""
    if not nu > 1:
        raise DomainError("offspring mean of g must exceed 1")
    t = 1
    while mu * nu ** (t - 1) < target:
        t += 1
    return t


def estimate_W(
    f: MixedPoissonLaw,
    g: MixedPoissonLaw,
    t: int | None = None,
    reps: int = 10_000,
    seed=0,
    cap: int = POPULATION_CAP,
) -> np.ndarray:
    """Samples of ``Z_t / (mu nu**(t-1))``, the finite-depth approximation of ``W``.

    ``mu`` and ``nu`` are the means of ``f`` and ``g``.  ``t`` defaults to the
    smallest depth with ``mu nu**(t-1) >= 1000``; a smaller explicit depth is
    rejected.  Replicates are simulated together, one generation at a time.
    """
    mu, nu = _means(f, g)
    if not nu > 1:
        raise DomainError(f"g has mean {nu:.4g} <= 1; W is degenerate")
    t_min = default_depth(mu, nu)
    if t is None:
        t = t_min
    elif mu * nu ** (t - 1) < 1e3:
        raise DomainError(f"depth {t} too shallow: need mu*nu**(t-1) >= 1000 (t >= {t_min})")
    rng = _rng(seed)
    pf, pg = f.normalized(), g.normalized()
    vals_g = np.arange(pg.size)
    z = rng.choice(pf.size, size=reps, p=pf).astype(np.int64)
    for _ in range(2, t + 1):
        big = z > cap
        if big.any():
            warnings.warn(f"{int(big.sum())} trajectories exceeded the population cap and were resampled",
                          RuntimeWarning, stacklevel=2)
            # restart the oversized trajectories from scratch on a fresh stream
            return _resample_big(f, g, t, reps, seed, cap)
        live = z > 0
        if live.any():
            z[live] = rng.multinomial(z[live], pg) @ vals_g
    return z / (mu * nu ** (t - 1))


def _resample_big(f, g, t, reps, seed, cap):
    out = np.empty(reps)
    mu, nu = _means(f, g)
    for r in range(reps):
        for attempt in range(100):
            tr = simulate_delayed_bp(f, g, t, substream(seed, r, attempt), cap)
            if not tr.aborted:
                break
        out[r] = tr.sizes[t] / (mu * nu ** (t - 1))
    return out


def generating_function(law: MixedPoissonLaw, s: float) -> float:
    p = law.normalized()
    return float(np.polynomial.polynomial.polyval(s, p))


def extinction_probability(f: MixedPoissonLaw, g: MixedPoissonLaw, tol: float = 1e-15) -> float:
    """Extinction probability of the delayed process: ``G_f(q)`` with ``q`` the smallest fixed point of ``G_g``."""
    q = 0.0
    for _ in range(1_000_000):
        nq = generating_function(g, q)
        if abs(nq - q) < tol:
            q = nq
            break
        q = nq
    return generating_function(f, q)


# ---------------------------------------------------------------------------
# Limit law of the hopcount
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LimitLawConfig:
    mu: float
    nu: float
    W_samples: np.ndarray

    def __post_init__(self):
        if not self.nu > 1:
            raise DomainError("nu must exceed 1")
        if not self.mu > 0:
            raise DomainError("mu must be positive")
        w = np.asarray(self.W_samples, dtype=float)
        if np.any(w < 0):
            raise DomainError("W samples must be non-negative")
        object.__setattr__(self, "W_samples", w)

    @property
    def kappa(self) -> float:
        return self.mu / (self.nu - 1.0)

    @property
    def positive(self) -> np.ndarray:
        return self.W_samples[self.W_samples > W_ZERO]

    @property
    def q(self) -> float:
        """Fraction of samples at (numerical) zero: the extinction estimate."""
        return float(np.mean(self.W_samples <= W_ZERO))

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Independent pairs of positive samples: first half against second half."""
        w = self.positive
        h = w.size // 2
        if h == 0:
            raise DomainError("need at least two positive W samples (extinct regime?)")
        return w[:h], w[h : 2 * h]


def limit_law_survival(cfg: LimitLawConfig, a: float, j: int, return_se: bool = False):
    """Monte Carlo ``E[exp(-kappa nu**(a+j) W1 W2) | W1 W2 > 0]``."""
    w1, w2 = cfg.pairs()
    vals = np.exp(-cfg.kappa * cfg.nu ** (a + j) * w1 * w2)
    m, se = mean_se(vals)
    return (m, se) if return_se else m


def model_survival_curve(cfg: LimitLawConfig, N: int, t_range: Iterable[int], return_se: bool = False):
    """Limiting ``P(H_N > t | H_N < inf)`` at integer hop counts ``t``.

    The curve depends on ``N`` only through ``sigma_N`` (a shift) and ``a_N``.
    """
    sa = sigma_a(N, cfg.nu)
    out, se = {}, {}
    for t in t_range:
        out[int(t)], se[int(t)] = limit_law_survival(cfg, sa.a, int(t) - sa.sigma, return_se=True)
    return (out, se) if return_se else out


# ---------------------------------------------------------------------------
# Marked (NR) process and thinning
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NRGeneration:
    """One generation of the marked process, in breadth-first order.

    ``parent`` indexes the previous generation.  ``repeat`` is true when the
    mark occurred anywhere earlier in the full breadth-first sequence.
    ``alive`` marks the individuals kept by thinning and ``removed`` the
    individuals thinning cut off directly (their parent was kept, their mark
    had already been kept).
    """

    marks: np.ndarray
    parent: np.ndarray
    alive: np.ndarray
    repeat: np.ndarray
    removed: np.ndarray

    def __len__(self):
        return self.marks.size


@dataclass(frozen=True, eq=False)
class NRState:
    generations: list
    capacities: np.ndarray

    @property
    def t(self) -> int:
        return len(self.generations) - 1

    @property
    def z_raw(self) -> np.ndarray:
        return np.array([len(gen) for gen in self.generations], dtype=np.int64)

    @property
    def z_thin(self) -> np.ndarray:
        return np.array([int(gen.alive.sum()) for gen in self.generations], dtype=np.int64)

    @property
    def c_raw(self) -> np.ndarray:
        """Total capacity of each generation (raw process)."""
        return np.array([math.fsum(self.capacities[gen.marks]) for gen in self.generations])

    @property
    def c_thin(self) -> np.ndarray:
        """Total capacity of each generation after thinning."""
        return np.array([math.fsum(self.capacities[gen.marks[gen.alive]]) for gen in self.generations])

    def dup_counts(self) -> np.ndarray:
        """``|Dup_k|`` for ``k = 0..t``: repeated marks among individuals of generations ``1..k``."""
        per = np.array([0] + [int(gen.repeat.sum()) for gen in self.generations[1:]])
        return np.cumsum(per)

    def thinned_marks(self, k: int) -> np.ndarray:
        gen = self.generations[k]
        return gen.marks[gen.alive]


def simulate_nr(seq: CapacitySequence, t: int, seed, root: int | None = None, cap: int = POPULATION_CAP) -> NRState:
    """Simulate generations ``0..t`` of the marked process and thin it.

    The root's mark is ``root`` or uniform.  An individual with mark ``m`` has
    ``Poisson(lambda_m)`` children with i.i.d. marks from the mark law.  In
    breadth-first order (generation, then parent order, then birth order) an
    individual is kept iff its parent was kept and no kept individual before
    it carried the same mark.
    """
    if t < 0:
        raise DomainError("t must be non-negative")
    rng = _rng(seed)
    N = seq.N
    lam = seq.values
    if root is None:
        root = int(rng.integers(N))
    seen_any = np.zeros(N, dtype=bool)
    seen_kept = np.zeros(N, dtype=bool)
    seen_any[root] = seen_kept[root] = True
    gens = [NRGeneration(np.array([root]), np.array([-1]), np.array([True]),
                         np.array([False]), np.array([False]))]
    for _ in range(t):
        prev = gens[-1]
        counts = rng.poisson(lam[prev.marks])
        total = int(counts.sum())
        if total > cap:
            raise RuntimeError(f"marked process exceeded the population cap ({total} > {cap})")
        marks = seq.alias.sample(rng, total)
        parent = np.repeat(np.arange(len(prev)), counts)
        first_in_gen = np.zeros(total, dtype=bool)
        first_in_gen[np.unique(marks, return_index=True)[1]] = True
        repeat = seen_any[marks] | ~first_in_gen
        seen_any[marks] = True
        cand = prev.alive[parent]
        fresh = np.flatnonzero(cand & ~seen_kept[marks])
        alive = np.zeros(total, dtype=bool)
        alive[fresh[np.unique(marks[fresh], return_index=True)[1]]] = True
        seen_kept[marks[alive]] = True
        gens.append(NRGeneration(marks, parent, alive, repeat, cand & ~alive))
    return NRState(gens, lam)


# ---------------------------------------------------------------------------
# Shell sizes against the thinned process
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarginalTest:
    generation: int
    statistic: float
    p_value: float
    dof: int
    mean_process: float
    mean_graph: float


@dataclass(frozen=True)
class ShellComparison:
    reps: int
    marginals: list
    power_warning: bool

    @property
    def min_p(self) -> float:
        return min(m.p_value for m in self.marginals)


def shells_vs_thinned_nr(
    seq: CapacitySequence,
    t: int,
    reps: int,
    seed,
    kernel: ConnectionKernel | None = None,
    dedup: bool = True,
) -> ShellComparison:
    """Two-sample chi-square tests of thinned generation sizes against BFS shell sizes.

    For each replicate one marked process (thinned unless ``dedup`` is false,
    which serves as a negative control) and one fresh graph with a uniform
    root are drawn.  Each generation ``1..t`` is tested separately.
    """
    kernel = kernel or ConnectionKernel.poissonian()
    proc = np.zeros((reps, t), dtype=np.int64)
    graph = np.zeros((reps, t), dtype=np.int64)
    for r in range(reps):
        st = simulate_nr(seq, t, substream(seed, 0, r))
        proc[r] = (st.z_thin if dedup else st.z_raw)[1:]
        rng = substream(seed, 1, r)
        g = generate(seq, kernel, rng)
        graph[r] = shells(g, int(rng.integers(seq.N)), t).sizes[1:]
    marg = []
    weak = reps < 100
    for k in range(t):
        stat, p, dof = two_sample_chi2(proc[:, k], graph[:, k])
        if dof == 0 and (proc[:, k].any() or graph[:, k].any()):
            weak = True
        marg.append(MarginalTest(k + 1, stat, p, dof, float(proc[:, k].mean()), float(graph[:, k].mean())))
    if weak:
        warnings.warn("too few replicates for a meaningful chi-square comparison", RuntimeWarning, stacklevel=2)
    return ShellComparison(reps, marg, weak)


# ---------------------------------------------------------------------------
# Survival of the hopcount through shell capacities
# ---------------------------------------------------------------------------


def exact_one_hop_survival(seq: CapacitySequence) -> float:
    """``P(H_N > 1)`` for uniform distinct nodes: mean of ``exp(-lambda_i lambda_j / l_N)`` over ``i != j``."""
    N = seq.N
    if N < 2:
        raise DomainError("need at least two nodes")
    lam = seq.values
    total = 0.0
    chunk = max(1, 4_000_000 // N)
    for s in range(0, N, chunk):
        block = np.exp(-np.outer(lam[s : s + chunk], lam) / seq.l_N)
        total += math.fsum(block.ravel())
    total -= math.fsum(np.exp(-lam * lam / seq.l_N))
    return total / (N * (N - 1))


def _shell_of(adj, root: int, depth: int, removed: set) -> tuple[list, set]:
    """Layer ``depth`` of a BFS from ``root`` ignoring ``removed`` edges; also returns the ball."""
    ball = {root}
    layer = [root]
    for _ in range(depth):
        nxt = []
        for u in layer:
            for v in adj(u):
                if v not in ball and (min(u, v), max(u, v)) not in removed:
                    ball.add(v)
                    nxt.append(v)
        layer = nxt
    return layer, ball


def capacity_formula_sample(g, lam: np.ndarray, l_n: float, a1: int, a2: int, t: int) -> float:
    """One draw of ``exp(-sum_k C1 C2 / l_N)`` over the alternating shell steps ``1..t``.

    Step ``s`` pairs shell ``ceil((s+1)/2) - 1`` of ``a1`` with shell
    ``floor((s+1)/2) - 1`` of ``a2``.  After each step the edges between the
    two shells are deleted, which is the same as conditioning on there being
    none; the next shells are grown in the reduced graph.  The product of the
    per-step no-edge probabilities is then an unbiased draw of ``P(H_N > t)``.
    """
    nb_cache = {}

    def adj(u):
        if u not in nb_cache:
            nb_cache[u] = g.neighbors(u).tolist()
        return nb_cache[u]

    removed: set = set()
    exponent = 0.0
    for s in range(1, t + 1):
        r1 = (s + 2) // 2 - 1
        r2 = (s + 1) // 2 - 1
        sh1, ball1 = _shell_of(adj, a1, r1, removed)
        sh2, ball2 = _shell_of(adj, a2, r2, removed)
        if ball1 & ball2:
            raise AssertionError("shells met in the reduced graph")
        c1 = math.fsum(lam[sh1]) if sh1 else 0.0
        c2 = math.fsum(lam[sh2]) if sh2 else 0.0
        exponent += c1 * c2 / l_n
        if not sh1 or not sh2:
            continue
        other = set(sh2)
        for u in sh1:
            for v in adj(u):
                if v in other:
                    removed.add((min(u, v), max(u, v)))
    return math.exp(-exponent)


def survival_via_capacity_formula(seq: CapacitySequence, t: int, reps: int, seed) -> tuple[float, float]:
    """Estimate ``P(H_N > t)`` on the Poissonian graph from shell capacities.

    ``t = 1`` is computed exactly (standard error 0).  For ``t >= 2`` each
    replicate draws a fresh graph and a uniform distinct pair and contributes
    :func:`capacity_formula_sample`.
    """
    if t < 1:
        raise DomainError("t must be at least 1")
    if t == 1:
        return exact_one_hop_survival(seq), 0.0
    vals = np.empty(reps)
    for r in range(reps):
        rng = substream(seed, r)
        g = generate_prg(seq, rng)
        a1, a2 = sample_pairs(rng, seq.N, 1)[0]
        vals[r] = capacity_formula_sample(g, seq.values, seq.l_N, int(a1), int(a2), t)
    return mean_se(vals)


def direct_survival(seq: CapacitySequence, t: int, reps: int, seed, kernel: ConnectionKernel | None = None):
    """Plain Monte Carlo ``P(H_N > t)``: one fresh graph and one uniform pair per replicate."""
    kernel = kernel or ConnectionKernel.poissonian()
    hits = np.empty(reps)
    for r in range(reps):
        rng = substream(seed, r)
        g = generate(seq, kernel, rng)
        a1, a2 = sample_pairs(rng, seq.N, 1)[0]
        d, _ = _bidirectional(g, int(a1), int(a2), t)
        hits[r] = d > t
    return mean_se(hits)


# ---------------------------------------------------------------------------
# Duplicates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DuplicateStats:
    mean_dup: np.ndarray
    se_dup: np.ndarray
    p_empty: np.ndarray


def duplicate_stats(seq: CapacitySequence, t: int, reps: int, seed) -> DuplicateStats:
    """Monte Carlo mean of ``|Dup_k|`` and ``P(Dup_k empty)`` for ``k = 1..t``."""
    if t < 1:
        raise DomainError("t must be at least 1")
    counts = np.empty((reps, t))
    for r in range(reps):
        counts[r] = simulate_nr(seq, t, substream(seed, r)).dup_counts()[1:]
    se = counts.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.full(t, np.nan)
    return DuplicateStats(counts.mean(axis=0), se, (counts == 0).mean(axis=0))
