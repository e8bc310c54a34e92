"""Capacity sequences and the laws derived from them.

A capacity sequence assigns a positive weight to every node.  From it we get
the mark law used by the marked branching process, the two mixed Poisson
offspring laws (first generation and later generations), and the numbers that
the convergence conditions are phrased in.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import integrate, special, stats
from scipy.special import gammaln

from .errors import DomainError, QuadratureError, TruncationError

#: Tail-mass ceiling used when ``n_max`` is chosen automatically.
DEFAULT_TAIL = 1e-10

#: Relative tolerance for the mixture integrals of the limiting laws.
QUAD_TOL = 1e-10


# ---------------------------------------------------------------------------
# Survival models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurvivalModel:
    """Survival function ``x -> P(Lambda > x)`` of a positive random variable.

    Use the constructors :meth:`pareto`, :meth:`constant` and :meth:`table`
    rather than instantiating directly.

    ``pareto(tau, c, x_min)`` has ``P(Lambda > x) = min(1, c x**(1 - tau))``
    for ``x >= x_min`` and ``1`` below ``x_min``.  With the default ``x_min``
    the support starts where ``c x**(1 - tau)`` reaches one, which gives a
    plain Pareto law; a larger ``x_min`` puts an atom there.

    ``table(points)`` is the right-continuous step function through the
    ``(x, survival)`` points: survival equals ``1`` left of the first point
    and the last survival value must be ``0``.
    """

    kind: str
    params: tuple

    # -- constructors ------------------------------------------------------

    @classmethod
    def pareto(cls, tau: float, c: float, x_min: float | None = None) -> "SurvivalModel":
        tau = float(tau)
        c = float(c)
        if not tau > 3:
            raise DomainError(f"pareto tail exponent must exceed 3, got {tau}")
        if not c > 0:
            raise DomainError(f"pareto scale must be positive, got {c}")
        edge = c ** (1.0 / (tau - 1.0))
        x_min = edge if x_min is None else float(x_min)
        if not x_min > 0:
            raise DomainError(f"pareto support minimum must be positive, got {x_min}")
        return cls("pareto", (tau, c, max(x_min, edge)))

    @classmethod
    def pareto_from_minimum(cls, tau: float, x_min: float) -> "SurvivalModel":
        """Plain Pareto law ``(x / x_min)**(1 - tau)`` on ``[x_min, inf)``."""
        return cls.pareto(tau, float(x_min) ** (float(tau) - 1.0))

    @classmethod
    def constant(cls, lam: float) -> "SurvivalModel":
        lam = float(lam)
        if not lam > 0:
            raise DomainError(f"constant capacity must be positive, got {lam}")
        return cls("constant", (lam,))

    @classmethod
    def table(cls, points: Sequence[tuple[float, float]]) -> "SurvivalModel":
        pts = sorted((float(x), float(s)) for x, s in points)
        if not pts:
            raise DomainError("table model needs at least one point")
        xs = np.array([p[0] for p in pts])
        sv = np.array([p[1] for p in pts])
        if np.any(np.diff(xs) <= 0):
            raise DomainError("table x values must be distinct")
        if xs[0] < 0:
            raise DomainError("table x values must be non-negative")
        if np.any((sv < 0) | (sv > 1)):
            raise DomainError("table survival values must lie in [0, 1]")
        if np.any(np.diff(sv) > 0):
            raise DomainError("table survival values must be non-increasing")
        if sv[0] != 1.0:
            raise DomainError("survival at the smallest table point must equal 1")
        if sv[-1] != 0.0:
            raise DomainError("the last table survival value must be 0 (finite support)")
        first_drop = xs[np.argmax(sv < 1.0)]
        if not first_drop > 0:
            raise DomainError("table puts mass at 0; capacities must be positive")
        return cls("table", tuple(pts))

    @classmethod
    def from_dict(cls, spec: dict) -> "SurvivalModel":
        kind = spec.get("kind")
        if kind == "pareto":
            if "c" not in spec and "x_min" in spec:
                return cls.pareto_from_minimum(spec["tau"], spec["x_min"])
            return cls.pareto(spec["tau"], spec["c"], spec.get("x_min"))
        if kind == "constant":
            return cls.constant(spec["lambda"])
        if kind == "table":
            return cls.table([tuple(p) for p in spec["points"]])
        raise DomainError(f"unknown survival model kind {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "pareto":
            tau, c, x_min = self.params
            return {"kind": "pareto", "tau": tau, "c": c, "x_min": x_min}
        if self.kind == "constant":
            return {"kind": "constant", "lambda": self.params[0]}
        return {"kind": "table", "points": [list(p) for p in self.params]}

    # -- evaluation --------------------------------------------------------

    @property
    def support_min(self) -> float:
        if self.kind == "pareto":
            return self.params[2]
        if self.kind == "constant":
            return self.params[0]
        xs, sv = self._table_arrays
        return float(xs[np.argmax(sv < 1.0)])

    @cached_property
    def _table_arrays(self):
        return (np.array([p[0] for p in self.params]), np.array([p[1] for p in self.params]))

    def survival(self, x):
        """``P(Lambda > x)``, vectorised."""
        x = np.asarray(x, dtype=float)
        if self.kind == "pareto":
            tau, c, x_min = self.params
            with np.errstate(divide="ignore"):
                tail = np.minimum(1.0, c * np.power(np.maximum(x, x_min), 1.0 - tau))
            return np.where(x < x_min, 1.0, tail)
        if self.kind == "constant":
            return np.where(x < self.params[0], 1.0, 0.0)
        xs, sv = self._table_arrays
        idx = np.searchsorted(xs, x, side="right") - 1
        return np.where(idx < 0, 1.0, sv[np.clip(idx, 0, None)])

    def inverse_survival(self, u):
        """Generalised inverse ``inf{s : P(Lambda > s) <= u}``, vectorised.

        Defined for ``0 < u <= 1``; ``u = 1`` returns the left edge of the
        support, which is what the quantile grid ``i / N`` needs at ``i = N``.
        """
        u = np.asarray(u, dtype=float)
        if np.any(~((u > 0) & (u <= 1))):
            raise DomainError("inverse survival needs 0 < u <= 1")
        if self.kind == "pareto":
            tau, c, x_min = self.params
            return np.maximum(x_min, np.power(c / u, 1.0 / (tau - 1.0)))
        if self.kind == "constant":
            return np.full(u.shape, self.params[0])
        xs, sv = self._table_arrays
        # first index whose survival value is <= u (strictly below 1 at u = 1)
        rev = sv[::-1]
        target = np.where(u >= 1.0, np.nextafter(1.0, 0.0), u)
        k = len(sv) - np.searchsorted(rev, target, side="right")
        return xs[k]

    def mean(self) -> float:
        if self.kind == "pareto":
            tau, c, s = self.params
            return s + c * s ** (2.0 - tau) / (tau - 2.0)
        if self.kind == "constant":
            return self.params[0]
        xs, sv = self._table_arrays
        return float(xs[0] + np.sum(sv[:-1] * np.diff(xs)))

    def second_moment(self) -> float:
        if self.kind == "pareto":
            tau, c, s = self.params
            return s * s + 2.0 * c * s ** (3.0 - tau) / (tau - 3.0)
        if self.kind == "constant":
            return self.params[0] ** 2
        xs, sv = self._table_arrays
        return float(xs[0] ** 2 + np.sum(sv[:-1] * np.diff(xs**2)))

    def nu(self) -> float:
        """``E[Lambda^2] / E[Lambda]``."""
        return self.second_moment() / self.mean()

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Point masses of the law as ``(locations, masses)``."""
        if self.kind == "constant":
            return np.array([self.params[0]]), np.array([1.0])
        if self.kind == "pareto":
            tau, c, s = self.params
            mass = 1.0 - c * s ** (1.0 - tau)
            if mass > 0:
                return np.array([s]), np.array([mass])
            return np.empty(0), np.empty(0)
        xs, sv = self._table_arrays
        masses = -np.diff(np.concatenate([[1.0], sv]))
        keep = masses > 0
        return xs[keep], masses[keep]

    def _density(self, x):
        """Density of the continuous part (pareto only)."""
        tau, c, _ = self.params
        return (tau - 1.0) * c * np.power(x, -tau)

    def breakpoints(self) -> list[float]:
        if self.kind == "table":
            return [p[0] for p in self.params]
        return [self.support_min]


def figure1_model() -> SurvivalModel:
    """The tau = 3.5 capacity law with ``E[L^2]/E[L] ~= 2.231381``.

    A plain Pareto law with minimum ``0.7437937``; its ratio of second to
    first moment is ``3 * 0.7437937``.
    """
    return SurvivalModel.pareto_from_minimum(3.5, 0.7437937)


def inverse_survival(model: SurvivalModel, u):
    """Generalised inverse survival function of ``model`` at ``u``."""
    out = model.inverse_survival(u)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Capacity sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CapacitySequence:
    """Node capacities with their cached totals.

    Attributes
    ----------
    values : ndarray
        Read-only array of positive capacities, node ``i`` at position ``i``.
    l_N : float
        Total capacity.
    mu_N : float
        Mean capacity ``l_N / N``.
    nu_N : float
        ``sum(values**2) / l_N``.
    """

    values: np.ndarray
    l_N: float = field(init=False)
    mu_N: float = field(init=False)
    nu_N: float = field(init=False)
    sum_sq: float = field(init=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True).ravel()
        if vals.size == 0:
            raise DomainError("capacity sequence is empty")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise DomainError("capacities must be positive and finite")
        vals.setflags(write=False)
        l_n = math.fsum(vals)
        sq = math.fsum(vals * vals)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "l_N", l_n)
        object.__setattr__(self, "mu_N", l_n / vals.size)
        object.__setattr__(self, "nu_N", sq / l_n)
        object.__setattr__(self, "sum_sq", sq)

    @property
    def N(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size

    @cached_property
    def alias(self) -> "AliasTable":
        """Alias table for the mark law ``P(M = m) = lambda_m / l_N``."""
        return AliasTable.from_weights(self.values)


def deterministic_capacities(model: SurvivalModel, N: int) -> CapacitySequence:
    """Quantile-grid capacities ``lambda_i = inverse_survival(i / N)``, ``i = 1..N``."""
    if N < 1:
        raise DomainError("N must be at least 1")
    u = np.arange(1, N + 1, dtype=float) / N
    return CapacitySequence(model.inverse_survival(u))


def iid_capacities(model: SurvivalModel, N: int, seed) -> CapacitySequence:
    """I.i.d. capacities by inverse transform, one uniform per node in index order."""
    if N < 1:
        raise DomainError("N must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = 1.0 - rng.random(N)  # in (0, 1]
    return CapacitySequence(model.inverse_survival(u))


def moments(seq: CapacitySequence) -> tuple[float, float, float]:
    """Return ``(l_N, mu_N, nu_N)``."""
    return seq.l_N, seq.mu_N, seq.nu_N


def s_nq(seq: CapacitySequence, q: float) -> float:
    """Empirical ``q``-th moment ``(1/N) sum lambda_i**q``."""
    if not q > 0:
        raise DomainError("q must be positive")
    return math.fsum(np.power(seq.values, q)) / seq.N


def write_capacities(path, seq: CapacitySequence, comment: str | None = None) -> None:
    """Write ``index,lambda`` CSV with 1-based indices."""
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "lambda"])
        for i, lam in enumerate(seq.values, start=1):
            w.writerow([i, repr(float(lam))])


def read_capacities(path) -> CapacitySequence:
    """Read an ``index,lambda`` CSV; ``#`` lines are skipped."""
    with open(path, newline="") as fh:
        rows = [line for line in fh if line.strip() and not line.startswith("#")]
    reader = csv.DictReader(rows)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["index", "lambda"]:
        raise DomainError(f"{path}: expected header 'index,lambda'")
    pairs = [(int(r["index"]), float(r["lambda"])) for r in reader]
    idx = [p[0] for p in pairs]
    if idx != list(range(1, len(pairs) + 1)):
        raise DomainError(f"{path}: indices must run 1..N in order")
    return CapacitySequence(np.array([p[1] for p in pairs]))


# ---------------------------------------------------------------------------
# Mixing laws and the alias method
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AliasTable:
    """Walker/Vose alias table for O(1) sampling from a finite law."""

    prob: np.ndarray
    alias: np.ndarray

    @classmethod
    def from_weights(cls, weights) -> "AliasTable":
        w = np.asarray(weights, dtype=float)
        n = w.size
        scaled = w * (n / w.sum())
        prob = np.ones(n)
        alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        sc = scaled.tolist()
        while small and large:
            s = small.pop()
            g = large[-1]
            prob[s] = sc[s]
            alias[s] = g
            sc[g] = sc[g] + sc[s] - 1.0
            if sc[g] < 1.0:
                large.pop()
                small.append(g)
        # leftovers are 1 up to rounding
        return cls(prob, alias)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        n = self.prob.size
        idx = rng.integers(0, n, size=size)
        keep = rng.random(size) < self.prob[idx]
        return np.where(keep, idx, self.alias[idx])

    def probabilities(self) -> np.ndarray:
        """Recover the law encoded by the table (used in tests)."""
        n = self.prob.size
        p = self.prob / n
        np.add.at(p, self.alias, (1.0 - self.prob) / n)
        return p


@dataclass(frozen=True, eq=False)
class MixingLaw:
    """Finite law placing ``weights[k]`` on the positive value ``atoms[k]``."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if a.shape != w.shape or a.ndim != 1 or a.size == 0:
            raise DomainError("atoms and weights must be equal-length non-empty vectors")
        if np.any(a <= 0):
            raise DomainError("mixing atoms must be positive")
        if np.any(w < 0) or abs(math.fsum(w) - 1.0) > 1e-12:
            raise DomainError("mixing weights must be non-negative and sum to 1")
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "weights", w)

    def mean(self) -> float:
        return math.fsum(self.atoms * self.weights)

    @cached_property
    def table(self) -> AliasTable:
        return AliasTable.from_weights(self.weights)

    def sample_index(self, rng, size) -> np.ndarray:
        return self.table.sample(rng, size)


def mark_law(seq: CapacitySequence) -> MixingLaw:
    """Law of a mark: node ``m`` with probability ``lambda_m / l_N``."""
    law = MixingLaw(seq.values, seq.values / seq.l_N)
    # share the sequence's table so sampling is O(1) without rebuilding
    law.__dict__["table"] = seq.alias
    return law


def size_bias(law: MixingLaw) -> MixingLaw:
    """Size-biased mixing law: weight of ``atom_i`` becomes ``p_i atom_i / sum_j p_j atom_j``."""
    raw = law.weights * law.atoms
    total = math.fsum(raw)
    if not total > 0:
        raise DomainError("size bias of a law with zero mean")
    return MixingLaw(law.atoms, raw / total)


# ---------------------------------------------------------------------------
# Mixed Poisson laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MixedPoissonLaw:
    """Truncated probability mass function on ``0..n_max`` plus its tail mass."""

    pmf: np.ndarray
    tail_mass: float = 0.0
    ceiling: float = 1.0

    def __post_init__(self):
        p = np.asarray(self.pmf, dtype=float).ravel()
        if p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
            raise DomainError("pmf entries must be non-negative and finite")
        tail = float(self.tail_mass)
        if tail < 0:
            if tail < -1e-12:
                raise DomainError("tail mass must be non-negative")
            tail = 0.0
        if abs(math.fsum(p) + tail - 1.0) > 1e-12:
            raise DomainError(f"pmf plus tail sums to {math.fsum(p) + tail!r}, not 1")
        if tail >= self.ceiling and self.ceiling < 1.0:
            raise TruncationError(
                f"tail mass {tail:.3g} exceeds the ceiling {self.ceiling:.3g}; raise n_max"
            )
        p.setflags(write=False)
        object.__setattr__(self, "pmf", p)
        object.__setattr__(self, "tail_mass", tail)

    @property
    def n_max(self) -> int:
        return self.pmf.size - 1

    def mean(self) -> float:
        """Mean of the truncated part (tail mass ignored)."""
        return math.fsum(np.arange(self.pmf.size) * self.pmf)

    def normalized(self) -> np.ndarray:
        """pmf rescaled to sum to one, for sampling."""
        return self.pmf / self.pmf.sum()

    def normalized_mean(self) -> float:
        return math.fsum(np.arange(self.pmf.size) * self.normalized())

    @classmethod
    def point_mass(cls, n: int) -> "MixedPoissonLaw":
        p = np.zeros(n + 1)
        p[n] = 1.0
        return cls(p)

    @classmethod
    def poisson(cls, lam: float, n_max: int | None = None, tail: float = DEFAULT_TAIL):
        if n_max is None:
            n_max = adaptive_n_max(lam, tail)
        n = np.arange(n_max + 1)
        return cls(stats.poisson.pmf(n, lam), float(stats.poisson.sf(n_max, lam)))


@dataclass(frozen=True)
class OffspringPair:
    """First-generation law ``f`` and later-generation law ``g``."""

    f: MixedPoissonLaw
    g: MixedPoissonLaw

    @property
    def n_max(self) -> int:
        return self.f.n_max


def adaptive_n_max(lam_max: float, tail: float = DEFAULT_TAIL) -> int:
    """Smallest ``n`` with ``P(Poisson(lam_max) > n) < tail``."""
    n = int(stats.poisson.isf(tail, lam_max))
    while stats.poisson.sf(n, lam_max) >= tail:
        n += 1
    while n > 0 and stats.poisson.sf(n - 1, lam_max) < tail:
        n -= 1
    return max(n, 1)


def _poisson_pmf_rows(lam: np.ndarray, n_max: int) -> np.ndarray:
    """Matrix ``P[n, i] = P(Poisson(lam_i) = n)`` for ``n = 0..n_max``."""
    n = np.arange(n_max + 1, dtype=float)[:, None]
    with np.errstate(divide="ignore"):
        loglam = np.log(lam)[None, :]
    return np.exp(n * loglam - lam[None, :] - gammaln(n + 1.0))


def offspring_laws(
    seq: CapacitySequence, n_max: int | None = None, ceiling: float = DEFAULT_TAIL
) -> OffspringPair:
    """Offspring laws of the marked branching process built on ``seq``.

    ``f_n`` is the probability that a uniformly chosen node has a
    ``Poisson(lambda)`` count equal to ``n``; ``g_n`` is the same with the node
    drawn from the mark law.  Both are truncated at ``n_max`` (chosen so the
    tail is below ``ceiling`` when omitted) and satisfy
    ``g_n * mu_N == (n + 1) * f_{n+1}``.
    """
    lam_max = float(seq.values.max())
    if n_max is None:
        n_max = adaptive_n_max(lam_max, ceiling)
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    # group equal capacities; deterministic sequences repeat values heavily
    uniq, counts = np.unique(seq.values, return_counts=True)
    f = np.zeros(n_max + 1)
    g = np.zeros(n_max + 1)
    chunk = max(1, 2_000_000 // (n_max + 1))
    for s in range(0, uniq.size, chunk):
        lam = uniq[s : s + chunk]
        cnt = counts[s : s + chunk]
        pm = _poisson_pmf_rows(lam, n_max)
        f += pm @ cnt
        g += pm @ (cnt * lam)
    f /= seq.N
    g /= seq.l_N
    tail_f = float(np.dot(counts, stats.poisson.sf(n_max, uniq)) / seq.N)
    tail_g = float(np.dot(counts * uniq, stats.poisson.sf(n_max, uniq)) / seq.l_N)
    return OffspringPair(
        MixedPoissonLaw(f, tail_f, ceiling=ceiling), MixedPoissonLaw(g, tail_g, ceiling=ceiling)
    )


def _reconcile(pmf: np.ndarray, tail: float, tol: float = 1e-8) -> tuple[np.ndarray, float]:
    """Absorb quadrature rounding so ``sum(pmf) + tail == 1`` to machine precision."""
    total = math.fsum(pmf)
    if abs(total + tail - 1.0) > tol:
        raise QuadratureError(
            f"mixture integrals sum to {total + tail!r} instead of 1", achieved=abs(total + tail - 1)
        )
    if total > 1.0:
        return pmf / total, 0.0
    return pmf, 1.0 - total


def limit_offspring_laws(model: SurvivalModel, n_max: int) -> OffspringPair:
    """Offspring laws of the limiting mixed Poisson process for ``model``.

    ``f_n = E[P(Poisson(Lambda) = n)]`` and ``g_n = (n+1) f_{n+1} / E[Lambda]``,
    with the continuous part of the mixture integrated numerically.  Returned
    laws are truncated at ``n_max``; their tails are whatever mass remains.
    """
    mu = model.mean()
    n = np.arange(n_max + 2, dtype=float)
    log_fact = gammaln(n + 1.0)

    def pmf_vec(x):
        # f_0..f_{n_max+1}, then the two tail integrands
        x = float(x)
        logp = n * math.log(x) - x - log_fact
        out = np.empty(n.size + 2)
        out[: n.size] = np.exp(logp)
        sf = float(special.gammainc(n_max + 1.0, x))
        out[n.size] = sf
        out[n.size + 1] = x * sf
        return out

    locs, masses = model.atoms()
    acc = np.zeros(n.size + 2)
    for x, m in zip(locs, masses):
        acc += m * pmf_vec(x)
    if model.kind == "pareto":
        acc += _pareto_integral(model, pmf_vec, n_max)
    f_full = acc[: n.size]
    f, tail_f = _reconcile(f_full[: n_max + 1], acc[n.size])
    g, tail_g = _reconcile((n[1:] * f_full[1:]) / mu, acc[n.size + 1] / mu)
    return OffspringPair(MixedPoissonLaw(f, tail_f), MixedPoissonLaw(g, tail_g))


def _pareto_integral(model: SurvivalModel, vec_fun, n_max: int) -> np.ndarray:
    """``int vec_fun(x) dF(x)`` over the continuous part of a pareto model."""
    _, _, s = model.params

    def integrand(x):
        return vec_fun(x) * model._density(x)

    # Poisson-shaped integrands have their bulk below ~n_max; split there
    edges = [s]
    for mark in (2.0 * s, 4.0 * s, n_max / 4.0, n_max / 2.0, float(n_max), 2.0 * n_max + 20.0):
        if mark > edges[-1] * 1.01:
            edges.append(mark)
    total = np.zeros_like(vec_fun(s))
    pieces = list(zip(edges[:-1], edges[1:])) + [(edges[-1], np.inf)]
    for a, b in pieces:
        val, err = integrate.quad_vec(integrand, a, b, epsabs=1e-15, epsrel=QUAD_TOL, limit=2000)
        if not np.isfinite(err) or err > 1e-9:
            raise QuadratureError(f"mixture integral on [{a}, {b}] did not converge", achieved=err)
        total += val
    return total


def _as_law(p) -> MixedPoissonLaw:
    if isinstance(p, MixedPoissonLaw):
        return p
    arr = np.asarray(p, dtype=float)
    return MixedPoissonLaw(arr, max(0.0, 1.0 - math.fsum(arr)))


def total_variation(p, q) -> float:
    """Total variation distance between two truncated laws.

    The shorter pmf is padded with zeros and the two tail masses are compared
    as one extra coordinate, which can only overstate the true distance.
    """
    p = _as_law(p)
    q = _as_law(q)
    n = max(p.pmf.size, q.pmf.size)
    a = np.zeros(n)
    b = np.zeros(n)
    a[: p.pmf.size] = p.pmf
    b[: q.pmf.size] = q.pmf
    d = 0.5 * (math.fsum(np.abs(a - b)) + abs(p.tail_mass - q.tail_mass))
    return min(1.0, d)


# ---------------------------------------------------------------------------
# Condition checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionConfig:
    """Limits and exponents that a capacity sequence is checked against."""

    tau: float
    eps: float
    mu: float
    nu: float
    f: MixedPoissonLaw
    g: MixedPoissonLaw

    def __post_init__(self):
        if not self.tau > 3:
            raise DomainError("tau must exceed 3")
        if not self.eps > 0:
            raise DomainError("eps must be positive")
        if not self.gamma < 0.5:
            raise DomainError(
                f"gamma = 1/(tau-1) + eps = {self.gamma:.4g} must stay below 1/2"
            )

    @property
    def gamma(self) -> float:
        return 1.0 / (self.tau - 1.0) + self.eps

    @classmethod
    def from_model(cls, model: SurvivalModel, tau: float, eps: float, n_max: int):
        laws = limit_offspring_laws(model, n_max)
        return cls(tau, eps, model.mean(), model.nu(), laws.f, laws.g)


@dataclass(frozen=True)
class ConditionReport:
    N: int
    mu_diff: float
    nu_diff: float
    dtv_f: float
    dtv_g: float
    moment: float
    max_lambda: float
    max_bound: float
    c3_pass: bool

    @property
    def c1(self):
        return self.mu_diff, self.nu_diff

    @property
    def c2(self):
        return self.dtv_f, self.dtv_g

    @property
    def c3(self):
        return self.moment, self.max_lambda, self.max_bound, self.c3_pass


def check_conditions(
    seq: CapacitySequence,
    cfg: ConditionConfig,
    n_max: int | None = None,
    moment_bound: float | None = None,
) -> ConditionReport:
    """Compare ``seq`` with the limits in ``cfg``.

    The moment part of the third check only fails when ``moment_bound`` is
    given; otherwise the moment is reported and only the maximum is tested.
    """
    laws = offspring_laws(seq, n_max)
    moment = s_nq(seq, cfg.tau - 1.0 - cfg.eps)
    max_lam = float(seq.values.max())
    bound = float(seq.N) ** cfg.gamma
    ok = max_lam <= bound and (moment_bound is None or moment <= moment_bound)
    return ConditionReport(
        N=seq.N,
        mu_diff=abs(seq.mu_N - cfg.mu),
        nu_diff=abs(seq.nu_N - cfg.nu),
        dtv_f=total_variation(laws.f, cfg.f),
        dtv_g=total_variation(laws.g, cfg.g),
        moment=moment,
        max_lambda=max_lam,
        max_bound=bound,
        c3_pass=bool(ok),
    )


# ---------------------------------------------------------------------------
# Quantile / survival L1 identity
# ---------------------------------------------------------------------------


def _quad(fun, a, b, points=None, tol=1e-11):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if points:
                pts = sorted(p for p in set(points) if a < p < b)
                val, err = integrate.quad(fun, a, b, points=pts or None, epsabs=tol, epsrel=tol, limit=500)
            else:
                val, err = integrate.quad(fun, a, b, epsabs=tol, epsrel=tol, limit=500)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature on [{a}, {b}] did not converge: {exc}") from exc
    if err > 1e-8:
        raise QuadratureError(f"quadrature error estimate {err:.3g} too large", achieved=err)
    return val


def integrated_quantile_distance(G: SurvivalModel, H: SurvivalModel) -> tuple[float, float]:
    """L1 distance between two laws, computed from quantiles and from survivals.

    Returns ``(int_0^1 |G^-1(u) - H^-1(u)| du, int_0^inf |G(x) - H(x)| dx)``
    where ``G`` and ``H`` here mean survival functions.  The two numbers are
    equal in exact arithmetic.
    """
    # u = v**4 removes the u**(-1/(tau-1)) singularity of pareto quantiles at 0
    def q_integrand(v):
        u = v**4
        if u <= 0:
            return 0.0
        return 4.0 * v**3 * abs(float(G.inverse_survival(u)) - float(H.inverse_survival(u)))

    vpoints = [0.5]
    for m in (G, H):
        if m.kind == "table":
            vpoints += [p[1] ** 0.25 for p in m.params if 0 < p[1] < 1]
        elif m.kind == "pareto":
            tau, c, s = m.params
            jump = c * s ** (1 - tau)
            if 0 < jump < 1:
                vpoints.append(jump**0.25)
    via_q = _quad(q_integrand, 0.0, 1.0, vpoints)

    def s_integrand(x):
        return abs(float(G.survival(x)) - float(H.survival(x)))

    xpoints = G.breakpoints() + H.breakpoints()
    hi = max(xpoints) * 2.0 + 1.0
    via_s = _quad(s_integrand, 0.0, hi, xpoints)
    if G.kind == "pareto" or H.kind == "pareto":
        via_s += _quad(s_integrand, hi, np.inf)
    return via_q, via_s
