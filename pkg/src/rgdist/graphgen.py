"""Rank-1 random graph generators.

Edges between ``i`` and ``j`` appear independently with probability
``h(lambda_i lambda_j / l_N)`` for a connection kernel ``h``.  The Poissonian
kernel is generated as a Poisson multigraph that is then collapsed; other
kernels use row-wise geometric skip sampling over capacities sorted in
decreasing order, so both run in expected ``O(N + E)`` time.

Nodes are 0-based everywhere in the library.  The CSV edge-list format is
1-based.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .capacities import CapacitySequence
from .errors import DomainError

# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def _h_poissonian(x):
    return -np.expm1(-np.asarray(x, dtype=float))


def _h_expected_degree(x):
    return np.minimum(np.asarray(x, dtype=float), 1.0)


def _h_generalized(x):
    x = np.asarray(x, dtype=float)
    return x / (1.0 + x)


# below ~1e-4 cancellation in user kernels like 1 - exp(-x) swamps the x**2 term
_CERT_GRID = np.geomspace(1e-4, 1e-2, 400)


@dataclass(frozen=True)
class ConnectionKernel:
    """Connection kernel ``h`` mapping ``lambda_i lambda_j / l_N`` to a probability.

    ``h`` must be vectorised, non-decreasing, satisfy ``h(0) = 0`` and stay
    within ``C x**2`` of ``x`` near zero.  The named kernels are exact; custom
    kernels are checked on a grid when constructed.
    """

    name: str
    h: Callable
    a2_constant: float = 0.0

    @classmethod
    def poissonian(cls):
        return cls("poissonian", _h_poissonian, 0.5)

    @classmethod
    def expected_degree(cls):
        return cls("expected_degree", _h_expected_degree, 0.0)

    @classmethod
    def generalized(cls):
        return cls("generalized", _h_generalized, 1.0)

    @classmethod
    def custom(cls, h: Callable, name: str = "custom", max_constant: float = 1e3):
        """Wrap a user kernel after checking ``h(0) = 0``, monotonicity and ``|h(x) - x| <= C x**2``."""
        if float(np.asarray(h(np.array([0.0])))[0]) != 0.0:
            raise DomainError("custom kernel must satisfy h(0) = 0")
        grid = np.concatenate([[0.0], np.geomspace(1e-10, 1e3, 2000)])
        vals = np.asarray(h(grid), dtype=float)
        if np.any((vals < 0) | (vals > 1)) or not np.all(np.isfinite(vals)):
            raise DomainError("custom kernel must map into [0, 1]")
        if np.any(np.diff(vals) < -1e-15):
            raise DomainError("custom kernel must be non-decreasing")
        ratio = np.abs(np.asarray(h(_CERT_GRID), dtype=float) - _CERT_GRID) / _CERT_GRID**2
        const = float(ratio.max())
        if not np.isfinite(const) or const > max_constant:
            raise DomainError(f"custom kernel fails |h(x) - x| <= C x^2 near 0 (C ~ {const:.3g})")
        return cls(name, h, const)

    @classmethod
    def by_name(cls, name: str) -> "ConnectionKernel":
        try:
            return {"poissonian": cls.poissonian, "expected_degree": cls.expected_degree,
                    "generalized": cls.generalized}[name]()
        except KeyError:
            raise DomainError(f"unknown kernel {name!r}") from None

    def __call__(self, x):
        return self.h(x)


# ---------------------------------------------------------------------------
# Graph container
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Undirected simple graph in CSR form.

    ``indices[indptr[i]:indptr[i+1]]`` are the neighbours of node ``i`` in
    increasing order.
    """

    N: int
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, N: int, u, v) -> "SparseGraph":
        """Build from endpoint arrays; loops and repeated pairs are dropped."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        keep = u != v
        u, v = u[keep], v[keep]
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        key = np.unique(lo * N + hi)
        lo, hi = key // N, key % N
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(N + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=N), out=indptr[1:])
        indptr.setflags(write=False)
        dst.setflags(write=False)
        return cls(N, indptr, dst)

    @classmethod
    def empty(cls, N: int) -> "SparseGraph":
        return cls.from_edges(N, [], [])

    @property
    def edge_count(self) -> int:
        return self.indices.size // 2

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(i).tolist() for i in range(self.N)]

    def edges(self) -> np.ndarray:
        """``(E, 2)`` array of ``u < v`` pairs in lexicographic order."""
        src = np.repeat(np.arange(self.N), self.degrees())
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        k = np.searchsorted(nb, j)
        return bool(k < nb.size and nb[k] == j)

    def expand(self, frontier: np.ndarray) -> np.ndarray:
        """Concatenated neighbour lists of the nodes in ``frontier``."""
        starts = self.indptr[frontier]
        lens = self.indptr[frontier + 1] - starts
        total = int(lens.sum())
        if total == 0:
            return np.empty(0, dtype=np.int64)
        offs = np.repeat(starts - np.cumsum(lens) + lens, lens)
        return self.indices[offs + np.arange(total)]


def write_edge_list(path, g: SparseGraph, comment: str | None = None) -> None:
    """Write ``u,v`` CSV, 1-based, ``u < v``, sorted lexicographically."""
    e = g.edges() + 1
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("u,v\n")
        if e.size:
            fh.write("\n".join(f"{a},{b}" for a, b in e.tolist()))
            fh.write("\n")


def read_edge_list(path, N: int) -> SparseGraph:
    with open(path, newline="") as fh:
        rows = [line for line in fh if line.strip() and not line.startswith("#")]
    reader = csv.reader(rows)
    header = next(reader)
    if [h.strip() for h in header] != ["u", "v"]:
        raise DomainError(f"{path}: expected header 'u,v'")
    pairs = np.array([[int(a), int(b)] for a, b in reader], dtype=np.int64).reshape(-1, 2)
    if pairs.size and (pairs.min() < 1 or pairs.max() > N):
        raise DomainError(f"{path}: node index out of range 1..{N}")
    return SparseGraph.from_edges(N, pairs[:, 0] - 1, pairs[:, 1] - 1)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def edge_probability(kernel: ConnectionKernel, seq: CapacitySequence, i: int, j: int) -> float:
    """``h(lambda_i lambda_j / l_N)`` for distinct nodes ``i`` and ``j``."""
    if i == j:
        raise DomainError("self-pairs have no connection probability")
    if not (0 <= i < seq.N and 0 <= j < seq.N):
        raise DomainError("node index out of range")
    x = seq.values[i] * seq.values[j] / seq.l_N
    return float(kernel(np.array([x]))[0])


def expected_degree(seq: CapacitySequence, kernel: ConnectionKernel, i: int) -> float:
    """``sum_{j != i} h(lambda_i lambda_j / l_N)``."""
    x = seq.values[i] * seq.values / seq.l_N
    p = np.asarray(kernel(x), dtype=float)
    return float(p.sum() - p[i])


def _sample_distinct_pairs(alias, rng, m: int) -> tuple[np.ndarray, np.ndarray]:
    """``m`` ordered pairs of independent mark draws conditioned on ``a != b``."""
    a = alias.sample(rng, m)
    b = alias.sample(rng, m)
    bad = np.flatnonzero(a == b)
    while bad.size:
        a[bad] = alias.sample(rng, bad.size)
        b[bad] = alias.sample(rng, bad.size)
        bad = bad[a[bad] == b[bad]]
    return a, b


def generate_prg(seq: CapacitySequence, seed) -> SparseGraph:
    """Poissonian random graph: edge ``ij`` present iff a Poisson(``lambda_i lambda_j / l_N``) count is positive.

    The multigraph is drawn as one Poisson total with mean
    ``(l_N**2 - sum lambda**2) / (2 l_N)`` whose edges pick endpoints from the
    mark law conditioned on being distinct; parallel edges are then merged.
    """
    rng = _rng(seed)
    N = seq.N
    if N < 2:
        return SparseGraph.empty(N)
    mean_edges = (seq.l_N * seq.l_N - seq.sum_sq) / (2.0 * seq.l_N)
    m = int(rng.poisson(max(mean_edges, 0.0)))
    a, b = _sample_distinct_pairs(seq.alias, rng, m)
    return SparseGraph.from_edges(N, a, b)


def _skip_sample(w_sorted: np.ndarray, l_n: float, env: Callable, rng) -> tuple[np.ndarray, np.ndarray]:
    """Pairs ``i < j`` (sorted positions) each kept independently with probability ``env(w_i w_j / l_n)``.

    ``env`` must be non-decreasing so that probabilities fall along each row.
    All rows advance together: every round draws one geometric jump and one
    acceptance test per still-active row.
    """
    n = w_sorted.size
    rows = np.arange(n - 1, dtype=np.int64)
    j = rows + 1
    p = np.asarray(env(w_sorted[rows] * w_sorted[j] / l_n), dtype=float)
    active = p > 0
    rows, j, p = rows[active], j[active], p[active]
    out_i, out_j = [], []
    while rows.size:
        r = rng.random(rows.size)
        with np.errstate(divide="ignore"):
            jump = np.where(p < 1.0, np.floor(np.log(r) / np.log1p(-p)), 0.0)
        jump = np.minimum(jump, n)  # guards overflow for tiny p
        j = j + jump.astype(np.int64)
        alive = j < n
        rows, j, p = rows[alive], j[alive], p[alive]
        if not rows.size:
            break
        q = np.asarray(env(w_sorted[rows] * w_sorted[j] / l_n), dtype=float)
        hit = rng.random(rows.size) * p < q
        out_i.append(rows[hit])
        out_j.append(j[hit])
        p = q
        j = j + 1
        alive = (j < n) & (p > 0)
        rows, j, p = rows[alive], j[alive], p[alive]
    if out_i:
        return np.concatenate(out_i), np.concatenate(out_j)
    return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)


def _sorted_view(seq: CapacitySequence):
    order = np.argsort(-seq.values, kind="stable")
    return order, seq.values[order]


def generate_bernoulli(seq: CapacitySequence, kernel: ConnectionKernel, seed) -> SparseGraph:
    """Independent edges with probability ``h(lambda_i lambda_j / l_N)``.

    Intended for the non-Poissonian kernels; the Poissonian kernel is accepted
    too and gives a graph with the same law as :func:`generate_prg`.
    """
    rng = _rng(seed)
    if seq.N < 2:
        return SparseGraph.empty(seq.N)
    order, w = _sorted_view(seq)
    si, sj = _skip_sample(w, seq.l_N, kernel.h, rng)
    return SparseGraph.from_edges(seq.N, order[si], order[sj])


def generate(seq: CapacitySequence, kernel: ConnectionKernel, seed) -> SparseGraph:
    """Dispatch to :func:`generate_prg` or :func:`generate_bernoulli`."""
    if kernel.name == "poissonian":
        return generate_prg(seq, seed)
    return generate_bernoulli(seq, kernel, seed)
