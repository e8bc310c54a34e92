import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rgdist.capacities import CapacitySequence, SurvivalModel, deterministic_capacities
from rgdist.distances import (
    HopcountSample,
    bfs_distance,
    bfs_distance_censored,
    default_cap,
    ladder,
    ladder_spread,
    sample_hopcounts,
    sample_pairs,
    shells,
    sigma_a,
    single_source_distances,
    survival,
)
from rgdist.errors import DomainError
from rgdist.graphgen import SparseGraph, generate_prg

NU_F1 = 2.231381


def path(n):
    return SparseGraph.from_edges(n, np.arange(n - 1), np.arange(1, n))


def complete(n):
    i, j = np.triu_indices(n, 1)
    return SparseGraph.from_edges(n, i, j)


@st.composite
def small_graphs(draw):
    n = draw(st.integers(2, 25))
    m = draw(st.integers(0, 3 * n))
    u = draw(st.lists(st.integers(0, n - 1), min_size=m, max_size=m))
    v = draw(st.lists(st.integers(0, n - 1), min_size=m, max_size=m))
    return SparseGraph.from_edges(n, np.array(u, dtype=np.int64), np.array(v, dtype=np.int64))


def test_bfs_examples():
    assert bfs_distance(path(3), 0, 2) == 2
    assert bfs_distance(SparseGraph.empty(2), 0, 1) == math.inf
    g = complete(4)
    assert all(bfs_distance(g, i, j) == 1 for i in range(4) for j in range(4) if i != j)
    with pytest.raises(DomainError):
        bfs_distance(g, 1, 1)


def test_censoring_is_distinct_from_disconnection():
    assert bfs_distance_censored(path(10), 0, 9, cap=5) == (math.inf, True)
    assert bfs_distance_censored(path(10), 0, 9, cap=9) == (9.0, False)
    assert bfs_distance_censored(SparseGraph.empty(3), 0, 2, cap=5) == (math.inf, False)


@given(small_graphs())
def test_bfs_matches_single_source_oracle(g):
    for a in range(g.N):
        ref = single_source_distances(g, a)
        for b in range(g.N):
            if a == b:
                continue
            d = bfs_distance(g, a, b)
            assert d == (math.inf if ref[b] < 0 else ref[b])
            assert d == bfs_distance(g, b, a)


@given(small_graphs())
def test_triangle_inequality(g):
    d = np.array([single_source_distances(g, a) for a in range(g.N)], dtype=float)
    d[d < 0] = np.inf
    for a in range(g.N):
        for b in range(g.N):
            assert np.all(d[a, :] <= d[a, b] + d[b, :])


@given(small_graphs(), st.integers(0, 6))
def test_shells_match_distances(g, t_max):
    ref = single_source_distances(g, 0)
    sh = shells(g, 0, t_max)
    assert len(sh.shells) == t_max + 1
    for k, layer in enumerate(sh.shells):
        assert sorted(layer.tolist()) == np.flatnonzero(ref == k).tolist()


def test_shell_examples():
    star = SparseGraph.from_edges(5, np.zeros(4, dtype=int), np.arange(1, 5))
    assert sorted(shells(star, 0, 1).shells[1].tolist()) == [1, 2, 3, 4]
    seq = CapacitySequence(np.array([1.0, 2.0, 3.0]))
    sh = shells(path(3), 0, 2, seq)
    assert [s.tolist() for s in sh.shells] == [[0], [1], [2]]
    assert sh.shell_capacities.tolist() == [1.0, 2.0, 3.0]


def test_sample_pairs_distinct_without_replacement(rng):
    p = sample_pairs(rng, 6, 30)
    assert np.all(p[:, 0] != p[:, 1])
    assert len({tuple(x) for x in p}) == 30
    with pytest.raises(DomainError):
        sample_pairs(rng, 3, 7)


def test_sample_hopcounts_examples():
    s = sample_hopcounts([complete(6)] * 3, 4, seed=1)
    assert np.all(s.distance == 1) and len(s) == 12
    s = sample_hopcounts([SparseGraph.empty(5)], 5, seed=1)
    assert np.all(np.isinf(s.distance)) and not s.censored.any()
    a = sample_hopcounts([complete(6)] * 3, 4, seed=1)
    b = sample_hopcounts([complete(6)] * 3, 4, seed=1)
    assert np.array_equal(a.pairs, b.pairs)


def test_er_hopcount_mean_near_log_n():
    N = 10_000
    seq = deterministic_capacities(SurvivalModel.constant(2.0), N)
    graphs = (generate_prg(seq, s) for s in range(10))
    s = sample_hopcounts(graphs, 100, seed=3, nu=2.0)
    fin = s.distance[s.finite]
    assert 0.8 * math.log2(N) <= fin.mean() <= 1.2 * math.log2(N)


def test_sigma_a_values():
    sa = sigma_a(5000, NU_F1)
    assert sa.sigma == 10
    assert sa.a == pytest.approx(-0.6117291, abs=2e-6)
    assert sigma_a(1024, 2.0).a == 0.0 and sigma_a(1024, 2.0).sigma == 10
    assert sigma_a(617181, NU_F1).sigma == 16
    with pytest.raises(DomainError):
        sigma_a(100, 1.0)
    with pytest.raises(DomainError):
        sigma_a(1, 2.0)


@given(st.integers(2, 10**12), st.floats(1.0001, 50.0))
def test_sigma_a_range(N, nu):
    sa = sigma_a(N, nu)
    assert -1.0 < sa.a <= 0.0


def test_ladder_values():
    assert ladder(5000, NU_F1, 3) == [5000, 24895, 123955, 617181]
    assert ladder_spread([5000, 24895, 123955, 617181], NU_F1) < 1e-4
    with pytest.raises(OverflowError):
        ladder(5000, 1e6, 10)


def _sample(dist, graph=None):
    d = np.asarray(dist, dtype=float)
    n = d.size
    return HopcountSample(np.zeros((n, 2), dtype=int), d, np.zeros(n, dtype=bool),
                          np.arange(n) if graph is None else graph, 100, 2.0)


def test_survival_examples():
    es = survival(_sample([3, 3, 3]))
    assert es.at(2) == 1.0 and es.at(3) == 0.0
    es = survival(_sample([1, 1, np.inf, np.inf]))
    assert es.at(1, conditional=True) == 0.0
    assert es.at(1) == 0.5 and es.at(5) == 0.5
    assert es.infinite_count == 2


def test_survival_all_censored_flags_conditional():
    s = HopcountSample(np.zeros((3, 2), dtype=int), np.full(3, np.inf), np.ones(3, dtype=bool),
                       np.arange(3), 10, 2.0)
    es = survival(s)
    assert not es.conditional_defined and es.censored_count == 3


@given(st.lists(st.one_of(st.integers(1, 20).map(float), st.just(math.inf)), min_size=1, max_size=60))
def test_survival_monotone(d):
    es = survival(_sample(d))
    assert np.all(np.diff(es.survival) <= 0)
    if es.conditional_defined:
        assert np.all(np.diff(es.cond_survival) <= 0)
        assert es.cond_survival[-1] == 0.0
    assert es.survival[0] == 1.0


def test_clustered_se_exceeds_iid_for_correlated_pairs():
    d = np.repeat([1.0, 5.0], 50)
    clustered = survival(_sample(d, graph=np.repeat([0, 1], 50)))
    iid = survival(_sample(d))
    assert clustered.se[2] > iid.se[2]


def test_default_cap():
    assert default_cap(1000, 2.0) == 3 * 10 + 20
