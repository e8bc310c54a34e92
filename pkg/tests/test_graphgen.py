import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from rgdist.capacities import CapacitySequence, SurvivalModel, deterministic_capacities, figure1_model
from rgdist.errors import DomainError
from rgdist.graphgen import (
    ConnectionKernel,
    SparseGraph,
    edge_probability,
    expected_degree,
    generate,
    generate_bernoulli,
    generate_prg,
    read_edge_list,
    write_edge_list,
)

KERNELS = [ConnectionKernel.poissonian(), ConnectionKernel.expected_degree(), ConnectionKernel.generalized()]


@given(st.floats(0.0, 1e3))
def test_kernel_ordering(x):
    grg = float(ConnectionKernel.generalized()(np.array([x]))[0])
    prg = float(ConnectionKernel.poissonian()(np.array([x]))[0])
    edrg = float(ConnectionKernel.expected_degree()(np.array([x]))[0])
    assert grg <= prg + 1e-15 and prg <= edrg + 1e-15


def test_custom_kernel_checks():
    with pytest.raises(DomainError):
        ConnectionKernel.custom(lambda x: np.asarray(x) * 0 + 0.1)
    with pytest.raises(DomainError):
        ConnectionKernel.custom(lambda x: np.minimum(np.asarray(x), 1.0) * (np.asarray(x) < 5))
    with pytest.raises(DomainError):
        ConnectionKernel.custom(lambda x: np.minimum(np.sqrt(np.asarray(x)), 1.0))
    k = ConnectionKernel.custom(lambda x: 1 - np.exp(-np.asarray(x)))
    assert k.a2_constant == pytest.approx(0.5, abs=1e-2)
    with pytest.raises(DomainError):
        ConnectionKernel.by_name("nope")


def test_sparse_graph_basics():
    g = SparseGraph.from_edges(4, np.array([0, 1, 1, 2, 3]), np.array([1, 0, 2, 2, 0]))
    assert g.edge_count == 3  # duplicate and loop dropped
    assert g.edges().tolist() == [[0, 1], [0, 3], [1, 2]]
    assert g.degrees().tolist() == [2, 2, 1, 1]
    assert g.has_edge(3, 0) and not g.has_edge(2, 3)
    assert g.neighbors(0).tolist() == [1, 3]
    assert sorted(g.expand(np.array([1, 3])).tolist()) == [0, 0, 2]


def test_edge_list_round_trip(tmp_path):
    g = generate_prg(deterministic_capacities(figure1_model(), 300), 1)
    p = tmp_path / "e.csv"
    write_edge_list(p, g, comment="x")
    back = read_edge_list(p, 300)
    assert np.array_equal(back.edges(), g.edges())


def test_edge_probability_and_expected_degree():
    seq = CapacitySequence(np.array([1.0, 2.0, 3.0]))
    k = ConnectionKernel.poissonian()
    assert edge_probability(k, seq, 0, 2) == pytest.approx(1 - np.exp(-3.0 / 6.0))
    with pytest.raises(DomainError):
        edge_probability(k, seq, 1, 1)
    manual = sum(1 - np.exp(-2.0 * lj / 6.0) for lj in (1.0, 3.0))
    assert expected_degree(seq, k, 1) == pytest.approx(manual)


def _edge_frequencies(seq, kernel, reps, seed0):
    N = seq.N
    counts = np.zeros((N, N))
    for r in range(reps):
        e = generate(seq, kernel, seed0 + r).edges()
        counts[e[:, 0], e[:, 1]] += 1
    return counts / reps


@pytest.mark.parametrize("kernel", KERNELS, ids=lambda k: k.name)
def test_pair_frequencies_match_kernel(kernel):
    seq = CapacitySequence(np.array([0.5, 1.0, 2.0, 3.0, 6.0]))
    reps = 20_000
    freq = _edge_frequencies(seq, kernel, reps, 100)
    for i, j in itertools.combinations(range(seq.N), 2):
        p = edge_probability(kernel, seq, i, j)
        se = np.sqrt(max(p * (1 - p), 1e-12) / reps)
        assert abs(freq[i, j] - p) < 4.5 * se + 1e-12, (i, j, freq[i, j], p)


def test_bernoulli_poissonian_matches_prg_in_law():
    seq = deterministic_capacities(figure1_model(), 400)
    k = ConnectionKernel.poissonian()
    a = [generate_prg(seq, s).edge_count for s in range(300)]
    b = [generate_bernoulli(seq, k, 10_000 + s).edge_count for s in range(300)]
    assert stats.ttest_ind(a, b).pvalue > 1e-3


@pytest.mark.parametrize("kernel", KERNELS, ids=lambda k: k.name)
def test_mean_edge_count(kernel):
    seq = deterministic_capacities(figure1_model(), 2000)
    x = np.outer(seq.values, seq.values) / seq.l_N
    p = kernel(x)
    expected = (p.sum() - np.trace(p)) / 2
    counts = np.array([generate(seq, kernel, s).edge_count for s in range(200)])
    se = counts.std(ddof=1) / np.sqrt(counts.size)
    assert abs(counts.mean() - expected) < 4 * se


def test_generation_is_deterministic():
    seq = deterministic_capacities(figure1_model(), 1000)
    for k in KERNELS:
        assert np.array_equal(generate(seq, k, 5).edges(), generate(seq, k, 5).edges())


def test_tiny_graphs():
    one = CapacitySequence(np.array([2.0]))
    for k in KERNELS:
        assert generate(one, k, 0).edge_count == 0
