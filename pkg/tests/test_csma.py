import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rncctl.csma import (ConflictGraph, CsmaChain, alpha_from_beta, beta_from_alpha,
                         enumerate_states, generator_matrix, hyperarc_rates_csma, p_sched_all,
                         p_sched_pair, p_sched_set, prob_all_idle, stationary)
from conftest import TABLE1


@st.composite
def graphs(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    pairs = [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1)]
    edges = [e for e in pairs if draw(st.booleans())]
    return ConflictGraph.from_edges(n, edges)


def is_independent(g, s):
    return all(not (s >> j & 1 and g.neighbors[j] & s) for j in range(g.n_nodes))


@given(graphs())
def test_states_are_exactly_independent_sets(g):
    states = enumerate_states(g)
    assert states[0] == 0
    assert len(set(states)) == len(states)
    brute = {s for s in range(1 << g.n_nodes) if is_independent(g, s)}
    assert set(states) == brute


def test_asymmetric_rejected():
    with pytest.raises(ValueError, match="asymmetric"):
        ConflictGraph.from_lists({1: [2], 2: []})
    with pytest.raises(ValueError):
        ConflictGraph.from_lists({1: [1]})


def test_table1_graph():
    g = ConflictGraph.from_lists(TABLE1)
    assert g.neighbor_lists() == TABLE1
    states = enumerate_states(g)
    # 1,2,4 pairwise non-adjacent
    assert 0b001011 in states


@given(graphs(), st.integers(0, 2 ** 32 - 1))
def test_global_balance(g, seed):
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.01, 2, g.n_nodes)
    mu = rng.uniform(0.5, 2, g.n_nodes)
    ch = CsmaChain.build(g, alpha, mu)
    G = generator_matrix(ch, alpha, mu)
    assert np.allclose(G.sum(axis=1), 0)
    assert np.abs(ch.Q @ G).max() <= 1e-10
    assert ch.Q.sum() == pytest.approx(1.0)


def brute_union(g, i, K, ch):
    """P(N_i* idle and some neighbor j in K has N_j* idle) by direct state scan."""
    tot = 0.0
    for s, q in zip(ch.states, ch.Q):
        idle = lambda X: all(not (s >> (u - 1) & 1) for u in X)
        ci = [i] + [u for u in range(1, g.n_nodes + 1) if g.neighbors[i - 1] >> (u - 1) & 1]
        if not idle(ci):
            continue
        ok = False
        for j in K:
            if not g.neighbors[i - 1] >> (j - 1) & 1:
                continue
            cj = [j] + [u for u in range(1, g.n_nodes + 1) if g.neighbors[j - 1] >> (u - 1) & 1]
            ok = ok or idle(cj)
        tot += q * ok
    return tot


@given(graphs(max_n=6), st.integers(0, 2 ** 32 - 1))
def test_psched_matches_brute_force(g, seed):
    rng = np.random.default_rng(seed)
    n = g.n_nodes
    ch = CsmaChain.build(g, rng.uniform(0.05, 1, n), 1.0)
    P = p_sched_all(ch)
    for i in range(1, n + 1):
        for K in range(1, 2 ** n):
            members = [j + 1 for j in range(n) if K >> j & 1]
            if i in members:
                continue
            b = brute_union(g, i, members, ch)
            assert p_sched_set(i, members, ch) == pytest.approx(b, abs=1e-14)
            assert P[i - 1, K - 1] == pytest.approx(b, abs=1e-14)


def test_pair_probability_and_idle():
    g = ConflictGraph.from_edges(2, [(1, 2)])
    ch = CsmaChain.build(g, [1.0, 1.0], [1.0, 1.0])
    # states {}, {1}, {2} equally likely
    assert prob_all_idle([1], ch) == pytest.approx(2 / 3)
    assert p_sched_pair(1, 2, ch) == pytest.approx(1 / 3)
    assert p_sched_pair(1, 1, ch) == 0.0


def test_rates_and_beta_mapping():
    g = ConflictGraph.from_lists(TABLE1)
    b = np.full(6, 4.0)
    a = alpha_from_beta(b)
    assert a[0] == pytest.approx(np.exp(4) / 1000)
    assert np.allclose(beta_from_alpha(a), b)
    z = hyperarc_rates_csma(a, 1.25, g).reshape(6, 63)
    assert np.all(z >= 0) and np.all(z <= a[:, None] + 1e-15)
    # node 1 cannot reach node 2 (not neighbors)
    assert z[0, 0b10 - 1] == 0.0


def test_stationary_rejects_nonpositive():
    with pytest.raises(ValueError):
        stationary([0, 1], [0.0])
