import numpy as np
import pytest
from hypothesis import given, strategies as st

from rncctl.nodeset import (InvalidRankState, NetworkSpec, NodeSet, check_rank_state,
                            init_rank_state, n_subsets, subset_index, subset_of)


@given(st.sets(st.integers(1, 12), min_size=1))
def test_index_roundtrip(nodes):
    idx = subset_index(nodes)
    assert 1 <= idx <= n_subsets(12)
    assert set(subset_of(idx)) == nodes


def test_ordering_and_errors():
    assert [subset_index(s) for s in ({1}, {2}, {1, 2}, {3})] == [1, 2, 3, 4]
    with pytest.raises(ValueError, match="empty subset"):
        subset_index([])
    with pytest.raises(ValueError):
        NodeSet.of([0])


def test_set_algebra():
    a, b = NodeSet.of([1, 3]), NodeSet.of([3, 4])
    assert set(a | b) == {1, 3, 4}
    assert set(a & b) == {3}
    assert set(a - b) == {1}
    assert len(a.add(2)) == 3 and 2 not in a


def test_network_validation():
    net = NetworkSpec(4, 1, (4, 2, 2), 10)
    assert net.destinations == (2, 4) and net.rates == (1.0,) * 4
    for bad in [dict(source=5), dict(destinations=()), dict(m=0), dict(rates=(1, 1))]:
        kw = dict(n_nodes=4, source=1, destinations=(2,), m=10) | bad
        with pytest.raises(ValueError):
            NetworkSpec(**kw)
    with pytest.raises(ValueError):
        NetworkSpec(13, 1, (2,), 10)


def test_initial_state_source_sets_full():
    net = NetworkSpec(3, 2, (1, 3), 7)
    s = init_rank_state(net)
    assert s.rank([2]) == 7 and s.rank([1, 2]) == 7 and s.rank([1, 3]) == 0
    check_rank_state(s.V, 3, 7)
    with pytest.raises(ValueError):
        s.V[0] = 1.0


def test_invalid_states_rejected():
    V = np.zeros(3)
    V[0] = 2.0          # V_{1} > V_{1,2}
    with pytest.raises(InvalidRankState, match="invalid rank state"):
        check_rank_state(V, 2, 5)
    with pytest.raises(InvalidRankState):
        check_rank_state(np.array([0, 0, 6.0]), 2, 5)
    with pytest.raises(InvalidRankState):
        check_rank_state(np.array([0, np.nan, 1.0]), 2, 5)
