import numpy as np
import pytest
from hypothesis import given, strategies as st

from rncctl.csma import ConflictGraph, alpha_from_beta
from rncctl.nodeset import NetworkSpec
from rncctl.online.control import (OnlineConfig, apply_alpha_update, apply_power_update,
                                   broyden_update, measure_zprime, online_gradient, pair_list,
                                   run_online, selector)
from rncctl.online.sim import CsmaChannel, LinkChannel, PhyChannel
from rncctl.phy import Geometry, PhyParams


def test_pairs_and_measurement():
    assert pair_list(3) == [(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)]
    c = np.zeros((3, 3))
    assert np.all(measure_zprime(c, 150.0) == 0)
    c[0, 1] = 30
    assert measure_zprime(c, 150.0)[0] == pytest.approx(0.2)
    with pytest.raises(ValueError):
        measure_zprime(c, 0.0)


@given(st.integers(0, 2 ** 32 - 1))
def test_broyden_secant(seed):
    rng = np.random.default_rng(seed)
    J = rng.normal(size=(6, 3))
    dz, dr = rng.normal(size=6), rng.normal(size=3)
    J2 = broyden_update(J, dz, dr)
    assert np.allclose(J2 @ dr, dz, atol=1e-12)


def test_broyden_reductions():
    J = np.arange(6.0).reshape(3, 2)
    dr = np.array([0.5, -1.0])
    assert np.array_equal(broyden_update(J, J @ dr, dr), J)
    dz = np.array([1.0, 2.0, 3.0])
    assert np.allclose(broyden_update(np.zeros((3, 2)), dz, dr), np.outer(dz, dr) / (dr @ dr))
    # skip rule
    assert np.array_equal(broyden_update(J, dz, np.array([1e-12, 0.0])), J)
    with pytest.raises(ValueError):
        broyden_update(J, dz, np.array([np.nan, 0.0]))


def test_gradient_selector():
    n = 3
    J = np.zeros((6, 3))
    assert np.all(online_gradient(2, J, n) == 0)
    row = pair_list(n).index((1, 2))
    J[row] = [0.1, 0.2, -0.1]
    assert np.allclose(online_gradient(2, J, n), [0.1, 0.2, -0.1])
    J[row] = [10.0, 0, 0]
    assert np.linalg.norm(online_gradient(2, J, n, threshold=1.0)) == pytest.approx(1.0)
    assert selector(2, n).tolist() == [1, 0, 0, 0, 0, 1]


def test_power_step_rule():
    P = np.array([13.0, 13.0, 19.9, 0.1])
    out = apply_power_update(P, [0.0, 0.4, 1.0, -1.0], 1.0, 0.2, 0.0, 20.0)
    assert np.allclose(out, [13.0, 13.2, 20.0, 0.0])
    assert apply_power_update([10.0], [0.1], 1.0, 0.2, 0, 20)[0] == 10.0
    with pytest.raises(ValueError):
        apply_power_update(P, np.zeros(4), 1.0, 0.0, 0, 20)


def test_alpha_step_rule():
    a = alpha_from_beta(np.array([4.0, 4.0, 6.4]))
    out = apply_alpha_update(a, [0.0, 0.01, 1.0], 1.0, 3.0, 6.5)
    assert out[0] == a[0]
    assert out[1] == pytest.approx(a[1] + 0.01)
    assert out[2] == pytest.approx(np.exp(6.5) / 1000)


def _phy_case():
    phy = PhyParams()
    geo = Geometry.from_coordinates([[0, 0], [41, 3], [18, 0], [29, -18], [32, 6], [18, 8]], phy)
    net = NetworkSpec(6, 1, (4, 5, 6), 300)
    return net, lambda: PhyChannel(geo, phy, np.ones(6), np.full(6, 13.0))


def test_threshold_zero_freezes_after_first_interval():
    net, ch = _phy_case()
    cfg = OnlineConfig(kind="power", gain=100.0, freeze_threshold=0.0)
    tr, _ = run_online(net, ch(), cfg, 1, 900)
    R = np.array(tr.resources)
    assert np.all(R[2:] == R[1])
    assert all(tr.frozen[1:])


def test_online_deterministic_by_seed():
    net, ch = _phy_case()
    cfg = OnlineConfig(kind="power", gain=100.0)
    a, _ = run_online(net, ch(), cfg, 7, 900)
    b, _ = run_online(net, ch(), cfg, 7, 900)
    assert np.array_equal(np.array(a.resources), np.array(b.resources))
    assert a.T == b.T or np.allclose(a.T, b.T, equal_nan=True)


def test_online_csma_respects_bounds(tmp_path):
    g = ConflictGraph.from_edges(4, [(1, 2), (2, 3), (3, 4)])
    net = NetworkSpec(4, 1, (4,), 200)
    ch = CsmaChannel(g, 1.25, alpha_from_beta(np.full(4, 4.0)))
    cfg = OnlineConfig(kind="csma", interval=500, gain=1.0, init=4.0, lower=3, upper=6.5,
                       freeze_threshold=np.inf)
    tr, _ = run_online(net, ch, cfg, 0, 3000)
    R = np.array(tr.resources)
    assert R.min() >= 3 and R.max() <= 6.5
    tr.to_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().startswith("t,T,k,frozen,thr_4,beta_1")


def test_kind_mismatch_and_config_errors():
    net = NetworkSpec(2, 1, (2,), 10)
    with pytest.raises(ValueError):
        run_online(net, LinkChannel([[0, 1], [0, 0]], [1, 1]),
                   OnlineConfig(kind="csma"), 0, 100)
    with pytest.raises(ValueError):
        OnlineConfig(tail=200, interval=150)
    with pytest.raises(ValueError):
        OnlineConfig(kind="x")
