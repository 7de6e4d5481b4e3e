import numpy as np
import pytest

from rncctl.dynamics import min_cut
from rncctl.scenario import ScenarioError, bundled_names, load, load_text

BASE = """schema_version: 1
name: t
network:
  n_nodes: 3
  source: 1
  destinations: [3]
  m: 10
"""


def test_bundled_parse_and_roundtrip():
    assert set(bundled_names()) >= {"example1-4node", "sixnode-phy-canonical",
                                     "sixnode-csma-table1"}
    for name in bundled_names():
        sc = load(name)
        again = load_text(sc.dumps())
        assert again.to_dict() == sc.to_dict()
        assert again.digest() == sc.digest()


def test_example_min_cut():
    sc = load("example1-4node")
    z = sc.provider()(0.0, None)
    assert min_cut(z, 4, 1, 2) == pytest.approx(0.2)
    assert min_cut(z, 4, 1, 4) == pytest.approx(0.52)


def test_canonical_geometry_static_below_half():
    sc = load("sixnode-phy-canonical")
    z = sc.provider()(0.0, sc.initial_resources())
    cuts = [min_cut(z, 6, 1, d) for d in (4, 5, 6)]
    assert max(cuts) < 0.5 and len({round(c, 6) for c in cuts}) > 1


def test_asymmetric_neighbors_line():
    text = BASE + """csma:
  mu: 1.0
  neighbors:
    1: [2]
    2: [3]
    3: [2]
"""
    with pytest.raises(ScenarioError, match="asymmetric") as e:
        load_text(text)
    assert e.value.line is not None and e.value.line >= 12


def test_unknown_key_has_line():
    text = BASE + "links:\n  probabilities: [[1, 2, 0.5]]\n  extra: 1\n"
    with pytest.raises(ScenarioError, match="unknown key 'extra'") as e:
        load_text(text)
    assert e.value.line == 10


@pytest.mark.parametrize("text,msg", [
    (BASE, "exactly one of"),
    (BASE + "links:\n  probabilities: [[1, 2, 0.5]]\ncsma:\n  mu: 1\n  neighbors: {}\n",
     "exactly one of"),
    (BASE.replace("schema_version: 1", "schema_version: 9") + "links:\n  probabilities: []\n",
     "schema_version"),
    (BASE + "links:\n  probabilities: [[1, 4, 0.5]]\n", "missing node"),
    (BASE + "links:\n  probabilities: [[1, 2, 1.5]]\n", "outside"),
    (BASE.replace("  m: 10\n", "") + "links:\n  probabilities: []\n", "missing required key 'm'"),
    (BASE + "phy:\n  coordinates: [[0, 0], [1, 1]]\n", "coordinates must list 3"),
    ("- a\n- b\n", "top level"),
    ("a: [1, 2\n", "malformed YAML"),
])
def test_rejections(text, msg):
    with pytest.raises(ScenarioError, match=msg):
        load_text(text)


def test_missing_file():
    with pytest.raises(ScenarioError):
        load("/nonexistent/file.yaml")


def test_config_builders():
    sc = load("sixnode-csma-table1")
    c = sc.control_config()
    assert c.kind == "csma" and c.lower == 3.0
    o = sc.online_config()
    assert o.kind == "csma" and np.isinf(o.freeze_threshold)
    assert sc.online_net().m >= sc.net.m
    with pytest.raises(ScenarioError):
        load("example1-4node").control_config()
