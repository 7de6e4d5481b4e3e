"""Scenario files: YAML documents describing one network and how to run it.

Layout (``schema_version: 1``)::

    name: example
    network: {n_nodes, source, destinations, m, q, rates}
    links | phy | csma: exactly one rate-model section
    control: centralized controller settings (optional)
    online: online controller settings (optional)
    run: {seed, t_end, dt, sample}

Errors carry the line of the offending node in the source document.
"""

from __future__ import annotations

import copy
import hashlib
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .control import ControlConfig
from .csma import ConflictGraph
from .dynamics import ConstantRates, CsmaRates, PhyRates
from .nodeset import NetworkSpec
from .online.control import OnlineConfig
from .online.sim import CsmaChannel, LinkChannel, PhyChannel
from .phy import Geometry, PhyParams, hyperarc_rates_from_links

SCHEMA_VERSION = 1
MODELS = ("links", "phy", "csma")

_KEYS = {
    None: {"schema_version", "name", "description", "network", "links", "phy", "csma",
           "control", "online", "run"},
    "network": {"n_nodes", "source", "destinations", "m", "q", "rates"},
    "links": {"probabilities"},
    "phy": {"coordinates", "params", "initial_power_dbm"},
    "phy.params": {"freq_mhz", "pl_exponent", "floor_factor_db", "noise_w", "proc_gain",
                   "packet_bits", "p_max_dbm"},
    "csma": {"neighbors", "mu", "initial_beta"},
    "control": {"gain", "dv", "refresh", "lower", "upper", "t_end"},
    "online": {"interval", "tail", "gain", "gamma", "norm_threshold", "freeze_threshold",
               "first_step", "lower", "upper", "m", "t_end"},
    "run": {"seed", "t_end", "dt", "sample"},
}
_REQUIRED = {None: {"schema_version", "network"},
             "network": {"n_nodes", "source", "destinations", "m"},
             "links": {"probabilities"}, "phy": {"coordinates"}, "csma": {"neighbors", "mu"}}


class ScenarioError(ValueError):
    """Invalid scenario document; ``line`` is 1-based when known."""

    def __init__(self, msg: str, line: int | None = None, source: str | None = None):
        self.msg, self.line, self.source = msg, line, source
        where = source or "<scenario>"
        super().__init__(f"{where}:{line}: {msg}" if line else f"{where}: {msg}")


@dataclass
class Scenario:
    name: str
    net: NetworkSpec
    model: str
    links: np.ndarray | None = None          # links model: P[i, j], 0-based
    geometry: Geometry | None = None
    phy: PhyParams | None = None
    initial_power: float = 13.0
    graph: ConflictGraph | None = None
    mu: float = 1.0
    initial_beta: float = 4.0
    control: dict = field(default_factory=dict)
    online: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    description: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    # rate models -----------------------------------------------------------

    def provider(self):
        if self.model == "links":
            return ConstantRates(hyperarc_rates_from_links(self.links, self.net.rates))
        if self.model == "phy":
            return PhyRates(self.geometry, self.phy, self.net)
        return CsmaRates(self.graph, self.mu, self.net)

    def initial_resources(self) -> np.ndarray | None:
        n = self.net.n_nodes
        if self.model == "phy":
            return np.full(n, float(self.initial_power))
        if self.model == "csma":
            return np.full(n, float(self.initial_beta))
        return None

    def provider_input(self, r=None):
        """Resource vector in the units the provider expects (alpha for CSMA)."""
        from .csma import alpha_from_beta
        r = self.initial_resources() if r is None else r
        if self.model == "csma":
            return alpha_from_beta(r)
        return r

    def channel(self, r=None):
        """Packet-simulator channel at resources ``r`` (dBm or beta)."""
        from .csma import alpha_from_beta
        r = self.initial_resources() if r is None else np.asarray(r, dtype=float)
        if self.model == "links":
            return LinkChannel(self.links, self.net.rates)
        if self.model == "phy":
            return PhyChannel(self.geometry, self.phy, self.net.rates, r)
        return CsmaChannel(self.graph, self.mu, alpha_from_beta(r))

    # controller settings ----------------------------------------------------

    def control_config(self, **override) -> ControlConfig:
        kind = self._resource_kind()
        d = {"kind": kind}
        if kind == "power":
            d.update(lower=0.0, upper=self.phy.p_max_dbm)
        else:
            d.update(lower=3.0, upper=6.5, dv=0.05)
        d.update({k: v for k, v in self.control.items() if k != "t_end"})
        d.update(override)
        return ControlConfig(**_tuplify(d))

    def online_config(self, **override) -> OnlineConfig:
        kind = self._resource_kind()
        d = {"kind": kind, "init": float(self.initial_resources()[0])}
        if kind == "power":
            d.update(lower=0.0, upper=self.phy.p_max_dbm,
                     freeze_threshold=0.95 * float(min(self.net.rates)))
        else:
            d.update(lower=3.0, upper=6.5, interval=500.0, freeze_threshold=math.inf)
        d.update({k: v for k, v in self.online.items() if k not in ("m", "t_end")})
        d.update(override)
        return OnlineConfig(**_tuplify(d))

    def online_net(self) -> NetworkSpec:
        """Network used for online runs; ``online.m`` may override the session size."""
        m = self.online.get("m")
        if m is None:
            return self.net
        n = self.net
        return NetworkSpec(n.n_nodes, n.source, n.destinations, int(m), n.q, n.rates)

    def _resource_kind(self) -> str:
        if self.model == "phy":
            return "power"
        if self.model == "csma":
            return "csma"
        raise ScenarioError(f"scenario {self.name!r} has no controllable resource (links model)")

    # serialization -----------------------------------------------------------

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def digest(self) -> str:
        """sha256 of the canonical serialized form."""
        return hashlib.sha256(yaml.safe_dump(self.to_dict(), sort_keys=True).encode()).hexdigest()


def _tuplify(d):
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


# parsing ---------------------------------------------------------------------


def _line(node) -> int | None:
    return node.start_mark.line + 1 if node is not None else None


def _lookup(node: yaml.MappingNode, key: str):
    for k, v in node.value:
        if k.value == key:
            return v
    return None


class _Ctx:
    def __init__(self, root, source):
        self.root, self.source = root, source

    def node(self, *path):
        cur = self.root
        for p in path:
            if cur is None:
                return None
            if isinstance(cur, yaml.MappingNode):
                cur = _lookup(cur, str(p))
            elif isinstance(cur, yaml.SequenceNode) and isinstance(p, int) and p < len(cur.value):
                cur = cur.value[p]
            else:
                return None
        return cur

    def fail(self, msg, *path):
        node = self.node(*path)
        while node is None and path:
            path = path[:-1]
            node = self.node(*path)
        raise ScenarioError(msg, _line(node), self.source)


def load_text(text: str, source: str = "<string>") -> Scenario:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                            mark.line + 1 if mark else None, source) from None
    if not isinstance(data, dict):
        raise ScenarioError("top level must be a mapping", 1, source)
    return _build(data, _Ctx(root, source))


def load(path: str | Path) -> Scenario:
    """Parse a scenario file, or the bundled scenario of that name."""
    p = Path(path)
    if not p.exists():
        bundled = bundled_path(str(path))
        if bundled is None:
            raise ScenarioError(f"no such scenario file or bundled scenario: {path}")
        p = bundled
    return load_text(p.read_text(), str(p))


def bundled_names() -> list[str]:
    root = resources.files("rncctl") / "scenarios"
    return sorted(f.name[:-5] for f in root.iterdir() if f.name.endswith(".yaml"))


def bundled_path(name: str) -> Path | None:
    name = name[:-5] if name.endswith(".yaml") else name
    f = resources.files("rncctl") / "scenarios" / f"{name}.yaml"
    return Path(str(f)) if f.is_file() else None


def _check_keys(d, section, ctx, path):
    if not isinstance(d, dict):
        ctx.fail(f"section '{section or 'top'}' must be a mapping", *path)
    allowed = _KEYS[section]
    for k in d:
        if k not in allowed:
            ctx.fail(f"unknown key '{k}' in {section or 'top level'}", *path, k)
    for k in sorted(_REQUIRED.get(section, ())):
        if k not in d:
            ctx.fail(f"missing required key '{k}' in {section or 'top level'}", *path)


def _num(v, what, ctx, path, integer=False, positive=False, nonneg=False):
    ok = isinstance(v, (int, float)) and not isinstance(v, bool)
    if integer:
        ok = ok and float(v).is_integer()
    if not ok:
        ctx.fail(f"{what} must be {'an integer' if integer else 'a number'}, got {v!r}", *path)
    v = int(v) if integer else float(v)
    if positive and not v > 0:
        ctx.fail(f"{what} must be positive", *path)
    if nonneg and v < 0:
        ctx.fail(f"{what} must be nonnegative", *path)
    return v


def _build(d: dict, ctx: _Ctx) -> Scenario:
    _check_keys(d, None, ctx, ())
    ver = d["schema_version"]
    if ver != SCHEMA_VERSION:
        ctx.fail(f"unsupported schema_version {ver!r} (expected {SCHEMA_VERSION})", "schema_version")
    present = [m for m in MODELS if m in d]
    if len(present) != 1:
        ctx.fail(f"exactly one of {', '.join(MODELS)} is required, found {present or 'none'}")
    model = present[0]

    nd = d["network"]
    _check_keys(nd, "network", ctx, ("network",))
    n = _num(nd["n_nodes"], "n_nodes", ctx, ("network", "n_nodes"), integer=True, positive=True)
    dests = nd["destinations"]
    if not isinstance(dests, list):
        ctx.fail("destinations must be a list", "network", "destinations")
    rates = nd.get("rates", [1.0] * n)
    if not isinstance(rates, list) or len(rates) != n:
        ctx.fail(f"rates must be a list of {n} numbers", "network", "rates")
    rates = [_num(r, "rate", ctx, ("network", "rates", k), nonneg=True)
             for k, r in enumerate(rates)]
    try:
        net = NetworkSpec(n, _num(nd["source"], "source", ctx, ("network", "source"), integer=True),
                          tuple(_num(x, "destination", ctx, ("network", "destinations", k),
                                     integer=True) for k, x in enumerate(dests)),
                          _num(nd["m"], "m", ctx, ("network", "m"), integer=True),
                          _num(nd.get("q", 256), "q", ctx, ("network", "q"), integer=True),
                          tuple(rates))
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        ctx.fail(str(exc), "network")

    sc = Scenario(name=str(d.get("name", "unnamed")), net=net, model=model,
                  description=str(d.get("description", "")), raw=copy.deepcopy(d))
    sec = d[model]
    _check_keys(sec, model, ctx, (model,))

    if model == "links":
        P = np.zeros((n, n))
        plist = sec["probabilities"]
        if not isinstance(plist, list):
            ctx.fail("probabilities must be a list of [i, j, p] triples", "links", "probabilities")
        for k, item in enumerate(plist):
            path = ("links", "probabilities", k)
            if not (isinstance(item, list) and len(item) == 3):
                ctx.fail("each probability entry must be [i, j, p]", *path)
            i = _num(item[0], "node id", ctx, path, integer=True)
            j = _num(item[1], "node id", ctx, path, integer=True)
            p = _num(item[2], "probability", ctx, path)
            if not (1 <= i <= n and 1 <= j <= n) or i == j:
                ctx.fail(f"link ({i}, {j}) references a missing node or is a self-loop", *path)
            if not 0 <= p <= 1:
                ctx.fail(f"probability {p} outside [0, 1]", *path)
            P[i - 1, j - 1] = p
        sc.links = P

    elif model == "phy":
        params = sec.get("params", {})
        _check_keys(params, "phy.params", ctx, ("phy", "params"))
        vals = {k: _num(v, k, ctx, ("phy", "params", k), positive=k != "p_max_dbm")
                for k, v in params.items()}
        for k in ("proc_gain", "packet_bits"):
            if k in vals:
                vals[k] = int(vals[k])
        sc.phy = PhyParams(**vals)
        xy = sec["coordinates"]
        if not (isinstance(xy, list) and len(xy) == n):
            ctx.fail(f"coordinates must list {n} points", "phy", "coordinates")
        pts = []
        for k, pt in enumerate(xy):
            if not (isinstance(pt, list) and len(pt) == 2):
                ctx.fail("each coordinate must be [x, y] in meters", "phy", "coordinates", k)
            pts.append([_num(c, "coordinate", ctx, ("phy", "coordinates", k)) for c in pt])
        try:
            sc.geometry = Geometry.from_coordinates(np.array(pts), sc.phy)
        except ValueError as exc:
            ctx.fail(str(exc), "phy", "coordinates")
        sc.initial_power = _num(sec.get("initial_power_dbm", 13.0), "initial_power_dbm", ctx,
                                ("phy", "initial_power_dbm"))

    else:
        nb = sec["neighbors"]
        if not isinstance(nb, dict):
            ctx.fail("neighbors must map node id to a list of neighbors", "csma", "neighbors")
        lists = {}
        for key, lst in nb.items():
            path = ("csma", "neighbors", key)
            i = _num(key, "node id", ctx, path, integer=True)
            if not 1 <= i <= n:
                ctx.fail(f"neighbor list for missing node {i}", *path)
            if not isinstance(lst, list):
                ctx.fail("neighbor list must be a list", *path)
            ids = [_num(x, "node id", ctx, path, integer=True) for x in lst]
            for j in ids:
                if not 1 <= j <= n or j == i:
                    ctx.fail(f"node {i} lists invalid neighbor {j}", *path)
            lists[i] = ids
        for i, ids in lists.items():
            for j in ids:
                if i not in lists.get(j, []):
                    ctx.fail(f"asymmetric neighbor lists: {j} in N_{i} but {i} not in N_{j}",
                             "csma", "neighbors", j if j in lists else i)
        sc.graph = ConflictGraph.from_lists([lists.get(i, []) for i in range(1, n + 1)])
        sc.mu = _num(sec["mu"], "mu", ctx, ("csma", "mu"), positive=True)
        sc.initial_beta = _num(sec.get("initial_beta", 4.0), "initial_beta", ctx,
                               ("csma", "initial_beta"))

    for section in ("control", "online", "run"):
        if section in d:
            _check_keys(d[section], section, ctx, (section,))
            vals = {}
            for k, v in d[section].items():
                path = (section, k)
                if isinstance(v, list):
                    vals[k] = [_num(x, k, ctx, path) for x in v]
                elif k == "seed":
                    vals[k] = _num(v, k, ctx, path, integer=True, nonneg=True)
                elif v == ".inf" or v == float("inf"):
                    vals[k] = math.inf
                else:
                    vals[k] = _num(v, k, ctx, path)
            setattr(sc, section, vals)
    # surface bad controller settings at parse time
    try:
        if model != "links":
            if "control" in d:
                sc.control_config()
            if "online" in d:
                sc.online_config()
    except ValueError as exc:
        ctx.fail(str(exc), "control" if "control" in d else "online")
    return sc
