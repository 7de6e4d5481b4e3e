"""Command-line runner: ``rncctl <subcommand> SCENARIO [flags]``.

Every run writes its CSV outputs plus ``manifest.json`` (scenario hash, seed,
flags, library versions, kernel backend) into ``--out``.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import _core, __version__
from .control import min_throughput_curve, run_centralized
from .dynamics import integrate, min_cut, steady_slope
from .online.control import run_online
from .online.sim import mean_rank_traces
from .scenario import ScenarioError, bundled_names, load

COMMANDS = ("solve", "mincut", "control-power", "control-csma", "online-power",
            "online-csma", "validate")


class CliError(Exception):
    pass


def _versions() -> dict:
    import scipy
    import yaml
    return {"rncctl": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "pyyaml": yaml.__version__}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rncctl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("scenario", nargs="?", help="scenario file or bundled name")
        sp.add_argument("--scenario", dest="scenario_opt", metavar="PATH")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--t-end", type=float, default=None, metavar="MS")
        sp.add_argument("--dt", type=float, default=None, metavar="MS")
        sp.add_argument("--out", default=None, metavar="DIR")
        sp.add_argument("--sweep", type=int, default=None, metavar="N",
                        help="run seeds seed..seed+N-1 in parallel workers")
        if name == "mincut":
            sp.add_argument("--dest", type=int, default=None)
        if name.startswith("online"):
            sp.add_argument("--events", action="store_true",
                            help="also write a gzip CSV event log")
        if name == "validate":
            sp.add_argument("--seeds", type=int, default=20)
            sp.add_argument("--m", type=int, default=None, help="override session size")
    sub.add_parser("list", help="list bundled scenarios")
    return p


def _load(args):
    name = args.scenario_opt or args.scenario
    if not name:
        raise CliError("no scenario given")
    return load(name)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _run_one(command: str, args: argparse.Namespace, seed: int, out: Path) -> dict:
    sc = _load(args)
    out.mkdir(parents=True, exist_ok=True)
    run = sc.run
    dt = args.dt if args.dt is not None else run.get("dt", 0.1)
    sample = run.get("sample", 10.0)
    summary: dict = {}

    if command == "solve":
        t_end = args.t_end if args.t_end is not None else run.get("t_end", 10_000.0)
        traj = integrate(sc.net, sc.provider(), sc.provider_input(), t_end=t_end, dt=dt,
                         sample=sample)
        traj.to_csv(out / "trajectory.csv")
        z = sc.provider()(0.0, sc.provider_input())
        for d in sc.net.destinations:
            try:
                slope = steady_slope(traj, d)
            except ValueError:
                slope = float("nan")
            summary[f"node_{d}"] = {"slope": slope,
                                    "min_cut": min_cut(z, sc.net.n_nodes, sc.net.source, d),
                                    "completion_ms": traj.completion_time(d)}
            print(f"node {d}: slope {slope:.6g} pkt/ms, min cut "
                  f"{summary[f'node_{d}']['min_cut']:.6g}")

    elif command == "mincut":
        z = sc.provider()(0.0, sc.provider_input())
        dests = [args.dest] if args.dest else list(sc.net.destinations)
        for d in dests:
            if not 1 <= d <= sc.net.n_nodes or d == sc.net.source:
                raise CliError(f"invalid destination {d}")
            c = min_cut(z, sc.net.n_nodes, sc.net.source, d)
            summary[f"node_{d}"] = c
            print(f"{c:.6g}" if args.dest else f"node {d}: {c:.6g}")

    elif command.startswith("control"):
        want = "phy" if command == "control-power" else "csma"
        if sc.model != want:
            raise CliError(f"{command} needs a {want} scenario, got {sc.model}")
        t_end = args.t_end if args.t_end is not None else sc.control.get(
            "t_end", run.get("t_end", 10_000.0))
        cfg = sc.control_config()
        traj, trace = run_centralized(sc.net, sc.provider(), cfg, sc.initial_resources(),
                                      t_end=t_end, dt=dt)
        traj.to_csv(out / "trajectory.csv")
        trace.to_csv(out / "resource.csv")
        curve = min_throughput_curve(traj)
        fin = curve[np.isfinite(curve)]
        z0 = sc.provider()(0.0, sc.provider_input())
        c0 = min(min_cut(z0, sc.net.n_nodes, sc.net.source, d) for d in sc.net.destinations)
        summary = {"initial_min_cut": c0, "final_min_throughput": float(fin[-1]),
                   "final_resources": trace.r[-1].tolist()}
        print(f"min cut at initial resources {c0:.4g} pkt/ms, "
              f"controlled min throughput at end {fin[-1]:.4g} pkt/ms")

    elif command.startswith("online"):
        want = "phy" if command == "online-power" else "csma"
        if sc.model != want:
            raise CliError(f"{command} needs a {want} scenario, got {sc.model}")
        t_end = args.t_end if args.t_end is not None else sc.online.get(
            "t_end", run.get("t_end", 10_000.0))
        tr, sim = run_online(sc.online_net(), sc.channel(), sc.online_config(), seed, t_end,
                             sample=sample, record_events=args.events)
        tr.to_csv(out / "resource.csv")
        t, R = tr.ranks
        with open(out / "trajectory.csv", "w") as fh:
            fh.write(",".join(["t"] + [f"V_{d}" for d in sc.net.destinations]) + "\n")
            for k in range(len(t)):
                row = [repr(float(t[k]))] + [str(int(R[k, d - 1])) for d in sc.net.destinations]
                fh.write(",".join(row) + "\n")
        if args.events:
            sim.write_events(out / "events.csv.gz")
        T = tr.min_throughput()
        T = T[np.isfinite(T)]
        summary = {"intervals": len(tr.T), "first_T": float(T[0]) if T.size else None,
                   "last_T": float(T[-1]) if T.size else None,
                   "final_resources": tr.resources[-1].tolist()}
        print(f"measured min throughput {summary['first_T']:.4g} -> {summary['last_T']:.4g}"
              f" pkt/ms over {len(tr.T)} intervals")

    elif command == "validate":
        net = sc.net
        if args.m:
            from .nodeset import NetworkSpec
            net = NetworkSpec(net.n_nodes, net.source, net.destinations, args.m, net.q, net.rates)
        t_end = args.t_end if args.t_end is not None else run.get("t_end", 10_000.0)
        seeds = range(seed, seed + args.seeds)
        grid, mean = mean_rank_traces(net, sc.channel, seeds, t_end, sample)
        traj = integrate(net, sc.provider(), sc.provider_input(), t_end=t_end, dt=dt,
                         sample=sample, stop_when_done=False)
        de = traj.dest_ranks()
        n = min(len(grid), len(de))
        sim_d = mean[:n][:, [d - 1 for d in net.destinations]]
        dev = np.abs(sim_d - de[:n]).max(axis=0)
        with open(out / "trajectory.csv", "w") as fh:
            fh.write(",".join(["t"] + [f"sim_V_{d}" for d in net.destinations]
                              + [f"de_V_{d}" for d in net.destinations]) + "\n")
            for k in range(n):
                fh.write(",".join([repr(float(grid[k]))] + [repr(float(x)) for x in sim_d[k]]
                                  + [repr(float(x)) for x in de[k]]) + "\n")
        summary = {f"node_{d}": {"sup_dev": float(v), "sup_dev_frac_m": float(v / net.m)}
                   for d, v in zip(net.destinations, dev)}
        for d, v in zip(net.destinations, dev):
            print(f"node {d}: sup |mean sim - DE| = {v:.4g} ({100 * v / net.m:.2f}% of m)")

    manifest = {"command": command, "scenario": sc.name, "scenario_sha256": sc.digest(),
                "scenario_document": sc.to_dict(), "seed": seed,
                "flags": {"t_end": args.t_end, "dt": args.dt},
                "versions": _versions(), "backend": _core.BACKEND,
                "simd": _core.SIMD_LEVEL, "summary": summary}
    _write_json(out / "manifest.json", manifest)
    return summary


def _sweep_worker(payload):
    command, ns, seed, out = payload
    return seed, _run_one(command, argparse.Namespace(**ns), seed, Path(out))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        for n in bundled_names():
            print(n)
        return 0
    try:
        sc = _load(args)
        seed = args.seed if args.seed is not None else int(sc.run.get("seed", 0))
        out = Path(args.out or f"runs/{sc.name}/{args.command}")
        t0 = time.perf_counter()
        if args.sweep:
            if args.sweep < 1:
                raise CliError("--sweep needs N >= 1")
            ns = {k: v for k, v in vars(args).items()}
            jobs = [(args.command, ns, s, str(out / f"seed-{s}"))
                    for s in range(seed, seed + args.sweep)]
            with ProcessPoolExecutor() as pool:
                for s, _ in pool.map(_sweep_worker, jobs):
                    print(f"seed {s} done")
        else:
            _run_one(args.command, args, seed, out)
        print(f"wrote {out} ({time.perf_counter() - t0:.2f} s)", file=sys.stderr)
        return 0
    except ScenarioError as exc:
        err = {"error": "scenario", "message": exc.msg, "file": exc.source, "line": exc.line}
        code = 2
    except (CliError, ValueError, FloatingPointError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        code = 1
    print(json.dumps(err), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
