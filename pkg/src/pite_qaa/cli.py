"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields

from .runner import MODES, ExperimentConfig, run, run_cost_sweep, write_cost_csv


def _m_schedule(text: str) -> tuple:
    try:
        vals = tuple(int(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad repetition list {text!r}") from None
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("repetition counts must be non-negative integers")
    return vals


def _experiment_args(p: argparse.ArgumentParser, kind: str):
    if kind == "maxcut":
        p.add_argument("--graph", metavar="FILE", help="edge list, 'i j weight' per line")
    else:
        p.add_argument("--qubits", type=int, metavar="N", help="grid qubits (default 6)")
    p.add_argument("--mode", choices=MODES)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=float, metavar="G")
    g.add_argument("--auto-gamma", action="store_true", help="calibrate gamma* (default outside pite mode)")
    t = p.add_mutually_exclusive_group()
    t.add_argument("--dtau", type=float, metavar="T")
    t.add_argument("--auto-dtau", action="store_true", help="derive dtau from the rotation-angle bound")
    p.add_argument("--steps", type=int, metavar="K")
    p.add_argument("--m-schedule", type=_m_schedule, metavar="LIST", help="e.g. 1,1,2")
    p.add_argument("--e0", type=float, help="energy shift (max-cut default centres the spectrum)")
    p.add_argument("--config", metavar="FILE", help="key=value file; flags override it")
    p.add_argument("--out", metavar="PATH", help="writes PATH.csv and PATH.json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pite-qaa", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in ("maxcut", "harmonic"):
        _experiment_args(sub.add_parser(kind, help=f"run the {kind} experiment"), kind)
    cost = sub.add_parser("cost", help="gate-count sweep of the QAA building blocks")
    cost.add_argument("--kind", choices=("ising", "harmonic"), default="ising")
    cost.add_argument("--qubits", default="2-8", metavar="RANGE", help="e.g. 2-8 or 3,5,7")
    cost.add_argument("--out", metavar="PATH")
    cal = sub.add_parser("calibrate", help="self-consistent dtau and gamma*")
    cal.add_argument("--graph", metavar="FILE")
    cal.add_argument("--m-target", type=int, default=1)
    cal.add_argument("--branch", type=int, default=0)
    cal.add_argument("--dtau", type=float, help="hold dtau fixed and solve gamma* only")
    cal.add_argument("--e0", type=float, help="energy shift (default makes the spectrum non-negative)")
    cal.add_argument("--model", choices=("exact", "circuit"), default="exact")
    cal.add_argument("--max-iter", type=int, default=50)
    return ap


def _qubit_range(text: str) -> list:
    if "-" in text:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def _config(args, kind: str) -> ExperimentConfig:
    base = {}
    if args.config:
        with open(args.config) as f:
            base = ExperimentConfig.from_text(f.read()).to_dict()
        base["steps"] = base.get("steps")
    base["kind"] = kind
    names = {f.name for f in fields(ExperimentConfig)}
    for key in ("graph", "qubits", "mode", "gamma", "dtau", "steps", "m_schedule", "e0", "out"):
        val = getattr(args, key, None)
        if val is not None and key in names:
            base[key] = val
    if args.auto_gamma:
        base["gamma"] = None
    if args.auto_dtau:
        base["dtau"] = None
        base["auto_dtau"] = True
    return ExperimentConfig(**base)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("maxcut", "harmonic"):
            cfg = _config(args, args.command)
            result = run(cfg)
            _print_records(result.records)
        elif args.command == "cost":
            rows = run_cost_sweep(args.kind, _qubit_range(args.qubits))
            if args.out:
                write_cost_csv(rows, args.out)
            for r in rows:
                print(" ".join(f"{k}={v}" for k, v in r.items()))
        else:
            _calibrate(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _calibrate(args):
    from .calibration import calibrate
    from .hamiltonians import maxcut_hamiltonian, example_graph, read_graph
    from .pite import IsingRte
    from .statevector import from_vector
    import numpy as np

    g = read_graph(args.graph) if args.graph else example_graph()
    h = maxcut_hamiltonian(g)
    e0 = -h.lambda_min if args.e0 is None else args.e0
    psi = from_vector(np.ones(h.dim))
    res = calibrate(h, psi, args.m_target, args.branch, args.max_iter, e0=e0, dtau=args.dtau,
                    model=args.model, rte=IsingRte(g))
    print(json.dumps({"gamma": res.gamma, "dtau": res.dtau, "alpha": res.alpha,
                      "m_star": res.m_star, "branch_n": res.branch_n, "e0": e0,
                      "iterations": res.iterations, "converged": res.converged}, indent=2))


def _print_records(records):
    print("step tau p_k P_k fidelity energy cnot depth")
    for r in records:
        print(f"{r.step} {r.tau:.4f} {r.p_k:.8f} {r.P_k:.6g} {r.fidelity:.6f} "
              f"{r.energy:.6f} {r.cnot} {r.depth}")


if __name__ == "__main__":
    sys.exit(main())
