"""Experiment drivers: max-cut and harmonic-oscillator runs, cost sweeps,
CSV/JSON output."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .calibration import calibrate, determine_dtau, lambda_max_estimate, s_of, solve_gamma
from .circuit import Circuit
from .grid import GridSpec
from .hamiltonians import (HamiltonianOracle, WeightedGraph, harmonic_hamiltonian,
                           maxcut_hamiltonian, example_graph, read_graph)
from .library import build_state_prep, build_zero_reflection
from .pite import GridRte, IsingRte, PiteParams, approx_pite_circuit
from .qaa import MultiStepBuilder, amplification_Q, pite_plus_ref, pre_amplification
from .statevector import (ancilla_purity, apply_circuit, branch_probability, from_vector,
                          postselect_ancilla, zero_state)
from .transpile import metrics

MODES = ("pite", "pite-qaa", "multistep")
STEP_HEADER = ["step", "tau", "p_k", "P_k", "fidelity", "energy", "cnot", "depth"]
COST_HEADER = ["n", "cnot_Q", "cnot_Qtilde", "cnot_S0", "cnot_pite",
               "depth_Q", "depth_Qtilde", "depth_S0", "depth_pite"]

# default step sizes for the two fixed-gamma baselines and the amplified runs
MAXCUT_PITE_DTAU = {0.4: 0.75, 0.8: 0.25}
MAXCUT_QAA_DTAU = 0.63
HARMONIC_PITE_DTAU = {0.4: 0.20, 0.8: 0.16}
HARMONIC_QAA_DTAU = 0.14
HARMONIC_CEILING = 0.2
# Long harmonic runs eventually heat up: the first-order circuit filters
# badly once s*dtau*lambda approaches pi, and Trotter error seeds such states.
DEFAULT_STEPS = {"maxcut": {"pite": 64, "pite-qaa": 12, "multistep": 4},
                 "harmonic": {"pite": 12, "pite-qaa": 20, "multistep": 6}}


def _version() -> str:
    from . import __version__
    return __version__


@dataclass
class ExperimentConfig:
    kind: str = "maxcut"
    graph: str | None = None
    qubits: int = 6
    length: float = 14.0
    mass: float = 1.0
    omega: float = 1.0
    slices: int = 1
    mode: str = "pite-qaa"
    gamma: float | None = None
    dtau: float | None = None
    auto_dtau: bool = False
    steps: int | None = None
    m_schedule: tuple = (1,)
    e0: float | None = None
    out: str | None = None

    def __post_init__(self):
        if self.kind not in ("maxcut", "harmonic"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.steps is None:
            self.steps = DEFAULT_STEPS[self.kind][self.mode]
        if self.steps < 1:
            raise ValueError("need at least one step")
        self.m_schedule = tuple(int(v) for v in self.m_schedule) or (1,)
        if any(v < 0 for v in self.m_schedule):
            raise ValueError("repetition counts must be non-negative")
        if self.mode == "pite" and self.gamma is None:
            self.gamma = 0.8
        if self.gamma is not None and not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.dtau is not None and self.dtau <= 0:
            raise ValueError("dtau must be positive")
        if self.dtau is not None and self.auto_dtau:
            raise ValueError("give either a fixed dtau or auto_dtau, not both")

    def m_at(self, k: int) -> int:
        """Repetitions for step k (1-based); the last entry repeats."""
        return self.m_schedule[min(k, len(self.m_schedule)) - 1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["m_schedule"] = list(self.m_schedule)
        return d

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        """Flat ``key = value`` lines mirroring the CLI flags; ``#`` comments."""
        kw: dict = {}
        types = {f.name: f.type for f in fields(cls)}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if not sep or key not in types:
                raise ValueError(f"bad config line: {raw!r}")
            kw[key] = _parse_value(key, val)
        return cls(**kw)


def _parse_value(key, val):
    if val.lower() in ("", "none", "auto"):
        return None
    if key == "m_schedule":
        return tuple(int(v) for v in val.replace(",", " ").split())
    if key in ("qubits", "slices", "steps"):
        return int(val)
    if key in ("length", "mass", "omega", "gamma", "dtau", "e0"):
        return float(val)
    if key == "auto_dtau":
        if val.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"bad boolean for {key}: {val!r}")
        return val.lower() in ("true", "1", "yes")
    return val


@dataclass
class StepRecord:
    step: int
    tau: float
    p_k: float
    P_k: float
    fidelity: float
    energy: float
    cnot: int
    depth: int
    gamma: float = float("nan")
    m: int = 0
    purity: float = 1.0

    def row(self) -> list:
        return [self.step, self.tau, self.p_k, self.P_k, self.fidelity, self.energy,
                self.cnot, self.depth]


@dataclass
class RunResult:
    config: ExperimentConfig
    records: list
    notes: dict = field(default_factory=dict)
    state: np.ndarray | None = None


# problem setup -------------------------------------------------------------------

@dataclass
class _Problem:
    h: HamiltonianOracle
    rte: object
    psi0: np.ndarray
    e0: float
    ground: np.ndarray


def _setup(cfg: ExperimentConfig) -> _Problem:
    if cfg.kind == "maxcut":
        g = read_graph(cfg.graph) if cfg.graph else example_graph()
        h = maxcut_hamiltonian(g)
        rte = IsingRte(g)
        psi0 = np.full(h.dim, h.dim ** -0.5, dtype=complex)
        e0 = h.center if cfg.e0 is None else cfg.e0
    else:
        grid = GridSpec(cfg.qubits, cfg.length, cfg.mass, cfg.omega)
        h = harmonic_hamiltonian(grid)
        rte = GridRte(grid, cfg.slices)
        psi0 = h.eigenvectors[:, :4].sum(axis=1) / 2
        e0 = 0.0 if cfg.e0 is None else cfg.e0
    return _Problem(h, rte, psi0, e0, h.ground_space())


def reference_circuit(vec) -> Circuit:
    """State preparation for ``vec``; uniform states become a Hadamard layer."""
    vec = np.asarray(vec, dtype=complex)
    n = int(round(math.log2(vec.size)))
    if np.allclose(vec, vec[0]) and abs(abs(vec[0]) - vec.size ** -0.5) < 1e-12:
        c = Circuit(n, name="U_ref")
        for q in range(n):
            c.h(q)
        c.phase(float(np.angle(vec[0])))
        return c
    return build_state_prep(vec)


def _default_dtau(cfg: ExperimentConfig, prob: _Problem, gamma: float | None) -> float | None:
    if cfg.dtau is not None:
        return cfg.dtau
    if cfg.mode == "pite" and cfg.auto_dtau:
        d = determine_dtau(s_of(gamma), lambda_max_estimate(prob.h, prob.e0))
        return d if cfg.kind == "maxcut" else min(d, HARMONIC_CEILING)
    if cfg.kind == "maxcut":
        if cfg.mode == "pite":
            known = MAXCUT_PITE_DTAU.get(round(gamma, 12))
            if known is not None:
                return known
            return determine_dtau(s_of(gamma), lambda_max_estimate(prob.h, prob.e0))
        return MAXCUT_QAA_DTAU
    if cfg.mode == "pite":
        return HARMONIC_PITE_DTAU.get(round(gamma, 12), HARMONIC_CEILING)
    return HARMONIC_QAA_DTAU


def _fidelity(prob: _Problem, vec) -> float:
    return float(min(1.0, np.sum(np.abs(prob.ground.conj().T @ vec) ** 2)))


def _record(prob, k, tau, p, big_p, vec, c: Circuit | None, gamma=float("nan"), m=0, purity=1.0):
    mt = metrics(c) if c is not None else None
    return StepRecord(k, tau, p, big_p, _fidelity(prob, vec), prob.h.expectation(vec),
                      mt.cnot_count if mt else 0, mt.depth if mt else 0, gamma, m, purity)


# experiment loops ----------------------------------------------------------------

def run(cfg: ExperimentConfig) -> RunResult:
    prob = _setup(cfg)
    if cfg.mode == "pite":
        recs, vec = _run_pite(cfg, prob)
    elif cfg.mode == "pite-qaa":
        recs, vec = _run_qaa(cfg, prob)
    else:
        recs, vec = _run_multistep(cfg, prob)
    notes = {"e0_shift": prob.e0, "lambda_min": prob.h.lambda_min,
             "n_qubits": prob.h.n_qubits}
    if cfg.kind == "maxcut":
        notes.update(_pite_cost_note(prob, recs))
    result = RunResult(cfg, recs, notes, vec)
    if cfg.out:
        write_outputs(result, cfg.out)
    return result


def run_maxcut(cfg: ExperimentConfig) -> list:
    if cfg.kind != "maxcut":
        cfg = replace(cfg, kind="maxcut")
    return run(cfg).records


def run_harmonic(cfg: ExperimentConfig) -> list:
    if cfg.kind != "harmonic":
        cfg = replace(cfg, kind="harmonic")
    return run(cfg).records


def _run_pite(cfg, prob):
    """Repeated post-selected PITE steps at fixed gamma and dtau."""
    gamma = cfg.gamma
    dtau = _default_dtau(cfg, prob, gamma)
    p = PiteParams(gamma, dtau, prob.e0)
    pite = approx_pite_circuit(prob.rte, p)
    n = prob.h.n_qubits
    ref = reference_circuit(prob.psi0)
    cum = Circuit(n + 1, name="cumulative")
    cum.block(ref, range(n))
    recs = [_record(prob, 0, 0.0, 1.0, 1.0, prob.psi0, cum)]
    psi = from_vector(prob.psi0)
    big_p = 1.0
    for k in range(1, cfg.steps + 1):
        out = apply_circuit(psi.with_ancilla(), pite)
        psi, pk = postselect_ancilla(out)
        big_p *= pk
        # the ancilla is measured and reset between steps, so blocks just chain
        cum = cum.copy()
        cum.block(pite)
        recs.append(_record(prob, k, k * dtau, pk, big_p, psi.amplitudes, cum, gamma))
    return recs, psi.amplitudes


def _qaa_gamma(rte, state, dtau, e0, m, gamma=None):
    """gamma* for which ``m`` amplifications of the circuit reach p = 1."""
    if gamma is not None:
        return gamma, m
    while True:
        target = math.sin(math.pi / (4 * m + 2))
        try:
            g = solve_gamma(lambda x: math.sqrt(branch_probability(
                apply_circuit(state, approx_pite_circuit(rte, PiteParams(x, dtau, e0))), 0)), target)
            return g, m
        except ValueError:
            m += 1
            if m > 64:
                raise


def _first_dtau(cfg, prob, m):
    """Fixed dtau, or the self-consistent one from the first step when auto."""
    dtau = _default_dtau(cfg, prob, cfg.gamma)
    if cfg.dtau is None and cfg.gamma is None and cfg.auto_dtau:
        ceiling = HARMONIC_CEILING if cfg.kind == "harmonic" else None
        res = calibrate(prob.h, from_vector(prob.psi0), m, e0=prob.e0, model="circuit",
                        rte=prob.rte, ceiling=ceiling)
        dtau = res.dtau
    return dtau


def _run_qaa(cfg, prob):
    """Per-step amplification; each step re-prepares the current state.

    The executed circuit of step k is U_PITE (U_ref (x) I) Q~^m with U_ref a
    synthesis of the state after step k-1.
    """
    n = prob.h.n_qubits
    dtau = _first_dtau(cfg, prob, cfg.m_at(1))
    ref0 = reference_circuit(prob.psi0)
    first = Circuit(n + 1)
    first.block(ref0, range(n))
    recs = [_record(prob, 0, 0.0, 1.0, 1.0, prob.psi0, first)]
    vec = prob.psi0
    big_p = 1.0
    for k in range(1, cfg.steps + 1):
        ref = reference_circuit(vec)
        start = apply_circuit(zero_state(n + 1, ancilla=True), pite_plus_ref(Circuit(n + 1), ref))
        gamma, m = _qaa_gamma(prob.rte, start, dtau, prob.e0, cfg.m_at(k), cfg.gamma)
        p = PiteParams(gamma, dtau, prob.e0)
        qt = pre_amplification(prob.rte, p, ref)
        full = Circuit(n + 1, name=f"step{k}")
        for _ in range(m):
            full.block(qt)
        full.block(ref, range(n))
        full.block(approx_pite_circuit(prob.rte, p))
        out = apply_circuit(zero_state(n + 1, ancilla=True), full)
        purity = ancilla_purity(out)
        post, pk = postselect_ancilla(out)
        vec = post.amplitudes
        big_p *= pk
        recs.append(_record(prob, k, k * dtau, pk, big_p, vec, full, gamma, m, purity))
    return recs, vec


def _run_multistep(cfg, prob):
    """Measurement-free recursion; every record is the cumulative circuit."""
    n = prob.h.n_qubits
    dtau = _first_dtau(cfg, prob, cfg.m_at(1))
    ref0 = reference_circuit(prob.psi0)
    b = MultiStepBuilder(prob.rte, ref0)
    z = zero_state(n + 1, ancilla=True)
    recs = [_record(prob, 0, 0.0, 1.0, 1.0, prob.psi0, b.result.reference[0])]
    big_p = 1.0
    vec = prob.psi0
    for k in range(1, cfg.steps + 1):
        chain_state = apply_circuit(z, b.chain())
        m = cfg.m_at(k)
        if cfg.gamma is not None:
            gamma = cfg.gamma
        else:
            def amp(x):
                prod, _ = b.candidate(PiteParams(x, dtau, prob.e0))
                return math.sqrt(branch_probability(apply_circuit(chain_state, prod), 0))
            while True:
                try:
                    gamma = solve_gamma(amp, math.sin(math.pi / (4 * m + 2)))
                    break
                except ValueError:
                    m += 1
                    if m > 64:
                        raise
        ref = b.push(PiteParams(gamma, dtau, prob.e0), m)
        out = apply_circuit(z, ref)
        purity = ancilla_purity(out)
        post, pk = postselect_ancilla(out)
        big_p *= pk
        vec = post.amplitudes
        recs.append(_record(prob, k, k * dtau, pk, big_p, vec, ref, gamma, m, purity))
    return recs, vec


def _pite_cost_note(prob, recs) -> dict:
    p = PiteParams(0.3, 0.1, prob.e0)
    mt = metrics(approx_pite_circuit(prob.rte, p))
    return {"pite_circuit": {
        "cnot": mt.cnot_count, "depth": mt.depth, "reference": {"cnot": 26, "depth": 24},
        "basis": "CNOT plus arbitrary single-qubit gates; depth counts every gate, greedy layering",
        "justification": (
            "one CNOT pair per edge in the unconditional evolution and one pair per edge in the "
            "controlled doubled evolution, with the pair at the seam cancelled; controlled Rz costs "
            "two CNOTs; the controlled evolution is serial through the ancilla, which sets the depth"),
    }}


# cost sweeps -----------------------------------------------------------------------

def complete_graph(n: int) -> WeightedGraph:
    return WeightedGraph(n, tuple((i, j, 1.0) for i in range(n) for j in range(i + 1, n)))


def run_cost_sweep(kind: str, n_range, gamma: float = 0.6, dtau: float = 0.1,
                   out: str | None = None) -> list:
    """Transpiled CNOT count and depth of Q, Q~, S_0 and the PITE circuit.

    The reference is a Hadamard layer, so it costs no CNOTs.  Circuits are
    only built and counted, never simulated.
    """
    rows = []
    for n in n_range:
        if kind in ("ising", "maxcut"):
            rte = IsingRte(complete_graph(n))
        elif kind == "harmonic":
            rte = GridRte(GridSpec(n))
        else:
            raise ValueError(f"unknown sweep kind {kind!r}")
        p = PiteParams(gamma, dtau)
        ref = reference_circuit(np.full(2 ** n, 2 ** (-n / 2)))
        pite = approx_pite_circuit(rte, p)
        q = amplification_Q(pite_plus_ref(pite, ref))
        qt = pre_amplification(rte, p, ref)
        s0 = build_zero_reflection(n + 1)
        mq, mqt, ms, mp = (metrics(c) for c in (q, qt, s0, pite))
        rows.append({"n": n, "cnot_Q": mq.cnot_count, "cnot_Qtilde": mqt.cnot_count,
                     "cnot_S0": ms.cnot_count, "cnot_pite": mp.cnot_count,
                     "depth_Q": mq.depth, "depth_Qtilde": mqt.depth,
                     "depth_S0": ms.depth, "depth_pite": mp.depth})
    if out:
        write_cost_csv(rows, out)
    return rows


# output --------------------------------------------------------------------------

def write_step_csv(records, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(STEP_HEADER)
        for r in records:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r.row()])


def read_step_csv(path) -> list:
    out = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            out.append(StepRecord(int(row["step"]), float(row["tau"]), float(row["p_k"]),
                                  float(row["P_k"]), float(row["fidelity"]), float(row["energy"]),
                                  int(row["cnot"]), int(row["depth"])))
    return out


def write_cost_csv(rows, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=COST_HEADER)
        w.writeheader()
        w.writerows(rows)


def write_outputs(result: RunResult, out) -> dict:
    """``<out>.csv`` with the step table and ``<out>.json`` with the manifest."""
    base = Path(out)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    write_step_csv(result.records, base.with_suffix(".csv"))
    manifest = {
        "software": {"package": "pite_qaa", "version": _version()},
        "config": result.config.to_dict(),
        "notes": result.notes,
        "steps": [{"step": r.step, "gamma": None if math.isnan(r.gamma) else r.gamma, "m": r.m, "ancilla_purity": r.purity}
                  for r in result.records],
    }
    base.with_suffix(".json").write_text(json.dumps(manifest, indent=2, default=_jsonable))
    return manifest


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return str(v)
