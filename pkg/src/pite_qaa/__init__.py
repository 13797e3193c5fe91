"""Probabilistic imaginary-time evolution with amplitude amplification on a
dense statevector simulator."""

__version__ = "0.1.0"

from .calibration import CalibrationResult, calibrate, determine_dtau, failure_leakage_analysis
from .circuit import Circuit, Gate
from .grid import GridSpec
from .hamiltonians import (HamiltonianOracle, WeightedGraph, harmonic_hamiltonian,
                           maxcut_hamiltonian, example_graph, read_graph, rte_circuit_grid,
                           rte_circuit_ising)
from .library import build_cqft, build_mcx, build_state_prep, build_zero_reflection
from .pite import (GridRte, IsingRte, PiteParams, StraddleWarning, approx_pite_circuit,
                   derive_params, exact_pite_unitary, success_probability, two_step_circuit)
from .qaa import (CostModel, QaaSchedule, amplification_Q, cost_model, grover_amplitude,
                  multi_step_reference, optimal_gamma, optimal_m, oracle_s_chi,
                  pre_amplification, worst_case_m_harmonic)
from .statevector import QuantumState, apply_circuit, fidelity, postselect_ancilla, zero_state
from .transpile import CircuitMetrics, metrics, transpile_to_basis

__all__ = [name for name in dir() if not name.startswith("_")]
