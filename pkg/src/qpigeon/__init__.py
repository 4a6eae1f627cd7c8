"""Deterministic simulator of the quantum pigeonhole effect.

Two layers. The circuit layer (`qstate`, `circuit`, `pigeonhole`) models
three particles in a Mach-Zehnder interferometer with an ancilla that probes
whether a chosen pair shares a path, and tabulates where quantum mechanics
departs from counting arguments. The spin layer (`nmr`, `control`) maps the
same experiment onto a 4-spin register: diagonal internal Hamiltonian,
pseudopure preparation, ancilla readout spectra, hard-pulse CNOT sequences,
and numerically optimized shaped pulses.
"""

from .circuit import (CNOT, HADAMARD, PHASE, Circuit, GateOp, build_mzi,
                      circuit_from_text, circuit_to_text, controlled_parity, run)
from .control import (ControlField, ControlProblem, GrapeResult, PulseSegment,
                      PulseSequence, cnot_reference_sequence, cnot_unitary,
                      controls_to_csv, controls_to_sequence, delay,
                      fidelity_gate, gradient_check, grape_optimize,
                      hard_pulse, local_z_invariant_fidelity, rf_slice,
                      sequence_from_text, sequence_to_text, simulate_sequence)
from .nmr import (STAGES, PrepSpec, SpectralLine, Spectrum, SpinSystem,
                  default_spin_system, detect, internal_hamiltonian,
                  invert_populations, line_frequency, load_spin_system,
                  pseudopure_prepare, qphe_stage, render, rendered_to_csv,
                  save_spin_system, spectrum_to_csv, thermal_state)
from .pigeonhole import (ArrangementTable, ProbeReport, TableRow, build_table,
                         classical_enumeration, generalized_qphe, projector_same,
                         qphe_analysis, table_to_csv, table_to_text,
                         uniform_postselection_overlaps)
from .qstate import (DensityMatrix, Operator, StateVector, apply, basis_state,
                     expectation, identity_op, measure_distribution, overlap,
                     partial_trace, tensor)

__version__ = "0.1.0"
