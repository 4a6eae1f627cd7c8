"""Gate library and the two-path interferometer circuit with an ancilla probe.

The interferometer maps onto qubits as: first beam splitter = Hadamard on
every particle, phase shifter = S = diag(1, i), second beam splitter =
Hadamard again. A path probe for a particle pair sits between the first
Hadamard layer and the phase layer and flips an ancilla exactly when the two
particles are in different paths. Detector outcome 0 on a particle is
equivalent to post-selecting the pre-phase state |-i>, outcome 1 to |+i>.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tolerances as tol
from .qstate import DensityMatrix, Operator, StateVector, apply

__all__ = [
    "GateOp",
    "Circuit",
    "HADAMARD",
    "PHASE",
    "PAULI_X",
    "PAULI_Z",
    "CNOT",
    "controlled_parity",
    "build_mzi",
    "run",
    "circuit_to_text",
    "circuit_from_text",
]

_SQ2 = np.sqrt(2.0)

HADAMARD = Operator(1, np.array([[1, 1], [1, -1]]) / _SQ2, kind="unitary")
# The phase shifter: |+> -> |+i>. Called Z in some diagrams, but diag(1, i)
# is what the state transformations require.
PHASE = Operator(1, np.diag([1.0, 1.0j]), kind="unitary")
PAULI_X = Operator(1, np.array([[0, 1], [1, 0]]), kind="unitary")
PAULI_Z = Operator(1, np.diag([1.0, -1.0]), kind="unitary")
# control is the first target qubit, target the second
CNOT = Operator(2, np.array([[1, 0, 0, 0],
                             [0, 1, 0, 0],
                             [0, 0, 0, 1],
                             [0, 0, 1, 0]]), kind="unitary")

_NAMED = {"H": HADAMARD, "S": PHASE, "X": PAULI_X, "Z": PAULI_Z, "CNOT": CNOT}


@dataclass(frozen=True)
class GateOp:
    name: str
    targets: tuple[int, ...]
    matrix: Operator

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"duplicate target in {self.targets}")
        if len(self.targets) != self.matrix.n_qubits:
            raise ValueError("target count does not match gate size")


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[GateOp, ...]
    probe: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(not 1 <= q <= self.n_qubits for q in g.targets):
                raise ValueError(f"gate {g.name} targets {g.targets} out of range")


def controlled_parity(i: int, j: int, ancilla: int) -> Operator:
    """Probe unitary for particles i, j: keeps the ancilla when they share a
    path, flips it otherwise.

    The returned operator acts on the three qubits in the order (i, j,
    ancilla); apply it with exactly those targets. Equal to
    CNOT(i->ancilla) CNOT(j->ancilla).
    """
    if len({i, j, ancilla}) != 3:
        raise ValueError(f"probe indices must be distinct, got {(i, j, ancilla)}")
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    same = np.kron(p0, p0) + np.kron(p1, p1)
    diff = np.eye(4) - same
    x = PAULI_X.matrix
    u = np.kron(same, np.eye(2)) + np.kron(diff, x)
    return Operator(3, u, kind="unitary")


def build_mzi(n_particles: int, probe: tuple[int, int] | None = None) -> Circuit:
    """Interferometer circuit on ``n_particles`` qubits.

    With ``probe=(i, j)`` an ancilla qubit is appended and the pair probe is
    inserted between the first beam-splitter layer and the phase layer.
    """
    if n_particles < 1:
        raise ValueError("need at least one particle")
    if probe is not None:
        i, j = probe
        if not (1 <= i <= n_particles and 1 <= j <= n_particles and i != j):
            raise ValueError(f"probe pair {probe} invalid for {n_particles} particles")
    n_qubits = n_particles + (1 if probe is not None else 0)
    particles = range(1, n_particles + 1)
    gates = [GateOp("H", (q,), HADAMARD) for q in particles]
    if probe is not None:
        i, j = probe
        anc = n_qubits
        gates.append(GateOp(f"U{i}{j}", (i, j, anc), controlled_parity(i, j, anc)))
    gates += [GateOp("S", (q,), PHASE) for q in particles]
    gates += [GateOp("H", (q,), HADAMARD) for q in particles]
    return Circuit(n_qubits, tuple(gates), probe=probe)


def run(circuit: Circuit, state):
    """Apply the circuit's gates in order to a StateVector or DensityMatrix."""
    dim = 2 ** circuit.n_qubits
    got = state.amplitudes.size if isinstance(state, StateVector) else state.matrix.shape[0]
    if got != dim:
        raise ValueError(f"state dimension {got} does not match circuit on {circuit.n_qubits} qubits")
    for g in circuit.gates:
        state = apply(g.matrix, list(g.targets), state)
    return state


def circuit_to_text(circuit: Circuit) -> str:
    """One gate per line: NAME target[,target...]."""
    lines = [f"qubits {circuit.n_qubits}"]
    for g in circuit.gates:
        lines.append(f"{g.name} {','.join(str(t) for t in g.targets)}")
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str, n_qubits: int | None = None) -> Circuit:
    """Parse the plain-text gate list produced by :func:`circuit_to_text`.

    Probe gates are recognized by the ``U<i><j>`` naming convention.
    """
    gates = []
    probe = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "qubits":
            if len(parts) != 2 or not parts[1].isdigit():
                raise ValueError(f"bad qubits directive: {raw!r}")
            n_qubits = int(parts[1])
            continue
        if len(parts) != 2:
            raise ValueError(f"expected 'NAME targets' on line: {raw!r}")
        name, tgt = parts
        try:
            targets = tuple(int(t) for t in tgt.split(","))
        except ValueError:
            raise ValueError(f"bad target list on line: {raw!r}") from None
        if name in _NAMED:
            gates.append(GateOp(name, targets, _NAMED[name]))
        elif name.startswith("U") and len(targets) == 3:
            gates.append(GateOp(name, targets, controlled_parity(*targets)))
            probe = (targets[0], targets[1])
        else:
            raise ValueError(f"unknown gate {name!r}")
    if n_qubits is None:
        n_qubits = max((max(g.targets) for g in gates), default=0)
    if n_qubits < 1:
        raise ValueError("empty circuit with no qubit count")
    return Circuit(n_qubits, tuple(gates), probe=probe)
