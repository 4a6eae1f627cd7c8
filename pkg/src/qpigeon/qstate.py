"""States, operators, and the little linear algebra needed on top of numpy.

Conventions used everywhere in this package:

* Qubits are numbered 1..n and map to bit positions big-endian: qubit 1 is
  the most significant bit of a basis index. ``|q1 q2 ... qn>``.
* When an ancilla is present it is always the last qubit (least significant
  bit).
* States may be unnormalized while intermediate (e.g. after a projector);
  probabilities are only read off normalized states.

Dense matrices are used throughout; the register sizes here stay in the
single digits, so there is nothing to be gained from sparsity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tolerances as tol

__all__ = [
    "StateVector",
    "DensityMatrix",
    "Operator",
    "KET0",
    "KET1",
    "PLUS",
    "MINUS",
    "PLUS_I",
    "MINUS_I",
    "basis_state",
    "tensor",
    "apply",
    "expectation",
    "overlap",
    "partial_trace",
    "measure_distribution",
    "identity_op",
]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateVector:
    """Pure state of ``n_qubits`` qubits; not necessarily normalized."""

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _freeze(np.asarray(self.amplitudes).ravel())
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        if amps.size != 2 ** self.n_qubits:
            raise ValueError(
                f"amplitude vector of length {amps.size} does not match "
                f"{self.n_qubits} qubits"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.n_qubits, self.amplitudes / n)

    def density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(self.n_qubits, np.outer(a, a.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state, or a traceless deviation from the maximally mixed state.

    NMR observables live on deviation matrices (``is_deviation=True``):
    they are Hermitian and traceless but not positive. Ordinary density
    matrices must have unit trace and no eigenvalue below -1e-10.
    """

    n_qubits: int
    matrix: np.ndarray = field(repr=False)
    is_deviation: bool = False

    def __post_init__(self):
        m = _freeze(np.asarray(self.matrix))
        dim = 2 ** self.n_qubits
        if m.shape != (dim, dim):
            raise ValueError(f"matrix shape {m.shape} does not match {self.n_qubits} qubits")
        if np.max(np.abs(m - m.conj().T)) > tol.ARITHMETIC * max(1.0, np.max(np.abs(m))):
            raise ValueError("density matrix must be Hermitian")
        tr = np.trace(m)
        if self.is_deviation:
            scale = max(1.0, float(np.max(np.abs(m))))
            if abs(tr) > tol.ARITHMETIC * scale:
                raise ValueError(f"deviation matrix must be traceless, got trace {tr}")
        else:
            if abs(tr - 1.0) > tol.STRUCTURAL:
                raise ValueError(f"density matrix must have unit trace, got {tr}")
            if np.min(np.linalg.eigvalsh(m)) < -tol.STRUCTURAL:
                raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)


_KINDS = ("unitary", "projector", "hermitian", "general")


@dataclass(frozen=True)
class Operator:
    """Square operator on ``n_qubits`` qubits with a validated kind tag."""

    n_qubits: int
    matrix: np.ndarray = field(repr=False)
    kind: str = "general"

    def __post_init__(self):
        m = _freeze(np.asarray(self.matrix))
        dim = 2 ** self.n_qubits
        if m.shape != (dim, dim):
            raise ValueError(f"operator shape {m.shape} does not match {self.n_qubits} qubits")
        if self.kind not in _KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.kind == "unitary":
            if np.max(np.abs(m.conj().T @ m - np.eye(dim))) > tol.STRUCTURAL:
                raise ValueError("matrix tagged unitary is not unitary")
        elif self.kind == "projector":
            if np.max(np.abs(m - m.conj().T)) > tol.STRUCTURAL or \
               np.max(np.abs(m @ m - m)) > tol.STRUCTURAL:
                raise ValueError("matrix tagged projector is not an orthogonal projector")
        elif self.kind == "hermitian":
            if np.max(np.abs(m - m.conj().T)) > tol.STRUCTURAL:
                raise ValueError("matrix tagged hermitian is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits


KET0 = StateVector(1, np.array([1.0, 0.0]))
KET1 = StateVector(1, np.array([0.0, 1.0]))
PLUS = StateVector(1, np.array([1.0, 1.0]) / np.sqrt(2))
MINUS = StateVector(1, np.array([1.0, -1.0]) / np.sqrt(2))
PLUS_I = StateVector(1, np.array([1.0, 1.0j]) / np.sqrt(2))
MINUS_I = StateVector(1, np.array([1.0, -1.0j]) / np.sqrt(2))


def basis_state(bits: str) -> StateVector:
    """Computational basis state from a bitstring, e.g. ``basis_state("010")``."""
    if not bits or any(b not in "01" for b in bits):
        raise ValueError(f"not a bitstring: {bits!r}")
    amps = np.zeros(2 ** len(bits))
    amps[int(bits, 2)] = 1.0
    return StateVector(len(bits), amps)


def identity_op(n_qubits: int) -> Operator:
    return Operator(n_qubits, np.eye(2 ** n_qubits), kind="unitary")


def tensor(*factors):
    """Kronecker product of two or more objects of the same kind."""
    if len(factors) < 2:
        raise ValueError("tensor needs at least two factors")
    first = factors[0]
    if not all(isinstance(f, type(first)) for f in factors):
        raise TypeError("tensor factors must all be the same kind")
    n = sum(f.n_qubits for f in factors)
    if isinstance(first, StateVector):
        amps = factors[0].amplitudes
        for f in factors[1:]:
            amps = np.kron(amps, f.amplitudes)
        return StateVector(n, amps)
    if isinstance(first, DensityMatrix):
        m = factors[0].matrix
        for f in factors[1:]:
            m = np.kron(m, f.matrix)
        dev = any(f.is_deviation for f in factors)
        return DensityMatrix(n, m, is_deviation=dev)
    if isinstance(first, Operator):
        m = factors[0].matrix
        for f in factors[1:]:
            m = np.kron(m, f.matrix)
        kinds = {f.kind for f in factors}
        kind = kinds.pop() if len(kinds) == 1 and kinds != {"general"} else "general"
        # unitarity and projector-ness survive tensoring; mixed kinds do not
        if kind not in ("unitary", "projector", "hermitian"):
            kind = "general"
        return Operator(n, m, kind=kind)
    raise TypeError(f"cannot tensor objects of type {type(first).__name__}")


def _check_targets(targets, n_op: int, n_state: int):
    targets = list(targets)
    if len(targets) != n_op:
        raise ValueError(f"operator acts on {n_op} qubits, got targets {targets}")
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target in {targets}")
    for q in targets:
        if not 1 <= q <= n_state:
            raise ValueError(f"target {q} out of range for {n_state} qubits")
    return targets


def _embed_matrix(mat: np.ndarray, targets: list[int], n: int) -> np.ndarray:
    """Matrix acting as ``mat`` on the listed qubits and identity elsewhere."""
    k = len(targets)
    rest = [q for q in range(1, n + 1) if q not in targets]
    big = np.kron(mat, np.eye(2 ** (n - k), dtype=complex))
    order = targets + rest
    perm = [order.index(q) for q in range(1, n + 1)]
    big = big.reshape([2] * (2 * n))
    big = big.transpose(perm + [n + p for p in perm])
    return np.ascontiguousarray(big.reshape(2 ** n, 2 ** n))


def _as_matrix(op) -> tuple[np.ndarray, int]:
    if isinstance(op, Operator):
        return op.matrix, op.n_qubits
    m = np.asarray(op, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("operator must be a square matrix")
    n = int(np.log2(m.shape[0]))
    if 2 ** n != m.shape[0]:
        raise ValueError("operator dimension is not a power of two")
    return m, n


def apply(op, targets, state):
    """Apply an operator to the listed qubits of a state.

    StateVector in, StateVector out (``M|psi>``); DensityMatrix in,
    DensityMatrix out (``M rho M^dag``). The result is not renormalized.
    """
    mat, n_op = _as_matrix(op)
    targets = _check_targets(targets, n_op, state.n_qubits)
    full = _embed_matrix(mat, targets, state.n_qubits)
    if isinstance(state, StateVector):
        return StateVector(state.n_qubits, full @ state.amplitudes)
    if isinstance(state, DensityMatrix):
        return DensityMatrix(state.n_qubits, full @ state.matrix @ full.conj().T,
                             is_deviation=state.is_deviation)
    raise TypeError(f"cannot apply an operator to {type(state).__name__}")


def expectation(op, state, targets=None) -> float:
    """Real expectation value of a Hermitian operator.

    ``targets`` defaults to the whole register; pass a sublist to embed a
    smaller operator.
    """
    mat, n_op = _as_matrix(op)
    if targets is None:
        targets = list(range(1, n_op + 1))
    targets = _check_targets(targets, n_op, state.n_qubits)
    full = _embed_matrix(mat, targets, state.n_qubits)
    if isinstance(state, StateVector):
        a = state.amplitudes
        val = a.conj() @ full @ a
    elif isinstance(state, DensityMatrix):
        val = np.trace(state.matrix @ full)
    else:
        raise TypeError(f"no expectation value for {type(state).__name__}")
    if abs(val.imag) > tol.STRUCTURAL * max(1.0, abs(val.real)):
        raise ValueError(f"expectation of a non-Hermitian operator: {val}")
    return float(val.real)


def overlap(bra: StateVector, op, ket: StateVector, targets=None) -> complex:
    """``<bra|M|ket>`` exactly as given; pass ``op=None`` for a plain ``<bra|ket>``."""
    if bra.n_qubits != ket.n_qubits:
        raise ValueError("bra and ket sizes differ")
    mid = ket if op is None else apply(op, targets or list(range(1, ket.n_qubits + 1)), ket)
    return complex(bra.amplitudes.conj() @ mid.amplitudes)


def partial_trace(state, keep) -> DensityMatrix:
    """Trace out all qubits not listed in ``keep`` (kept in the order given)."""
    if isinstance(state, StateVector):
        state = state.density()
    if not isinstance(state, DensityMatrix):
        raise TypeError(f"cannot partial-trace {type(state).__name__}")
    n = state.n_qubits
    keep = list(keep)
    if not keep:
        raise ValueError("keep list is empty")
    _check_targets(keep, len(keep), n)
    traced = [q for q in range(1, n + 1) if q not in keep]
    t = state.matrix.reshape([2] * (2 * n))
    # axes: row q -> q-1, column q -> n + q - 1
    for q in sorted(traced, reverse=True):
        t = np.trace(t, axis1=q - 1, axis2=t.ndim // 2 + q - 1)
        # trace removes one row and one column axis; remaining qubit axes
        # keep their relative order, so later (larger q) must go first
    k = len(keep)
    remaining = [q for q in range(1, n + 1) if q in keep]
    perm = [remaining.index(q) for q in keep]
    t = t.transpose(perm + [k + p for p in perm])
    return DensityMatrix(k, t.reshape(2 ** k, 2 ** k), is_deviation=state.is_deviation)


def measure_distribution(state, qubits) -> dict[str, float]:
    """Outcome probabilities for measuring the listed qubits in the z basis.

    Returns a bitstring-keyed table; the state must be normalized.
    """
    qubits = list(qubits)
    _check_targets(qubits, len(qubits), state.n_qubits)
    n = state.n_qubits
    if isinstance(state, StateVector):
        if abs(state.norm - 1.0) > tol.STRUCTURAL:
            raise ValueError("state must be normalized before measurement")
        probs = (np.abs(state.amplitudes) ** 2).reshape([2] * n)
    elif isinstance(state, DensityMatrix):
        if state.is_deviation:
            raise ValueError("deviation matrices have no probability interpretation")
        probs = np.real(np.diag(state.matrix)).reshape([2] * n)
    else:
        raise TypeError(f"cannot measure {type(state).__name__}")
    others = tuple(q - 1 for q in range(1, n + 1) if q not in qubits)
    marg = probs.sum(axis=others) if others else probs
    # marg axes are the kept qubits in increasing order; reorder as requested
    kept_sorted = [q for q in range(1, n + 1) if q in qubits]
    marg = marg.transpose([kept_sorted.index(q) for q in qubits])
    flat = marg.ravel()
    k = len(qubits)
    return {format(idx, f"0{k}b"): float(p) for idx, p in enumerate(flat)}
