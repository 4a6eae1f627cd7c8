"""Spin-register layer: Hamiltonian, state preparation, and ancilla spectra.

The register is three particle spins plus one ancilla spin (the ancilla is
the last qubit unless the config says otherwise). The rotating-frame
Hamiltonian keeps only offset and weak-coupling terms,

    H = -2*pi * sum_i nu_i I_zi  +  2*pi * sum_{i<j} Jp_ij I_zi I_zj

in rad/s, which is diagonal in the computational basis. Bit 0 of a basis
label is the m = +1/2 spin state.

Detection applies an ideal 90-degree pulse about +y to the ancilla and reads
the real (x receiver phase) part of each ancilla coherence. This makes the
thermal-equilibrium spectrum positive absorptive, which fixes every other
sign in the package. Line frequencies follow the eigenvalue-difference
convention

    f(s) = nu_a - sum_i Jp_{i,a} * m_i(s),   m_i = +1/2 for bit 0,

i.e. the label 111 line sits at nu_a + (sum_i Jp_{i,a})/2.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import tolerances as tol
from .circuit import HADAMARD, PHASE, controlled_parity
from .qstate import DensityMatrix, Operator, apply

__all__ = [
    "SpinSystem",
    "PrepSpec",
    "SpectralLine",
    "Spectrum",
    "load_spin_system",
    "save_spin_system",
    "default_spin_system",
    "internal_hamiltonian",
    "thermal_state",
    "invert_populations",
    "pseudopure_prepare",
    "detect",
    "line_frequency",
    "render",
    "qphe_stage",
    "STAGES",
    "spectrum_to_csv",
    "rendered_to_csv",
]


@dataclass(frozen=True)
class SpinSystem:
    """Labels, offsets (Hz), effective couplings (Hz), and which spin is the ancilla."""

    labels: tuple[str, ...]
    nu: np.ndarray = field(repr=False)
    jp: np.ndarray = field(repr=False)
    ancilla_index: int = 4

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        nu = np.array(self.nu, dtype=float)
        jp = np.array(self.jp, dtype=float)
        n = len(labels)
        if n < 2:
            raise ValueError("a spin system needs at least two spins")
        if nu.shape != (n,):
            raise ValueError(f"nu must have {n} entries")
        if jp.shape != (n, n):
            raise ValueError(f"Jp must be {n}x{n}")
        if np.max(np.abs(jp - jp.T)) > 0:
            raise ValueError("Jp must be symmetric")
        if np.max(np.abs(np.diag(jp))) > 0:
            raise ValueError("Jp must have zero diagonal")
        if not 1 <= self.ancilla_index <= n:
            raise ValueError(f"ancilla index {self.ancilla_index} out of range")
        nu.setflags(write=False)
        jp.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "jp", jp)

    @property
    def n_spins(self) -> int:
        return len(self.labels)

    @property
    def particles(self) -> tuple[int, ...]:
        """Spin indices of the non-ancilla spins, in order."""
        return tuple(k for k in range(1, self.n_spins + 1) if k != self.ancilla_index)


@dataclass(frozen=True)
class PrepSpec:
    """Purity factor and per-spin equilibrium polarization weights."""

    epsilon: float = 1.0
    gamma_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.gamma_weights is not None:
            object.__setattr__(self, "gamma_weights",
                               tuple(float(w) for w in self.gamma_weights))

    def weights(self, n_spins: int) -> np.ndarray:
        if self.gamma_weights is None:
            return np.ones(n_spins)
        if len(self.gamma_weights) != n_spins:
            raise ValueError(f"need {n_spins} weights")
        return np.array(self.gamma_weights)


@dataclass(frozen=True)
class SpectralLine:
    label: str
    frequency: float
    amplitude: float


@dataclass(frozen=True)
class Spectrum:
    lines: tuple[SpectralLine, ...]
    linewidth: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        labels = [ln.label for ln in self.lines]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate line labels")

    def amplitude(self, label: str) -> float:
        for ln in self.lines:
            if ln.label == label:
                return ln.amplitude
        raise KeyError(label)


# ---------------------------------------------------------------------------
# config I/O

def _system_from_dict(d: dict) -> SpinSystem:
    try:
        return SpinSystem(labels=tuple(d["labels"]), nu=d["nu_hz"], jp=d["jp_hz"],
                          ancilla_index=int(d.get("ancilla", len(d["labels"]))))
    except KeyError as e:
        raise ValueError(f"spin-system config is missing key {e}") from None


def load_spin_system(path) -> SpinSystem:
    """Read a spin system from a JSON config file (frequencies in Hz)."""
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"cannot parse spin-system config {path}: {e}") from None
    return _system_from_dict(d)


def save_spin_system(sys: SpinSystem, path, comment: str | None = None):
    d = {"labels": list(sys.labels), "nu_hz": list(sys.nu),
         "jp_hz": [list(row) for row in sys.jp], "ancilla": sys.ancilla_index}
    if comment:
        d["comment"] = comment
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(d, fh, indent=2)
        fh.write("\n")


def default_spin_system() -> SpinSystem:
    """The packaged 3-fluorine + proton register with placeholder parameters."""
    text = resources.files("qpigeon.data").joinpath("spin_system.json").read_text()
    return _system_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Hamiltonian and states

def _mz_table(n: int) -> np.ndarray:
    """m_k value (+-1/2) of every basis state; shape (2^n, n). Bit 0 -> +1/2."""
    dim = 2 ** n
    bits = ((np.arange(dim)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1)
    return 0.5 - bits


def internal_hamiltonian(sys: SpinSystem) -> Operator:
    """Diagonal rotating-frame Hamiltonian in rad/s."""
    m = _mz_table(sys.n_spins)
    diag = -2 * np.pi * (m @ sys.nu)
    diag += 2 * np.pi * 0.5 * np.einsum("bi,ij,bj->b", m, sys.jp, m)
    return Operator(sys.n_spins, np.diag(diag), kind="hermitian")


def thermal_state(sys: SpinSystem, prep: PrepSpec = PrepSpec()) -> DensityMatrix:
    """High-temperature equilibrium deviation: epsilon * sum_k w_k I_zk."""
    w = prep.weights(sys.n_spins)
    m = _mz_table(sys.n_spins)
    diag = prep.epsilon * (m @ w)
    return DensityMatrix(sys.n_spins, np.diag(diag), is_deviation=True)


def _level_index(label: str, n: int) -> int:
    if len(label) != n or any(b not in "01" for b in label):
        raise ValueError(f"bad level label {label!r} for {n} spins")
    return int(label, 2)


def invert_populations(state: DensityMatrix, level_a: str, level_b: str) -> DensityMatrix:
    """Ideal transition-selective swap of two diagonal populations.

    Stands in for the long low-power pulse used experimentally; off-diagonal
    elements are untouched.
    """
    if level_a == level_b:
        raise ValueError("levels must differ")
    n = state.n_qubits
    a = _level_index(level_a, n)
    b = _level_index(level_b, n)
    m = state.matrix.copy()
    m[a, a], m[b, b] = m[b, b], m[a, a]
    return DensityMatrix(n, m, is_deviation=state.is_deviation)


def pseudopure_prepare(sys: SpinSystem, prep: PrepSpec = PrepSpec()) -> DensityMatrix:
    """Pseudopure |0...0> deviation by the two-experiment difference scheme.

    Inverts the populations of the all-zeros level and its ancilla-flipped
    partner in the equilibrium state, subtracts, and rescales; the result is
    epsilon * |0..0><0..0| (x) sigma_z/2 on the ancilla, i.e. +epsilon/2 and
    -epsilon/2 populations on those two levels and nothing else.
    """
    n = sys.n_spins
    w = prep.weights(n)
    level_a = "0" * n
    bits = ["0"] * n
    bits[sys.ancilla_index - 1] = "1"
    level_b = "".join(bits)
    rho_eq = thermal_state(sys, prep)
    rho_in = invert_populations(rho_eq, level_a, level_b)
    diff = (rho_eq.matrix - rho_in.matrix) / (2.0 * w[sys.ancilla_index - 1])
    return DensityMatrix(n, diff, is_deviation=True)


# ---------------------------------------------------------------------------
# detection

_IY = np.array([[0.0, -1j], [1j, 0.0]]) / 2.0


def _detection_pulse(n: int, ancilla: int) -> np.ndarray:
    """Exact 90-degree rotation of the ancilla about +y (receiver along x)."""
    c, s = np.cos(np.pi / 4), np.sin(np.pi / 4)
    r = np.array([[c, -s], [s, c]], dtype=complex)
    before = np.eye(2 ** (ancilla - 1))
    after = np.eye(2 ** (n - ancilla))
    return np.kron(np.kron(before, r), after)


def line_frequency(sys: SpinSystem, label: str) -> float:
    """Frequency (Hz) of the ancilla transition for a particle-state label.

    Equal to the Hamiltonian eigenvalue difference (E(s,1_a)-E(s,0_a))/2pi:
    nu_a minus the sum of Jp_{k,a} * m_k over the particle spins, with
    m_k = +1/2 for bit 0.
    """
    particles = sys.particles
    if len(label) != len(particles) or any(b not in "01" for b in label):
        raise ValueError(f"bad line label {label!r}")
    a = sys.ancilla_index
    f = sys.nu[a - 1]
    for bit, k in zip(label, particles):
        m = 0.5 if bit == "0" else -0.5
        f -= sys.jp[k - 1, a - 1] * m
    return float(f)


def detect(state: DensityMatrix, sys: SpinSystem) -> Spectrum:
    """Ancilla stick spectrum of a deviation (or full) density matrix.

    One line per particle-state label s, at the ancilla transition frequency,
    with amplitude Re <s,0_a| rho' |s,1_a> after the detection pulse.
    """
    n = sys.n_spins
    if state.n_qubits != n:
        raise ValueError(f"state has {state.n_qubits} spins, system has {n}")
    r = _detection_pulse(n, sys.ancilla_index)
    rho = r @ state.matrix @ r.conj().T
    a = sys.ancilla_index
    lines = []
    n_part = n - 1
    for s in range(2 ** n_part):
        label = format(s, f"0{n_part}b")
        # scatter the particle bits around the ancilla position
        hi = s >> (n - a)          # particle bits left of the ancilla
        lo = s & ((1 << (n - a)) - 1)
        idx0 = (hi << (n - a + 1)) | (0 << (n - a)) | lo
        idx1 = (hi << (n - a + 1)) | (1 << (n - a)) | lo
        amp = float(np.real(rho[idx0, idx1]))
        lines.append(SpectralLine(label=label, frequency=line_frequency(sys, label),
                                  amplitude=amp))
    return Spectrum(lines=tuple(lines))


def render(spec: Spectrum, linewidth: float, grid: np.ndarray) -> np.ndarray:
    """Sum of Lorentzians on a frequency grid, peak height equal to amplitude."""
    if linewidth <= 0:
        raise ValueError("linewidth must be positive")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty frequency grid")
    hw = linewidth / 2.0
    out = np.zeros_like(grid)
    for ln in spec.lines:
        out += ln.amplitude * hw ** 2 / ((grid - ln.frequency) ** 2 + hw ** 2)
    return out


# ---------------------------------------------------------------------------
# circuit stages on the spin register

STAGES = ("thermal", "pseudopure", "mzi", "u12", "u13", "u23")


def qphe_stage(stage: str, sys: SpinSystem, prep: PrepSpec = PrepSpec()) -> DensityMatrix:
    """Deviation density matrix at a named point of the experiment.

    ``thermal`` and ``pseudopure`` are preparation stages; ``mzi`` is the
    interferometer alone; ``u12``/``u13``/``u23`` insert the pair probe. The
    gate layers are ideal unitaries here; pulse-level realizations live in
    the control module.
    """
    stage = stage.lower().replace("-only", "")
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}; pick from {STAGES}")
    if stage == "thermal":
        return thermal_state(sys, prep)
    state = pseudopure_prepare(sys, prep)
    if stage == "pseudopure":
        return state
    particles = sys.particles
    for q in particles:
        state = apply(HADAMARD, [q], state)
    if stage.startswith("u"):
        i, j = int(stage[1]), int(stage[2])
        if not (1 <= i <= len(particles) and 1 <= j <= len(particles)):
            raise ValueError(f"stage {stage!r} probes a particle out of range")
        probe = controlled_parity(particles[i - 1], particles[j - 1], sys.ancilla_index)
        state = apply(probe, [particles[i - 1], particles[j - 1], sys.ancilla_index], state)
    for q in particles:
        state = apply(PHASE, [q], state)
    for q in particles:
        state = apply(HADAMARD, [q], state)
    return state


# ---------------------------------------------------------------------------
# CSV export

def _fmt(x: float) -> str:
    return f"{x:.12g}"


def spectrum_to_csv(spec: Spectrum) -> str:
    rows = ["label,frequency_hz,amplitude"]
    for ln in spec.lines:
        rows.append(f"{ln.label},{_fmt(ln.frequency)},{_fmt(ln.amplitude)}")
    return "\n".join(rows) + "\n"


def rendered_to_csv(grid: np.ndarray, intensity: np.ndarray) -> str:
    rows = ["frequency_hz,intensity"]
    for f, y in zip(grid, intensity):
        rows.append(f"{_fmt(f)},{_fmt(y)}")
    return "\n".join(rows) + "\n"
