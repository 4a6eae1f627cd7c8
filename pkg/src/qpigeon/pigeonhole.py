"""Pre/post-selected path analysis: where the pigeonhole principle breaks.

Three particles enter the interferometer in |+,+,+>. Post-selecting all of
them on the same detector is equivalent to post-selecting the pre-phase state
|-i,-i,-i> (all at detector 0) or |+i,+i,+i> (all at detector 1). Either way
the matrix element of every pairwise same-path projector between pre- and
post-selected states vanishes, so a noninvasive pair probe flips its ancilla
with certainty: no two particles were in the same path, for any pair.

The classical side of the comparison is an exhaustive enumeration of box
assignments, which of course says the opposite.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import tolerances as tol
from .circuit import build_mzi, run
from .qstate import (
    MINUS_I,
    PLUS,
    PLUS_I,
    Operator,
    StateVector,
    basis_state,
    overlap,
    tensor,
)

__all__ = [
    "ProbeReport",
    "ArrangementTable",
    "TableRow",
    "projector_same",
    "qphe_analysis",
    "generalized_qphe",
    "uniform_postselection_overlaps",
    "classical_enumeration",
    "build_table",
    "table_to_text",
    "table_to_csv",
]

NEVER = "never"
SOMETIMES = "sometimes"
ALWAYS = "always"
CERTAIN = "certain"
PROBABILISTIC = "probabilistic"


def projector_same(i: int, j: int, n: int) -> Operator:
    """Projector onto 'particles i and j occupy the same path' for n qubits."""
    if i == j:
        raise ValueError("pair indices must differ")
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"pair ({i},{j}) out of range for {n} qubits")
    dim = 2 ** n
    diag = np.zeros(dim)
    for b in range(dim):
        bi = (b >> (n - i)) & 1
        bj = (b >> (n - j)) & 1
        if bi == bj:
            diag[b] = 1.0
    return Operator(n, np.diag(diag), kind="projector")


@dataclass(frozen=True)
class ProbeReport:
    """Outcome of probing one particle pair under a given post-selection."""

    pair: tuple[int, int]
    preselected: StateVector
    postselection: str
    overlap_same: complex
    p_post: float
    p_ancilla_flip_given_post: float

    def __post_init__(self):
        for p in (self.p_post, self.p_ancilla_flip_given_post):
            if not -tol.ARITHMETIC <= p <= 1.0 + tol.ARITHMETIC:
                raise ValueError(f"probability {p} out of range")
        if abs(self.overlap_same) ** 2 > self.p_post + tol.ARITHMETIC:
            raise ValueError("overlap bound violated")

    @property
    def flip_tag(self) -> str:
        """Possibility tag for the ancilla flip: certain / never / probabilistic."""
        return _possibility_tag(self.p_ancilla_flip_given_post)


def _possibility_tag(p: float) -> str:
    if p >= 1.0 - tol.CERTAINTY:
        return CERTAIN
    if p <= tol.CERTAINTY:
        return NEVER
    return PROBABILISTIC


def _pre_phase_equivalent(post_outcome: str) -> StateVector:
    """Pre-phase state post-selected by a detector outcome string.

    Detector 0 on a particle selects |-i>, detector 1 selects |+i>.
    """
    factors = [MINUS_I if b == "0" else PLUS_I for b in post_outcome]
    return factors[0] if len(factors) == 1 else tensor(*factors)


def generalized_qphe(n_particles: int, pair: tuple[int, int],
                     post_outcome: str | None = None) -> ProbeReport:
    """Probe analysis for N particles in two paths, one probed pair.

    Runs the interferometer with the pair probe on |0...0>|0>, conditions on
    the requested particle outcome (default all zeros), and reports the
    conditional ancilla flip probability together with the pre/post matrix
    element of the same-path projector.
    """
    if not 3 <= n_particles <= 8:
        raise ValueError("particle count must be between 3 and 8")
    i, j = pair
    if post_outcome is None:
        post_outcome = "0" * n_particles
    if len(post_outcome) != n_particles or any(b not in "01" for b in post_outcome):
        raise ValueError(f"bad outcome label {post_outcome!r} for {n_particles} particles")

    psi_a = tensor(*([PLUS] * n_particles))
    phi = _pre_phase_equivalent(post_outcome)
    ov = overlap(phi, projector_same(i, j, n_particles), psi_a)

    circ = build_mzi(n_particles, probe=(i, j))
    out = run(circ, basis_state("0" * (n_particles + 1)))
    probs = np.abs(out.amplitudes) ** 2
    s = int(post_outcome, 2)
    p_keep = float(probs[2 * s])
    p_flip = float(probs[2 * s + 1])
    p_post = p_keep + p_flip
    flip = p_flip / p_post if p_post > 0 else float("nan")
    return ProbeReport(pair=(i, j), preselected=psi_a, postselection=post_outcome,
                       overlap_same=ov, p_post=p_post,
                       p_ancilla_flip_given_post=flip)


def qphe_analysis(pair: tuple[int, int], post_outcome: str) -> ProbeReport:
    """Three-particle pair-probe analysis; see :func:`generalized_qphe`."""
    return generalized_qphe(3, pair, post_outcome)


def uniform_postselection_overlaps(pair: tuple[int, int], n_particles: int = 3
                                   ) -> tuple[complex, complex]:
    """Same-path matrix elements for both uniform post-selections.

    Returns ``(<-i...|P|+...>, <+i...|P|+...>)``, i.e. the all-at-detector-0
    and all-at-detector-1 values. Both vanish; returning the pair avoids
    taking sides on which one a given write-up means.
    """
    psi_a = tensor(*([PLUS] * n_particles))
    p = projector_same(*pair, n_particles)
    lo = overlap(tensor(*([MINUS_I] * n_particles)), p, psi_a)
    hi = overlap(tensor(*([PLUS_I] * n_particles)), p, psi_a)
    return lo, hi


def classical_enumeration(n_particles: int, n_boxes: int) -> dict[str, int]:
    """Count box assignments satisfying each occupancy predicate.

    Keys: ``total``, ``no_pair_shared``, ``some_pair_shared``, ``all_shared``,
    and ``pair_<i>_<j>_shared`` for every pair.
    """
    if n_particles < 1 or n_boxes < 1:
        raise ValueError("need at least one particle and one box")
    total = n_boxes ** n_particles
    if total > 10 ** 7:
        raise ValueError(f"{total} assignments exceeds the enumeration guard")
    counts = {"total": total, "no_pair_shared": 0, "some_pair_shared": 0, "all_shared": 0}
    pairs = list(itertools.combinations(range(1, n_particles + 1), 2))
    for i, j in pairs:
        counts[f"pair_{i}_{j}_shared"] = 0
    for assign in itertools.product(range(n_boxes), repeat=n_particles):
        shared = [(i, j) for i, j in pairs if assign[i - 1] == assign[j - 1]]
        if not shared:
            counts["no_pair_shared"] += 1
        else:
            counts["some_pair_shared"] += 1
        if len(shared) == len(pairs):
            counts["all_shared"] += 1
        for i, j in shared:
            counts[f"pair_{i}_{j}_shared"] += 1
    return counts


def _classical_tag(count: int, total: int) -> str:
    if count == 0:
        return NEVER
    if count == total:
        return ALWAYS
    return SOMETIMES


@dataclass(frozen=True)
class TableRow:
    arrangement: str
    postselection: str
    classical_possible: str
    quantum_possible: str


@dataclass(frozen=True)
class ArrangementTable:
    n_particles: int
    rows: tuple[TableRow, ...]


def build_table(n_particles: int = 3) -> ArrangementTable:
    """Classical vs quantum possibility table for two paths.

    The first rows are the headline effect: post-selected on all particles at
    one detector, every pair probe reports different paths with certainty,
    while classically at least two of the particles must share. The remaining
    rows give, for representative mixed outcomes, the pair verdicts that the
    probes return with certainty even though the classical assignment is
    merely possible.
    """
    if not 2 <= n_particles <= 6:
        raise ValueError("table supports 2 to 6 particles")
    n = n_particles
    counts = classical_enumeration(n, 2)
    total = counts["total"]
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    rows: list[TableRow] = []

    def quantum_no_pair_same(post: str) -> str:
        flips = [generalized_qphe(n, pr, post).p_ancilla_flip_given_post if n >= 3
                 else _two_particle_flip_probability(pr, post) for pr in pairs]
        if all(f >= 1.0 - tol.CERTAINTY for f in flips):
            return CERTAIN
        if any(f <= tol.CERTAINTY for f in flips):
            return NEVER
        return PROBABILISTIC

    for post in ("0" * n, "1" * n):
        rows.append(TableRow(
            arrangement="no two particles in the same path",
            postselection=post,
            classical_possible=_classical_tag(counts["no_pair_shared"], total),
            quantum_possible=quantum_no_pair_same(post),
        ))

    if n >= 3:
        for i, j in pairs:
            # an outcome where the pair hits different detectors: the probe
            # then reports same-path with certainty
            bits = ["0"] * n
            bits[j - 1] = "1"
            post = "".join(bits)
            rep = generalized_qphe(n, (i, j), post)
            rows.append(TableRow(
                arrangement=f"particles {i} and {j} in the same path",
                postselection=post,
                classical_possible=_classical_tag(counts[f"pair_{i}_{j}_shared"], total),
                quantum_possible=_possibility_tag(1.0 - rep.p_ancilla_flip_given_post),
            ))
        for i, j in pairs:
            # an outcome where the pair hits the same detector but some other
            # particle does not: different paths, again with certainty
            k = next(q for q in range(1, n + 1) if q not in (i, j))
            bits = ["0"] * n
            bits[k - 1] = "1"
            post = "".join(bits)
            rep = generalized_qphe(n, (i, j), post)
            rows.append(TableRow(
                arrangement=f"particles {i} and {j} in different paths",
                postselection=post,
                classical_possible=_classical_tag(total - counts[f"pair_{i}_{j}_shared"], total),
                quantum_possible=_possibility_tag(rep.p_ancilla_flip_given_post),
            ))
    else:
        flip = _two_particle_flip_probability((1, 2), "01")
        rows.append(TableRow(
            arrangement="particles 1 and 2 in the same path",
            postselection="01",
            classical_possible=_classical_tag(counts["pair_1_2_shared"], total),
            quantum_possible=_possibility_tag(1.0 - flip),
        ))
    return ArrangementTable(n_particles=n, rows=tuple(rows))


def _two_particle_flip_probability(pair, post: str) -> float:
    """Flip probability for the 2-particle variant (below generalized_qphe's range)."""
    circ = build_mzi(2, probe=pair)
    out = run(circ, basis_state("000"))
    probs = np.abs(out.amplitudes) ** 2
    s = int(post, 2)
    p0, p1 = probs[2 * s], probs[2 * s + 1]
    return p1 / (p0 + p1)


def table_to_text(table: ArrangementTable) -> str:
    """Aligned plain-text rendering."""
    headers = ("arrangement", "post-selection", "classical", "quantum")
    body = [(r.arrangement, r.postselection, r.classical_possible, r.quantum_possible)
            for r in table.rows]
    widths = [max(len(h), *(len(row[c]) for row in body)) for c, h in enumerate(headers)]
    def fmt(row):
        return "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
    lines = [fmt(headers), fmt(tuple("-" * w for w in widths))]
    lines += [fmt(row) for row in body]
    return "\n".join(lines) + "\n"


def table_to_csv(table: ArrangementTable) -> str:
    rows = ["arrangement,postselection,classical,quantum"]
    for r in table.rows:
        arr = f'"{r.arrangement}"' if "," in r.arrangement else r.arrangement
        rows.append(f"{arr},{r.postselection},{r.classical_possible},{r.quantum_possible}")
    return "\n".join(rows) + "\n"
