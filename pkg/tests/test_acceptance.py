"""Acceptance checks, one per criterion, each announcing a pass/fail line.

The announcements go straight to the real stdout so they stay visible under
pytest capture. Oracles here are deliberately independent of the library
internals: criterion 3 rebuilds the probed interferometer from raw kron
products, criterion 5 rechecks spectrum signs against circuit-layer
conditional probabilities, and criterion 7 differentiates numerically.
"""
import time

import numpy as np

from qpigeon import control as ctl
from qpigeon import nmr
from qpigeon.circuit import build_mzi, run
from qpigeon.pigeonhole import (classical_enumeration, projector_same,
                                qphe_analysis, uniform_postselection_overlaps)
from qpigeon.qstate import (DensityMatrix, basis_state, expectation,
                            measure_distribution, tensor, PLUS)

PAIRS = [(1, 2), (1, 3), (2, 3)]


def _announce(capfd, num: int, ok: bool, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}"
    with capfd.disabled():
        print(line, flush=True)
    assert ok, line


def _timed(fn):
    fn()                      # warm-up: imports, caches, allocator
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# ---------------------------------------------------------------------------

def test_criterion_1_same_path_expectation(capfd):
    state = tensor(PLUS, PLUS, PLUS)
    projs = [projector_same(i, j, 3) for i, j in PAIRS]

    def check():
        return [expectation(p, state) for p in projs]

    values, elapsed = _timed(check)
    worst = max(abs(v - 0.5) for v in values)
    ok = worst < 1e-12 and elapsed < 1e-3
    _announce(capfd, 1, ok, f"<P_same> = 1/2 per pair (max dev {worst:.2e}, "
                     f"{elapsed * 1e6:.0f} us)")


def test_criterion_2_uniform_postselection_overlaps(capfd):
    def check():
        return [uniform_postselection_overlaps(p) for p in PAIRS]

    values, elapsed = _timed(check)
    worst = max(max(abs(a), abs(b)) for a, b in values)
    ok = worst < 1e-12 and elapsed < 1e-3
    _announce(capfd, 2, ok, f"projected uniform overlaps vanish for both phase "
                     f"branches (max {worst:.2e}, {elapsed * 1e6:.0f} us)")


def test_criterion_3_certain_flips_against_brute_force(capfd):
    """Oracle built from raw kron products, no circuit-engine code."""
    h1 = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
    s1 = np.diag([1.0, 1j])

    def layer(m):
        return np.kron(np.kron(np.kron(m, m), m), np.eye(2))

    def probe_matrix(i, j):
        d = 16
        u = np.zeros((d, d))
        for b in range(d):
            bits = [(b >> (3 - k)) & 1 for k in range(4)]
            if bits[i - 1] != bits[j - 1]:
                bits[3] ^= 1
            out = 0
            for bit in bits:
                out = (out << 1) | bit
            u[out, b] = 1.0
        return u

    worst_flip = 0.0
    worst_joint = 0.0
    for i, j in PAIRS:
        total = layer(h1) @ layer(s1) @ probe_matrix(i, j) @ layer(h1)
        psi = np.zeros(16, dtype=complex)
        psi[0] = 1.0
        amp = total @ psi
        probs = np.abs(amp) ** 2
        for post in ("000", "111"):
            s = int(post, 2)
            p0, p1 = probs[2 * s], probs[2 * s + 1]
            worst_joint = max(worst_joint, abs(p1 - 0.125), abs(p0))
            worst_flip = max(worst_flip, abs(p1 / (p0 + p1) - 1.0))
            rep = qphe_analysis((i, j), post)
            worst_flip = max(worst_flip,
                             abs(rep.p_ancilla_flip_given_post - 1.0))
            worst_joint = max(worst_joint, abs(rep.p_post - 0.125))
    ok = worst_flip < 1e-10 and worst_joint < 1e-12
    _announce(capfd, 3, ok, f"000/111 postselections force the flip for every pair "
                     f"(flip dev {worst_flip:.2e}, joint dev {worst_joint:.2e}, "
                     f"brute-force oracle)")


def test_criterion_4_probe_is_noninvasive(capfd):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(25):
        n = int(rng.integers(3, 7))
        i = int(rng.integers(1, n))
        j = int(rng.integers(i + 1, n + 1))
        bare = measure_distribution(run(build_mzi(n), basis_state("0" * n)),
                                    list(range(1, n + 1)))
        probed = measure_distribution(
            run(build_mzi(n, probe=(i, j)), basis_state("0" * (n + 1))),
            list(range(1, n + 1)))
        worst = max(worst, max(abs(bare[k] - probed[k]) for k in bare))
    ok = worst < 1e-12
    _announce(capfd, 4, ok, f"outcome marginals unchanged by the probe over 25 "
                     f"random registers/pairs (max dev {worst:.2e})")


def test_criterion_5_spectrum_signs_for_random_systems(capfd):
    rng = np.random.default_rng(777)

    def conditional_sign_oracle(i, j):
        """Circuit-layer conditional ancilla polarity per outcome."""
        out = run(build_mzi(3, probe=(i, j)), basis_state("0000"))
        probs = np.abs(out.amplitudes) ** 2
        signs = {}
        for s in range(8):
            signs[format(s, "03b")] = 1.0 if probs[2 * s] >= probs[2 * s + 1] \
                else -1.0
        return signs

    def random_system():
        n = 4
        ancilla = int(rng.integers(1, 5)) if rng.random() < 0.3 else 4
        nu = rng.uniform(-3000, 3000, n)
        jp = np.zeros((n, n))
        for a in range(n):
            for b in range(a + 1, n):
                jp[a, b] = jp[b, a] = rng.uniform(-200, 200)
        for k in range(n):
            if k != ancilla - 1:
                mag = rng.uniform(50, 2000) * (1 if rng.random() < 0.5 else -1)
                jp[k, ancilla - 1] = jp[ancilla - 1, k] = mag
        return nmr.SpinSystem(labels=("w", "x", "y", "z"), nu=nu, jp=jp,
                              ancilla_index=ancilla)

    oracle = {(i, j): conditional_sign_oracle(i, j) for i, j in PAIRS}
    checks = 0
    t0 = time.perf_counter()
    for _ in range(20):
        sys_ = random_system()
        eps = float(rng.uniform(0.1, 2.0))
        prep = nmr.PrepSpec(epsilon=eps)
        th = nmr.detect(nmr.thermal_state(sys_, prep), sys_)
        assert all(ln.amplitude > eps / 4 for ln in th.lines)
        pp = nmr.detect(nmr.pseudopure_prepare(sys_, prep), sys_)
        assert pp.amplitude("000") > eps / 4
        assert max(abs(ln.amplitude) for ln in pp.lines
                   if ln.label != "000") < 1e-12
        for (i, j), stage in (((1, 2), "u12"), ((1, 3), "u13"), ((2, 3), "u23")):
            spec = nmr.detect(nmr.qphe_stage(stage, sys_, prep), sys_)
            assert spec.amplitude("000") < -1e-6
            assert spec.amplitude("111") < -1e-6
            for ln in spec.lines:
                assert ln.amplitude * oracle[(i, j)][ln.label] > 1e-6
                checks += 1
    elapsed = time.perf_counter() - t0
    ok = checks == 20 * 3 * 8 and elapsed < 1.0
    _announce(capfd, 5, ok, f"ancilla line signs match circuit-layer conditionals "
                     f"for 20 random systems ({checks} lines, {elapsed:.2f} s)")


def test_criterion_6_reference_sequences(capfd):
    sys4 = nmr.default_spin_system()
    rng = np.random.default_rng(31)
    t0 = time.perf_counter()
    worst_gap = 0.0
    worst_shift = 0.0
    for c in (1, 2, 3):
        seq = ctl.cnot_reference_sequence(c, sys4)
        target = ctl.cnot_unitary(c, 4, 4)
        f = ctl.local_z_invariant_fidelity(ctl.simulate_sequence(seq, sys4),
                                           target)
        worst_gap = max(worst_gap, 1.0 - f)
        # replace everything except the control-ancilla coupling
        jp = sys4.jp.copy()
        for i, j in ((1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4)):
            if {i, j} != {c, 4}:
                jp[i - 1, j - 1] = jp[j - 1, i - 1] = rng.uniform(-400, 400)
        other = nmr.SpinSystem(labels=sys4.labels, nu=rng.uniform(-4000, 4000, 4),
                               jp=jp, ancilla_index=4)
        f2 = ctl.local_z_invariant_fidelity(
            ctl.simulate_sequence(ctl.cnot_reference_sequence(c, other), other),
            target)
        worst_shift = max(worst_shift, abs(f2 - f))
    elapsed = time.perf_counter() - t0
    ok = worst_gap < 1e-9 and worst_shift < 1e-8 and elapsed < 1.0
    _announce(capfd, 6, ok, f"hard-pulse CNOTs exact up to z frames (gap "
                     f"{worst_gap:.1e}), spectator-independent "
                     f"(shift {worst_shift:.1e}), {elapsed:.2f} s")


def test_criterion_7_grape_pulse_and_gradients(capfd):
    sys4 = nmr.default_spin_system()
    target = ctl.cnot_unitary(1, 4, 4)
    problem = ctl.ControlProblem(system=sys4, target=target, n_segments=150,
                                 dt=4e-6, rf_scales=(0.95, 1.0, 1.05),
                                 stop_fidelity=0.99, max_iterations=2000)
    t0 = time.perf_counter()
    res = ctl.grape_optimize(problem, seed=7)
    elapsed = time.perf_counter() - t0

    rng = np.random.default_rng(99)
    u = 0.02 * problem.max_amplitude * rng.standard_normal((150, 4, 2))
    worst_rel = 0.0
    for _ in range(50):
        seg = int(rng.integers(0, 150))
        ch = int(rng.integers(0, 4))
        ax = int(rng.integers(0, 2))
        analytic, numeric = ctl.gradient_check(problem, u, seg, ch, axis=ax)
        rel = abs(analytic - numeric) / max(abs(numeric), 1e-9)
        worst_rel = max(worst_rel, rel)
    ok = (res.average_fidelity >= 0.99 and res.converged and elapsed < 300.0
          and worst_rel <= 1e-5)
    _announce(capfd, 7, ok, f"600 us robust CNOT pulse: avg fidelity "
                     f"{res.average_fidelity:.5f} over scales 0.95/1.00/1.05 "
                     f"in {res.iterations} iterations ({elapsed:.0f} s); "
                     f"50 gradient probes vs central differences "
                     f"(worst rel {worst_rel:.1e})")


def test_criterion_8_classical_count_versus_quantum_certainty(capfd):
    def check():
        return classical_enumeration(3, 2)

    counts, elapsed = _timed(check)
    quantum = [qphe_analysis(p, "000").p_ancilla_flip_given_post for p in PAIRS]
    ok = (counts["no_pair_shared"] == 0 and counts["total"] == 8
          and all(abs(q - 1.0) < 1e-10 for q in quantum) and elapsed < 1e-3)
    _announce(capfd, 8, ok, f"classically 0 of {counts['total']} separations exist, "
                     f"yet each pair probe flips with certainty "
                     f"({elapsed * 1e6:.0f} us)")


def test_criterion_9_amplitude_scale_is_out_of_scope(capfd):
    """Absolute line heights depend on receiver gain and relaxation, which
    are not modelled; what must hold is linearity of the readout and
    consistency under relabeling of the particle spins."""
    sys4 = nmr.default_spin_system()
    rng = np.random.default_rng(1234)

    worst_lin = 0.0
    for _ in range(5):
        m1 = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        m1 = m1 + m1.conj().T
        m1 -= np.trace(m1) / 16 * np.eye(16)
        m2 = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        m2 = m2 + m2.conj().T
        m2 -= np.trace(m2) / 16 * np.eye(16)
        a, b = rng.uniform(-2, 2, 2)
        s1 = nmr.detect(DensityMatrix(4, m1, is_deviation=True), sys4)
        s2 = nmr.detect(DensityMatrix(4, m2, is_deviation=True), sys4)
        s3 = nmr.detect(DensityMatrix(4, a * m1 + b * m2, is_deviation=True),
                        sys4)
        for l1, l2, l3 in zip(s1.lines, s2.lines, s3.lines):
            worst_lin = max(worst_lin,
                            abs(a * l1.amplitude + b * l2.amplitude
                                - l3.amplitude))

    # swap particle spins 1 and 2 everywhere in the config
    perm = [2, 1, 3, 4]
    nu = sys4.nu[[p - 1 for p in perm]]
    jp = sys4.jp[np.ix_([p - 1 for p in perm], [p - 1 for p in perm])]
    swapped = nmr.SpinSystem(labels=tuple(sys4.labels[p - 1] for p in perm),
                             nu=nu, jp=jp, ancilla_index=4)
    worst_perm = 0.0
    for stage, swapped_stage in (("u12", "u12"), ("u13", "u23"), ("u23", "u13")):
        base = nmr.detect(nmr.qphe_stage(stage, sys4), sys4)
        other = nmr.detect(nmr.qphe_stage(swapped_stage, swapped), swapped)
        for ln in base.lines:
            lab = ln.label[1] + ln.label[0] + ln.label[2]
            match = other.amplitude(lab)
            worst_perm = max(worst_perm, abs(ln.amplitude - match))
            f_other = nmr.line_frequency(swapped, lab)
            worst_perm = max(worst_perm, abs(ln.frequency - f_other) * 1e-6)
    ok = worst_lin < 1e-10 and worst_perm < 1e-10
    _announce(capfd, 9, ok, f"absolute amplitudes are instrument-scaled and not "
                     f"reproduced; readout is linear (dev {worst_lin:.1e}) "
                     f"and relabeling-consistent (dev {worst_perm:.1e})")
